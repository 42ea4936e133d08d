import numpy as np
import pytest

from distributed_observer.adapters.trace import CsvTraceWriter
from distributed_observer.application.verification import decay_rows
from distributed_observer.core.observer_design import choose_q_mixed, design_gains, transition_product
from distributed_observer.core.plant import decompose_all
from distributed_observer.core.simulator import (
    SimScenario,
    build_agents,
    consensus_round,
    estimate_rate,
    event_step,
    fit_rate_constant,
    initial_conditions,
    run,
)
from distributed_observer.domain.models import AgentState, Digraph, GraphSchedule, Plant, SimTrace
from distributed_observer.errors import InvalidInputError, SimulationOverflowError


def _states(z):
    return [AgentState(i, np.zeros_like(v), v) for i, v in enumerate(z)]


def test_consensus_round_without_projection_keeps_z():
    z = [np.array([1.0, 2.0]), np.array([-3.0, 0.5]), np.array([0.0, 4.0])]
    out = consensus_round(_states(z), Digraph.complete(3), [np.zeros((2, 2))] * 3)
    for before, after in zip(z, out):
        np.testing.assert_array_equal(after.z, before)


def test_consensus_round_fixed_point_of_equal_values():
    v = np.array([0.25, -1.5])
    out = consensus_round(_states([v, v, v]), Digraph.complete(3), [np.eye(2)] * 3)
    for s in out:
        np.testing.assert_allclose(s.z, v, atol=1e-15)


def test_consensus_round_opposite_values_cancel():
    v = np.array([1.0, -2.0])
    out = consensus_round(_states([v, -v]), Digraph.complete(2), [np.eye(2)] * 2)
    for s in out:
        np.testing.assert_array_equal(s.z, np.zeros(2))


def test_consensus_round_is_independent_of_update_order():
    rng = np.random.default_rng(6)
    m, n = 5, 3
    z = [rng.standard_normal(n) for _ in range(m)]
    projections = []
    for _ in range(m):
        V, _ = np.linalg.qr(rng.standard_normal((n, 2)))
        projections.append(V @ V.T)
    graph = Digraph.from_arcs(m, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (2, 0)])
    reference = consensus_round(_states(z), graph, projections)
    for _ in range(5):
        shuffled = consensus_round(_states(z), graph, projections, order=rng.permutation(m))
        for a, b in zip(reference, shuffled):
            np.testing.assert_array_equal(a.z, b.z)


def test_event_step_keeps_exact_estimates(ring_plant, ring_schedule):
    decomps = decompose_all(ring_plant)
    gains = design_gains(ring_plant, decomps, 0.8)
    x = np.array([0.3, -0.7, 1.0])
    states = [AgentState(i, x, x) for i in range(3)]
    projections = [d.P for d in decomps]
    for tau in range(20):
        states, x_next = event_step(states, x, ring_plant, gains, projections, ring_schedule.graph_at(tau), 4)
        x = x_next
        for s in states:
            np.testing.assert_allclose(s.x_hat, x, atol=1e-9 * (1 + np.linalg.norm(x)))


def test_event_step_contracts_fully_observed_agents():
    plant = Plant(A=np.eye(2), sensors=(np.eye(2), np.eye(2)))
    decomps = decompose_all(plant)
    gains = design_gains(plant, decomps, 0.1)
    x = np.array([1.0, 2.0])
    states = [AgentState(0, np.zeros(2), np.zeros(2)), AgentState(1, np.array([3.0, -1.0]), np.zeros(2))]
    out, x_next = event_step(states, x, plant, gains, [d.P for d in decomps], Digraph.complete(2), 1)
    np.testing.assert_array_equal(x_next, x)
    for before, after in zip(states, out):
        assert np.linalg.norm(after.x_hat - x_next) <= 0.05 * np.linalg.norm(before.x_hat - x)


def test_event_step_records_every_round(diag_plant, diag_design):
    decomps, gains, _ = diag_design
    log = []
    states = [AgentState(i, np.zeros(2), np.zeros(2)) for i in range(2)]
    event_step(states, np.array([1.0, 1.0]), diag_plant, gains, [d.P for d in decomps], Digraph.complete(2), 3,
               round_log=log)
    assert len(log) == 4
    assert all(e.shape == (2, 2) for e in log)


def test_event_step_rejects_bad_inputs(diag_plant, diag_design):
    decomps, gains, _ = diag_design
    states = [AgentState(i, np.zeros(2), np.zeros(2)) for i in range(2)]
    with pytest.raises(InvalidInputError):
        event_step(states, np.ones(2), diag_plant, gains, [d.P for d in decomps], Digraph.complete(2), 0)
    with pytest.raises(InvalidInputError):
        build_agents(diag_plant, gains[:1], [d.P for d in decomps])


def _diag_scenario(diag_plant, complete_two, diag_design, **kw):
    decomps, gains, _ = diag_design
    params = dict(plant=diag_plant, schedule=complete_two, gains=gains, projections=[d.P for d in decomps], q=2,
                  tau_max=20)
    params.update(kw)
    return SimScenario(**params)


def test_run_with_no_events(diag_plant, complete_two, diag_design):
    trace = run(_diag_scenario(diag_plant, complete_two, diag_design, tau_max=0))
    assert trace.taus == [0]
    assert trace.tau_max == 0


def test_run_from_exact_estimates(diag_plant, complete_two, diag_design):
    x0 = [0.6, -0.8]
    trace = run(_diag_scenario(diag_plant, complete_two, diag_design, x0=x0, x_hat0=[x0, x0]))
    for tau in trace.taus:
        assert trace.total_error_norms[tau] <= 1e-9 * (1 + np.linalg.norm(trace.states[tau]))


def test_run_matches_transition_products(diag_plant, complete_two, diag_design):
    _, _, model = diag_design
    trace = run(_diag_scenario(diag_plant, complete_two, diag_design, seed=3))
    phis = transition_product(model, complete_two, 2, 20)
    e0 = trace.stacked_error(0)
    for tau in trace.taus:
        scale = np.linalg.norm(e0) + np.linalg.norm(trace.states[tau])
        assert np.linalg.norm(trace.stacked_error(tau) - phis[tau] @ e0) <= 1e-8 * scale


def test_run_matches_transition_products_on_switching_ring(ring_plant, ring_schedule, ring_design):
    decomps, gains, model = ring_design
    q = choose_q_mixed(model, ring_schedule, 0.8).q
    trace = run(SimScenario(plant=ring_plant, schedule=ring_schedule, gains=gains,
                            projections=[d.P for d in decomps], q=q, tau_max=40, seed=7))
    phis = transition_product(model, ring_schedule, q, 40)
    e0 = trace.stacked_error(0)
    for tau in trace.taus:
        scale = np.linalg.norm(e0) + np.linalg.norm(trace.states[tau])
        assert np.linalg.norm(trace.stacked_error(tau) - phis[tau] @ e0) <= 1e-8 * scale
    assert trace.graph_ids[:4] == [0, 1, 0, 1]


def test_measured_rate_diag_example(diag_plant, complete_two, diag_design):
    trace = run(_diag_scenario(diag_plant, complete_two, diag_design))
    assert estimate_rate(trace, (10, 20)) <= 0.85


def test_run_is_deterministic(diag_plant, complete_two, diag_design):
    a = run(_diag_scenario(diag_plant, complete_two, diag_design, seed=5))
    b = run(_diag_scenario(diag_plant, complete_two, diag_design, seed=5))
    assert a.total_error_norms == b.total_error_norms


def test_run_overflow(diag_plant, complete_two, diag_design):
    with pytest.raises(SimulationOverflowError):
        run(_diag_scenario(diag_plant, complete_two, diag_design, overflow_limit=10.0))


def test_initial_conditions_defaults(diag_plant, complete_two, diag_design):
    x0, x_hat0 = initial_conditions(_diag_scenario(diag_plant, complete_two, diag_design, seed=1))
    assert np.linalg.norm(x0) == pytest.approx(1.0)
    np.testing.assert_array_equal(x_hat0, np.zeros((2, 2)))
    with pytest.raises(InvalidInputError):
        initial_conditions(_diag_scenario(diag_plant, complete_two, diag_design, x0=[1.0, 2.0, 3.0]))
    with pytest.raises(InvalidInputError, match="x0"):
        initial_conditions(_diag_scenario(diag_plant, complete_two, diag_design, x0=["a", "b"]))
    with pytest.raises(InvalidInputError, match="initial estimates"):
        initial_conditions(_diag_scenario(diag_plant, complete_two, diag_design, x_hat0=[[0.0, "b"], [0.0, 0.0]]))


def _geometric_trace(norms):
    trace = SimTrace(m=1, n=1)
    for tau, v in enumerate(norms):
        trace.record(tau, 0, np.zeros(1), np.array([[v]]))
    return trace


def test_estimate_rate_examples():
    assert estimate_rate(_geometric_trace([3.0 * 0.7 ** t for t in range(11)]), (1, 10)) == pytest.approx(0.7)
    assert estimate_rate(_geometric_trace([0.0] * 6), (2, 5)) == 0.0
    with pytest.raises(InvalidInputError):
        estimate_rate(_geometric_trace([1.0] * 4), (0, 3))
    with pytest.raises(InvalidInputError):
        estimate_rate(_geometric_trace([1.0] * 4), (2, 4))
    with pytest.raises(InvalidInputError):
        estimate_rate(_geometric_trace([1.0] * 4), (2, 2))


def test_fit_rate_constant():
    trace = _geometric_trace([2.0 * 0.5 ** t for t in range(8)])
    assert fit_rate_constant(trace, 0.5) == pytest.approx(2.0)
    assert fit_rate_constant(trace, 0.9) == pytest.approx(2.0)


def test_decay_rows_use_raw_error_norms():
    exact = _geometric_trace([2.0 * 0.5 ** t for t in range(20)])
    row = decay_rows(exact, 0.5, fit_rate_constant(exact, 0.5))[0]
    assert row["passed"]
    assert row["value"] == pytest.approx(1.0)

    slow = _geometric_trace([2.0 * 0.55 ** t for t in range(20)])
    row = decay_rows(slow, 0.5, fit_rate_constant(slow, 0.5, horizon=5))[0]
    assert not row["passed"]
    assert row["value"] == pytest.approx((0.55 / 0.5) ** 19 / (0.55 / 0.5) ** 5)


def test_schedule_vertex_count_must_match(diag_plant, diag_design):
    three = GraphSchedule(graphs=(Digraph.complete(3),))
    decomps, gains, _ = diag_design
    with pytest.raises(InvalidInputError):
        run(SimScenario(plant=diag_plant, schedule=three, gains=gains, projections=[d.P for d in decomps], q=1,
                        tau_max=1))


def test_trace_csv_layout(tmp_path):
    path = CsvTraceWriter().write(_geometric_trace([0.5, 0.25]), str(tmp_path / "trace.csv"))
    assert open(path, "rb").read() == b"tau,graph_id,err_norm_total,err_norm_agent_1\n0,1,0.5,0.5\n1,1,0.25,0.25\n"
