import json
from pathlib import Path

import numpy as np
import pytest

from distributed_observer.adapters import default_adapters
from distributed_observer.adapters.placement import RobustPlacementAdapter
from distributed_observer.adapters.q_selection import ExplicitQSelector
from distributed_observer.application.pipeline import ObserverPipeline
from distributed_observer.application.verification import all_passed, failures
from distributed_observer.errors import CertificateError, InvalidInputError

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def _load(pipeline, write_scenario, doc, tmp_path):
    return pipeline.load(write_scenario(doc), output_dir=str(tmp_path / "out"))


def test_synthesize_two_agent_weighted(pipeline, write_scenario, scenario_doc, tmp_path):
    config = _load(pipeline, write_scenario, scenario_doc, tmp_path)
    result = pipeline.synthesize(config)
    assert result.passed
    assert result.selection.q == 2
    assert result.selection.certified_bound == pytest.approx(0.75)
    checks = {r["check"] for r in result.rows}
    assert {"joint observability", "quotient spectral radius", "Lyapunov decrement", "q bound"} <= checks


def test_synthesize_two_agent_mixed(pipeline, write_scenario, scenario_doc, tmp_path):
    scenario_doc["observer"]["q_method"] = "mixed"
    result = pipeline.synthesize(_load(pipeline, write_scenario, scenario_doc, tmp_path))
    assert result.passed
    assert result.selection.method == "mixed-norm"
    assert result.selection.p == 1
    assert result.selection.certified_bound == pytest.approx(0.75)


def test_synthesize_ackermann_placement(pipeline, write_scenario, scenario_doc, tmp_path):
    scenario_doc["observer"]["placement"] = "ackermann"
    result = pipeline.synthesize(_load(pipeline, write_scenario, scenario_doc, tmp_path))
    assert result.passed
    assert result.selection.q == 2


def test_synthesize_rejects_non_jointly_observable_plant(pipeline, write_scenario, scenario_doc, tmp_path):
    scenario_doc["plant"]["sensors"] = [[[1.0, 0.0]], [[1.0, 0.0]]]
    config = _load(pipeline, write_scenario, scenario_doc, tmp_path)
    with pytest.raises(InvalidInputError, match="joint observability violated"):
        pipeline.synthesize(config)


def test_load_rejects_disconnected_graph(pipeline, write_scenario, scenario_doc, tmp_path):
    scenario_doc["network"]["graphs"] = [[[1, 2]]]
    with pytest.raises(InvalidInputError, match="strongly connected"):
        _load(pipeline, write_scenario, scenario_doc, tmp_path)


def test_load_rejects_unknown_schema(pipeline, write_scenario, scenario_doc, tmp_path):
    scenario_doc["schema_version"] = 2
    with pytest.raises(InvalidInputError):
        _load(pipeline, write_scenario, scenario_doc, tmp_path)


def test_load_applies_overrides(pipeline, write_scenario, scenario_doc, tmp_path):
    config = pipeline.load(write_scenario(scenario_doc), seed=42, output_dir="elsewhere", verbose=None)
    assert config.seed == 42
    assert config.output_dir == "elsewhere"
    assert not config.verbose
    assert config.name == "two_agent_diag"


def test_write_synthesis_and_reuse_gains(pipeline, write_scenario, scenario_doc, tmp_path):
    config = _load(pipeline, write_scenario, scenario_doc, tmp_path)
    result = pipeline.synthesize(config)
    paths = pipeline.write_synthesis(result)
    artifact = json.loads(open(paths["synthesis"], encoding="utf-8").read())
    report = json.loads(open(paths["certificates"], encoding="utf-8").read())
    assert artifact["q_selection"]["q"] == 2
    assert len(artifact["gains"]) == 2
    assert report["passed"] is True

    reused = pipeline.synthesize(config, gains_path=paths["synthesis"])
    assert reused.passed
    for a, b in zip(result.gains, reused.gains):
        np.testing.assert_array_equal(a.K_bar, b.K_bar)


def _tamper(path):
    with open(path, encoding="utf-8") as f:
        artifact = json.load(f)
    for entry in artifact["gains"]:
        entry["K_bar"] = np.zeros(entry["K_bar_shape"]).tolist()
    with open(path, "w", encoding="utf-8") as f:
        json.dump(artifact, f)


def test_verify_flags_tampered_gains(pipeline, write_scenario, scenario_doc, tmp_path):
    config = _load(pipeline, write_scenario, scenario_doc, tmp_path)
    paths = pipeline.write_synthesis(pipeline.synthesize(config))
    _tamper(paths["synthesis"])
    rows = pipeline.verify(config, gains_path=paths["synthesis"])
    failed = {r["check"] for r in failures(rows)}
    assert "quotient spectral radius" in failed
    with pytest.raises(CertificateError):
        pipeline.synthesize(config, gains_path=paths["synthesis"])


def test_gains_file_with_wrong_shape(pipeline, write_scenario, scenario_doc, tmp_path):
    config = _load(pipeline, write_scenario, scenario_doc, tmp_path)
    paths = pipeline.write_synthesis(pipeline.synthesize(config))
    with open(paths["synthesis"], encoding="utf-8") as f:
        artifact = json.load(f)
    artifact["gains"] = artifact["gains"][:1]
    with open(paths["synthesis"], "w", encoding="utf-8") as f:
        json.dump(artifact, f)
    with pytest.raises(InvalidInputError):
        pipeline.synthesize(config, gains_path=paths["synthesis"])


def test_simulate_writes_trace_and_summary(pipeline, write_scenario, scenario_doc, tmp_path):
    config = _load(pipeline, write_scenario, scenario_doc, tmp_path)
    sim = pipeline.simulate(config)
    lines = open(sim.trace_path, encoding="utf-8").read().splitlines()
    assert lines[0] == "tau,graph_id,err_norm_total,err_norm_agent_1,err_norm_agent_2"
    assert len(lines) == config.tau_max + 2
    assert sim.summary["measured_rate"] <= 0.85
    assert sim.summary["rate_target_met"] is True
    summary = json.loads((tmp_path / "out" / "two_agent_diag_summary.json").read_text(encoding="utf-8"))
    assert summary["q"] == 2


def test_simulate_with_no_events(pipeline, write_scenario, scenario_doc, tmp_path):
    scenario_doc["simulation"]["tau_max"] = 0
    sim = pipeline.simulate(_load(pipeline, write_scenario, scenario_doc, tmp_path))
    lines = open(sim.trace_path, encoding="utf-8").read().splitlines()
    assert len(lines) == 2
    assert lines[1].startswith("0,1,")
    assert sim.summary["measured_rate"] is None


def test_simulate_single_event_has_no_rate_window(pipeline, write_scenario, scenario_doc, tmp_path):
    scenario_doc["simulation"]["tau_max"] = 1
    sim = pipeline.simulate(_load(pipeline, write_scenario, scenario_doc, tmp_path))
    assert sim.summary["rate_window"] is None
    assert sim.summary["measured_rate"] is None
    assert sim.summary["rate_target_met"] is True


def test_simulate_is_byte_identical_across_runs(pipeline, write_scenario, scenario_doc, tmp_path):
    config = _load(pipeline, write_scenario, scenario_doc, tmp_path)
    first = pipeline.simulate(config, out_dir=str(tmp_path / "a"))
    second = pipeline.simulate(config, out_dir=str(tmp_path / "b"))
    assert open(first.trace_path, "rb").read() == open(second.trace_path, "rb").read()


def test_simulate_verbose_writes_states_and_rounds(pipeline, write_scenario, scenario_doc, tmp_path):
    config = pipeline.load(write_scenario(scenario_doc), output_dir=str(tmp_path / "out"), verbose=True)
    sim = pipeline.simulate(config)
    header = open(sim.trace_path, encoding="utf-8").readline().strip().split(",")
    assert "x_1" in header and "xhat_2_2" in header
    rounds = open(sim.summary["round_trace"], encoding="utf-8").read().splitlines()
    assert rounds[0] == "tau,round,agent,eps_norm"
    # q + 1 snapshots per event, one row per agent
    assert len(rounds) == 1 + config.tau_max * 3 * 2


def test_explicit_q_flags_unmet_rate(pipeline, write_scenario, scenario_doc, tmp_path):
    scenario_doc["observer"].update({"q_method": "explicit", "q": 1})
    sim = pipeline.simulate(_load(pipeline, write_scenario, scenario_doc, tmp_path))
    assert sim.summary["q"] == 1
    assert sim.summary["rate_target_met"] is False
    assert sim.summary["certified_bound"] == pytest.approx(1.5)


def test_injected_q_selector_wins(write_scenario, scenario_doc, tmp_path):
    pipeline = ObserverPipeline(**default_adapters(), q_selector=ExplicitQSelector(3))
    result = pipeline.synthesize(_load(pipeline, write_scenario, scenario_doc, tmp_path))
    assert result.selection.q == 3
    assert result.selection.method == "explicit"


class _CountingPlacement(RobustPlacementAdapter):
    def __init__(self):
        self.calls = []

    def place(self, A_bar, C_bar, lam, seed=0):
        self.calls.append(A_bar.shape[0])
        return super().place(A_bar, C_bar, lam, seed=seed)


def test_injected_placement_places_every_quotient(write_scenario, scenario_doc, tmp_path):
    placement = _CountingPlacement()
    pipeline = ObserverPipeline(**default_adapters(spectrum_assigner=placement))
    result = pipeline.synthesize(_load(pipeline, write_scenario, scenario_doc, tmp_path))
    assert placement.calls == [1, 1]
    assert result.passed


@pytest.mark.parametrize("name", ["two_agent_diag", "ring_switching"])
def test_verify_bundled_scenarios(pipeline, tmp_path, name):
    config = pipeline.load(str(SCENARIOS / f"{name}.yaml"), output_dir=str(tmp_path))
    rows = pipeline.verify(config)
    assert all_passed(rows), failures(rows)
    assert any(r["check"] == "oracle equivalence" for r in rows)
    decay = [r for r in rows if r["check"] == "exponential decay"]
    assert len(decay) == 1
    assert decay[0]["value"] <= 1.0 + 1e-12


def test_verify_ring_mixed_uses_square_exponent(pipeline, tmp_path):
    config = pipeline.load(str(SCENARIOS / "ring_switching.yaml"), output_dir=str(tmp_path))
    result = pipeline.synthesize(config)
    assert result.selection.p == 4
    assert result.selection.q == 4 * result.selection.p_bar


def test_random_switching_scenario_synthesizes(pipeline, tmp_path):
    config = pipeline.load(str(SCENARIOS / "random_switching.yaml"), output_dir=str(tmp_path))
    result = pipeline.synthesize(config)
    assert result.passed
    assert result.decomps[3].n_i == 4
    assert result.selection.certified_bound <= config.lam
    sim = pipeline.simulate(config)
    assert sim.summary["tau_max"] == 50
