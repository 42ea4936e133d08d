"""
Multi-agent simulation of the distributed observer.

Each event interval runs q synchronous projected-consensus rounds followed by
one estimator update per agent. Rounds are two-phase: every agent reads the
pre-round snapshot of its neighbors' z, so the result does not depend on the
order in which agents are updated.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from distributed_observer.config import OVERFLOW_LIMIT
from distributed_observer.core.matrix_core import as_matrix, as_vector
from distributed_observer.core.network import neighbor_sets
from distributed_observer.domain.models import AgentGain, AgentState, Digraph, GraphSchedule, Plant, SimTrace
from distributed_observer.errors import InvalidInputError, SimulationOverflowError

logger = logging.getLogger(__name__)


def projected_average(z: np.ndarray, P: np.ndarray, messages: Sequence[np.ndarray]) -> np.ndarray:
    """(I - P) z + P * mean(messages); messages are summed in the order given."""
    total = np.sum(np.stack(messages), axis=0)
    return z - P @ z + P @ total / len(messages)


class LocalEstimator:
    """One agent. It holds only A, its own C_i, K_i and P_i."""

    def __init__(self, agent: int, A: np.ndarray, C: np.ndarray, K: np.ndarray, P: np.ndarray):
        self.agent = agent
        self.C = C
        self.K = K
        self.P = P
        self.closed_loop = A + K @ C

    def update(self, state: AgentState, y: np.ndarray) -> AgentState:
        """x_i <- (A + K_i C_i) x_bar_i - K_i y_i, with x_bar_i the consensus result z_i."""
        x_hat = self.closed_loop @ state.z - self.K @ y
        return AgentState(state.agent, x_hat, x_hat)


def build_agents(plant: Plant, gains: Sequence[AgentGain], projections: Sequence[np.ndarray]) -> List[LocalEstimator]:
    if len(gains) != plant.m or len(projections) != plant.m:
        raise InvalidInputError(f"expected {plant.m} gains and projections, got {len(gains)} and {len(projections)}")
    agents = []
    for i, (C, g, P) in enumerate(zip(plant.sensors, gains, projections)):
        P = np.asarray(P, dtype=float)
        if g.K.shape != (plant.n, C.shape[0]) or P.shape != (plant.n, plant.n):
            raise InvalidInputError(f"agent {i + 1}: gain {g.K.shape} or projection {P.shape} does not fit the plant")
        agents.append(LocalEstimator(i, plant.A, C, g.K, P))
    return agents


def consensus_round(
    states: Sequence[AgentState],
    graph: Digraph,
    projections: Sequence[np.ndarray],
    order: Optional[Sequence[int]] = None,
) -> List[AgentState]:
    """One synchronous round z_i <- (I - P_i) z_i + (1/m_i) P_i sum_{j in N_i} z_j.

    `order` permutes the sequence in which agents are updated; the result is
    the same for every order.
    """
    m = len(states)
    if graph.m != m or len(projections) != m:
        raise InvalidInputError(f"round needs {graph.m} states and projections, got {m} and {len(projections)}")
    snapshot = [s.z for s in states]
    neighbors = neighbor_sets(graph)
    updated: Dict[int, AgentState] = {}
    for i in (range(m) if order is None else order):
        messages = [snapshot[j] for j in sorted(neighbors[i])]
        s = states[i]
        updated[i] = AgentState(s.agent, s.x_hat, projected_average(s.z, np.asarray(projections[i]), messages))
    return [updated[i] for i in range(m)]


def event_step(
    states: Sequence[AgentState],
    x: np.ndarray,
    plant: Plant,
    gains: Sequence[AgentGain],
    projections: Sequence[np.ndarray],
    graph: Digraph,
    q: int,
    round_log: Optional[List[np.ndarray]] = None,
    agents: Optional[Sequence[LocalEstimator]] = None,
) -> Tuple[List[AgentState], np.ndarray]:
    """Seed z_i = x_i, run q rounds on the fixed graph, update the estimates and advance the plant.

    The true state is only read through y_i = C_i x.
    """
    if q < 1:
        raise InvalidInputError("q must be positive")
    agents = build_agents(plant, gains, projections) if agents is None else agents
    states = [AgentState(s.agent, s.x_hat, s.x_hat) for s in states]
    if round_log is not None:
        round_log.append(np.stack([s.z for s in states]) - x[None, :])
    for _ in range(q):
        states = consensus_round(states, graph, [a.P for a in agents])
        if round_log is not None:
            round_log.append(np.stack([s.z for s in states]) - x[None, :])
    states = [a.update(s, a.C @ x) for a, s in zip(agents, states)]
    return states, plant.A @ x


@dataclass
class SimScenario:
    plant: Plant
    schedule: GraphSchedule
    gains: Sequence[AgentGain]
    projections: Sequence[np.ndarray]
    q: int
    tau_max: int
    x0: Optional[Sequence[float]] = None
    x_hat0: Optional[Sequence[Sequence[float]]] = None
    seed: int = 0
    record_rounds: bool = False
    overflow_limit: float = field(default=OVERFLOW_LIMIT)


def initial_conditions(scenario: SimScenario) -> Tuple[np.ndarray, np.ndarray]:
    """x(0) defaults to a seeded random unit vector, estimates default to zero."""
    n, m = scenario.plant.n, scenario.plant.m
    if scenario.x0 is None:
        v = np.random.default_rng(scenario.seed).standard_normal(n)
        x0 = v / np.linalg.norm(v)
    else:
        x0 = as_vector(scenario.x0, "x0")
    x_hat0 = np.zeros((m, n)) if scenario.x_hat0 is None else as_matrix(scenario.x_hat0, "initial estimates")
    if x0.shape != (n,):
        raise InvalidInputError(f"x0 must have length {n}, got {x0.shape}")
    if x_hat0.shape != (m, n):
        raise InvalidInputError(f"initial estimates must be {m} x {n}, got {x_hat0.shape}")
    return x0, x_hat0


def run(scenario: SimScenario) -> SimTrace:
    plant, schedule = scenario.plant, scenario.schedule
    if schedule.m != plant.m:
        raise InvalidInputError(f"schedule has {schedule.m} vertices, plant has {plant.m} agents")
    if scenario.tau_max < 0:
        raise InvalidInputError("tau_max must be non-negative")
    agents = build_agents(plant, scenario.gains, scenario.projections)
    x, x_hat0 = initial_conditions(scenario)
    states = [AgentState(i, x_hat0[i], x_hat0[i]) for i in range(plant.m)]

    trace = SimTrace(m=plant.m, n=plant.n, round_errors=[] if scenario.record_rounds else None)
    trace.record(0, schedule.graph_index(0), x, np.stack([s.x_hat for s in states]))
    for tau in range(scenario.tau_max):
        graph_id = schedule.graph_index(tau)
        rounds: Optional[List[np.ndarray]] = [] if scenario.record_rounds else None
        states, x = event_step(
            states, x, plant, scenario.gains, scenario.projections, schedule.graphs[graph_id], scenario.q,
            round_log=rounds, agents=agents,
        )
        if rounds is not None:
            trace.round_errors.append(rounds)
        norm = float(np.linalg.norm(x))
        if not np.isfinite(norm) or norm > scenario.overflow_limit:
            raise SimulationOverflowError(
                f"||x({tau + 1})|| = {norm:.3e} exceeds the overflow limit {scenario.overflow_limit:.1e}",
                label="plant state overflow",
            )
        trace.record(tau + 1, schedule.graph_index(tau + 1), x, np.stack([s.x_hat for s in states]))

    logger.debug("simulated %d events, final error %.3e", scenario.tau_max, trace.total_error_norms[-1])
    return trace


def estimate_rate(trace: SimTrace, window: Tuple[int, int]) -> float:
    """Geometric mean of ||e(tau)|| / ||e(tau-1)|| over tau in [lo, hi]; 0 if an error vanishes."""
    lo, hi = window
    if not 1 <= lo < hi <= trace.tau_max:
        raise InvalidInputError(f"rate window {window} outside [1, {trace.tau_max}]")
    norms = trace.total_error_norms[lo - 1:hi + 1]
    if min(norms) == 0.0:
        return 0.0
    return float((norms[-1] / norms[0]) ** (1.0 / (hi - lo + 1)))


def fit_rate_constant(trace: SimTrace, lam: float, horizon: int = 5) -> float:
    """C = max over tau <= horizon of ||e(tau)|| / lam^tau."""
    stop = min(horizon, trace.tau_max)
    return max(trace.total_error_norms[tau] / lam ** tau for tau in range(stop + 1))
