"""
Domain models: immutable numerical values (frozen dataclasses holding
read-only numpy arrays) plus dict-shaped report records.

Vertices and agents are 0-based here; scenario files use 1-based labels.
"""

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, TypedDict

import numpy as np

from distributed_observer.core.matrix_core import BlockPartition, as_matrix
from distributed_observer.errors import InvalidInputError


def _frozen(M: np.ndarray) -> np.ndarray:
    M = np.array(M, dtype=float)
    M.setflags(write=False)
    return M


def _matrix(data, name: str) -> np.ndarray:
    return _frozen(as_matrix(data, name))


# --- plant --------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Plant:
    """x(tau+1) = A x(tau), y_i(tau) = C_i x(tau) for agents i = 0..m-1."""

    A: np.ndarray
    sensors: Tuple[np.ndarray, ...]

    def __post_init__(self):
        A = _matrix(self.A, "A")
        if A.shape[0] == 0 or A.shape[0] != A.shape[1]:
            raise InvalidInputError(f"A: expected a non-empty square matrix, got {A.shape}")
        sensors = tuple(_matrix(C, f"C_{i + 1}") for i, C in enumerate(self.sensors))
        if len(sensors) < 2:
            raise InvalidInputError(f"a plant needs m >= 2 agents, got {len(sensors)}")
        for i, C in enumerate(sensors):
            if C.shape[0] == 0 or C.shape[1] != A.shape[0]:
                raise InvalidInputError(f"C_{i + 1}: expected s x {A.shape[0]}, got {C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "sensors", sensors)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return len(self.sensors)

    @property
    def stacked_output(self) -> np.ndarray:
        return np.vstack(self.sensors)


@dataclass(frozen=True, eq=False)
class ObservabilityDecomposition:
    """Per-agent split of R^n into the unobservable space and its quotient.

    V: orthonormal basis of the unobservable space (n x n_i)
    Q: orthonormal rows, ker Q = span V ((n - n_i) x n)
    C_bar, A_bar: the observable quotient pair, C_bar Q = C_i, Q A = A_bar Q
    P: orthogonal projection V V'
    """

    agent: int
    V: np.ndarray
    Q: np.ndarray
    C_bar: np.ndarray
    A_bar: np.ndarray
    P: np.ndarray

    def __post_init__(self):
        for name in ("V", "Q", "C_bar", "A_bar", "P"):
            object.__setattr__(self, name, _matrix(getattr(self, name), name))

    @property
    def n_i(self) -> int:
        return self.V.shape[1]


# --- network ------------------------------------------------------------------


@dataclass(frozen=True)
class Digraph:
    """Neighbor graph; arc (j, i) means agent j is a neighbor of agent i."""

    m: int
    arcs: FrozenSet[Tuple[int, int]]

    def __post_init__(self):
        arcs = frozenset((int(j), int(i)) for j, i in self.arcs)
        if self.m < 1:
            raise InvalidInputError("a graph needs at least one vertex")
        for j, i in arcs:
            if not (0 <= j < self.m and 0 <= i < self.m):
                raise InvalidInputError(f"arc {j}->{i} out of range for m={self.m}")
        object.__setattr__(self, "arcs", arcs)

    @classmethod
    def from_arcs(cls, m: int, arcs, add_self_loops: bool = True) -> "Digraph":
        arcs = set((int(j), int(i)) for j, i in arcs)
        if add_self_loops:
            arcs |= {(i, i) for i in range(m)}
        return cls(m, frozenset(arcs))

    @classmethod
    def complete(cls, m: int) -> "Digraph":
        return cls.from_arcs(m, [(j, i) for j in range(m) for i in range(m)])

    @classmethod
    def cycle(cls, m: int) -> "Digraph":
        return cls.from_arcs(m, [(i, (i + 1) % m) for i in range(m)])

    @property
    def has_self_loops(self) -> bool:
        return all((i, i) in self.arcs for i in range(self.m))

    def adjacency(self) -> np.ndarray:
        """A[j, i] = 1 iff there is an arc j -> i."""
        out = np.zeros((self.m, self.m))
        for j, i in self.arcs:
            out[j, i] = 1.0
        return out

    def sorted_arcs(self) -> List[Tuple[int, int]]:
        return sorted(self.arcs)


SIGNAL_MODES = ("explicit", "periodic", "random")


@dataclass(frozen=True)
class GraphSchedule:
    """Event index tau -> one of a declared, finite set of strongly connected graphs.

    explicit: sequence[tau] while tau < len(sequence), then `default`
    periodic: sequence[tau % len(sequence)] (round robin when sequence is 0..k-1)
    random:   seeded uniform choice, a pure function of (seed, tau)

    `period` is the real-time event spacing T, metadata only.
    """

    graphs: Tuple[Digraph, ...]
    mode: str = "periodic"
    sequence: Tuple[int, ...] = (0,)
    default: int = 0
    seed: int = 0
    period: float = 1.0

    def __post_init__(self):
        from distributed_observer.core.network import is_strongly_connected

        graphs = tuple(self.graphs)
        object.__setattr__(self, "graphs", graphs)
        object.__setattr__(self, "sequence", tuple(int(s) for s in self.sequence))
        if not graphs:
            raise InvalidInputError("a schedule needs at least one graph")
        if self.mode not in SIGNAL_MODES:
            raise InvalidInputError(f"unknown signal mode {self.mode!r}; expected one of {SIGNAL_MODES}")
        m = graphs[0].m
        for k, g in enumerate(graphs):
            if g.m != m:
                raise InvalidInputError(f"graph {k}: vertex count {g.m} differs from {m}")
            if not g.has_self_loops:
                raise InvalidInputError(f"graph {k}: every agent must be a neighbor of itself")
            if not is_strongly_connected(g):
                raise InvalidInputError(f"graph {k}: not strongly connected", label="strong-connectivity")
        if self.mode == "periodic" and not self.sequence:
            raise InvalidInputError("periodic schedule needs a non-empty sequence")
        for idx in self.sequence + (self.default,):
            if not 0 <= idx < len(graphs):
                raise InvalidInputError(f"graph index {idx} out of range (have {len(graphs)} graphs)")
        if self.period <= 0:
            raise InvalidInputError("event period T must be positive")

    @property
    def m(self) -> int:
        return self.graphs[0].m

    @property
    def is_constant(self) -> bool:
        return len(self.graphs) == 1

    def graph_index(self, tau: int) -> int:
        if tau < 0:
            raise InvalidInputError(f"event index must be non-negative, got {tau}")
        if self.mode == "explicit":
            return self.sequence[tau] if tau < len(self.sequence) else self.default
        if self.mode == "periodic":
            return self.sequence[tau % len(self.sequence)]
        rng = np.random.default_rng([self.seed, tau])
        return int(rng.integers(len(self.graphs)))

    def graph_at(self, tau: int) -> Digraph:
        return self.graphs[self.graph_index(tau)]


@dataclass(frozen=True, eq=False)
class FlockingMatrix:
    """Row-stochastic S = D^-1 A' of a neighbor graph."""

    S: np.ndarray
    tau: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "S", _matrix(self.S, "S"))

    @property
    def m(self) -> int:
        return self.S.shape[0]

    def graph(self) -> Digraph:
        """The graph of S': arc j -> i wherever S[i, j] != 0."""
        rows, cols = np.nonzero(self.S)
        return Digraph(self.m, frozenset((int(j), int(i)) for i, j in zip(rows, cols)))


@dataclass(frozen=True, eq=False)
class LaplacianCertificate:
    pi: np.ndarray
    L: np.ndarray
    eigenvalues: np.ndarray
    null_residual: float
    kernel_dim: int
    max_offdiagonal: float

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])


# --- observer design ------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AgentGain:
    """K_bar (quotient injection), K = Q' K_bar (lifted) and A_restr with (A + K C) V = V A_restr."""

    agent: int
    K_bar: np.ndarray
    K: np.ndarray
    A_restr: np.ndarray

    def __post_init__(self):
        for name in ("K_bar", "K", "A_restr"):
            object.__setattr__(self, name, _matrix(getattr(self, name), name))


@dataclass(frozen=True, eq=False)
class ErrorModel:
    """Stacked matrices of the error recursion e(tau+1) = A_closed (I - P (I - S_bar))^q e(tau)."""

    n: int
    m: int
    A_closed: np.ndarray
    P_stack: np.ndarray
    V_stack: np.ndarray
    Q_stack: np.ndarray
    A_tilde: np.ndarray
    A_bar_V: np.ndarray
    partition: BlockPartition

    def __post_init__(self):
        for name in ("A_closed", "P_stack", "V_stack", "Q_stack", "A_tilde", "A_bar_V"):
            object.__setattr__(self, name, _matrix(getattr(self, name), name))

    @property
    def n_bar(self) -> int:
        return self.V_stack.shape[1]

    @property
    def H(self) -> np.ndarray:
        """[Q; V'], orthogonal, so H^-1 = H'."""
        return np.vstack([self.Q_stack, self.V_stack.T])


@dataclass(frozen=True, eq=False)
class LyapunovCertificate:
    R: np.ndarray
    B: np.ndarray
    max_eigenvalue: float
    coupling_min_eigenvalue: float
    weighted_norm: float

    @property
    def margin(self) -> float:
        return -self.max_eigenvalue


Q_METHODS = ("weighted-two-norm", "mixed-norm", "explicit")


@dataclass(frozen=True)
class QSelection:
    """q = p * p_bar consensus rounds per event interval."""

    q: int
    method: str
    p: int
    p_bar: int
    certified_bound: float
    per_graph: Tuple[Dict[str, float], ...] = ()
    p_min_observed: Optional[int] = None

    def __post_init__(self):
        if self.method not in Q_METHODS:
            raise InvalidInputError(f"unknown q method {self.method!r}")
        if self.q < 1 or self.q != self.p * self.p_bar:
            raise InvalidInputError(f"q={self.q} must be a positive p*p_bar ({self.p}*{self.p_bar})")

    def meets(self, lam: float) -> bool:
        return self.certified_bound <= lam


# --- simulation -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AgentState:
    """Estimate x_i(tau) and consensus scratch z_i(k, tau) of one agent."""

    agent: int
    x_hat: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        for name in ("x_hat", "z"):
            v = np.array(getattr(self, name), dtype=float).reshape(-1)
            if not np.all(np.isfinite(v)):
                raise InvalidInputError(f"agent {self.agent}: non-finite {name}")
            v.setflags(write=False)
            object.__setattr__(self, name, v)


@dataclass
class SimTrace:
    """Per event index: true state, estimates, error norms and the active graph."""

    m: int
    n: int
    taus: List[int] = field(default_factory=list)
    graph_ids: List[int] = field(default_factory=list)
    states: List[np.ndarray] = field(default_factory=list)
    estimates: List[np.ndarray] = field(default_factory=list)
    agent_error_norms: List[np.ndarray] = field(default_factory=list)
    total_error_norms: List[float] = field(default_factory=list)
    round_errors: Optional[List[List[np.ndarray]]] = None

    def record(self, tau: int, graph_id: int, x: np.ndarray, estimates: np.ndarray) -> None:
        errors = estimates - x[None, :]
        self.taus.append(tau)
        self.graph_ids.append(graph_id)
        self.states.append(x.copy())
        self.estimates.append(estimates.copy())
        self.agent_error_norms.append(np.linalg.norm(errors, axis=1))
        self.total_error_norms.append(float(np.linalg.norm(errors)))

    def errors(self, tau: int) -> np.ndarray:
        """e_i(tau) = x_i(tau) - x(tau), one row per agent."""
        return self.estimates[tau] - self.states[tau][None, :]

    def stacked_error(self, tau: int) -> np.ndarray:
        return self.errors(tau).reshape(-1)

    @property
    def tau_max(self) -> int:
        return self.taus[-1] if self.taus else -1


# --- reports --------------------------------------------------------------------


class CertificateRow(TypedDict, total=False):
    """One line of the certificate report."""
    check: str
    label: str
    graph: Optional[int]
    agent: Optional[int]
    passed: bool
    value: Optional[float]
    detail: str


@dataclass(frozen=True)
class ScenarioConfig:
    """A parsed scenario file plus CLI overrides."""

    name: str
    plant: Plant
    schedule: GraphSchedule
    lam: float
    q_method: str = "weighted"
    q: Optional[int] = None
    placement: str = "robust"
    tau_max: int = 50
    x0: Optional[Sequence[float]] = None
    x_hat0: Optional[Sequence[Sequence[float]]] = None
    seed: int = 0
    verbose: bool = False
    output_dir: str = "output"

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise InvalidInputError(f"lambda must lie in (0, 1), got {self.lam}")
        if self.q_method not in ("weighted", "mixed", "explicit"):
            raise InvalidInputError(f"q_method must be weighted, mixed or explicit, got {self.q_method!r}")
        if self.q_method == "explicit" and (self.q is None or self.q < 1):
            raise InvalidInputError("explicit q_method needs a positive q")
        if self.placement not in ("robust", "ackermann"):
            raise InvalidInputError(f"placement must be robust or ackermann, got {self.placement!r}")
        if self.tau_max < 0:
            raise InvalidInputError("tau_max must be non-negative")
        if self.schedule.m != self.plant.m:
            raise InvalidInputError(f"schedule has {self.schedule.m} vertices but the plant has {self.plant.m} agents")
