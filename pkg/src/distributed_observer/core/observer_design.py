"""
Observer synthesis and analysis.

  - spectrum assignment on each agent's observable quotient and lifting of the
    gain back to R^n
  - the stacked error model e(tau+1) = A_closed (I - P (I - S_bar))^q e(tau)
  - Lyapunov and norm certificates per schedule graph
  - selection of the consensus round count q (weighted two-norm or mixed norm)
  - the transition products Phi(tau) used as simulation oracle
"""

import logging
from functools import partial
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.signal

from distributed_observer.config import CHECK_TOL, PLACEMENT_TOL, Q_CAP
from distributed_observer.core.matrix_core import (
    BlockPartition,
    as_matrix,
    block_diag,
    induced_two_norm,
    is_positive_definite,
    kron,
    mixed_matrix_norm,
    spectral_radius,
    weighted_two_norm,
)
from distributed_observer.core.network import flocking_matrix, laplacian_certificate
from distributed_observer.core.plant import is_observable, observability_matrix, restriction_matrix
from distributed_observer.domain.models import (
    AgentGain,
    CertificateRow,
    ErrorModel,
    FlockingMatrix,
    GraphSchedule,
    LyapunovCertificate,
    ObservabilityDecomposition,
    Plant,
    QSelection,
)
from distributed_observer.errors import (
    CertificateError,
    ConsistencyError,
    InvalidInputError,
    NonTerminationError,
    NumericalError,
)

logger = logging.getLogger(__name__)

PLACEMENT_METHODS = ("robust", "ackermann")
TRANSITION_TOL = 1e-8


# --- spectrum assignment -------------------------------------------------------


def placement_targets(k: int, lam: float) -> np.ndarray:
    """k distinct real eigenvalues 0.9*lam*j/k, j = 0..k-1."""
    return 0.9 * lam * np.arange(k) / max(k, 1)


def _char_poly_of_matrix(A: np.ndarray, targets: np.ndarray) -> np.ndarray:
    coeffs = np.real(np.poly(targets))
    out = np.zeros_like(A)
    for c in coeffs:
        out = out @ A + c * np.eye(A.shape[0])
    return out


def _ackermann_single_output(A: np.ndarray, c: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """K (k x 1) with eig(A + K c) = targets, for a single observable output row c."""
    k = A.shape[0]
    O = observability_matrix(A, c)
    e_last = np.zeros((k, 1))
    e_last[-1, 0] = 1.0
    return -_char_poly_of_matrix(A, targets) @ np.linalg.solve(O, e_last)


def _place_ackermann(A_bar: np.ndarray, C_bar: np.ndarray, targets: np.ndarray, seed: int) -> np.ndarray:
    if C_bar.shape[0] == 1:
        return _ackermann_single_output(A_bar, C_bar, targets)
    # Reduce to one output through a random combination w' C_bar that keeps the pair observable.
    rng = np.random.default_rng(seed)
    for _ in range(20):
        w = rng.standard_normal(C_bar.shape[0])
        c = (w @ C_bar)[None, :]
        if is_observable(A_bar, c):
            return _ackermann_single_output(A_bar, c, targets) @ w[None, :]
    raise NumericalError(
        "no observable single-output combination found for Ackermann placement; use robust placement",
        label="Ackermann output reduction",
    )


def _place_robust(A_bar: np.ndarray, C_bar: np.ndarray, targets: np.ndarray) -> np.ndarray:
    # place_poles needs a full column rank input matrix: row-compress C_bar first.
    U, s, _ = scipy.linalg.svd(C_bar, full_matrices=False)
    r = int(np.sum(s > 1e-10 * s[0])) if s.size and s[0] > 0 else 0
    U_r = U[:, :r]
    C_red = U_r.T @ C_bar
    try:
        result = scipy.signal.place_poles(A_bar.T, C_red.T, targets, method="YT")
    except ValueError as e:
        raise NumericalError(f"robust placement failed: {e}", label="spectrum assignment") from e
    return -result.gain_matrix.T @ U_r.T


def place_spectrum(
    A_bar,
    C_bar,
    lam: float,
    targets: Optional[Sequence[float]] = None,
    method: str = "robust",
    seed: int = 0,
) -> np.ndarray:
    """K_bar with spectral radius of A_bar + K_bar C_bar at most lam."""
    A_bar = as_matrix(A_bar, "A_bar")
    C_bar = as_matrix(C_bar, "C_bar")
    k = A_bar.shape[0]
    if A_bar.shape != (k, k) or C_bar.shape[1] != k:
        raise InvalidInputError(f"inconsistent pair: A_bar {A_bar.shape}, C_bar {C_bar.shape}")
    if not 0.0 < lam < 1.0:
        raise InvalidInputError(f"lambda must lie in (0, 1), got {lam}")
    if method not in PLACEMENT_METHODS:
        raise InvalidInputError(f"unknown placement method {method!r}")
    if k == 0:
        return np.zeros((0, C_bar.shape[0]))
    if not is_observable(A_bar, C_bar):
        raise InvalidInputError("quotient pair is not observable", label="quotient observability")

    targets = placement_targets(k, lam) if targets is None else np.asarray(targets, dtype=float)
    if targets.shape != (k,):
        raise InvalidInputError(f"expected {k} target eigenvalues, got {targets.shape}")

    if method == "robust":
        K_bar = _place_robust(A_bar, C_bar, targets)
    else:
        K_bar = _place_ackermann(A_bar, C_bar, targets, seed)

    achieved = np.sort_complex(scipy.linalg.eigvals(A_bar + K_bar @ C_bar))
    deviation = float(np.max(np.abs(achieved - np.sort(targets))))
    if deviation > PLACEMENT_TOL:
        raise NumericalError(
            f"placed eigenvalues deviate from targets by {deviation:.3e}", label="spectrum assignment"
        )
    rho = spectral_radius(A_bar + K_bar @ C_bar)
    if rho > lam + 1e-8:
        raise NumericalError(f"closed-loop spectral radius {rho:.6f} exceeds lambda={lam}", label="spectrum assignment")
    return K_bar


# --- gains ---------------------------------------------------------------------


def lift_gain(plant: Plant, decomp: ObservabilityDecomposition, K_bar) -> AgentGain:
    """K = Q' K_bar; A_restr solves (A + K C) V = V A_restr."""
    K_bar = as_matrix(K_bar, "K_bar")
    C = plant.sensors[decomp.agent]
    if K_bar.shape != (decomp.Q.shape[0], C.shape[0]):
        raise InvalidInputError(
            f"agent {decomp.agent + 1}: K_bar has shape {K_bar.shape}, expected {(decomp.Q.shape[0], C.shape[0])}"
        )
    K = decomp.Q.T @ K_bar
    A_restr = restriction_matrix(plant.A + K @ C, decomp.V)
    return AgentGain(agent=decomp.agent, K_bar=K_bar, K=K, A_restr=A_restr)


def gain_certificates(
    plant: Plant,
    decomps: Sequence[ObservabilityDecomposition],
    gains: Sequence[AgentGain],
    lam: float,
    tol: float = CHECK_TOL,
) -> List[CertificateRow]:
    """Evaluate every gain invariant without raising, so tampered gains show up as failed rows."""
    rows: List[CertificateRow] = []
    for d, g in zip(decomps, gains):
        C = plant.sensors[d.agent]
        try:
            closed = plant.A + g.K @ C
            quotient = d.A_bar + g.K_bar @ d.C_bar
            scale = 1.0 + induced_two_norm(plant.A) + induced_two_norm(g.K) * induced_two_norm(C)
            rho = spectral_radius(quotient)
            q_res = induced_two_norm(d.Q @ closed - quotient @ d.Q)
            v_res = induced_two_norm(closed @ d.V - d.V @ g.A_restr)
        except (ValueError, TypeError) as e:
            rows.append(CertificateRow(
                check="gain shapes", label="gain shapes", graph=None, agent=d.agent + 1,
                passed=False, value=None, detail=str(e),
            ))
            continue
        rows.append(CertificateRow(
            check="quotient spectral radius", label="spectral radius of A_bar_i + K_bar_i C_bar_i <= lambda",
            graph=None, agent=d.agent + 1, passed=rho <= lam + 1e-8, value=rho, detail=f"lambda={lam}",
        ))
        rows.append(CertificateRow(
            check="quotient commutation", label="Q_i (A + K_i C_i) = (A_bar_i + K_bar_i C_bar_i) Q_i",
            graph=None, agent=d.agent + 1, passed=q_res <= tol * scale, value=q_res, detail="",
        ))
        rows.append(CertificateRow(
            check="restriction commutation", label="(A + K_i C_i) V_i = V_i A_i",
            graph=None, agent=d.agent + 1, passed=v_res <= tol * scale, value=v_res, detail="",
        ))
    return rows


def design_gains(
    plant: Plant,
    decomps: Sequence[ObservabilityDecomposition],
    lam: float,
    method: str = "robust",
    seed: int = 0,
    placer: Optional[Callable[..., np.ndarray]] = None,
) -> List[AgentGain]:
    """Place every quotient spectrum, lift the gains and check them.

    `placer(A_bar, C_bar, lam, seed=...)` replaces place_spectrum when given; `method` then only names it in logs.
    """
    if len(decomps) != plant.m:
        raise InvalidInputError(f"expected {plant.m} decompositions, got {len(decomps)}")
    place = placer or partial(place_spectrum, method=method)
    gains = []
    for d in decomps:
        K_bar = place(d.A_bar, d.C_bar, lam, seed=seed + d.agent)
        gains.append(lift_gain(plant, d, K_bar))
        logger.debug("agent %d: quotient dim %d placed with %s", d.agent + 1, d.A_bar.shape[0], method)
    for row in gain_certificates(plant, decomps, gains, lam):
        if not row["passed"]:
            raise ConsistencyError(
                f"agent {row['agent']}: {row['check']} failed ({row['detail'] or row['value']})",
                label=row["label"],
                value=row["value"],
            )
    return gains


# --- error model -----------------------------------------------------------------


def _flocking(S) -> np.ndarray:
    return S.S if isinstance(S, FlockingMatrix) else as_matrix(S, "S")


def stacked_flocking(S, n: int) -> np.ndarray:
    """S_bar = S (x) I_n."""
    return kron(_flocking(S), np.eye(n))


def averaging_operator(model: ErrorModel, S, q: int) -> np.ndarray:
    """(I - P (I - S_bar))^q: q projected-consensus rounds in stacked error coordinates."""
    if q < 0:
        raise InvalidInputError("q must be non-negative")
    N = model.m * model.n
    step = np.eye(N) - model.P_stack @ (np.eye(N) - stacked_flocking(S, model.n))
    return np.linalg.matrix_power(step, q)


def event_transition(model: ErrorModel, S, q: int) -> np.ndarray:
    """F = A_closed (I - P (I - S_bar))^q."""
    return model.A_closed @ averaging_operator(model, S, q)


def consensus_block(model: ErrorModel, S) -> np.ndarray:
    """B = V' S_bar V; block (i, j) equals S_ij V_i' V_j."""
    return model.V_stack.T @ stacked_flocking(S, model.n) @ model.V_stack


def _schedule_flocking(schedule: GraphSchedule) -> List[FlockingMatrix]:
    return [flocking_matrix(g) for g in schedule.graphs]


def _check(residual: float, bound: float, label: str, graph: Optional[int] = None) -> None:
    if residual > bound:
        where = f" on graph {graph}" if graph is not None else ""
        raise ConsistencyError(f"{label} violated{where} (residual {residual:.3e})", label=label, value=residual)


def build_error_model(
    plant: Plant,
    decomps: Sequence[ObservabilityDecomposition],
    gains: Sequence[AgentGain],
    schedule: GraphSchedule,
    tol: float = CHECK_TOL,
) -> ErrorModel:
    """Assemble the stacked matrices and verify the identities that hold by construction."""
    m, n = plant.m, plant.n
    if m < 2:
        raise InvalidInputError("at least two agents are required")
    if len(decomps) != m or len(gains) != m:
        raise InvalidInputError(f"expected {m} decompositions and gains, got {len(decomps)} and {len(gains)}")
    if schedule.m != m:
        raise InvalidInputError(f"schedule has {schedule.m} vertices, plant has {m} agents")

    model = ErrorModel(
        n=n,
        m=m,
        A_closed=block_diag(*[plant.A + g.K @ C for g, C in zip(gains, plant.sensors)]),
        P_stack=block_diag(*[d.P for d in decomps]),
        V_stack=block_diag(*[d.V for d in decomps]),
        Q_stack=block_diag(*[d.Q for d in decomps]),
        A_tilde=block_diag(*[g.A_restr for g in gains]),
        A_bar_V=block_diag(*[d.A_bar + g.K_bar @ d.C_bar for d, g in zip(decomps, gains)]),
        partition=BlockPartition.square([d.n_i for d in decomps]),
    )

    Q, V = model.Q_stack, model.V_stack
    scale = 1.0 + induced_two_norm(model.A_closed)
    _check(induced_two_norm(Q @ model.A_closed - model.A_bar_V @ Q), tol * scale, "quotient commutation Q A_closed = A_bar_V Q")
    _check(induced_two_norm(model.A_closed @ V - V @ model.A_tilde), tol * scale, "restriction commutation A_closed V = V A_tilde")
    _check(induced_two_norm(model.P_stack - V @ V.T), tol, "projection factorization P = V V'")

    for k, S in enumerate(_schedule_flocking(schedule)):
        B = consensus_block(model, S)
        for q in (1, 2, 3):
            M = averaging_operator(model, S, q)
            _check(induced_two_norm(Q @ M - Q), tol, f"projection annihilation Q M^{q} = Q", k)
            _check(
                induced_two_norm(M @ V - V @ np.linalg.matrix_power(B, q)),
                tol,
                f"consensus restriction M^{q} V = V B^{q}",
                k,
            )

    if model.n_bar > 0:
        rows_part = BlockPartition(tuple([n] * m), model.partition.col_sizes)
        cols_part = BlockPartition(model.partition.row_sizes, tuple([n] * m))
        for label, value in (
            ("mixed norm of V is 1", mixed_matrix_norm(V, rows_part)),
            ("mixed norm of V' is 1", mixed_matrix_norm(V.T, cols_part)),
        ):
            _check(abs(value - 1.0), tol, label)

    logger.debug("error model: m=%d n=%d n_bar=%d", m, n, model.n_bar)
    return model


# --- certificates --------------------------------------------------------------------


def lyapunov_certificate(model: ErrorModel, S, tol: float = CHECK_TOL) -> LyapunovCertificate:
    """R = V' (Pi (x) I) V is positive definite and B' R B - R is negative definite."""
    S_mat = _flocking(S)
    B = consensus_block(model, S_mat)
    if model.n_bar == 0:
        return LyapunovCertificate(
            R=np.zeros((0, 0)), B=B, max_eigenvalue=float("-inf"),
            coupling_min_eigenvalue=float("inf"), weighted_norm=0.0,
        )

    lap = laplacian_certificate(S_mat)
    V = model.V_stack
    R = V.T @ kron(np.diag(lap.pi), np.eye(model.n)) @ V
    R = 0.5 * (R + R.T)
    if not is_positive_definite(R, tol):
        raise CertificateError("R is not positive definite", label="Lyapunov weight R > 0",
                               value=float(np.linalg.eigvalsh(R)[0]))

    decrement = B.T @ R @ B - R
    max_eig = float(np.linalg.eigvalsh(0.5 * (decrement + decrement.T))[-1])
    if max_eig >= 0:
        raise CertificateError(
            f"B' R B - R is not negative definite (max eigenvalue {max_eig:.3e})",
            label="Lyapunov decrement B' R B - R < 0",
            value=max_eig,
        )

    coupling = V.T @ kron(lap.L, np.eye(model.n)) @ V
    coupling = 0.5 * (coupling + coupling.T)
    coupling_min = float(np.linalg.eigvalsh(coupling)[0])
    gap = -decrement - coupling
    gap_min = float(np.linalg.eigvalsh(0.5 * (gap + gap.T))[0])
    if coupling_min <= 0 or gap_min < -tol * max(1.0, induced_two_norm(R)):
        raise CertificateError(
            f"Laplacian coupling bound fails (min eig {coupling_min:.3e}, gap {gap_min:.3e})",
            label="R - B' R B >= V' (L (x) I) V > 0",
            value=min(coupling_min, gap_min),
        )

    norm_R = weighted_two_norm(B, R)
    if norm_R >= 1.0:
        raise CertificateError(
            f"weighted norm of B is {norm_R:.6f} >= 1", label="weighted contraction ||B||_R < 1", value=norm_R
        )
    return LyapunovCertificate(R=R, B=B, max_eigenvalue=max_eig, coupling_min_eigenvalue=coupling_min,
                               weighted_norm=norm_R)


# --- q selection -------------------------------------------------------------------


def _vacuous(method: str) -> QSelection:
    return QSelection(q=1, method=method, p=1, p_bar=1, certified_bound=0.0)


def _smallest_power(base: float, threshold: float, what: str, cap: int) -> int:
    """Smallest k >= 1 with base**k <= threshold, for 0 <= base < 1."""
    value = base
    for k in range(1, cap + 1):
        if value <= threshold:
            return k
        value *= base
    raise NonTerminationError(f"{what}: no exponent <= {cap} reaches {threshold:.3e}", label=what)


def _require_bound(bound: float, lam: float, method: str) -> None:
    if bound > lam * (1 + 1e-9):
        raise CertificateError(
            f"{method}: re-evaluated bound {bound:.6f} exceeds lambda={lam}", label=f"{method} bound <= lambda",
            value=bound,
        )


def choose_q_weighted(
    model: ErrorModel, schedule: GraphSchedule, lam: float, A_tilde=None, cap: int = Q_CAP
) -> QSelection:
    """Weighted two-norm route for a single graph; plain two-norm with q = p * p_bar otherwise."""
    method = "weighted-two-norm"
    if not 0.0 < lam < 1.0:
        raise InvalidInputError(f"lambda must lie in (0, 1), got {lam}")
    A_tilde = model.A_tilde if A_tilde is None else as_matrix(A_tilde, "A_tilde")
    if model.n_bar == 0:
        return _vacuous(method)
    flocking = _schedule_flocking(schedule)

    if schedule.is_constant:
        cert = lyapunov_certificate(model, flocking[0])
        b = cert.weighted_norm
        a = weighted_two_norm(A_tilde, cert.R)
        q = 1 if a == 0 else _smallest_power(b, lam / a, "weighted q search", cap)
        bound = weighted_two_norm(A_tilde @ np.linalg.matrix_power(cert.B, q), cert.R)
        _require_bound(bound, lam, method)
        logger.debug("constant graph: ||B||_R=%.6f ||A_tilde||_R=%.6f q=%d", b, a, q)
        per_graph = ({"graph": 0, "norm_B_R": b, "norm_A_tilde_R": a, "lyapunov_margin": cert.margin},)
        return QSelection(q=q, method=method, p=1, p_bar=q, certified_bound=bound, per_graph=per_graph)

    blocks = [consensus_block(model, S) for S in flocking]
    p_one = []
    for k, B in enumerate(blocks):
        power = B.copy()
        for p1 in range(1, cap + 1):
            if induced_two_norm(power) < 1.0:
                p_one.append(p1)
                break
            power = power @ B
        else:
            raise NonTerminationError(f"graph {k}: ||B^p||_2 >= 1 for every p <= {cap}", label="two-norm contraction")
    p = max(p_one)

    Bp = [np.linalg.matrix_power(B, p) for B in blocks]
    W = [A_tilde.copy() for _ in blocks]
    for p_bar in range(1, cap + 1):
        W = [w @ b for w, b in zip(W, Bp)]
        norms = [induced_two_norm(w) for w in W]
        if max(norms) <= lam:
            break
    else:
        raise NonTerminationError(f"no p_bar <= {cap} gives ||A_tilde B^(p p_bar)||_2 <= {lam}", label="weighted q search")

    per_graph = tuple(
        {"graph": k, "p1": p_one[k], "norm_Bp_2": induced_two_norm(Bp[k]), "norm_A_tilde_Bq_2": norms[k]}
        for k in range(len(blocks))
    )
    bound = max(norms)
    _require_bound(bound, lam, method)
    return QSelection(q=p * p_bar, method=method, p=p, p_bar=p_bar, certified_bound=bound, per_graph=per_graph)


def choose_q_mixed(
    model: ErrorModel, schedule: GraphSchedule, lam: float, A_tilde=None, cap: int = Q_CAP
) -> QSelection:
    """Mixed block norm route with p = (m - 1)^2 and p_bar maximised over the declared graphs."""
    method = "mixed-norm"
    if not 0.0 < lam < 1.0:
        raise InvalidInputError(f"lambda must lie in (0, 1), got {lam}")
    A_tilde = model.A_tilde if A_tilde is None else as_matrix(A_tilde, "A_tilde")
    if model.n_bar == 0:
        return _vacuous(method)

    part = model.partition
    full_part = BlockPartition.square([model.n] * model.m)
    p = (model.m - 1) ** 2
    a = mixed_matrix_norm(A_tilde, part)
    flocking = _schedule_flocking(schedule)
    blocks = [consensus_block(model, S) for S in flocking]

    per_graph = []
    p_bars = []
    for k, (S, B) in enumerate(zip(flocking, blocks)):
        Bp = np.linalg.matrix_power(B, p)
        nb = mixed_matrix_norm(Bp, part)
        if nb >= 1.0:
            raise CertificateError(
                f"graph {k}: mixed norm of B^{p} is {nb:.6f} >= 1", label="mixed-norm contraction ||B^p|| < 1",
                value=nb,
            )
        PSP = model.P_stack @ stacked_flocking(S, model.n) @ model.P_stack
        PSPp = np.linalg.matrix_power(PSP, p)
        _check(induced_two_norm(Bp - model.V_stack.T @ PSPp @ model.V_stack), CHECK_TOL,
               "projected power B^p = V' (P S_bar P)^p V", k)
        p_bar_k = 1 if a == 0 else _smallest_power(nb, lam / a, "mixed q search", cap)
        p_bars.append(p_bar_k)
        per_graph.append({"graph": k, "mixed_norm_Bp": nb, "mixed_norm_PSPp": mixed_matrix_norm(PSPp, full_part),
                          "p_bar": p_bar_k})

    p_min = None
    for candidate in range(1, p + 1):
        if all(mixed_matrix_norm(np.linalg.matrix_power(B, candidate), part) < 1.0 for B in blocks):
            p_min = candidate
            break

    p_bar = max(p_bars)
    q = p * p_bar
    bound = max(mixed_matrix_norm(A_tilde @ np.linalg.matrix_power(B, q), part) for B in blocks)
    _require_bound(bound, lam, method)
    logger.debug("mixed norm: p=%d p_bar=%d ||A_tilde||=%.6f", p, p_bar, a)
    return QSelection(q=q, method=method, p=p, p_bar=p_bar, certified_bound=bound, per_graph=tuple(per_graph),
                      p_min_observed=p_min)


def explicit_q(model: ErrorModel, schedule: GraphSchedule, q: int) -> QSelection:
    """A user-fixed q; the reported bound may exceed lambda."""
    if q < 1:
        raise InvalidInputError("explicit q must be positive")
    if model.n_bar == 0:
        return QSelection(q=q, method="explicit", p=1, p_bar=q, certified_bound=0.0)
    per_graph = []
    for k, S in enumerate(_schedule_flocking(schedule)):
        B = consensus_block(model, S)
        per_graph.append({"graph": k, "norm_A_tilde_Bq_2": induced_two_norm(model.A_tilde @ np.linalg.matrix_power(B, q))})
    bound = max(row["norm_A_tilde_Bq_2"] for row in per_graph)
    return QSelection(q=q, method="explicit", p=1, p_bar=q, certified_bound=bound, per_graph=tuple(per_graph))


# --- transition products -------------------------------------------------------------


def block_triangular_form(model: ErrorModel, S, q: int):
    """(F, T) with F = A_closed M^q and T = H' [[A_bar_V, 0], [A_hat_V, A_V]] H, H = [Q; V'].

    A_V = A_tilde B^q and A_hat_V = V' F Q'; F equals T whenever the stacked identities hold.
    """
    Q, V = model.Q_stack, model.V_stack
    F = event_transition(model, S, q)
    A_V = model.A_tilde @ np.linalg.matrix_power(consensus_block(model, S), q)
    A_hat_V = V.T @ F @ Q.T
    upper = np.hstack([model.A_bar_V, np.zeros((Q.shape[0], V.shape[1]))])
    lower = np.hstack([A_hat_V, A_V])
    H = model.H
    return F, H.T @ np.vstack([upper, lower]) @ H


def transition_product(model: ErrorModel, schedule: GraphSchedule, q: int, tau_max: int) -> List[np.ndarray]:
    """[Phi(0), ..., Phi(tau_max)] with Phi(0) = I and Phi(tau) = F(tau-1) ... F(0).

    Each distinct factor is cross-checked against its block-triangular form.
    """
    if q < 1:
        raise InvalidInputError("q must be positive")
    if tau_max < 0:
        raise InvalidInputError("tau_max must be non-negative")
    factors: Dict[int, np.ndarray] = {}

    def factor(index: int) -> np.ndarray:
        if index not in factors:
            F, triangular = block_triangular_form(model, flocking_matrix(schedule.graphs[index]), q)
            residual = induced_two_norm(F - triangular)
            if residual > TRANSITION_TOL * (1.0 + induced_two_norm(F)):
                raise ConsistencyError(
                    f"graph {index}: event transition disagrees with its block-triangular form ({residual:.3e})",
                    label="block-triangular transition form",
                    value=residual,
                )
            factors[index] = F
        return factors[index]

    N = model.m * model.n
    phis = [np.eye(N)]
    for tau in range(tau_max):
        phis.append(factor(schedule.graph_index(tau)) @ phis[-1])
    return phis
