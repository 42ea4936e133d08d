"""
Certificate suite: every invariant the synthesis relies on, evaluated without
raising so a report can list all passes and failures side by side.
"""

import logging
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from distributed_observer.config import CHECK_TOL
from distributed_observer.core.matrix_core import induced_two_norm, mixed_matrix_norm, spectral_radius
from distributed_observer.core.network import flocking_matrix, laplacian_certificate
from distributed_observer.core.observer_design import (
    averaging_operator,
    block_triangular_form,
    consensus_block,
    event_transition,
    gain_certificates,
    lyapunov_certificate,
)
from distributed_observer.core.plant import invariant_factorization, joint_observability
from distributed_observer.domain.models import (
    AgentGain,
    CertificateRow,
    ErrorModel,
    GraphSchedule,
    ObservabilityDecomposition,
    Plant,
    QSelection,
    SimTrace,
)
from distributed_observer.errors import ObserverError

logger = logging.getLogger(__name__)

IDENTITY_QS = (1, 2, 5)
ORACLE_TOL = 1e-8


def _row(check: str, label: str, passed: bool, value: Optional[float] = None, graph: Optional[int] = None,
         agent: Optional[int] = None, detail: str = "") -> CertificateRow:
    return CertificateRow(check=check, label=label, graph=graph, agent=agent, passed=bool(passed),
                          value=None if value is None else float(value), detail=detail)


def _guarded(check: str, label: str, fn: Callable[[], Tuple[bool, Optional[float], str]],
             graph: Optional[int] = None) -> CertificateRow:
    try:
        passed, value, detail = fn()
    except ObserverError as e:
        return _row(check, e.label or label, False, getattr(e, "value", None), graph=graph, detail=str(e))
    return _row(check, label, passed, value, graph=graph, detail=detail)


def decomposition_rows(plant: Plant, decomps: Sequence[ObservabilityDecomposition]) -> List[CertificateRow]:
    rows = [_guarded("joint observability", "joint observability",
                     lambda: (joint_observability(plant), None, ""))]
    a_norm = induced_two_norm(plant.A)
    for d in decomps:
        C = plant.sensors[d.agent]
        n = plant.n
        split = induced_two_norm(np.eye(n) - d.P - d.Q.T @ d.Q)
        invariance = induced_two_norm((np.eye(n) - d.P) @ plant.A @ d.V)
        kernel = induced_two_norm(C @ d.V)
        rows += [
            _row("orthogonal splitting", "I - P_i = Q_i' Q_i", split <= 1e-10, split, agent=d.agent + 1),
            _row("A-invariance", "A span(V_i) in span(V_i)", invariance <= 1e-9 * max(a_norm, 1.0), invariance,
                 agent=d.agent + 1),
            _row("output kernel", "C_i V_i = 0", kernel <= 1e-9 * (1 + induced_two_norm(C)), kernel,
                 agent=d.agent + 1),
        ]
    return rows


def factorization_rows(plant: Plant, decomps: Sequence[ObservabilityDecomposition], gains: Sequence[AgentGain],
                       tol: float = CHECK_TOL) -> List[CertificateRow]:
    """A + K_i C_i = H' [[A_bar_V, 0], [A_hat_V, A_V]] H with H = [Q; V_i'], per agent."""
    rows: List[CertificateRow] = []
    for d, g in zip(decomps, gains):
        M = plant.A + g.K @ plant.sensors[d.agent]

        def reconstruct(M=M, V=d.V):
            A_bar_V, A_V, A_hat_V, H = invariant_factorization(M, V)
            upper = np.hstack([A_bar_V, np.zeros((A_bar_V.shape[0], A_V.shape[1]))])
            lower = np.hstack([A_hat_V, A_V])
            residual = induced_two_norm(M - H.T @ np.vstack([upper, lower]) @ H)
            return residual <= tol * (1.0 + induced_two_norm(M)), residual, ""

        row = _guarded("closed-loop factorization", "A + K_i C_i = H' [[A_bar, 0], [A_hat, A_V]] H", reconstruct)
        row["agent"] = d.agent + 1
        rows.append(row)
    return rows


def graph_rows(model: ErrorModel, schedule: GraphSchedule, selection: Optional[QSelection],
               tol: float = CHECK_TOL) -> List[CertificateRow]:
    """Per declared graph: Laplacian and Lyapunov certificates, contraction bounds, stacked identities."""
    rows: List[CertificateRow] = []
    p = (model.m - 1) ** 2
    scale = 1.0 + induced_two_norm(model.A_closed)
    Q, V = model.Q_stack, model.V_stack

    for k, g in enumerate(schedule.graphs):
        S = flocking_matrix(g)
        B = consensus_block(model, S)

        def laplacian():
            cert = laplacian_certificate(S)
            return True, float(cert.eigenvalues[1]), f"kernel dim {cert.kernel_dim}"

        rows.append(_guarded("generalized Laplacian", "L = Pi - S' Pi S is PSD with kernel span(1)", laplacian, k))

        if model.n_bar > 0:
            def lyapunov():
                cert = lyapunov_certificate(model, S)
                return True, cert.margin, f"coupling min eig {cert.coupling_min_eigenvalue:.3e}"

            def weighted():
                cert = lyapunov_certificate(model, S)
                return cert.weighted_norm < 1.0, cert.weighted_norm, ""

            nb = mixed_matrix_norm(np.linalg.matrix_power(B, p), model.partition)
            rows += [
                _guarded("Lyapunov decrement", "B' R B - R < 0", lyapunov, k),
                _guarded("weighted contraction", "||B||_R < 1", weighted, k),
                _row("mixed contraction", f"||B^{p}|| < 1 in the mixed norm", nb < 1.0, nb, graph=k),
            ]

        for q in IDENTITY_QS:
            M = averaging_operator(model, S, q)
            F = event_transition(model, S, q)
            Bq = np.linalg.matrix_power(B, q)
            checks = (
                ("projection annihilation", f"Q M^{q} = Q", induced_two_norm(Q @ M - Q), tol),
                ("consensus restriction", f"M^{q} V = V B^{q}", induced_two_norm(M @ V - V @ Bq), tol),
                ("event quotient", f"Q F_{q} = A_bar_V Q", induced_two_norm(Q @ F - model.A_bar_V @ Q), tol * scale),
                ("event restriction", f"F_{q} V = V A_tilde B^{q}",
                 induced_two_norm(F @ V - V @ model.A_tilde @ Bq), tol * scale),
            )
            for check, label, residual, bound in checks:
                rows.append(_row(check, label, residual <= bound, residual, graph=k, detail=f"q={q}"))
            F, T = block_triangular_form(model, S, q)
            residual = induced_two_norm(F - T)
            rows.append(_row("block-triangular form", "F = H' [[A_bar_V, 0], [A_hat_V, A_V]] H",
                             residual <= tol * scale, residual, graph=k, detail=f"q={q}"))

        if selection is not None and model.n_bar > 0:
            rho = spectral_radius(model.A_tilde @ np.linalg.matrix_power(B, selection.q))
            rows.append(_row("selected q spectral radius", "rho(A_tilde B^q) <= certified bound",
                             rho <= selection.certified_bound + 1e-9, rho, graph=k, detail=f"q={selection.q}"))
    return rows


def selection_rows(selection: QSelection, lam: float) -> List[CertificateRow]:
    met = selection.certified_bound <= lam * (1 + 1e-9)
    if selection.method == "explicit":
        detail = "" if met else "rate target not met by the fixed q"
        return [_row("q bound", "explicit q (not certified)", True, selection.certified_bound, detail=detail)]
    return [_row("q bound", f"{selection.method} bound <= lambda", met, selection.certified_bound,
                 detail=f"q={selection.q} p={selection.p} p_bar={selection.p_bar}")]


def certificate_suite(
    plant: Plant,
    decomps: Sequence[ObservabilityDecomposition],
    gains: Sequence[AgentGain],
    schedule: GraphSchedule,
    lam: float,
    model: Optional[ErrorModel] = None,
    selection: Optional[QSelection] = None,
) -> List[CertificateRow]:
    rows = decomposition_rows(plant, decomps)
    rows += gain_certificates(plant, decomps, gains, lam)
    rows += factorization_rows(plant, decomps, gains)
    if model is not None:
        rows += graph_rows(model, schedule, selection)
    if selection is not None:
        rows += selection_rows(selection, lam)
    return rows


def oracle_rows(trace: SimTrace, phis: Sequence[np.ndarray]) -> List[CertificateRow]:
    """Simulated stacked error against Phi(tau) e(0), relative to ||e(0)|| + ||x(tau)||."""
    e0 = trace.stacked_error(0)
    worst = 0.0
    for tau in trace.taus:
        scale = np.linalg.norm(e0) + np.linalg.norm(trace.states[tau])
        residual = np.linalg.norm(trace.stacked_error(tau) - phis[tau] @ e0)
        worst = max(worst, float(residual / scale) if scale > 0 else float(residual))
    return [_row("oracle equivalence", "e(tau) = Phi(tau) e(0)", worst <= ORACLE_TOL, worst,
                 detail=f"tau_max={trace.tau_max}")]


def decay_ratio(trace: SimTrace, lam: float, constant: float) -> float:
    """max over tau of max_i ||e_i(tau)|| / (C lam^tau); at most 1 when the decay bound holds."""
    if constant == 0.0:
        return 0.0 if max(trace.total_error_norms) == 0.0 else float("inf")
    return max(float(np.max(trace.agent_error_norms[tau])) / (constant * lam ** tau) for tau in trace.taus)


def decay_rows(trace: SimTrace, lam: float, constant: float, rel_tol: float = 1e-12) -> List[CertificateRow]:
    """max_i ||e_i(tau)|| <= C lam^tau for every recorded tau."""
    worst = decay_ratio(trace, lam, constant)
    return [_row("exponential decay", "max_i ||e_i(tau)|| <= C lambda^tau", worst <= 1.0 + rel_tol, worst,
                 detail=f"C={constant:.6g}")]


def all_passed(rows: Sequence[CertificateRow]) -> bool:
    return all(r["passed"] for r in rows)


def failures(rows: Sequence[CertificateRow]) -> List[CertificateRow]:
    return [r for r in rows if not r["passed"]]
