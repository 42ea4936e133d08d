"""
Plant analysis: unobservable spaces, per-agent observability decompositions,
joint observability and restrictions of matrices to invariant subspaces.
"""

import logging
from typing import Any, Dict, List, Tuple

import numpy as np

from distributed_observer.config import RANK_TOL
from distributed_observer.core.matrix_core import (
    as_integer,
    as_matrix,
    induced_two_norm,
    kernel_basis,
    orthonormal_row_complement,
)
from distributed_observer.domain.models import ObservabilityDecomposition, Plant
from distributed_observer.errors import ConsistencyError, InvalidInputError, NotInvariantError

logger = logging.getLogger(__name__)

DECOMPOSITION_TOL = 1e-8


def observability_matrix(A, C) -> np.ndarray:
    """[C; CA; ...; CA^(n-1)]."""
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    n = A.shape[0]
    if A.shape != (n, n):
        raise InvalidInputError(f"A: expected a square matrix, got {A.shape}")
    if C.shape[1] != n:
        raise InvalidInputError(f"C: expected {n} columns, got {C.shape[1]}")
    blocks = []
    block = C
    for _ in range(n):
        blocks.append(block)
        block = block @ A
    return np.vstack(blocks) if blocks else np.zeros((0, n))


def unobservable_space(C, A, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the largest A-invariant subspace contained in ker C."""
    return kernel_basis(observability_matrix(A, C), tol)


def is_observable(A, C, tol: float = RANK_TOL) -> bool:
    A = as_matrix(A, "A")
    if A.shape[0] == 0:
        return True
    return unobservable_space(C, A, tol).shape[1] == 0


def _residual(lhs: np.ndarray, rhs: np.ndarray) -> float:
    return induced_two_norm(lhs - rhs) if lhs.size else 0.0


def decompose(plant: Plant, agent: int, tol: float = RANK_TOL) -> ObservabilityDecomposition:
    """Split R^n for one agent into its unobservable space and the observable quotient.

    Q has orthonormal rows, so its right inverse is Q' and both linear solves
    (C_bar Q = C_i, Q A = A_bar Q) reduce to products with Q'.
    """
    if not 0 <= agent < plant.m:
        raise InvalidInputError(f"agent index {agent} out of range for m={plant.m}")
    A = plant.A
    C = plant.sensors[agent]
    V = unobservable_space(C, A, tol)
    Q = orthonormal_row_complement(V)
    A_bar = Q @ A @ Q.T
    C_bar = C @ Q.T

    c_res = _residual(C_bar @ Q, C)
    if c_res > DECOMPOSITION_TOL * (1.0 + induced_two_norm(C)):
        raise ConsistencyError(
            f"agent {agent + 1}: unobservable space not inside ker C (residual {c_res:.3e})",
            label="output-factorization C_bar Q = C",
            value=c_res,
        )
    a_res = _residual(Q @ A, A_bar @ Q)
    if a_res > DECOMPOSITION_TOL * (1.0 + induced_two_norm(A)):
        raise ConsistencyError(
            f"agent {agent + 1}: unobservable space not A-invariant (residual {a_res:.3e})",
            label="quotient-factorization Q A = A_bar Q",
            value=a_res,
        )
    if not is_observable(A_bar, C_bar, tol):
        raise ConsistencyError(
            f"agent {agent + 1}: quotient pair is not observable; rank tolerance misclassified a mode",
            label="quotient observability",
        )

    logger.debug("agent %d: n_i=%d quotient dim=%d", agent + 1, V.shape[1], Q.shape[0])
    return ObservabilityDecomposition(agent=agent, V=V, Q=Q, C_bar=C_bar, A_bar=A_bar, P=V @ V.T)


def decompose_all(plant: Plant, tol: float = RANK_TOL) -> List[ObservabilityDecomposition]:
    return [decompose(plant, i, tol) for i in range(plant.m)]


def joint_observability(plant: Plant, tol: float = RANK_TOL) -> bool:
    """True iff the stacked pair is observable; cross-checked against the intersection of the V_i."""
    stacked = unobservable_space(plant.stacked_output, plant.A, tol).shape[1] == 0

    n = plant.n
    complements = [np.eye(n) - d.P for d in decompose_all(plant, tol)]
    intersection = kernel_basis(np.vstack(complements), tol)
    trivial = intersection.shape[1] == 0

    if stacked != trivial:
        raise ConsistencyError(
            f"stacked rank test says {stacked} but the unobservable-space intersection has "
            f"dimension {intersection.shape[1]}",
            label="joint observability cross-check",
        )
    return stacked


def restriction_matrix(M, V, tol: float = 1e-9) -> np.ndarray:
    """A_V = V' M V, the unique solution of M V = V A_V for an M-invariant span(V)."""
    M = as_matrix(M, "M")
    V = as_matrix(V, "V")
    if M.shape != (V.shape[0], V.shape[0]):
        raise InvalidInputError(f"M {M.shape} does not act on the space of V {V.shape}")
    k = V.shape[1]
    if k == 0:
        return np.zeros((0, 0))
    if np.max(np.abs(V.T @ V - np.eye(k))) > 1e-9:
        raise InvalidInputError("V: columns are not orthonormal")
    A_V = V.T @ M @ V
    res = _residual(M @ V, V @ A_V)
    if res > tol * max(induced_two_norm(M), 1.0):
        raise NotInvariantError(f"span(V) is not M-invariant (residual {res:.3e})", label="invariant subspace")
    return A_V


def invariant_factorization(M, V, tol: float = 1e-9) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Block-triangular form M = H' [[A_bar_V, 0], [A_hat_V, A_V]] H with H = [Q; V'].

    Returns (A_bar_V, A_V, A_hat_V, H).
    """
    M = as_matrix(M, "M")
    V = as_matrix(V, "V")
    Q = orthonormal_row_complement(V)
    A_V = restriction_matrix(M, V, tol)
    A_bar_V = Q @ M @ Q.T
    A_hat_V = V.T @ M @ Q.T
    H = np.vstack([Q, V.T])
    return A_bar_V, A_V, A_hat_V, H


# --- serialization ----------------------------------------------------------------


def plant_to_document(plant: Plant) -> Dict[str, Any]:
    return {
        "n": plant.n,
        "m": plant.m,
        "A": plant.A.tolist(),
        "sensors": [C.tolist() for C in plant.sensors],
    }


def plant_from_document(doc: Dict[str, Any]) -> Plant:
    if not isinstance(doc, dict):
        raise InvalidInputError("plant: expected a mapping")
    try:
        A, sensors = doc["A"], doc["sensors"]
    except KeyError as e:
        raise InvalidInputError(f"plant: missing field {e.args[0]!r}") from e
    if not isinstance(sensors, list):
        raise InvalidInputError("plant.sensors: expected a list of matrices")
    plant = Plant(A=as_matrix(A, "A"), sensors=tuple(as_matrix(C, f"C_{i + 1}") for i, C in enumerate(sensors)))
    if "n" in doc and as_integer(doc["n"], "plant.n") != plant.n:
        raise InvalidInputError(f"plant.n={doc['n']} but A is {plant.n}x{plant.n}")
    if "m" in doc and as_integer(doc["m"], "plant.m") != plant.m:
        raise InvalidInputError(f"plant.m={doc['m']} but {plant.m} sensors are listed")
    return plant
