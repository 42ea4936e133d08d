"""
Dense matrix primitives: validation, kernels, complements and the three
matrix norms used for certification (two-norm, weighted two-norm, mixed
block norm).

All functions are pure and take/return numpy arrays.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from distributed_observer.config import RANK_TOL
from distributed_observer.errors import InvalidInputError


def as_matrix(data, name: str = "M", allow_empty: bool = True) -> np.ndarray:
    """Coerce to a finite 2-D float array; reject ragged, NaN or Inf input."""
    try:
        M = np.array(data, dtype=float)
    except (TypeError, ValueError) as e:
        raise InvalidInputError(f"{name}: not a numeric matrix ({e})") from e
    if M.ndim == 1 and M.size == 0:
        M = M.reshape(0, 0)
    if M.ndim != 2:
        raise InvalidInputError(f"{name}: expected a 2-D matrix, got shape {M.shape}")
    if not allow_empty and M.size == 0:
        raise InvalidInputError(f"{name}: empty matrix not allowed")
    if not np.all(np.isfinite(M)):
        raise InvalidInputError(f"{name}: non-finite entries")
    return M


def as_real(value, name: str) -> float:
    """A finite real scalar; strings and booleans are rejected."""
    if isinstance(value, (bool, str)) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise InvalidInputError(f"{name}: expected a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        raise InvalidInputError(f"{name}: expected a finite number, got {value!r}")
    return value


def as_integer(value, name: str, minimum: Optional[int] = None) -> int:
    """An integer scalar; floats must be integral (2.0 is accepted, 1.5 is not)."""
    if isinstance(value, (float, np.floating)) and not isinstance(value, bool):
        if not (np.isfinite(value) and float(value).is_integer()):
            raise InvalidInputError(f"{name}: expected an integer, got {value!r}")
        value = int(value)
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidInputError(f"{name}: expected an integer, got {value!r}")
    value = int(value)
    if minimum is not None and value < minimum:
        raise InvalidInputError(f"{name}: must be at least {minimum}, got {value}")
    return value


def as_vector(data, name: str) -> np.ndarray:
    """A finite 1-D float array."""
    try:
        v = np.array(data, dtype=float)
    except (TypeError, ValueError) as e:
        raise InvalidInputError(f"{name}: not a numeric vector ({e})") from e
    if v.ndim != 1:
        raise InvalidInputError(f"{name}: expected a flat list of numbers, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InvalidInputError(f"{name}: non-finite entries")
    return v


def _square(M: np.ndarray, name: str) -> None:
    if M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"{name}: expected a square matrix, got shape {M.shape}")


@dataclass(frozen=True)
class BlockPartition:
    """Row/column block sizes of a partitioned matrix. Zero-size blocks are allowed."""

    row_sizes: Tuple[int, ...]
    col_sizes: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "row_sizes", tuple(int(s) for s in self.row_sizes))
        object.__setattr__(self, "col_sizes", tuple(int(s) for s in self.col_sizes))
        if any(s < 0 for s in self.row_sizes + self.col_sizes):
            raise InvalidInputError("block sizes must be non-negative")

    @classmethod
    def square(cls, sizes: Sequence[int]) -> "BlockPartition":
        return cls(tuple(sizes), tuple(sizes))

    @property
    def shape(self) -> Tuple[int, int]:
        return sum(self.row_sizes), sum(self.col_sizes)

    def row_slices(self):
        return _slices(self.row_sizes)

    def col_slices(self):
        return _slices(self.col_sizes)


def _slices(sizes: Sequence[int]):
    offsets = np.concatenate(([0], np.cumsum(sizes, dtype=int)))
    return [slice(int(a), int(b)) for a, b in zip(offsets[:-1], offsets[1:])]


def block_diag(*blocks) -> np.ndarray:
    """Block-diagonal assembly; (k, 0) and (0, 0) blocks contribute rows/columns only."""
    mats = [as_matrix(b, "block") for b in blocks]
    rows = sum(b.shape[0] for b in mats)
    cols = sum(b.shape[1] for b in mats)
    out = np.zeros((rows, cols))
    r = c = 0
    for b in mats:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def kernel_basis(M, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of ker M; singular values <= tol * sigma_max count as zero."""
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    M = as_matrix(M, "M")
    cols = M.shape[1]
    if M.shape[0] == 0 or not np.any(M):
        return np.eye(cols)
    _, s, vh = scipy.linalg.svd(M, full_matrices=True)
    rank = int(np.sum(s > tol * s[0]))
    return vh[rank:].T.copy()


def orthonormal_row_complement(V, tol: float = 1e-9) -> np.ndarray:
    """Q with orthonormal rows spanning span(V)^perp, so that [V | Q^T] is orthogonal."""
    V = as_matrix(V, "V")
    n, k = V.shape
    if k == 0:
        return np.eye(n)
    if np.max(np.abs(V.T @ V - np.eye(k))) > tol:
        raise InvalidInputError("V: columns are not orthonormal")
    if k == n:
        return np.zeros((0, n))
    u, _, _ = scipy.linalg.svd(V, full_matrices=True)
    return u[:, k:].T.copy()


def induced_two_norm(M) -> float:
    M = as_matrix(M, "M")
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def _symmetric_eig(R, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    R = as_matrix(R, "R")
    _square(R, "R")
    scale = max(1.0, float(np.max(np.abs(R)))) if R.size else 1.0
    if R.size and np.max(np.abs(R - R.T)) > tol * scale:
        raise InvalidInputError("R: not symmetric")
    w, U = np.linalg.eigh(0.5 * (R + R.T))
    if w.size and w[0] <= tol * max(1.0, float(np.max(np.abs(w)))):
        raise InvalidInputError(f"R: not positive definite (min eigenvalue {w[0]:.3e})")
    return w, U


def symmetric_sqrt(R, tol: float = 1e-12) -> np.ndarray:
    """R^(1/2) of a symmetric positive definite matrix."""
    w, U = _symmetric_eig(R, tol)
    return (U * np.sqrt(w)) @ U.T


def symmetric_inv_sqrt(R, tol: float = 1e-12) -> np.ndarray:
    """R^(-1/2) of a symmetric positive definite matrix."""
    w, U = _symmetric_eig(R, tol)
    return (U / np.sqrt(w)) @ U.T


def weighted_two_norm(M, R, tol: float = 1e-12) -> float:
    """Norm induced by x -> sqrt(x' R x): sigma_max(R^(1/2) M R^(-1/2))."""
    M = as_matrix(M, "M")
    R = as_matrix(R, "R")
    _square(M, "M")
    if R.shape != M.shape:
        raise InvalidInputError(f"R: shape {R.shape} does not match M {M.shape}")
    if M.size == 0:
        return 0.0
    return induced_two_norm(symmetric_sqrt(R, tol) @ M @ symmetric_inv_sqrt(R, tol))


def block_norm_matrix(M, part: BlockPartition) -> np.ndarray:
    """<M>: the matrix of blockwise two-norms."""
    M = as_matrix(M, "M")
    if part.shape != M.shape:
        raise InvalidInputError(f"partition {part.shape} inconsistent with matrix {M.shape}")
    rows, cols = part.row_slices(), part.col_slices()
    out = np.zeros((len(rows), len(cols)))
    for i, rs in enumerate(rows):
        for j, cs in enumerate(cols):
            out[i, j] = induced_two_norm(M[rs, cs])
    return out


def mixed_matrix_norm(M, part: BlockPartition) -> float:
    """||<M>||_inf: largest row sum of blockwise two-norms."""
    blocks = block_norm_matrix(M, part)
    if blocks.size == 0:
        return 0.0
    return float(np.max(blocks.sum(axis=1)))


def kron(left, right) -> np.ndarray:
    return np.kron(as_matrix(left, "left"), as_matrix(right, "right"))


def spectral_radius(M) -> float:
    M = as_matrix(M, "M")
    _square(M, "M")
    if M.size == 0:
        return 0.0
    return float(np.max(np.abs(scipy.linalg.eigvals(M))))


def _symmetric_eigenvalues(M, tol: float) -> np.ndarray:
    M = as_matrix(M, "M")
    _square(M, "M")
    if M.size == 0:
        return np.zeros(0)
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > tol * scale:
        raise InvalidInputError("M: not symmetric")
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def is_positive_semidefinite(M, tol: float = 1e-9) -> bool:
    w = _symmetric_eigenvalues(M, tol)
    return bool(w.size == 0 or w[0] >= -tol)


def is_positive_definite(M, tol: float = 1e-9) -> bool:
    w = _symmetric_eigenvalues(M, tol)
    return bool(w.size == 0 or w[0] > tol)
