"""
Neighbor graphs: strong connectivity, flocking matrices, Perron vectors and
the generalized Laplacian certificate.
"""

import logging
from typing import List, Optional, Set

import networkx as nx
import numpy as np
import scipy.linalg

from distributed_observer.core.matrix_core import as_matrix
from distributed_observer.domain.models import Digraph, FlockingMatrix, LaplacianCertificate
from distributed_observer.errors import CertificateError, InvalidInputError, NonTerminationError, NumericalError

logger = logging.getLogger(__name__)


def to_networkx(g: Digraph) -> nx.DiGraph:
    G = nx.DiGraph()
    G.add_nodes_from(range(g.m))
    G.add_edges_from(g.arcs)
    return G


def is_strongly_connected(g: Digraph) -> bool:
    """Forward and backward reachability from vertex 0 both cover every vertex."""
    G = to_networkx(g)
    reached = nx.descendants(G, 0) | {0}
    if len(reached) != g.m:
        return False
    return len(nx.ancestors(G, 0) | {0}) == g.m


def neighbor_sets(g: Digraph) -> List[Set[int]]:
    out: List[Set[int]] = [set() for _ in range(g.m)]
    for j, i in g.arcs:
        out[i].add(j)
    return out


def flocking_matrix(g: Digraph, tau: Optional[int] = None) -> FlockingMatrix:
    """S = D^-1 A': row i averages uniformly over the neighbors of agent i (itself included)."""
    if not g.has_self_loops:
        missing = [i + 1 for i in range(g.m) if (i, i) not in g.arcs]
        raise InvalidInputError(f"agents {missing} are not neighbors of themselves", label="self-loops")
    adjacency = g.adjacency()
    in_degree = adjacency.sum(axis=0)
    S = adjacency.T / in_degree[:, None]
    return FlockingMatrix(S=S, tau=tau)


def _as_flocking(S) -> np.ndarray:
    M = S.S if isinstance(S, FlockingMatrix) else as_matrix(S, "S")
    if M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise InvalidInputError(f"S: expected a non-empty square matrix, got {M.shape}")
    if np.any(M < 0) or np.max(np.abs(M.sum(axis=1) - 1.0)) > 1e-12:
        raise InvalidInputError("S: not row-stochastic")
    return M


def perron_vector(S, tol: float = 1e-10) -> np.ndarray:
    """Positive probability vector pi with S' pi = pi."""
    M = _as_flocking(S)
    if not is_strongly_connected(FlockingMatrix(M).graph()):
        raise InvalidInputError("S: graph is not strongly connected, Perron vector not unique")
    w, vecs = scipy.linalg.eig(M.T)
    k = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(vecs[:, k])
    pi = pi / pi.sum()
    if np.min(pi) <= 0:
        raise NumericalError(f"Perron vector has a non-positive entry ({np.min(pi):.3e})", label="Perron positivity")
    residual = float(np.max(np.abs(M.T @ pi - pi)))
    if residual > max(tol, 1e-12) * 100:
        raise NumericalError(f"Perron residual {residual:.3e} too large", label="Perron fixed point")
    return pi


def perron_vector_power_iteration(S, tol: float = 1e-12, max_iter: int = 100000) -> np.ndarray:
    """Cross-check for perron_vector: iterate pi <- S' pi from the uniform vector.

    Self-loops make S primitive, so the iteration converges.
    """
    M = _as_flocking(S)
    m = M.shape[0]
    pi = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        nxt = M.T @ pi
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) <= tol:
            return nxt
        pi = nxt
    raise NonTerminationError(f"power iteration did not converge in {max_iter} steps", label="Perron power iteration")


def laplacian_certificate(S, tol: float = 1e-9) -> LaplacianCertificate:
    """L = Pi - S' Pi S is PSD, annihilates the ones vector and has a one-dimensional kernel."""
    M = _as_flocking(S)
    m = M.shape[0]
    if m < 2 or not is_strongly_connected(FlockingMatrix(M).graph()):
        raise InvalidInputError("S: graph must be strongly connected on at least two vertices", label="strong-connectivity")
    if np.any(np.diag(M) <= 0):
        raise InvalidInputError("S: diagonal must be strictly positive", label="self-loops")

    pi = perron_vector(M)
    Pi = np.diag(pi)
    L = Pi - M.T @ Pi @ M
    L = 0.5 * (L + L.T)
    eig = np.linalg.eigvalsh(L)
    null_residual = float(np.max(np.abs(L @ np.ones(m))))
    kernel_dim = int(np.sum(eig < tol))
    off = L[~np.eye(m, dtype=bool)]
    max_off = float(np.max(off)) if off.size else 0.0
    cert = LaplacianCertificate(
        pi=pi, L=L, eigenvalues=eig, null_residual=null_residual, kernel_dim=kernel_dim, max_offdiagonal=max_off
    )

    if eig[0] < -tol:
        raise CertificateError(
            f"generalized Laplacian not PSD (min eigenvalue {eig[0]:.3e})", label="Laplacian PSD", value=float(eig[0])
        )
    if null_residual > tol:
        raise CertificateError(
            f"generalized Laplacian does not annihilate ones (residual {null_residual:.3e})",
            label="Laplacian null vector",
            value=null_residual,
        )
    if kernel_dim != 1:
        raise CertificateError(
            f"generalized Laplacian kernel has dimension {kernel_dim}",
            label="Laplacian kernel dimension",
            value=float(eig[1]) if m > 1 else None,
        )
    if max_off > tol:
        raise CertificateError(
            f"generalized Laplacian has a positive off-diagonal entry ({max_off:.3e})",
            label="Laplacian edge form",
            value=max_off,
        )
    logger.debug("Laplacian certificate: min eig %.3e, gap %.3e", eig[0], eig[1])
    return cert


def random_strongly_connected_graph(m: int, rng: np.random.Generator, arc_prob: float = 0.3) -> Digraph:
    """A random Hamiltonian cycle (strong connectivity) plus independent extra arcs and self-loops."""
    if m < 1:
        raise InvalidInputError("m must be positive")
    order = rng.permutation(m)
    arcs = {(int(order[k]), int(order[(k + 1) % m])) for k in range(m)}
    extra = rng.random((m, m)) < arc_prob
    arcs |= {(int(j), int(i)) for j, i in zip(*np.nonzero(extra))}
    return Digraph.from_arcs(m, arcs, add_self_loops=True)
