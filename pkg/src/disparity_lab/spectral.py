"""Eigen-solvers and linear solves behind every disparity formula."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import eigsh

from .errors import DisconnectedGraphError, GraphError, GraphTooLargeError, ReducibleChainError
from .graph import MAX_DENSE_NODES, Partition, WeightedGraph, laplacian

# Eigenpairs must satisfy ||Mv - lambda v|| <= RESIDUAL_TOL * ||M||.
RESIDUAL_TOL = 1e-8
DENSE_EIG_LIMIT = 2000
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray
    residual: float = 0.0


def fix_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude entry (lowest index on ties) is positive."""
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _alternating_start(n: int) -> np.ndarray:
    v = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    v -= v.mean()
    if not np.any(v):
        v = np.linspace(-1.0, 1.0, n)
    return v / np.linalg.norm(v)


# -- stationary vectors ----------------------------------------------------

def _check_irreducible(T: np.ndarray):
    support = csr_matrix((T > 0) & ~np.eye(len(T), dtype=bool))
    k, comp = connected_components(support, directed=True, connection="strong")
    if k > 1 and len(T) > 1:
        # a closed class other than the one containing node 0 strands the chain
        other = np.flatnonzero(comp != comp[0])
        shown = ", ".join(str(i) for i in other[:10]) + (", ..." if len(other) > 10 else "")
        raise ReducibleChainError(f"chain is reducible ({k} strongly connected components); "
                                  f"nodes {shown} are not mutually reachable with node 0")


def principal_left_eigenvector(T: np.ndarray, tol: float = 1e-12, max_iter: int = 20000) -> np.ndarray:
    """Stationary distribution ``q`` with ``q^T T = q^T`` and ``sum(q) = 1``.

    Power iteration runs on the lazy chain ``(T + I) / 2`` (same stationary
    vector, no periodicity). If it has not converged after ``max_iter``
    sweeps the null space of ``(I - T)^T`` is solved for directly.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    if T.ndim != 2 or T.shape[1] != n:
        raise ValueError("transition matrix must be square")
    if np.any(T < -1e-15) or not np.allclose(T.sum(axis=1), 1.0, rtol=0, atol=1e-12):
        raise ValueError("transition matrix must be row stochastic")
    if n > MAX_DENSE_NODES:
        raise GraphTooLargeError(f"n = {n} exceeds the dense limit of {MAX_DENSE_NODES} nodes")
    _check_irreducible(T)

    lazy = 0.5 * (T + np.eye(n))
    q = np.full(n, 1.0 / n)
    for it in range(max_iter):
        q = q @ lazy
        if it % 10 == 9 and np.abs(q @ T - q).sum() <= tol:
            break
    else:
        A = (np.eye(n) - T).T
        A[-1, :] = 1.0
        rhs = np.zeros(n)
        rhs[-1] = 1.0
        q = np.linalg.solve(A, rhs)
    q = np.clip(q, 0.0, None)
    return q / q.sum()


def second_eigenvalue_modulus(T: np.ndarray, q: np.ndarray | None = None) -> float:
    """Second largest eigenvalue modulus of a stochastic matrix.

    When ``q`` is supplied and ``T`` is reversible with respect to it the
    symmetrized matrix ``D_q^{1/2} T D_q^{-1/2}`` is used (real spectrum).
    """
    T = np.asarray(T, dtype=float)
    if len(T) < 2:
        return 0.0
    if q is not None and np.all(q > 0):
        flow = q[:, None] * T
        if np.allclose(flow, flow.T, rtol=0, atol=1e-13):
            r = np.sqrt(q)
            S = r[:, None] * T / r[None, :]
            ev = np.sort(np.abs(np.linalg.eigvalsh(0.5 * (S + S.T))))
            return float(ev[-2])
    ev = np.sort(np.abs(np.linalg.eigvals(T)))
    return float(ev[-2])


# -- Laplacian eigenpairs ----------------------------------------------------

def _laplacian_is_connected(L: np.ndarray) -> bool:
    adj = csr_matrix((np.abs(L) > 0) & ~np.eye(len(L), dtype=bool))
    return connected_components(adj, directed=False)[0] == 1


def _residual(M, lam, v):
    return float(np.linalg.norm(M @ v - lam * v))


def _finish(M, lam, v, scale):
    v = fix_sign(v / np.linalg.norm(v))
    res = _residual(M, lam, v)
    if res > RESIDUAL_TOL * max(scale, 1.0):
        raise RuntimeError(f"eigenpair residual {res:.3g} exceeds tolerance")
    return EigenPair(float(lam), v, res)


def _dense_pair(L, index):
    # the default evr driver can return nothing inside a tight eigenvalue cluster (e.g. K_n)
    lam, V = sla.eigh(L, subset_by_index=[index, index], driver="evx")
    if len(lam) == 0:
        lam, V = sla.eigh(L)
        return lam[index], V[:, index]
    return lam[0], V[:, 0]


def largest_laplacian_pair(L: np.ndarray) -> EigenPair:
    """``(lambda_n, v_n)``; no connectivity requirement."""
    L = np.asarray(L, dtype=float)
    n = len(L)
    if n > MAX_DENSE_NODES:
        raise GraphTooLargeError(f"n = {n} exceeds the dense limit of {MAX_DENSE_NODES} nodes")
    scale = np.abs(L).sum(axis=1).max(initial=0.0)
    if n == 1:
        return EigenPair(0.0, np.ones(1), 0.0)
    if n <= DENSE_EIG_LIMIT:
        lam, v = _dense_pair(L, n - 1)
    else:
        lam, V = eigsh(csr_matrix(L), k=1, which="LA", v0=_alternating_start(n), tol=1e-12)
        lam, v = lam[0], V[:, 0]
    return _finish(L, lam, v, scale)


def fiedler_pair(L: np.ndarray) -> EigenPair:
    """``(lambda_2, v_2)`` of the Laplacian of a connected graph; ``v_2`` is orthogonal to 1."""
    L = np.asarray(L, dtype=float)
    n = len(L)
    if n < 2:
        raise GraphError("Fiedler pair needs at least two nodes")
    if n > MAX_DENSE_NODES:
        raise GraphTooLargeError(f"n = {n} exceeds the dense limit of {MAX_DENSE_NODES} nodes")
    if not _laplacian_is_connected(L):
        raise DisconnectedGraphError("graph is disconnected: lambda_2 = 0")
    scale = np.abs(L).sum(axis=1).max(initial=0.0)
    if n <= DENSE_EIG_LIMIT:
        lam, v = _dense_pair(L, 1)
    else:
        ones = np.ones(n) / np.sqrt(n)
        lam, V = eigsh(csr_matrix(L), k=2, sigma=-1e-3, which="LM", v0=_alternating_start(n), tol=1e-12)
        order = np.argsort(lam)
        lam, v = lam[order[1]], V[:, order[1]]
        v = v - ones * (ones @ v)
    return _finish(L, lam, v, scale)


def extreme_laplacian_eigs(L: np.ndarray) -> tuple[EigenPair, EigenPair]:
    """Fiedler pair and largest pair of a connected graph's Laplacian."""
    return fiedler_pair(L), largest_laplacian_pair(L)


def laplacian_spectrum(L: np.ndarray) -> np.ndarray:
    """All eigenvalues, ascending (dense)."""
    return sla.eigvalsh(np.asarray(L, dtype=float))


def resolvent_square_spectrum(L: np.ndarray) -> np.ndarray:
    """Eigenvalues ``1 / (1 + lambda)^2`` of ``(I + L)^-2``, nondecreasing.

    The last entry comes from ``lambda_1 = 0`` and is exactly 1.
    """
    lam = np.clip(laplacian_spectrum(L), 0.0, None)[::-1]
    lam[-1] = 0.0
    return 1.0 / (1.0 + lam) ** 2


# -- (I + L) systems -------------------------------------------------------

class IPlusLSolver:
    """Cholesky factor of ``I + L`` reused across right-hand sides."""

    def __init__(self, L: np.ndarray):
        L = np.asarray(L, dtype=float)
        self.n = len(L)
        self._factor = sla.cho_factor(np.eye(self.n) + L, lower=True)

    def __call__(self, b: np.ndarray, power: int = 1) -> np.ndarray:
        x = np.asarray(b, dtype=float)
        for _ in range(power):
            x = sla.cho_solve(self._factor, x)
        return x


def solve_I_plus_L(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``(I + L) x = b``; ``I + L`` is positive definite for any Laplacian."""
    return IPlusLSolver(L)(b)


# -- spectral clustering ---------------------------------------------------

def normalized_fiedler_vector(g: WeightedGraph) -> EigenPair:
    """Fiedler pair of the random-walk Laplacian ``D^-1 L`` (vector ``D^-1/2 u``)."""
    L = laplacian(g)
    d = np.diag(L).copy()
    if not g.is_connected():
        raise DisconnectedGraphError("graph is disconnected: lambda_2 = 0")
    r = 1.0 / np.sqrt(d)
    pair = fiedler_pair(r[:, None] * L * r[None, :])
    v = fix_sign(pair.vector * r)
    return EigenPair(pair.value, v / np.linalg.norm(v), pair.residual)


def sign_partition(v: np.ndarray, tol: float = ZERO_TOL) -> Partition:
    """``A = {i : v_i >= 0}``, entries within ``tol`` of zero going to ``A``."""
    p = Partition(np.asarray(v) >= -tol)
    if p.size_a == 0 or p.size_b == 0:
        raise GraphError("degenerate eigenvector: all entries have the same sign")
    return p


def spectral_partition(g: WeightedGraph, normalized: bool = False) -> Partition:
    """Split by the sign of the Fiedler vector.

    ``normalized=True`` uses the random-walk Laplacian's Fiedler vector
    instead of the combinatorial one.
    """
    if normalized:
        v = normalized_fiedler_vector(g).vector
    else:
        v = fiedler_pair(laplacian(g)).vector
    return sign_partition(v)
