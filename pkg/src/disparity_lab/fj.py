"""Friedkin-Johnsen consensus and disparity: extremal constructions,
edge-weight gradients, weight descent and sparsification."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .degroot import DisparityReport
from .errors import GraphError
from .graph import Partition, WeightedGraph, incidence_vector, laplacian
from .spectral import IPlusLSolver, fiedler_pair, largest_laplacian_pair, sign_partition


def _laplacian_from_weights(g: WeightedGraph, w: np.ndarray) -> np.ndarray:
    L = np.zeros((g.n, g.n))
    L[g.src, g.dst] = -w
    L[g.dst, g.src] = -w
    L[np.diag_indices(g.n)] = -L.sum(axis=1)
    return L


# -- consensus and disparity -----------------------------------------------

def fj_consensus(g: WeightedGraph, s) -> np.ndarray:
    """Equilibrium ``z = (I + L)^-1 s``."""
    return IPlusLSolver(laplacian(g))(s)


def fj_iterate(g: WeightedGraph, s, steps: int) -> np.ndarray:
    """Run the averaging update ``x_i <- (s_i + sum_j w_ij x_j) / (1 + d_i)``."""
    s = np.asarray(s, dtype=float)
    W = g.adjacency()
    d = W.sum(axis=1)
    x = s.copy()
    for _ in range(steps):
        x = (s + W @ x) / (1.0 + d)
    return x


def group_contributions(g: WeightedGraph, s, p: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Equilibria ``z_A, z_B`` driven by each group's opinions alone."""
    sa, sb = p.split(s)
    solve = IPlusLSolver(laplacian(g))
    return solve(sa), solve(sb)


def disparity_fj(g: WeightedGraph, s, p: Partition) -> float:
    """``(s_A - s_B)^T (I + L)^-2 (s_A - s_B)``, evaluated as ``||(I + L)^-1 y||^2``."""
    u = IPlusLSolver(laplacian(g))(p.difference(s))
    return float(u @ u)


def fj_report(g: WeightedGraph, s, p: Partition, **diagnostics) -> DisparityReport:
    return DisparityReport("fj", disparity_fj(g, s, p), np.asarray(s, dtype=float), p, None, dict(diagnostics))


# -- extremal constructions ----------------------------------------------

def fj_min_opinions_partition(g: WeightedGraph) -> DisparityReport:
    """Best ``(s, A)`` for a fixed graph: ``s_A - s_B = v_n``, value ``1/(1+lambda_n)^2``."""
    if not g.is_connected():
        raise GraphError("graph must be connected")
    top = largest_laplacian_pair(laplacian(g))
    p = sign_partition(top.vector)
    s = np.abs(top.vector)
    value = 1.0 / (1.0 + top.value) ** 2
    return DisparityReport("fj", value, s, p, None,
                           {"lambda_n": top.value, "evaluated": disparity_fj(g, s, p)})


def fj_max_balanced(g: WeightedGraph) -> DisparityReport:
    """Largest disparity with ``S_A = S_B``: the Fiedler sign split, ``s = |v_2|``."""
    fied = fiedler_pair(laplacian(g))
    p = sign_partition(fied.vector)
    s = np.abs(fied.vector)
    value = 1.0 / (1.0 + fied.value) ** 2
    gap = float(s[p.in_a].sum() - s[p.in_b].sum())
    if abs(gap) > 1e-8:
        raise ArithmeticError(f"Fiedler split is not balanced (S_A - S_B = {gap:.3g})")
    return DisparityReport("fj", value, s, p, None,
                           {"lambda_2": fied.value, "sentiment_gap": gap, "evaluated": disparity_fj(g, s, p)})


def complete_bipartite(n_left: int, n_right: int) -> WeightedGraph:
    edges = [(i, n_left + j) for i in range(n_left) for j in range(n_right)]
    return WeightedGraph.from_edges(n_left + n_right, edges)


def build_min_disparity_instance(n: int) -> tuple[WeightedGraph, np.ndarray, Partition]:
    """``K_{n/2,n/2}`` with ``A`` one side and ``s = 1/sqrt(n)``: disparity ``1/(n+1)^2``."""
    if n < 2 or n % 2:
        raise ValueError("n must be even and at least 2")
    g = complete_bipartite(n // 2, n // 2)
    s = np.full(n, 1.0 / math.sqrt(n))
    return g, s, Partition.from_members(n, range(n // 2))


# -- gradients -------------------------------------------------------------

def fj_disparity_gradient(g: WeightedGraph, s, p: Partition) -> np.ndarray:
    """``d f / d w_e`` for every edge, in edge-index order.

    With ``X = (I + L)^-1`` and ``y = s_A - s_B`` the derivative is
    ``-y^T X (X b b^T + b b^T X) X y = -2 (b^T X^2 y)(b^T X y)``.
    """
    return _gradient(g, IPlusLSolver(laplacian(g)), p.difference(s))


def _gradient(g, solve, y):
    u = solve(y)
    r = solve(u)
    return -2.0 * (r[g.src] - r[g.dst]) * (u[g.src] - u[g.dst])


def expected_gradient(g: WeightedGraph, e: tuple[int, int]) -> float:
    """``-(2/n) b_e^T (I + L)^-3 b_e``: mean gradient under balanced random opinions."""
    b = incidence_vector(g, e)
    solve = IPlusLSolver(laplacian(g))
    c = solve(b)
    return -2.0 / g.n * float(c @ solve(c))


def expected_gradients(g: WeightedGraph) -> np.ndarray:
    """``expected_gradient`` for every edge at once."""
    X = IPlusLSolver(laplacian(g))(np.eye(g.n))
    X3 = X @ X @ X
    return -2.0 / g.n * (X3[g.src, g.src] + X3[g.dst, g.dst] - 2.0 * X3[g.src, g.dst])


def sample_balanced_opinions(n: int, rng: np.random.Generator) -> tuple[np.ndarray, Partition]:
    """``v ~ N(0, I/n)``, ``s = |v|``, ``A = {v >= 0}``; note ``||s||`` is not 1."""
    v = rng.standard_normal(n) / math.sqrt(n)
    return np.abs(v), Partition(v >= 0)


@dataclass(frozen=True)
class MonteCarloGradient:
    mean: np.ndarray
    stderr: np.ndarray
    trials: int


def monte_carlo_gradient(g: WeightedGraph, trials: int, seed: int = 42) -> MonteCarloGradient:
    """Sample mean of the gradient over balanced random ``(s, A)``.

    Trial ``t`` draws from ``default_rng(seed + t)``, so results do not
    depend on batching.
    """
    solve = IPlusLSolver(laplacian(g))
    total = np.zeros(g.num_edges)
    total_sq = np.zeros(g.num_edges)
    batch = 4096
    for start in range(0, trials, batch):
        stop = min(trials, start + batch)
        Y = np.empty((g.n, stop - start))
        for col, t in enumerate(range(start, stop)):
            s, p = sample_balanced_opinions(g.n, np.random.default_rng(seed + t))
            Y[:, col] = p.difference(s)
        U = solve(Y)
        R = solve(U)
        G = -2.0 * (R[g.src] - R[g.dst]) * (U[g.src] - U[g.dst])
        total += G.sum(axis=1)
        total_sq += (G * G).sum(axis=1)
    mean = total / trials
    var = np.maximum(total_sq / trials - mean**2, 0.0) * trials / max(trials - 1, 1)
    return MonteCarloGradient(mean, np.sqrt(var / trials), trials)


# -- weight descent --------------------------------------------------------

@dataclass
class WeightDescent:
    graph: WeightedGraph
    weights: np.ndarray
    trace: list[float] = field(default_factory=list)
    stalled: bool = False


def _positive_support_connected(g: WeightedGraph, w: np.ndarray) -> bool:
    keep = w > 0
    adj = coo_matrix((w[keep], (g.src[keep], g.dst[keep])), shape=(g.n, g.n))
    return connected_components(adj, directed=False)[0] == 1


def project_weights(w: np.ndarray, total: float) -> np.ndarray | None:
    """Clip at zero, then rescale to the given total; None if nothing is left."""
    w = np.clip(w, 0.0, None)
    mass = w.sum()
    if mass <= 0:
        return None
    return w * (total / mass)


def projected_descent(g: WeightedGraph, objective: Callable, gradient: Callable, steps: int,
                      step_size: float = 1.0, armijo: float = 1e-4, max_halvings: int = 30) -> WeightDescent:
    """Projected gradient descent on the edge weights of ``g``.

    The support of ``g`` is fixed; weights may hit zero and come back. Each
    step backtracks (factor 0.5) until the projected point satisfies the
    Armijo condition, does not increase the objective and keeps the
    positive-weight graph connected. ``objective`` and ``gradient`` take a
    weight vector aligned with ``g``'s edges.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    total = g.total_weight
    w = g.weight.astype(float).copy()
    f = objective(w)
    trace = [f]
    stalled = False
    for _ in range(steps):
        grad = gradient(w)
        eta = step_size
        for _ in range(max_halvings + 1):
            cand = project_weights(w - eta * grad, total)
            if cand is not None and _positive_support_connected(g, cand):
                f_new = objective(cand)
                if f_new <= f + armijo * float(grad @ (cand - w)) and f_new <= f:
                    break
            eta *= 0.5
        else:
            stalled = True
            break
        w, f = cand, f_new
        trace.append(f)
    return WeightDescent(g.with_weights(w), w, trace, stalled)


def fj_optimize_weights(g: WeightedGraph, s, p: Partition, steps: int = 200, step_size: float = 1.0,
                        max_halvings: int = 30) -> WeightDescent:
    """Lower the disparity of a fixed ``(s, A)`` by reweighting the existing
    edges with the total weight (``trace L / 2``) held fixed."""
    if not g.is_connected():
        raise GraphError("graph must be connected")
    y = p.difference(s)

    def objective(w):
        u = IPlusLSolver(_laplacian_from_weights(g, w))(y)
        return float(u @ u)

    def gradient(w):
        return _gradient(g, IPlusLSolver(_laplacian_from_weights(g, w)), y)

    return projected_descent(g, objective, gradient, steps, step_size, max_halvings=max_halvings)


# -- sparsification --------------------------------------------------------

def effective_resistances(g: WeightedGraph) -> np.ndarray:
    """``b_e^T L^+ b_e`` for every edge."""
    L = laplacian(g)
    Lp = np.linalg.pinv(L, hermitian=True)
    return Lp[g.src, g.src] + Lp[g.dst, g.dst] - 2.0 * Lp[g.src, g.dst]


@dataclass
class SparsifyResult:
    graph: WeightedGraph
    ratio: float
    samples: int
    lower_bound: float
    upper_bound: float
    note: str = ""


def sparsify_disparity(g: WeightedGraph, s, p: Partition, eps: float, seed: int = 42,
                       oversampling: float = 1.0) -> SparsifyResult:
    """Sample ``ceil(C n ln n / eps^2)`` edges by effective resistance and
    reweight them, then report the disparity ratio ``f(g') / f(g)``.

    The bounds ``1/(1+eps)^2`` and ``1/(1-eps)^2`` hold when ``g'`` is an
    ``eps``-spectral sparsifier, which sampling delivers only with high
    probability; they are reported, not enforced.
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    lo, hi = 1.0 / (1.0 + eps) ** 2, 1.0 / (1.0 - eps) ** 2
    n, m = g.n, g.num_edges
    samples = int(math.ceil(oversampling * n * math.log(max(n, 2)) / eps**2))
    if m <= n - 1:
        return SparsifyResult(g, 1.0, 0, lo, hi, "already a forest; returned unchanged")
    prob = g.weight * effective_resistances(g)
    prob = prob / prob.sum()
    expected_kept = float(np.sum(1.0 - (1.0 - prob) ** samples))
    if expected_kept >= m - 1:
        return SparsifyResult(g, 1.0, 0, lo, hi, f"edge budget ({samples} samples) covers all {m} edges; returned unchanged")
    rng = np.random.default_rng(seed)
    counts = np.bincount(rng.choice(m, size=samples, p=prob), minlength=m)
    new_w = counts * g.weight / (samples * prob)
    h = g.with_weights(new_w)
    ratio = disparity_fj(h, s, p) / disparity_fj(g, s, p)
    return SparsifyResult(h, ratio, samples, lo, hi)
