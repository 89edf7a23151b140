"""DeGroot consensus, disparity, and the constructions that minimize or
maximize it over opinions, chains and partitions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GraphError
from .graph import Partition, WeightedGraph, partition_stats
from .spectral import principal_left_eigenvector, second_eigenvalue_modulus

DP_SCALE = 1e6
MAX_DP_CELLS = 10**8
MAX_BRUTE_NODES = 24


@dataclass
class DisparityReport:
    """Disparity value for one model plus whatever produced it."""

    model: str
    value: float
    opinions: np.ndarray | None = None
    partition: Partition | None = None
    transition: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self, witness: bool = True) -> dict:
        out = {"model": self.model, "value": float(self.value),
               "diagnostics": {k: _plain(v) for k, v in sorted(self.diagnostics.items())}}
        if witness:
            if self.opinions is not None:
                out["opinions"] = [float(x) for x in self.opinions]
            if self.partition is not None:
                out["partition"] = self.partition.tokens()
        return out


def _plain(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.ndarray):
        return [_plain(x) for x in v.tolist()]
    return v


# -- consensus ---------------------------------------------------------------

def degroot_consensus(T: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Limit of ``x(t+1) = T x(t)`` from ``x(0) = s``: ``(q^T s) 1``."""
    q = principal_left_eigenvector(T)
    return np.full(len(q), float(q @ np.asarray(s, dtype=float)))


def degroot_iterate(T: np.ndarray, s: np.ndarray, steps: int) -> np.ndarray:
    x = np.asarray(s, dtype=float)
    for _ in range(steps):
        x = T @ x
    return x


def projection_gap(q, s, p: Partition) -> float:
    """``q^T (s_A - s_B)``."""
    return float(np.asarray(q, dtype=float) @ p.difference(s))


def disparity_degroot(q, s, p: Partition) -> float:
    """``n (q^T (s_A - s_B))^2``."""
    return len(p.in_a) * projection_gap(q, s, p) ** 2


# -- minimization over s and over the chain ----------------------------------

def optimal_opinions_degroot(q, p: Partition) -> np.ndarray:
    """Unit-norm opinions, constant on each group, with equal projections onto ``q``."""
    q = np.asarray(q, dtype=float)
    qa, qb = float(q[p.in_a].sum()), float(q[p.in_b].sum())
    if qa <= 0 or qb <= 0:
        raise ValueError("both groups need positive stationary mass")
    a, b = p.size_a, p.size_b
    alpha = math.sqrt(1.0 / (a + (qa / qb) ** 2 * b))
    beta = math.sqrt(1.0 / (a * (qb / qa) ** 2 + b))
    return np.where(p.in_a, alpha, beta)


def optimal_stationary_degroot(s, p: Partition) -> np.ndarray:
    """Distribution constant on each group with ``q^T (s_A - s_B) = 0``."""
    s = np.asarray(s, dtype=float)
    sa, sb = float(s[p.in_a].sum()), float(s[p.in_b].sum())
    if sa <= 0 or sb <= 0:
        raise ValueError("both groups need positive sentiment strength")
    a, b = p.size_a, p.size_b
    qa = 1.0 / (a + (sa / sb) * b)
    qb = 1.0 / (a * (sb / sa) + b)
    return np.where(p.in_a, qa, qb)


def metropolis_chain(g: WeightedGraph, s, p: Partition, weighted_degrees: bool = False) -> np.ndarray:
    """Metropolis-Hastings chain on ``g`` whose stationary vector zeroes the disparity.

    Off-diagonal entries follow the group-aware ``1 / max{d_i, r d_j}`` rule,
    with ``r = S_B/S_A`` from ``A`` to ``B``, ``S_A/S_B`` from ``B`` to ``A`` and
    1 within a group. By default ``d_i`` counts neighbors so the diagonal
    stays non-negative; ``weighted_degrees=True`` uses weighted degrees and
    fails if a row overflows.
    """
    if g.directed:
        raise GraphError("Metropolis chain needs an undirected proposal graph")
    s = np.asarray(s, dtype=float)
    sa, sb = float(s[p.in_a].sum()), float(s[p.in_b].sum())
    if sa <= 0 or sb <= 0:
        raise ValueError("both groups need positive sentiment strength")
    d = g.out_degree() if weighted_degrees else g.neighbor_counts().astype(float)

    i = np.r_[g.src, g.dst]
    j = np.r_[g.dst, g.src]
    ratio = np.ones(len(i))
    a_to_b = p.in_a[i] & p.in_b[j]
    b_to_a = p.in_b[i] & p.in_a[j]
    ratio[a_to_b] = sb / sa
    ratio[b_to_a] = sa / sb

    T = np.zeros((g.n, g.n))
    T[i, j] = 1.0 / np.maximum(d[i], ratio * d[j])
    diag = 1.0 - T.sum(axis=1)
    if np.any(diag < -1e-12):
        k = int(np.argmin(diag))
        raise GraphError(f"row {k} of the Metropolis chain sums above 1 (diagonal {diag[k]:.3g}); "
                         "use neighbor-count degrees (weighted_degrees=False)")
    T[np.arange(g.n), np.arange(g.n)] = np.clip(diag, 0.0, None)
    return T


@dataclass(frozen=True)
class MixingTime:
    empirical_k: int | None
    spectral_lower_bound: float
    slem: float


def mixing_time_lower_bound(slem: float, eps: float) -> float:
    """``(1 / (1 - |lambda_2|) - 1) ln(1 / (2 eps))``."""
    if slem >= 1:
        return math.inf
    return (1.0 / (1.0 - slem) - 1.0) * math.log(1.0 / (2.0 * eps))


def mixing_time(T: np.ndarray, q, s, eps: float, k_max: int = 100_000) -> MixingTime:
    """Steps until ``s / 1^T s`` pushed through ``T`` is ``eps``-close to ``q`` in TV.

    ``empirical_k`` counts from ``k = 0`` and is None when ``k_max`` is
    exceeded; the spectral lower bound is always reported.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    q = np.asarray(q, dtype=float)
    x = np.asarray(s, dtype=float)
    x = x / x.sum()
    slem = second_eigenvalue_modulus(T, q)
    found = None
    for k in range(k_max + 1):
        if 0.5 * np.abs(x - q).sum() <= eps:
            found = k
            break
        x = x @ T
    return MixingTime(found, mixing_time_lower_bound(slem, eps), slem)


# -- partitions ----------------------------------------------------------

def _dp_subset(y: np.ndarray) -> np.ndarray:
    """Subset of the integers ``y`` whose sum is closest to half the total."""
    n, total = len(y), int(y.sum())
    reach = np.zeros((n + 1, total + 1), dtype=bool)
    reach[0, 0] = True
    for k, yk in enumerate(y, 1):
        reach[k] = reach[k - 1]
        if yk:
            reach[k, yk:] |= reach[k - 1, : total + 1 - yk]
        else:
            reach[k] |= reach[k - 1]
    sums = np.flatnonzero(reach[n])
    t = int(sums[np.argmin(np.abs(2 * sums - total))])
    chosen = np.zeros(n, dtype=bool)
    for k in range(n, 0, -1):
        if not reach[k - 1, t]:
            chosen[k - 1] = True
            t -= int(y[k - 1])
    return chosen


def _dp_partition(y: np.ndarray) -> Partition:
    n = len(y)
    cells = (n + 1) * (int(y.sum()) + 1)
    if cells > MAX_DP_CELLS:
        raise ValueError(f"subset-sum table would need {cells:.3g} cells; use mode='fptas' with a coarser delta")
    chosen = _dp_subset(y)
    # keep node 0 on the A side so the output is canonical
    if n and not chosen[0]:
        chosen = ~chosen
    return Partition(chosen)


def _brute_partition(x: np.ndarray) -> Partition:
    n = len(x)
    if n > MAX_BRUTE_NODES:
        raise ValueError(f"brute force is limited to n <= {MAX_BRUTE_NODES}")
    total = x.sum()
    # bit k of the index says whether node k+1 joins node 0 in A
    sums = np.array([x[0]])
    for xi in x[1:]:
        sums = np.concatenate([sums, sums + xi])
    best = int(np.argmin(np.abs(2.0 * sums - total)))
    mask = np.zeros(n, dtype=bool)
    mask[0] = True
    for k in range(1, n):
        mask[k] = bool((best >> (k - 1)) & 1)
    return Partition(mask)


def min_disparity_partition(q, s, mode: str = "exact_dp", delta: float | None = None) -> tuple[Partition, float]:
    """Partition minimizing ``|q^T (s_A - s_B)|``; a two-way number partition
    of the items ``x_i = q_i s_i``.

    mode
        ``exact_dp``: subset-sum DP on ``x`` rounded to multiples of ``delta``
        (default ``1e-6``); exact when ``x`` lies on that grid.
        ``fptas``: rounding-based approximation whose additive error on
        ``|q^T (s_A - s_B)|`` is at most ``delta * sum(x)`` (default 0.01).
        ``brute``: enumeration of all ``2^(n-1)`` splits, ``n <= 24``.

    Returns the partition and its DeGroot disparity.
    """
    q = np.asarray(q, dtype=float)
    s = np.asarray(s, dtype=float)
    x = q * s
    n = len(x)
    if n == 0:
        raise ValueError("empty instance")
    if np.any(x < 0):
        raise ValueError("items q_i s_i must be non-negative")
    if mode == "brute":
        p = _brute_partition(x)
    elif mode == "exact_dp":
        res = 1.0 / DP_SCALE if delta is None else delta
        p = _dp_partition(np.rint(x / res).astype(np.int64))
    elif mode == "fptas":
        delta = 0.01 if delta is None else delta
        if not 0 < delta < 1:
            raise ValueError("fptas delta must be in (0, 1)")
        total = x.sum()
        if total == 0:
            p = Partition(np.ones(n, dtype=bool))
        else:
            # per-item truncation below K costs at most 2 n K = delta * total
            K = delta * total / (2 * n)
            p = _dp_partition(np.floor(x / K).astype(np.int64))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return p, disparity_degroot(q, s, p)


def max_disparity_partition(q, s, k: int) -> tuple[Partition, float]:
    """Maximize ``n (q^T (s_A - s_B))^2`` subject to ``|A| = k`` in O(n log n).

    Nodes are ranked by ``q_i s_i``; the optimum puts either the ``k``
    smallest or the ``k`` largest items in ``A``, so both candidates are
    evaluated and the larger one kept (the first on ties).
    """
    q = np.asarray(q, dtype=float)
    s = np.asarray(s, dtype=float)
    n = len(q)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    order = np.argsort(q * s, kind="stable")
    low = np.zeros(n, dtype=bool)
    low[order[:k]] = True
    high = np.zeros(n, dtype=bool)
    high[order[n - k:]] = True
    candidates = [Partition(low), Partition(high)]
    values = [disparity_degroot(q, s, c) for c in candidates]
    best = int(np.argmax(values))
    return candidates[best], values[best]


@dataclass(frozen=True)
class TrivialMaximizers:
    opinion_argmax: int
    graph_max_value: float
    stationary_argmax: int
    opinion_max_value: float
    joint_max_value: float


def trivial_maximizers(q, s) -> TrivialMaximizers:
    """Unconstrained maximizers with ``A = V``.

    Concentrating the chain on ``argmax s`` collapses it to a one-node
    network with disparity 1; a point-mass opinion on ``argmax q`` gives
    ``n q_max^2``; the joint optimum is ``n``.
    """
    q = np.asarray(q, dtype=float)
    s = np.asarray(s, dtype=float)
    n = len(q)
    i_s = int(np.argmax(s))
    i_q = int(np.argmax(q))
    return TrivialMaximizers(i_s, 1.0, i_q, n * float(q[i_q]) ** 2, float(n))


def degroot_report(T: np.ndarray, s, p: Partition, **diagnostics) -> DisparityReport:
    q = principal_left_eigenvector(T)
    st = partition_stats(p, s, q)
    diag = {"Q_A": st.mass_a, "Q_B": st.mass_b, "S_A": st.sentiment_a, "S_B": st.sentiment_b}
    diag.update(diagnostics)
    return DisparityReport("degroot", disparity_degroot(q, s, p), np.asarray(s, dtype=float), p, T, diag)
