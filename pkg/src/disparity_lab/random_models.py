"""Two-group random graphs (two cliques plus random cross edges, and
core-periphery) and the spectral checks run on them."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .graph import Partition, WeightedGraph, laplacian
from .spectral import largest_laplacian_pair


@dataclass(frozen=True)
class SbmSpec:
    """Group ``A`` is nodes ``0..k-1``, group ``B`` the remaining ``n - k``."""

    n: int
    k: int
    p: float | None = None
    p_aa: float | None = None
    p_ab: float | None = None
    p_bb: float | None = None
    seed: int = 42

    def __post_init__(self):
        if not 1 <= self.k <= self.n - 1:
            raise ValueError(f"k must be in [1, n-1], got k={self.k}, n={self.n}")
        for name in ("p", "p_aa", "p_ab", "p_bb"):
            val = getattr(self, name)
            if val is not None and not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must be a probability, got {val}")

    def partition(self) -> Partition:
        return Partition.from_members(self.n, range(self.k))


def _pairs(rows, cols):
    ii, jj = np.meshgrid(rows, cols, indexing="ij")
    return ii.ravel(), jj.ravel()


def gen_two_cliques(spec: SbmSpec) -> tuple[WeightedGraph, Partition]:
    """Cliques on ``A`` and ``B``; each cross pair joins independently with probability ``p``.

    Cross pairs are drawn in lexicographic order from one stream of
    ``default_rng(seed)``. A disconnected result only triggers a warning.
    """
    if spec.p is None:
        raise ValueError("two-cliques model needs p")
    n, k = spec.n, spec.k
    ia, ja = np.triu_indices(k, 1)
    ib, jb = np.triu_indices(n - k, 1)
    ci, cj = _pairs(np.arange(k), np.arange(k, n))
    keep = np.random.default_rng(spec.seed).random(len(ci)) < spec.p
    src = np.r_[ia, ib + k, ci[keep]]
    dst = np.r_[ja, jb + k, cj[keep]]
    g = WeightedGraph(n, src, dst, np.ones(len(src)))
    if not keep.any():
        warnings.warn("two-cliques sample has no cross edges and is disconnected", RuntimeWarning, stacklevel=2)
    return g, spec.partition()


def gen_core_periphery(spec: SbmSpec) -> tuple[WeightedGraph, Partition]:
    """Independent edges at rate ``p_aa`` inside the core ``A``, ``p_ab``
    across and ``p_bb`` inside the periphery; requires ``p_aa > p_ab > p_bb``."""
    if None in (spec.p_aa, spec.p_ab, spec.p_bb):
        raise ValueError("core-periphery model needs p_aa, p_ab and p_bb")
    if not spec.p_aa > spec.p_ab > spec.p_bb:
        raise ValueError("core-periphery model requires p_aa > p_ab > p_bb")
    n, k = spec.n, spec.k
    i, j = np.triu_indices(n, 1)
    in_a = np.arange(n) < k
    prob = np.where(in_a[i] & in_a[j], spec.p_aa, np.where(~in_a[i] & ~in_a[j], spec.p_bb, spec.p_ab))
    keep = np.random.default_rng(spec.seed).random(len(i)) < prob
    g = WeightedGraph(n, i[keep], j[keep], np.ones(int(keep.sum())))
    if not g.is_connected():
        warnings.warn("core-periphery sample is disconnected", RuntimeWarning, stacklevel=2)
    return g, spec.partition()


def min_disparity(g: WeightedGraph) -> float:
    """``1 / (1 + lambda_n)^2``, the smallest disparity any unit ``s_A - s_B`` reaches."""
    return 1.0 / (1.0 + largest_laplacian_pair(laplacian(g)).value) ** 2


def disparity_interval(spec: SbmSpec, model: str = "two_cliques", c: float = 20.0) -> tuple[float, float]:
    """High-probability bracket for the minimum disparity; ``c`` stands in for
    the unspecified constant of the ``O(1 / ln n)`` slack."""
    n = spec.n
    slack = c / math.log(n)
    if model == "two_cliques":
        lo = 1.0 / (n + 1) ** 2
        hi = 1.0 / max(1.0 + n * spec.p - slack, 1.0) ** 2
        if spec.p == 1.0:
            hi = lo
    elif model == "core_periphery":
        lo = 1.0 / (1.0 + n * spec.p_aa + slack) ** 2
        hi = 1.0 / max(1.0 + n * spec.p_bb - slack, 1.0) ** 2
    else:
        raise ValueError(f"unknown model {model!r}")
    return lo, hi


@dataclass
class IntervalCheck:
    lower: float
    upper: float
    samples: list[float] = field(default_factory=list)
    lambda_max: list[float] = field(default_factory=list)
    hits: int = 0

    @property
    def trials(self) -> int:
        return len(self.samples)

    @property
    def hit_rate(self) -> float:
        return self.hits / self.trials if self.trials else 0.0


def disparity_interval_check(spec: SbmSpec, trials: int, model: str = "two_cliques", c: float = 20.0,
                             rtol: float = 1e-12) -> IntervalCheck:
    """Sample ``trials`` graphs (seeds ``spec.seed + t``) and count how often
    the minimum disparity lands inside :func:`disparity_interval`."""
    n = spec.n
    rate = spec.p if model == "two_cliques" else spec.p_bb
    if rate is not None and rate * n <= math.log(n):
        warnings.warn("edge probability is below ln(n)/n; the interval is not expected to hold",
                      RuntimeWarning, stacklevel=2)
    gen = {"two_cliques": gen_two_cliques, "core_periphery": gen_core_periphery}[model]
    lo, hi = disparity_interval(spec, model, c)
    out = IntervalCheck(lo, hi)
    for t in range(trials):
        trial = SbmSpec(spec.n, spec.k, spec.p, spec.p_aa, spec.p_ab, spec.p_bb, spec.seed + t)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            g, _ = gen(trial)
        lam = largest_laplacian_pair(laplacian(g)).value
        val = 1.0 / (1.0 + lam) ** 2
        out.samples.append(val)
        out.lambda_max.append(lam)
        out.hits += int(lo * (1 - rtol) <= val <= hi * (1 + rtol))
    return out


@dataclass
class SubgraphCheck:
    lambda_graph: float
    lambda_subgraphs: list[float] = field(default_factory=list)
    violations: int = 0

    @property
    def holds(self) -> bool:
        return self.violations == 0


def subgraph_eigenvalue_check(g: WeightedGraph, edge_deletions: int, trials: int, seed: int = 42,
                              slack: float = 1e-10) -> SubgraphCheck:
    """Delete ``edge_deletions`` random edges ``trials`` times and confirm the
    largest Laplacian eigenvalue never rises above that of ``g``."""
    if not 0 <= edge_deletions < max(g.num_edges, 1):
        raise ValueError("deletions must leave at least one edge")
    lam_g = largest_laplacian_pair(laplacian(g)).value
    rng = np.random.default_rng(seed)
    out = SubgraphCheck(lam_g)
    for _ in range(trials):
        drop = rng.choice(g.num_edges, size=edge_deletions, replace=False)
        lam_h = largest_laplacian_pair(laplacian(g.without_edges(drop))).value
        out.lambda_subgraphs.append(lam_h)
        out.violations += int(lam_h > lam_g + slack)
    return out
