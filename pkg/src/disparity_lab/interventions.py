"""Regulator interventions: vertex contraction and edge reweighting."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import GraphError
from .fj import WeightDescent, _laplacian_from_weights, projected_descent
from .graph import Partition, WeightedGraph, laplacian
from .spectral import IPlusLSolver, largest_laplacian_pair


class Merge(NamedTuple):
    u: int
    v: int
    group: str  # "A" or "B"


@dataclass(frozen=True)
class ContractionPlan:
    """Ordered merges; the merged node keeps the id of ``u`` and ``v`` is retired."""

    merges: tuple[Merge, ...]

    def __post_init__(self):
        merges = tuple(Merge(int(m[0]), int(m[1]), str(m[2]).upper()) for m in self.merges)
        for k, m in enumerate(merges):
            if m.u == m.v:
                raise ValueError(f"instruction {k}: cannot merge node {m.u} with itself")
            if m.group not in ("A", "B"):
                raise ValueError(f"instruction {k}: group must be A or B, got {m.group!r}")
        object.__setattr__(self, "merges", merges)

    def __len__(self):
        return len(self.merges)


def parse_plan(lines: Iterable[str], g: WeightedGraph | None = None) -> ContractionPlan:
    """Read ``u v A|B`` lines; node tokens are resolved through ``g``'s labels when present."""
    index = {lab: i for i, lab in enumerate(g.labels)} if g is not None and g.labels is not None else None
    merges = []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected 'u v A|B', got {line!r}")
        u, v = (index[t] if index is not None else int(t) for t in parts[:2])
        merges.append((u, v, parts[2]))
    return ContractionPlan(tuple(merges))


def read_plan(path, g: WeightedGraph | None = None) -> ContractionPlan:
    with open(path) as f:
        return parse_plan(f, g)


def contract(g: WeightedGraph, s, p: Partition, plan: ContractionPlan,
             proof_faithful: bool = False) -> tuple[WeightedGraph, np.ndarray, Partition]:
    """Apply ``plan`` to a working copy of ``(g, s, p)``.

    Edges from the two merged nodes to a common neighbor add their weights
    and the edge between them disappears. The merged opinion is
    ``sqrt(s_u^2 + s_v^2)``, which keeps ``||s||`` unchanged. With
    ``proof_faithful`` the edges from ``u`` to common neighbors are deleted
    first instead of summed. Surviving nodes keep their relative order.
    """
    if g.directed:
        raise GraphError("contraction needs an undirected graph")
    adj: dict[int, dict[int, float]] = {i: {} for i in range(g.n)}
    for i, j, w in g.edges():
        adj[i][j] = w
        adj[j][i] = w
    op = [float(x) ** 2 for x in np.asarray(s, dtype=float)]
    group = list(p.in_a)
    labels = [g.label(i) for i in range(g.n)]
    alive = [True] * g.n

    for k, (u, v, grp) in enumerate(plan.merges):
        for node in (u, v):
            if not 0 <= node < g.n or not alive[node]:
                raise GraphError(f"instruction {k}: node {node} no longer exists")
        if proof_faithful:
            shared = set(adj[u]) & (set(adj[v]) | {v})
            for w in shared:
                del adj[u][w]
                del adj[w][u]
        adj[u].pop(v, None)
        adj[v].pop(u, None)
        for w, wt in adj.pop(v).items():
            adj[u][w] = adj[u].get(w, 0.0) + wt
            del adj[w][v]
            adj[w][u] = adj[u][w]
        op[u] += op[v]
        group[u] = grp == "A"
        labels[u] = f"{labels[u]}+{labels[v]}"
        alive[v] = False

    keep = [i for i in range(g.n) if alive[i]]
    remap = {old: new for new, old in enumerate(keep)}
    edges = [(remap[i], remap[j], w) for i in keep for j, w in adj[i].items() if i < j and w > 0]
    g2 = WeightedGraph.from_edges(len(keep), edges, labels=[labels[i] for i in keep])
    s2 = np.sqrt(np.array([op[i] for i in keep]))
    p2 = Partition(np.array([group[i] for i in keep], dtype=bool))
    return g2, s2, p2


@dataclass(frozen=True)
class MonotonicityReport:
    before: float
    after: float
    after_at_opinions: float
    lambda_before: float
    lambda_after: float

    @property
    def holds(self) -> bool:
        return self.after >= self.before - 1e-10


def min_disparity_of(g: WeightedGraph) -> tuple[float, float]:
    lam = largest_laplacian_pair(laplacian(g)).value if g.n > 1 else 0.0
    return 1.0 / (1.0 + lam) ** 2, lam


def contraction_monotonicity_check(g: WeightedGraph, s, p: Partition, plan: ContractionPlan,
                                   proof_faithful: bool = False) -> MonotonicityReport:
    """Compare ``1/(1+lambda_n)^2`` before and after contracting.

    ``after_at_opinions`` is the disparity of the contracted opinions and
    groups themselves, which can only sit above ``after``.
    """
    from .fj import disparity_fj

    before, lam_g = min_disparity_of(g)
    g2, s2, p2 = contract(g, s, p, plan, proof_faithful)
    after, lam_h = min_disparity_of(g2)
    return MonotonicityReport(before, after, disparity_fj(g2, s2, p2), lam_g, lam_h)


def expected_disparity(g: WeightedGraph, w: np.ndarray | None = None) -> float:
    """Mean disparity ``tr((I + L)^-2) / n`` under balanced random opinions."""
    w = g.weight if w is None else w
    X = IPlusLSolver(_laplacian_from_weights(g, w))(np.eye(g.n))
    return float(np.sum(X * X)) / g.n


def expected_disparity_intervention(g: WeightedGraph, steps: int = 200, step_size: float = 1.0) -> WeightDescent:
    """Reweight edges to lower the expected disparity, keeping the support and the total weight."""
    def gradient(w):
        X = IPlusLSolver(_laplacian_from_weights(g, w))(np.eye(g.n))
        X3 = X @ X @ X
        return -2.0 / g.n * (X3[g.src, g.src] + X3[g.dst, g.dst] - 2.0 * X3[g.src, g.dst])

    return projected_descent(g, lambda w: expected_disparity(g, w), gradient, steps, step_size)
