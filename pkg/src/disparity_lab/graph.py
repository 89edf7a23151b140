"""Weighted graphs, two-group partitions and the matrices built from them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import GraphError, GraphTooLargeError

MAX_DENSE_NODES = 5000


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Immutable weighted graph on nodes ``0..n-1``.

    Undirected graphs store every edge once with ``src < dst``; edges are
    kept sorted lexicographically so edge indices are stable.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    directed: bool = False
    labels: tuple[str, ...] | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        src = np.asarray(self.src, dtype=np.int64).ravel()
        dst = np.asarray(self.dst, dtype=np.int64).ravel()
        w = np.asarray(self.weight, dtype=float).ravel()
        if not (len(src) == len(dst) == len(w)):
            raise GraphError("src, dst and weight must have equal length")
        if self.n < 0:
            raise GraphError("node count must be non-negative")
        if len(src) and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= self.n):
            raise GraphError("edge endpoint out of range")
        if np.any(src == dst):
            i = int(src[src == dst][0])
            raise GraphError(f"self-loop at node {i} is not allowed")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise GraphError("edge weights must be finite and strictly positive")
        if not self.directed:
            src, dst = np.minimum(src, dst), np.maximum(src, dst)
        order = np.lexsort((dst, src))
        src, dst, w = src[order], dst[order], w[order]
        if len(src) > 1:
            dup = (src[1:] == src[:-1]) & (dst[1:] == dst[:-1])
            if dup.any():
                k = int(np.flatnonzero(dup)[0])
                raise GraphError(f"duplicate edge ({src[k]}, {dst[k]})")
        for a in (src, dst, w):
            a.flags.writeable = False
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != self.n:
                raise GraphError("labels must have one entry per node")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "_index", {(int(i), int(j)): k for k, (i, j) in enumerate(zip(src, dst))})

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence], directed: bool = False, labels=None) -> WeightedGraph:
        """Build from ``(i, j)`` or ``(i, j, w)`` tuples; missing weights are 1."""
        rows = [tuple(e) for e in edges]
        src = [int(e[0]) for e in rows]
        dst = [int(e[1]) for e in rows]
        w = [float(e[2]) if len(e) > 2 else 1.0 for e in rows]
        return cls(n, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64), np.array(w), directed, labels)

    @classmethod
    def from_adjacency(cls, W: np.ndarray, directed: bool = False, labels=None) -> WeightedGraph:
        W = np.asarray(W, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise GraphError("adjacency must be square")
        if np.any(np.diag(W) != 0):
            raise GraphError("adjacency has a nonzero diagonal (self-loop)")
        if not directed:
            if not np.allclose(W, W.T, rtol=0, atol=1e-12 * max(1.0, np.abs(W).max(initial=0))):
                raise GraphError("undirected adjacency must be symmetric")
            i, j = np.nonzero(np.triu(W, 1))
        else:
            i, j = np.nonzero(W)
        return cls(W.shape[0], i, j, W[i, j], directed, labels)

    # -- basic structure -------------------------------------------------

    @property
    def num_edges(self) -> int:
        return len(self.src)

    @property
    def total_weight(self) -> float:
        """Sum of edge weights; equals ``trace(L) / 2`` for undirected graphs."""
        return float(self.weight.sum())

    def edges(self) -> list[tuple[int, int, float]]:
        return [(int(i), int(j), float(w)) for i, j, w in zip(self.src, self.dst, self.weight)]

    def edge_index(self, i: int, j: int) -> int:
        key = (i, j) if self.directed else (min(i, j), max(i, j))
        try:
            return self._index[key]
        except KeyError:
            raise GraphError(f"edge ({i}, {j}) is not in the graph") from None

    def has_edge(self, i: int, j: int) -> bool:
        key = (i, j) if self.directed else (min(i, j), max(i, j))
        return key in self._index

    def label(self, i: int) -> str:
        return self.labels[i] if self.labels is not None else str(i)

    def adjacency(self) -> np.ndarray:
        """Dense weight matrix ``W`` (symmetric for undirected graphs)."""
        _check_dense(self.n)
        W = np.zeros((self.n, self.n))
        W[self.src, self.dst] = self.weight
        if not self.directed:
            W[self.dst, self.src] = self.weight
        return W

    def sparse_adjacency(self):
        rows, cols, vals = self.src, self.dst, self.weight
        if not self.directed:
            rows, cols, vals = np.r_[self.src, self.dst], np.r_[self.dst, self.src], np.r_[self.weight, self.weight]
        return coo_matrix((vals, (rows, cols)), shape=(self.n, self.n)).tocsr()

    def out_degree(self) -> np.ndarray:
        """Weighted out-degree ``sum_j w_ij`` (the row normalizer of ``T``)."""
        d = np.bincount(self.src, weights=self.weight, minlength=self.n)
        if not self.directed:
            d = d + np.bincount(self.dst, weights=self.weight, minlength=self.n)
        return d

    def in_degree(self) -> np.ndarray:
        """Weighted in-degree ``sum_j w_ji``; equals out-degree when undirected."""
        if not self.directed:
            return self.out_degree()
        return np.bincount(self.dst, weights=self.weight, minlength=self.n)

    def neighbor_counts(self) -> np.ndarray:
        """Unweighted (out-)neighbor counts."""
        c = np.bincount(self.src, minlength=self.n)
        if not self.directed:
            c = c + np.bincount(self.dst, minlength=self.n)
        return c

    def components(self) -> tuple[int, np.ndarray]:
        """Weak components for undirected graphs, strong ones for directed."""
        return connected_components(self.sparse_adjacency(), directed=self.directed, connection="strong")

    def is_connected(self) -> bool:
        return self.n > 0 and self.components()[0] == 1

    def with_weights(self, weights: np.ndarray) -> WeightedGraph:
        """Same edge list with new weights; zero-weight edges are dropped."""
        weights = np.asarray(weights, dtype=float)
        if weights.shape != self.weight.shape:
            raise GraphError("weight vector must match the edge count")
        keep = weights > 0
        return WeightedGraph(self.n, self.src[keep], self.dst[keep], weights[keep], self.directed, self.labels)

    def without_edges(self, edge_ids: Iterable[int]) -> WeightedGraph:
        keep = np.ones(self.num_edges, dtype=bool)
        keep[list(edge_ids)] = False
        return WeightedGraph(self.n, self.src[keep], self.dst[keep], self.weight[keep], self.directed, self.labels)

    def subgraph(self, nodes: Sequence[int]) -> WeightedGraph:
        """Induced subgraph, relabelled to ``0..len(nodes)-1`` in the given order."""
        nodes = np.asarray(nodes, dtype=np.int64)
        remap = -np.ones(self.n, dtype=np.int64)
        remap[nodes] = np.arange(len(nodes))
        keep = (remap[self.src] >= 0) & (remap[self.dst] >= 0)
        labels = None if self.labels is None else tuple(self.labels[i] for i in nodes)
        return WeightedGraph(len(nodes), remap[self.src[keep]], remap[self.dst[keep]], self.weight[keep], self.directed, labels)

    def largest_component(self) -> tuple[WeightedGraph, np.ndarray]:
        """Largest connected component and the original indices of its nodes."""
        k, comp = self.components()
        if k <= 1:
            return self, np.arange(self.n)
        sizes = np.bincount(comp)
        nodes = np.flatnonzero(comp == int(np.argmax(sizes)))
        return self.subgraph(nodes), nodes

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"WeightedGraph(n={self.n}, edges={self.num_edges}, {kind})"


def _check_dense(n: int):
    if n > MAX_DENSE_NODES:
        raise GraphTooLargeError(f"n = {n} exceeds the dense limit of {MAX_DENSE_NODES} nodes")


@dataclass(frozen=True, eq=False)
class Partition:
    """Split of the node set into ``A`` and ``B = V \\ A``."""

    in_a: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.in_a, dtype=bool).ravel().copy()
        mask.flags.writeable = False
        object.__setattr__(self, "in_a", mask)

    @classmethod
    def from_members(cls, n: int, members_a: Iterable[int]) -> Partition:
        mask = np.zeros(n, dtype=bool)
        mask[list(members_a)] = True
        return cls(mask)

    @classmethod
    def from_labels(cls, tokens: Iterable[str]) -> Partition:
        flags = []
        for t in tokens:
            t = t.strip().upper()
            if t not in ("A", "B"):
                raise ValueError(f"partition token must be A or B, got {t!r}")
            flags.append(t == "A")
        return cls(np.array(flags, dtype=bool))

    @property
    def n(self) -> int:
        return len(self.in_a)

    @property
    def in_b(self) -> np.ndarray:
        return ~self.in_a

    @property
    def size_a(self) -> int:
        return int(self.in_a.sum())

    @property
    def size_b(self) -> int:
        return self.n - self.size_a

    @property
    def members_a(self) -> np.ndarray:
        return np.flatnonzero(self.in_a)

    @property
    def members_b(self) -> np.ndarray:
        return np.flatnonzero(~self.in_a)

    def signs(self) -> np.ndarray:
        """+1 on ``A`` and -1 on ``B``, so that ``s_A - s_B = signs * s``."""
        return np.where(self.in_a, 1.0, -1.0)

    def split(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        s = np.asarray(s, dtype=float)
        return np.where(self.in_a, s, 0.0), np.where(self.in_a, 0.0, s)

    def difference(self, s: np.ndarray) -> np.ndarray:
        """``s_A - s_B``."""
        return self.signs() * np.asarray(s, dtype=float)

    def swapped(self) -> Partition:
        return Partition(~self.in_a)

    def tokens(self) -> list[str]:
        return ["A" if a else "B" for a in self.in_a]

    def __eq__(self, other):
        return isinstance(other, Partition) and np.array_equal(self.in_a, other.in_a)

    def __hash__(self):
        return hash(self.in_a.tobytes())

    def __repr__(self):
        return f"Partition(|A|={self.size_a}, |B|={self.size_b})"


# -- opinions ------------------------------------------------------------

def check_opinions(s, tol: float = 1e-10) -> np.ndarray:
    """Validate an intrinsic-opinion vector: entries in [0, 1] and unit norm."""
    s = np.asarray(s, dtype=float).ravel()
    if np.any(s < -tol) or np.any(s > 1 + tol):
        raise ValueError("opinions must lie in [0, 1]")
    norm = np.linalg.norm(s)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"opinion vector has norm {norm:.12g}, expected 1 (renormalize first)")
    return s


def normalize_opinions(s) -> np.ndarray:
    s = np.asarray(s, dtype=float).ravel()
    norm = np.linalg.norm(s)
    if norm == 0:
        raise ValueError("cannot normalize an all-zero opinion vector")
    return s / norm


def random_opinions(n: int, seed: int = 42) -> np.ndarray:
    """Uniform draws on [0, 1]^n, rescaled to unit norm."""
    return normalize_opinions(np.random.default_rng(seed).random(n))


# -- matrices --------------------------------------------------------------

def laplacian(g: WeightedGraph) -> np.ndarray:
    """Combinatorial Laplacian ``L = D - W`` of an undirected graph."""
    if g.directed:
        raise GraphError("Laplacian requires undirected graph")
    W = g.adjacency()
    return np.diag(W.sum(axis=1)) - W


def row_stochastic(g: WeightedGraph) -> np.ndarray:
    """``T_ij = w_ij / sum_k w_ik``: the degree-normalized random walk."""
    d = g.out_degree()
    if np.any(d <= 0):
        i = int(np.flatnonzero(d <= 0)[0])
        raise GraphError(f"node {g.label(i)} (index {i}) has no outgoing edges")
    return g.adjacency() / d[:, None]


def incidence_vector(g: WeightedGraph, e: tuple[int, int]) -> np.ndarray:
    """+1 at the smaller endpoint of ``e``, -1 at the larger one."""
    if g.directed:
        raise GraphError("incidence vectors are defined for undirected graphs")
    i, j = int(e[0]), int(e[1])
    g.edge_index(i, j)
    b = np.zeros(g.n)
    b[min(i, j)] = 1.0
    b[max(i, j)] = -1.0
    return b


def incidence_matrix(g: WeightedGraph) -> np.ndarray:
    """Rows are the incidence vectors of the edges, in edge-index order."""
    B = np.zeros((g.num_edges, g.n))
    rows = np.arange(g.num_edges)
    B[rows, g.src] = 1.0
    B[rows, g.dst] = -1.0
    return B


@dataclass(frozen=True)
class PartitionStats:
    sentiment_a: float
    sentiment_b: float
    sentiment_imbalance: float
    mass_a: float | None
    mass_b: float | None
    mass_imbalance: float | None
    cluster_imbalance: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _ratio_max(a: float, b: float) -> float:
    if a <= 0 or b <= 0:
        return math.inf
    return max(a / b, b / a)


def partition_stats(p: Partition, s, q=None) -> PartitionStats:
    """Sentiment strengths ``S_A, S_B``, their imbalance, probability mass
    per group (when a stationary vector is given) and the size ratio.

    A zero on either side gives an infinite imbalance rather than an error.
    """
    s = np.asarray(s, dtype=float)
    sa, sb = float(s[p.in_a].sum()), float(s[p.in_b].sum())
    qa = qb = mass = None
    if q is not None:
        q = np.asarray(q, dtype=float)
        qa, qb = float(q[p.in_a].sum()), float(q[p.in_b].sum())
        mass = _ratio_max(qa, qb)
    return PartitionStats(sa, sb, _ratio_max(sa, sb), qa, qb, mass, _ratio_max(p.size_a, p.size_b))


# -- edge-list files -------------------------------------------------------

def parse_edgelist(lines: Iterable[str], directed: bool = False, label_map: Sequence[str] | None = None) -> WeightedGraph:
    """Parse ``u v [w]`` lines; ``#`` starts a comment, weight defaults to 1.

    Node labels are remapped to ``0..n-1``: in the order of ``label_map`` if
    given, numerically if every label is an integer, else by first appearance.
    """
    raw = []
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise GraphError(f"line {lineno}: expected 'u v [w]', got {line!r}")
        w = float(parts[2]) if len(parts) == 3 else 1.0
        raw.append((parts[0], parts[1], w, lineno))

    if label_map is not None:
        labels = [str(x) for x in label_map]
    else:
        seen = dict.fromkeys(x for u, v, _, _ in raw for x in (u, v))
        labels = list(seen)
        try:
            labels = sorted(labels, key=int)
        except ValueError:
            pass
    index = {lab: i for i, lab in enumerate(labels)}

    src, dst, wts, keys = [], [], [], {}
    for u, v, w, lineno in raw:
        if u not in index or v not in index:
            raise GraphError(f"line {lineno}: node not in label map")
        i, j = index[u], index[v]
        key = (i, j) if directed else (min(i, j), max(i, j))
        if key in keys:
            raise GraphError(f"line {lineno}: duplicate edge {u} {v} (first on line {keys[key]})")
        if i == j:
            raise GraphError(f"line {lineno}: self-loop at {u}")
        keys[key] = lineno
        src.append(i)
        dst.append(j)
        wts.append(w)
    return WeightedGraph(len(labels), np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64),
                         np.array(wts), directed, labels)


def read_edgelist(path, directed: bool = False, label_map=None) -> WeightedGraph:
    if isinstance(label_map, (str, Path)):
        label_map = read_label_map(label_map)
    with open(path) as f:
        return parse_edgelist(f, directed=directed, label_map=label_map)


def format_edgelist(g: WeightedGraph) -> str:
    return "".join(f"{g.label(i)} {g.label(j)} {w!r}\n" for i, j, w in g.edges())


def write_edgelist(g: WeightedGraph, path) -> None:
    Path(path).write_text(format_edgelist(g))


def read_label_map(path) -> list[str]:
    return [ln.strip() for ln in Path(path).read_text().splitlines() if ln.strip()]


def write_label_map(g: WeightedGraph, path) -> None:
    Path(path).write_text("".join(g.label(i) + "\n" for i in range(g.n)))


def read_opinions(path) -> np.ndarray:
    vals = [float(ln.split("#", 1)[0]) for ln in Path(path).read_text().splitlines() if ln.split("#", 1)[0].strip()]
    return np.array(vals)


def read_partition(path) -> Partition:
    toks = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    return Partition.from_labels(t for t in toks if t)
