"""Bundled networks and loaders for the larger public ones.

Karate Club (Zachary's weighted version) and Les Miserables ship with the
package. Political Blogs is fetched on demand, or read from a local copy of
Newman's ``polblogs.gml``; Facebook100 graphs are read from their ``.mat``
files.
"""
from __future__ import annotations

import io
import logging
import os
import re
import urllib.request
import zipfile
from importlib import resources
from pathlib import Path

import numpy as np

from .graph import WeightedGraph, parse_edgelist

log = logging.getLogger(__name__)

BUNDLED = ("karate", "lesmis")
POLBLOGS_URL = "http://www-personal.umich.edu/~mejn/netdata/polblogs.zip"


def data_dir() -> Path:
    """Cache for fetched datasets: ``$DISPARITY_LAB_DATA`` or ``~/.cache/disparity_lab``."""
    return Path(os.environ.get("DISPARITY_LAB_DATA", Path.home() / ".cache" / "disparity_lab"))


def load_bundled(name: str) -> WeightedGraph:
    if name not in BUNDLED:
        raise KeyError(f"no bundled dataset {name!r}; choose from {BUNDLED}")
    text = resources.files("disparity_lab").joinpath("data", f"{name}.txt").read_text()
    return parse_edgelist(text.splitlines())


def karate() -> WeightedGraph:
    return load_bundled("karate")


def les_miserables() -> WeightedGraph:
    return load_bundled("lesmis")


def parse_gml_edges(text: str) -> tuple[list[str], list[tuple[str, str]]]:
    """Node ids and ``(source, target)`` pairs from a GML file; other keys are ignored."""
    nodes = re.findall(r"node\s*\[\s*id\s+(\S+)", text)
    edges = re.findall(r"edge\s*\[\s*source\s+(\S+)\s+target\s+(\S+)", text)
    return nodes, edges


def simple_undirected(nodes: list[str], pairs, largest_component: bool = True) -> WeightedGraph:
    """Symmetrize, drop self-loops and repeated pairs (unit weights), and
    optionally keep the largest connected component."""
    index = {lab: i for i, lab in enumerate(nodes)}
    keys = set()
    for u, v in pairs:
        i, j = index[u], index[v]
        if i != j:
            keys.add((min(i, j), max(i, j)))
    keys = sorted(keys)
    g = WeightedGraph(len(nodes), np.array([k[0] for k in keys], dtype=np.int64),
                      np.array([k[1] for k in keys], dtype=np.int64), np.ones(len(keys)), False, nodes)
    if largest_component and not g.is_connected():
        sub, kept = g.largest_component()
        log.info("kept largest connected component: %d of %d nodes", sub.n, g.n)
        return sub
    return g


def read_polblogs(path) -> WeightedGraph:
    """Largest component of Political Blogs as a simple undirected graph (1222 nodes)."""
    path = Path(path)
    if path.suffix == ".zip":
        with zipfile.ZipFile(path) as z:
            name = next(n for n in z.namelist() if n.endswith(".gml"))
            text = z.read(name).decode("utf-8", errors="replace")
    else:
        text = path.read_text(errors="replace")
    nodes, pairs = parse_gml_edges(text)
    return simple_undirected(nodes, pairs)


def fetch_polblogs(dest: Path | None = None) -> Path:
    """Download ``polblogs.zip`` into the data directory (once) and return its path."""
    dest = Path(dest) if dest is not None else data_dir()
    target = dest / "polblogs.zip"
    if not target.exists():
        dest.mkdir(parents=True, exist_ok=True)
        log.info("downloading %s", POLBLOGS_URL)
        with urllib.request.urlopen(POLBLOGS_URL, timeout=60) as r:
            payload = r.read()
        zipfile.ZipFile(io.BytesIO(payload)).testzip()
        target.write_bytes(payload)
    return target


def find_polblogs() -> Path | None:
    """A local Political Blogs file in the data directory, if any."""
    for name in ("polblogs.zip", "polblogs.gml"):
        candidate = data_dir() / name
        if candidate.exists():
            return candidate
    return None


def read_facebook100(path) -> WeightedGraph:
    """Largest component of a Facebook100 ``.mat`` network (key ``A``)."""
    from scipy.io import loadmat
    from scipy.sparse import triu

    A = triu(loadmat(path)["A"], k=1).tocoo()
    nodes = [str(i) for i in range(A.shape[0])]
    return simple_undirected(nodes, [(nodes[i], nodes[j]) for i, j in zip(A.row, A.col)])


def load(name_or_path: str) -> WeightedGraph:
    """Bundled name, ``polblogs`` (local copy required), or a file path."""
    if name_or_path in BUNDLED:
        return load_bundled(name_or_path)
    if name_or_path == "polblogs":
        local = find_polblogs()
        if local is None:
            raise FileNotFoundError("Political Blogs not found; run `disparity-lab fetch polblogs` "
                                    f"or place polblogs.gml in {data_dir()}")
        return read_polblogs(local)
    path = Path(name_or_path)
    if path.suffix in (".gml", ".zip"):
        return read_polblogs(path)
    if path.suffix == ".mat":
        return read_facebook100(path)
    with open(path) as f:
        return parse_edgelist(f)
