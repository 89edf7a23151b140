"""``disparity-lab`` command-line interface."""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datasets
from .degroot import (degroot_report, max_disparity_partition, metropolis_chain, min_disparity_partition,
                      mixing_time_lower_bound, optimal_opinions_degroot, optimal_stationary_degroot)
from .fj import fj_max_balanced, fj_min_opinions_partition, fj_optimize_weights, fj_report, sparsify_disparity
from .graph import (Partition, WeightedGraph, laplacian, normalize_opinions, partition_stats,
                    random_opinions, read_opinions, read_partition, row_stochastic)
from .interventions import contraction_monotonicity_check, read_plan
from .random_models import SbmSpec, disparity_interval_check
from .spectral import fiedler_pair, principal_left_eigenvector, second_eigenvalue_modulus, spectral_partition

log = logging.getLogger("disparity_lab")

SCHEMA = 1
TABLE1_COLUMNS = ("name", "n", "m", "cluster_imbalance", "sentiment_imbalance", "mass_imbalance",
                  "mixing_time_lower_bound", "fiedler_value", "disparity")


@dataclass
class RunConfig:
    command: str
    graph: str | None = None
    dataset: str | None = None
    opinions: str | None = None
    partition: str | None = None
    model: str = "fj"
    construct: str = "none"
    renormalize: bool = False
    eps: float | None = None
    k: int | None = None
    steps: int = 200
    lr: float = 1.0
    seed: int = 42
    mode: str = "exact_dp"
    plan: str | None = None
    polarized: bool = False
    datasets: list[str] = field(default_factory=list)
    n: int = 200
    p: float = 0.5
    trials: int = 20
    c: float = 20.0
    out: str | None = None
    format: str = "json"

    def __post_init__(self):
        if self.eps is not None and self.eps <= 0:
            raise ValueError("--eps must be positive")
        if self.steps < 0:
            raise ValueError("--steps must be non-negative")
        for attr in ("graph", "opinions", "partition", "plan"):
            path = getattr(self, attr)
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(f"--{attr} file not found: {path}")


# -- inputs ----------------------------------------------------------------

def load_graph(cfg: RunConfig) -> WeightedGraph:
    if cfg.graph:
        return datasets.load(cfg.graph)
    if cfg.dataset:
        return datasets.load(cfg.dataset)
    raise ValueError("supply --graph or --dataset")


def load_opinions(cfg: RunConfig, g: WeightedGraph, p: Partition | None = None) -> np.ndarray:
    """Opinions from file, or seeded draws (uniform, or Beta(2,8)/Beta(8,2) by group)."""
    if cfg.opinions:
        s = read_opinions(cfg.opinions)
        if len(s) != g.n:
            raise ValueError(f"opinion file has {len(s)} entries for {g.n} nodes")
        if np.any(s < 0) or np.any(s > 1):
            raise ValueError("opinions must lie in [0, 1]")
        norm = float(np.linalg.norm(s))
        if abs(norm - 1.0) > 1e-6:
            if not cfg.renormalize:
                raise ValueError(f"opinion vector has norm {norm:.6g}; pass --renormalize to rescale it")
            s = s / norm
        return s
    if cfg.polarized:
        if p is None:
            raise ValueError("polarized opinions need a partition")
        rng = np.random.default_rng(cfg.seed)
        raw = np.where(p.in_a, rng.beta(2, 8, g.n), rng.beta(8, 2, g.n))
        return normalize_opinions(raw)
    return random_opinions(g.n, cfg.seed)


def load_partition(cfg: RunConfig, g: WeightedGraph) -> Partition:
    if cfg.partition:
        p = read_partition(cfg.partition)
        if p.n != g.n:
            raise ValueError(f"partition file has {p.n} entries for {g.n} nodes")
        return p
    return spectral_partition(g)


# -- outputs ---------------------------------------------------------------

def to_json(obj) -> str:
    return json.dumps({"schema": SCHEMA, **obj}, indent=2, sort_keys=True, allow_nan=False, default=_fallback) + "\n"


def _fallback(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def rows_to_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def chain_rows(T: np.ndarray, g: WeightedGraph) -> list[dict]:
    """One row per non-zero ``T_ij``, self-loops included, in row-major order."""
    i, j = np.nonzero(T)
    return [{"i": int(a), "j": int(b), "label_i": g.label(int(a)), "label_j": g.label(int(b)),
             "t": float(T[a, b])} for a, b in zip(i, j)]


def chain_to_csv(T: np.ndarray, g: WeightedGraph) -> str:
    return rows_to_csv(chain_rows(T, g), ("i", "j", "label_i", "label_j", "t"))


def chain_from_csv(text: str, n: int) -> np.ndarray:
    T = np.zeros((n, n))
    for row in csv.DictReader(io.StringIO(text)):
        T[int(row["i"]), int(row["j"])] = float(row["t"])
    return T


def chain_to_dot(T: np.ndarray, g: WeightedGraph, p: Partition | None = None) -> str:
    lines = ["digraph chain {"]
    for i in range(g.n):
        group = "" if p is None else f', group="{"A" if p.in_a[i] else "B"}"'
        lines.append(f'  {i} [label="{g.label(i)}"{group}];')
    for r in chain_rows(T, g):
        lines.append(f'  {r["i"]} -> {r["j"]} [weight={r["t"]!r}, label="{r["t"]:.4f}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def emit(text: str, cfg: RunConfig):
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)


# -- commands --------------------------------------------------------------

def cmd_disparity(cfg: RunConfig) -> dict:
    """Disparity under one model, optionally after one of the optimal constructions."""
    g = load_graph(cfg)
    construct = cfg.construct
    if cfg.model == "fj" and construct in ("fiedler", "min"):
        report = fj_max_balanced(g) if construct == "fiedler" else fj_min_opinions_partition(g)
    elif cfg.model == "fj":
        p = load_partition(cfg, g)
        report = fj_report(g, load_opinions(cfg, g, p), p)
    elif cfg.model == "degroot":
        p = load_partition(cfg, g)
        if construct == "optimal-opinions":
            T = row_stochastic(g)
            s = optimal_opinions_degroot(principal_left_eigenvector(T), p)
        elif construct == "optimal-chain":
            s = load_opinions(cfg, g, p)
            T = metropolis_chain(g, s, p)
        elif construct == "none":
            s = load_opinions(cfg, g, p)
            T = row_stochastic(g)
        else:
            raise ValueError(f"construction {construct!r} does not apply to the DeGroot model")
        report = degroot_report(T, s, p)
    else:
        raise ValueError(f"unknown model {cfg.model!r}")
    out = report.to_dict()
    out["seed"] = cfg.seed
    return out


def table1_row(name: str, g: WeightedGraph, seed: int = 42, eps: float = 1e-6) -> dict:
    if not g.is_connected():
        full = g.n
        g, _ = g.largest_component()
        log.info("%s: using the largest connected component (%d of %d nodes)", name, g.n, full)
    p = spectral_partition(g, normalized=True)
    s = random_opinions(g.n, seed)
    stats = partition_stats(p, s)
    q = optimal_stationary_degroot(s, p)
    T = metropolis_chain(g, s, p)
    slem = second_eigenvalue_modulus(T, q)
    lam2 = fiedler_pair(laplacian(g)).value
    qa, qb = float(q[p.in_a].sum()), float(q[p.in_b].sum())
    return {"name": name, "n": g.n, "m": g.num_edges,
            "cluster_imbalance": stats.cluster_imbalance,
            "sentiment_imbalance": stats.sentiment_imbalance,
            "mass_imbalance": max(qa / qb, qb / qa),
            "mixing_time_lower_bound": mixing_time_lower_bound(slem, eps),
            "fiedler_value": lam2,
            "disparity": 1.0 / (1.0 + lam2) ** 2}


def cmd_table1(cfg: RunConfig) -> list[dict]:
    names = cfg.datasets or list(datasets.BUNDLED)
    eps = 1e-6 if cfg.eps is None else cfg.eps
    return [table1_row(Path(name).stem if Path(name).suffix else name, datasets.load(name), cfg.seed, eps)
            for name in names]


def cmd_export_chain(cfg: RunConfig) -> tuple[np.ndarray, WeightedGraph, Partition]:
    g = load_graph(cfg)
    p = load_partition(cfg, g)
    s = load_opinions(cfg, g, p)
    return metropolis_chain(g, s, p), g, p


def cmd_partition(cfg: RunConfig) -> dict:
    g = load_graph(cfg)
    s = load_opinions(cfg, g, None)
    q = principal_left_eigenvector(row_stochastic(g))
    if cfg.command == "min-partition":
        p, value = min_disparity_partition(q, s, cfg.mode, cfg.eps)
    else:
        p, value = max_disparity_partition(q, s, cfg.k if cfg.k is not None else g.n // 2)
    return {"model": "degroot", "value": value, "partition": p.tokens(), "seed": cfg.seed}


def cmd_optimize_weights(cfg: RunConfig) -> dict:
    g = load_graph(cfg)
    if cfg.opinions or cfg.partition:
        p = load_partition(cfg, g)
        s = load_opinions(cfg, g, p)
    else:
        best = fj_max_balanced(g)
        s, p = best.opinions, best.partition
    res = fj_optimize_weights(g, s, p, cfg.steps, cfg.lr)
    edges = [{"i": g.label(i), "j": g.label(j), "before": float(w0), "after": float(w1)}
             for (i, j, w0), w1 in zip(g.edges(), res.weights)]
    return {"model": "fj", "trace": res.trace, "stalled": res.stalled, "edges": edges, "seed": cfg.seed}


def cmd_contract(cfg: RunConfig) -> dict:
    g = load_graph(cfg)
    p = load_partition(cfg, g)
    s = load_opinions(cfg, g, p)
    rep = contraction_monotonicity_check(g, s, p, read_plan(cfg.plan, g))
    return {"model": "fj", "before": rep.before, "after": rep.after, "after_at_opinions": rep.after_at_opinions,
            "lambda_before": rep.lambda_before, "lambda_after": rep.lambda_after, "holds": rep.holds}


def cmd_sparsify(cfg: RunConfig) -> dict:
    g = load_graph(cfg)
    p = load_partition(cfg, g)
    s = load_opinions(cfg, g, p)
    res = sparsify_disparity(g, s, p, 0.3 if cfg.eps is None else cfg.eps, cfg.seed)
    return {"model": "fj", "edges_before": g.num_edges, "edges_after": res.graph.num_edges, "ratio": res.ratio,
            "samples": res.samples, "lower_bound": res.lower_bound, "upper_bound": res.upper_bound,
            "note": res.note, "seed": cfg.seed}


def cmd_sbm_interval(cfg: RunConfig) -> dict:
    spec = SbmSpec(cfg.n, cfg.k if cfg.k is not None else cfg.n // 2, p=cfg.p, seed=cfg.seed)
    chk = disparity_interval_check(spec, cfg.trials, c=cfg.c)
    return {"lower": chk.lower, "upper": chk.upper, "hits": chk.hits, "trials": chk.trials,
            "samples": chk.samples, "lambda_max": chk.lambda_max, "seed": cfg.seed}


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="disparity-lab", description="Group disparity under DeGroot and FJ dynamics")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, fmt=("json",)):
        sp.add_argument("--graph", help="edge list, .gml, .mat, or a bundled dataset name")
        sp.add_argument("--dataset", help="bundled dataset: " + ", ".join(datasets.BUNDLED) + ", or polblogs")
        sp.add_argument("--opinions", help="one opinion per line, in node order")
        sp.add_argument("--partition", help="one A/B token per line; default: Fiedler sign split")
        sp.add_argument("--renormalize", action="store_true", help="rescale opinions to unit norm")
        sp.add_argument("--seed", type=int, default=42)
        sp.add_argument("--out")
        sp.add_argument("--format", choices=fmt, default=fmt[0])
        return sp

    sp = common(sub.add_parser("disparity", help="evaluate or construct a disparity"))
    sp.add_argument("--model", choices=("degroot", "fj"), default="fj")
    sp.add_argument("--construct", default="none",
                    choices=("none", "optimal-opinions", "optimal-chain", "fiedler", "min"))

    sp = sub.add_parser("table1", help="dataset statistics and extremal disparities")
    sp.add_argument("datasets", nargs="*", help="dataset names or paths (default: bundled)")
    sp.add_argument("--eps", type=float, default=1e-6)
    sp.add_argument("--seed", type=int, default=42)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")

    sp = common(sub.add_parser("export-chain", help="disparity-minimizing Metropolis chain"), ("dot", "csv", "json"))
    sp.add_argument("--polarized", action="store_true", help="Beta(2,8) opinions on A, Beta(8,2) on B")

    sp = common(sub.add_parser("min-partition", help="partition minimizing the DeGroot disparity"))
    sp.add_argument("--mode", choices=("exact_dp", "fptas", "brute"), default="exact_dp")
    sp.add_argument("--eps", type=float, help="DP resolution or FPTAS accuracy")

    sp = common(sub.add_parser("max-partition", help="partition maximizing the DeGroot disparity with |A| = k"))
    sp.add_argument("--k", type=int)

    sp = common(sub.add_parser("optimize-weights", help="projected descent on FJ edge weights"))
    sp.add_argument("--steps", type=int, default=200)
    sp.add_argument("--lr", type=float, default=1.0)

    sp = common(sub.add_parser("contract", help="vertex contraction and its effect on the minimum disparity"))
    sp.add_argument("--plan", required=True, help="one 'u v A|B' merge per line")

    sp = common(sub.add_parser("sparsify", help="effective-resistance sparsification"))
    sp.add_argument("--eps", type=float, default=0.3)

    sp = sub.add_parser("sbm-interval", help="minimum-disparity interval on two-cliques graphs")
    for name, typ, default in (("--n", int, 200), ("--k", int, None), ("--p", float, 0.5),
                               ("--trials", int, 20), ("--c", float, 20.0), ("--seed", int, 42)):
        sp.add_argument(name, type=typ, default=default)
    sp.add_argument("--out")
    sp.add_argument("--format", choices=("json",), default="json")

    sp = sub.add_parser("fetch", help="download a public dataset into the data directory")
    sp.add_argument("name", choices=("polblogs",))
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "fetch":
        try:
            print(datasets.fetch_polblogs())
        except OSError as exc:
            print(f"disparity-lab: error: could not download {datasets.POLBLOGS_URL}: {exc}; "
                  f"place polblogs.gml in {datasets.data_dir()} instead", file=sys.stderr)
            return 2
        return 0
    opts = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__ and v is not None}
    try:
        cfg = RunConfig(**opts)
        if cfg.command == "disparity":
            emit(to_json(cmd_disparity(cfg)), cfg)
        elif cfg.command == "table1":
            rows = cmd_table1(cfg)
            emit(rows_to_csv(rows, TABLE1_COLUMNS) if cfg.format == "csv" else to_json({"rows": rows}), cfg)
        elif cfg.command == "export-chain":
            T, g, p = cmd_export_chain(cfg)
            text = {"dot": lambda: chain_to_dot(T, g, p), "csv": lambda: chain_to_csv(T, g),
                    "json": lambda: to_json({"chain": chain_rows(T, g)})}[cfg.format]()
            emit(text, cfg)
        elif cfg.command in ("min-partition", "max-partition"):
            emit(to_json(cmd_partition(cfg)), cfg)
        elif cfg.command == "optimize-weights":
            emit(to_json(cmd_optimize_weights(cfg)), cfg)
        elif cfg.command == "contract":
            emit(to_json(cmd_contract(cfg)), cfg)
        elif cfg.command == "sparsify":
            emit(to_json(cmd_sparsify(cfg)), cfg)
        elif cfg.command == "sbm-interval":
            emit(to_json(cmd_sbm_interval(cfg)), cfg)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"disparity-lab: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
