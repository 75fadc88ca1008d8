"""Synthetic MI/accuracy sweeps, GNN+GSL ablation tables and the construction timing benchmark."""

from __future__ import annotations

import csv
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.stats import rankdata

from .bases import BasesSpec, build_bases
from .construct import ConstructSpec, build_gsl_graph, pairwise_cosine
from .csbm import CsbmConfig, generate_csbm
from .errors import ValidationError
from .fusion import FusionSpec, plan_training
from .graph import Graph, propagate, spmm
from .mi import MiConfig, mi_discrete_continuous
from .nn import DataSplit, ModelSpec, TrainConfig, train
from .theory import aggregate_bases, fano_bound

log = logging.getLogger(__name__)

RESULTS_HEADER = ["h", "seed", "bases", "representation", "mi_nats", "accuracy",
                  "fano_bound", "wall_ms"]
ABLATION_HEADER = ["model", "bases", "construct", "fusion", "param_sharing", "mean_acc",
                   "std_acc", "rank"]
REPRESENTATIONS = ("B", "H", "Hprime")


def derive_seed(*parts: int) -> int:
    """Stable 32-bit seed from integer coordinates (global seed, cell indices...)."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _from_dict(cls, data: dict):
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ValidationError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**data)


# ---- homophily sweep -----------------------------------------------------------

@dataclass(frozen=True)
class SweepConfig:
    h_grid: tuple = tuple(round(0.1 * i, 1) for i in range(11))
    seeds: int = 10
    global_seed: int = 0
    csbm: CsbmConfig = field(default_factory=CsbmConfig)
    bases: tuple = ("raw", "agg:1")
    construct: str = "knn:5"
    mi: MiConfig = field(default_factory=MiConfig)
    classifier: ModelSpec = field(default_factory=lambda: ModelSpec(kind="mlp", hidden=64))
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=300))
    workers: int = 1
    record_wall_time: bool = False

    def __post_init__(self):
        if not self.h_grid or self.seeds < 1:
            raise ValidationError("sweep needs a non-empty h grid and at least one seed")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        nested = {"csbm": CsbmConfig, "mi": MiConfig, "classifier": ModelSpec,
                  "train": TrainConfig}
        for key, sub in nested.items():
            if key in data:
                data[key] = _from_dict(sub, data[key])
        for key in ("h_grid", "bases"):
            if key in data:
                data[key] = tuple(data[key])
        return _from_dict(cls, data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RunRecord:
    h: float
    seed: int
    bases: str
    representation: str
    mi_nats: float
    accuracy: float
    fano_bound: float
    wall_ms: float = 0.0
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)

    def row(self) -> list:
        return [_fmt(self.h), str(self.seed), self.bases, self.representation,
                _fmt(self.mi_nats), _fmt(self.accuracy), _fmt(self.fano_bound),
                _fmt(self.wall_ms)]


def _sweep_cell(cfg: SweepConfig, h_idx: int, seed_idx: int) -> list:
    h = cfg.h_grid[h_idx]
    graph_seed = derive_seed(cfg.global_seed, h_idx, seed_idx)
    csbm = replace(cfg.csbm, homophily=h)
    out = []
    try:
        g = generate_csbm(csbm, graph_seed)
        split = DataSplit.random(g.num_nodes, graph_seed)
    except Exception as exc:  # whole (h, seed) cell is lost
        log.error("h=%s seed=%s: graph generation failed: %s", h, seed_idx, exc)
        return [RunRecord(h, seed_idx, b, r, math.nan, math.nan, math.nan, 0.0, repr(exc))
                for b in cfg.bases for r in REPRESENTATIONS]
    construct = ConstructSpec.parse(cfg.construct)
    for b_idx, bases_text in enumerate(cfg.bases):
        try:
            b = build_bases(g, BasesSpec.parse(bases_text), split,
                            derive_seed(cfg.global_seed, h_idx, seed_idx, 1000 + b_idx))
            g_new = build_gsl_graph(b, construct, g.num_edges)
            reps = {"B": b, "H": propagate(g, b), "Hprime": propagate(g_new, b)}
        except Exception as exc:
            log.error("h=%s seed=%s bases=%s failed: %s", h, seed_idx, bases_text, exc)
            out += [RunRecord(h, seed_idx, bases_text, r, math.nan, math.nan, math.nan, 0.0,
                              repr(exc)) for r in REPRESENTATIONS]
            continue
        for r_idx, (name, rep) in enumerate(reps.items()):
            t0 = time.perf_counter()
            try:
                mi = mi_discrete_continuous(rep, g.labels, cfg.mi)
                tcfg = replace(cfg.train, seed=derive_seed(cfg.global_seed, h_idx, seed_idx,
                                                           3 * b_idx + r_idx))
                _, report = train(cfg.classifier, rep, [], g.labels, split, tcfg,
                                  num_classes=g.num_classes)
                wall = (time.perf_counter() - t0) * 1e3 if cfg.record_wall_time else 0.0
                out.append(RunRecord(h, seed_idx, bases_text, name, mi, report.best_test_acc,
                                     fano_bound(mi, g.num_classes), wall))
            except Exception as exc:
                log.error("h=%s seed=%s bases=%s rep=%s failed: %s", h, seed_idx,
                          bases_text, name, exc)
                out.append(RunRecord(h, seed_idx, bases_text, name, math.nan, math.nan,
                                     math.nan, 0.0, repr(exc)))
    return out


def _sweep_job(args):
    return _sweep_cell(*args)


def _record_key(cfg: SweepConfig):
    b_order = {b: i for i, b in enumerate(cfg.bases)}
    r_order = {r: i for i, r in enumerate(REPRESENTATIONS)}
    return lambda r: (r.h, r.seed, b_order[r.bases], r_order[r.representation])


def run_synthetic_sweep(cfg: SweepConfig = SweepConfig(), workers: Optional[int] = None) -> list:
    """One record per (h, seed, bases, representation), failures included."""
    jobs = [(cfg, i, s) for i in range(len(cfg.h_grid)) for s in range(cfg.seeds)]
    workers = cfg.workers if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_sweep_job, jobs))
    else:
        chunks = [_sweep_job(j) for j in jobs]
    records = [r for chunk in chunks for r in chunk]
    return sorted(records, key=_record_key(cfg))


def records_to_csv(records: Sequence[RunRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULTS_HEADER)
    for r in records:
        w.writerow(r.row())
    return buf.getvalue()


def records_from_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != RESULTS_HEADER:
        raise ValidationError("not a sweep results CSV (header mismatch)")
    return [RunRecord(float(h), int(s), b, r, float(mi), float(acc), float(fb), float(ms))
            for h, s, b, r, mi, acc, fb, ms in rows[1:]]


def cell_means(records: Sequence[RunRecord]) -> dict:
    """(bases, h, representation) -> (mean MI, mean accuracy) over seeds."""
    groups: dict = {}
    for r in records:
        if not r.failed:
            groups.setdefault((r.bases, r.h, r.representation), []).append(
                (r.mi_nats, r.accuracy))
    return {k: tuple(np.mean(v, axis=0)) for k, v in groups.items()}


# ---- DPI sweep -----------------------------------------------------------------

@dataclass(frozen=True)
class DpiRow:
    h: float
    bases: str
    aggregation: str
    mean_i_b: float
    mean_i_b_prime: float
    mean_gap: float
    min_gap: float


def dpi_sweep(cfg: SweepConfig = SweepConfig(),
              aggregations: Sequence[str] = ("mean", "sym-norm")) -> list:
    """Mean I(Y;B) - I(Y;B') per (h, bases, aggregation), B' over the GSL graph."""
    construct = ConstructSpec.parse(cfg.construct)
    gaps: dict = {}
    for h_idx, h in enumerate(cfg.h_grid):
        for s in range(cfg.seeds):
            seed = derive_seed(cfg.global_seed, h_idx, s)
            g = generate_csbm(replace(cfg.csbm, homophily=h), seed)
            split = DataSplit.random(g.num_nodes, seed)
            for b_idx, bases_text in enumerate(cfg.bases):
                b = build_bases(g, BasesSpec.parse(bases_text), split,
                                derive_seed(cfg.global_seed, h_idx, s, 1000 + b_idx))
                g_new = build_gsl_graph(b, construct, g.num_edges)
                i_b = mi_discrete_continuous(b, g.labels, cfg.mi)
                for agg in aggregations:
                    i_bp = mi_discrete_continuous(aggregate_bases(g_new, b, agg), g.labels,
                                                  cfg.mi)
                    gaps.setdefault((h, bases_text, agg), []).append((i_b, i_bp, i_b - i_bp))
    rows = []
    for (h, bases_text, agg), v in gaps.items():
        v = np.array(v)
        rows.append(DpiRow(h, bases_text, agg, *v.mean(axis=0), float(v[:, 2].min())))
    return rows


# ---- GNN+GSL ablation ----------------------------------------------------------

@dataclass(frozen=True)
class AblationGrid:
    models: tuple = ("gcn", "sgc:2")
    bases: tuple = ("raw",)
    constructs: tuple = ("cos-graph:1", "cos-node:1", "knn:5")
    fusions: tuple = ("only-new", "early", "late-shared", "late-separate")
    seeds: int = 3
    global_seed: int = 0
    hidden: int = 64
    layers: int = 2
    dropout: float = 0.5
    train: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=200))
    bases_train: TrainConfig = field(default_factory=TrainConfig)

    @classmethod
    def from_dict(cls, data: dict) -> "AblationGrid":
        data = dict(data)
        for key in ("train", "bases_train"):
            if key in data:
                data[key] = _from_dict(TrainConfig, data[key])
        for key in ("models", "bases", "constructs", "fusions"):
            if key in data:
                data[key] = tuple(data[key])
        return _from_dict(cls, data)


@dataclass(frozen=True)
class AblationRow:
    model: str
    bases: str
    construct: str
    fusion: str
    param_sharing: str
    mean_acc: float
    std_acc: float
    rank: float = math.nan
    error: str = ""

    def row(self) -> list:
        return [self.model, self.bases, self.construct, self.fusion, self.param_sharing,
                _fmt(self.mean_acc), _fmt(self.std_acc), _fmt(self.rank)]


def _ablation_cells(grid: AblationGrid):
    for bases in grid.bases:
        yield "mlp", bases, None, None
        for model in grid.models:
            yield model, bases, None, None
            for construct in grid.constructs:
                for fusion in grid.fusions:
                    yield model, bases, construct, fusion


def run_ablation(g: Graph, split: Optional[DataSplit], grid: AblationGrid = AblationGrid()) -> list:
    """Mean ± std best-val test accuracy per grid cell, with MLP and plain-GNN baselines.

    All cells share the per-seed split, bases and training seed, so a cell
    without GSL is exactly the plain model. ``rank`` is the rank of
    ``mean_acc`` over the table (1 = best, ties averaged).
    """
    bases_cache: dict = {}
    graph_cache: dict = {}

    def seed_split(s):
        return split if split is not None else DataSplit.random(
            g.num_nodes, derive_seed(grid.global_seed, s, 7))

    def bases_for(text, s):
        key = (text, s)
        if key not in bases_cache:
            spec = BasesSpec.parse(text, train_cfg=grid.bases_train)
            bases_cache[key] = build_bases(g, spec, seed_split(s),
                                           derive_seed(grid.global_seed, s, 11))
        return bases_cache[key]

    def gsl_for(bases, construct, s):
        key = (bases, construct, s)
        if key not in graph_cache:
            graph_cache[key] = build_gsl_graph(bases_for(bases, s),
                                               ConstructSpec.parse(construct), g.num_edges)
        return graph_cache[key]

    rows = []
    for model, bases, construct, fusion in _ablation_cells(grid):
        spec = ModelSpec.parse(model, layers=grid.layers, hidden=grid.hidden,
                               dropout=grid.dropout)
        fspec = FusionSpec(fusion) if fusion else None
        accs, error = [], ""
        for s in range(grid.seeds):
            try:
                b = bases_for(bases, s)
                g_new = gsl_for(bases, construct, s) if construct else None
                plan = plan_training(fspec or FusionSpec(), g, g_new)
                cfg = replace(grid.train, seed=derive_seed(grid.global_seed, s, 13))
                _, rep = plan.train(spec, b, g.labels, seed_split(s), cfg,
                                    num_classes=g.num_classes)
                accs.append(rep.best_test_acc)
            except Exception as exc:
                log.error("ablation cell %s/%s/%s/%s seed %d failed: %s",
                          model, bases, construct, fusion, s, exc)
                error = repr(exc)
                break
        if error:
            rows.append(AblationRow(model, bases, construct or "None", fusion or "-",
                                    fspec.param_sharing if fspec else "-", math.nan,
                                    math.nan, math.nan, error))
        else:
            rows.append(AblationRow(model, bases, construct or "None", fusion or "-",
                                    fspec.param_sharing if fspec else "-",
                                    float(np.mean(accs)), float(np.std(accs))))
    ok = [i for i, r in enumerate(rows) if not r.error]
    ranks = rankdata([-rows[i].mean_acc for i in ok], method="average")
    for i, rk in zip(ok, ranks):
        rows[i] = replace(rows[i], rank=float(rk))
    return rows


def ablation_to_csv(rows: Sequence[AblationRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ABLATION_HEADER)
    for r in rows:
        w.writerow(r.row())
    return buf.getvalue()


def ablation_from_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != ABLATION_HEADER:
        raise ValidationError("not an ablation CSV (header mismatch)")
    return [AblationRow(m, b, c, f, p, float(mu), float(sd), float(rk))
            for m, b, c, f, p, mu, sd, rk in rows[1:]]


# ---- timing ------------------------------------------------------------------

TIMING_HEADER = ["n", "similarity_ms", "construct_ms", "spmm_ms", "similarity_ratio",
                 "construct_ratio", "spmm_ratio"]


def _best_of(fn, reps: int) -> float:
    fn()  # warm-up: allocator, caches
    best = math.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def timing_benchmark(node_counts: Sequence[int], feature_dim: int = 10, reps: int = 3,
                     edge_ratio: float = 1.0, avg_degree: int = 10, seed: int = 0) -> list:
    """Best-of-``reps`` wall times (ms per call, after one untimed warm-up) per N
    for dense similarity, cos-graph construction, and a fixed-density sparse
    product, with ratios to the previous N."""
    if list(node_counts) != sorted(node_counts):
        raise ValidationError("node_counts must be ascending")
    rng = np.random.default_rng(seed)
    rows, prev = [], None
    for n in node_counts:
        b = rng.standard_normal((n, feature_dim))
        n_edges = n * avg_degree // 2
        spec = ConstructSpec("cos-graph", edge_ratio=edge_ratio)
        sim = _best_of(lambda: pairwise_cosine(b), reps)
        cons = _best_of(lambda: build_gsl_graph(b, spec, n_edges), reps)
        a = sp.random(n, n, density=avg_degree / n, format="csr", random_state=seed)
        spm = _best_of(lambda: [spmm(a, b) for _ in range(20)], reps) / 20
        ratios = ((sim / prev[0], cons / prev[1], spm / prev[2]) if prev
                  else (math.nan, math.nan, math.nan))
        rows.append((n, sim, cons, spm) + ratios)
        prev = (sim, cons, spm)
    return rows


def timing_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TIMING_HEADER)
    for r in rows:
        w.writerow([str(r[0])] + [_fmt(x) for x in r[1:]])
    return buf.getvalue()
