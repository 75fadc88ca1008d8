"""Command-line entry point: ``gsllab <subcommand> ...``.

Exit codes: 0 success, 1 validation error, 2 runtime/numeric error (including
a failed theorem check).
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import asdict
from pathlib import Path

from .bases import BasesSpec, build_bases
from .construct import ConstructSpec, build_gsl_graph
from .csbm import CsbmConfig, generate_csbm
from .errors import NumericError, ValidationError
from .experiments import (AblationGrid, SweepConfig, ablation_to_csv, dpi_sweep,
                          records_to_csv, run_ablation, run_synthetic_sweep,
                          timing_benchmark, timing_to_csv)
from .fusion import FusionSpec, plan_training
from .graph import edge_homophily, node_homophily
from .io import load_bundle, load_matrix, render_sorted_adjacency, save_bundle, save_matrix
from .mi import MiConfig, mi_discrete_continuous
from .nn import DataSplit, ModelSpec, TrainConfig
from .theory import DPI_SLACK, check_fano, summarize_fano

log = logging.getLogger("gsllab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(path):
    if path is None:
        return {}
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None


def _split_for(g, split, seed):
    return split if split is not None else DataSplit.random(g.num_nodes, seed)


def cmd_generate(a):
    cfg = CsbmConfig(num_nodes=a.nodes, feature_dim=a.features, num_classes=a.classes,
                     homophily=a.homophily, degree_min=a.deg_min, degree_max=a.deg_max)
    g = generate_csbm(cfg, a.seed)
    save_bundle(g, DataSplit.random(g.num_nodes, a.seed), a.out,
                name=f"csbm-h{a.homophily:g}-s{a.seed}")


def cmd_homophily(a):
    g, _ = load_bundle(a.dir)
    node, skipped = node_homophily(g, return_skipped=True)
    print(f"edge_homophily {edge_homophily(g):.6f}")
    print(f"node_homophily {node:.6f}")
    if skipped:
        print(f"isolated_nodes_skipped {skipped}")


def cmd_bases(a):
    g, split = load_bundle(a.dir)
    spec = BasesSpec.parse(a.kind, train_cfg=TrainConfig(epochs=a.epochs))
    save_matrix(build_bases(g, spec, _split_for(g, split, a.seed), a.seed), a.out)


def cmd_rewire(a):
    g, split = load_bundle(a.dir)
    b = load_matrix(a.bases_file)
    g_new = build_gsl_graph(b, ConstructSpec.parse(a.method), g.num_edges)
    out = g_new.with_data(g.features, g.labels, g.num_classes)
    save_bundle(out, split, a.out, name=f"gsl-{a.method}")
    print(f"edges {out.num_edges}")


def cmd_mi(a):
    g, _ = load_bundle(a.dir)
    h = load_matrix(a.bases_file) if a.bases_file else g.features
    print(f"{mi_discrete_continuous(h, g.labels, MiConfig(k=a.k)):.10f}")


def cmd_train(a):
    g, split = load_bundle(a.dir)
    split = _split_for(g, split, a.seed)
    x = load_matrix(a.bases_file) if a.bases_file else g.features
    spec = ModelSpec.parse(a.model, layers=a.layers, hidden=a.hidden, dropout=a.dropout)
    g_new = load_bundle(a.gsl)[0] if a.gsl else None
    plan = plan_training(FusionSpec(a.fusion), g, g_new)
    cfg = TrainConfig(epochs=a.epochs, learning_rate=a.lr, weight_decay=a.weight_decay,
                      seed=a.seed)
    _, report = plan.train(spec, x, g.labels, split, cfg, num_classes=g.num_classes)
    out = asdict(report)
    out["final_loss"] = out.pop("losses")[-1]
    print(json.dumps(out, indent=2, sort_keys=True))


def cmd_sweep(a):
    cfg = SweepConfig.from_dict(_load_config(a.config))
    records = run_synthetic_sweep(cfg, workers=a.workers)
    Path(a.out).write_text(records_to_csv(records))
    failed = sum(r.failed for r in records)
    print(f"records {len(records)} failed {failed}")


def cmd_ablate(a):
    g, split = load_bundle(a.dir)
    rows = run_ablation(g, split, AblationGrid.from_dict(_load_config(a.config)))
    Path(a.out).write_text(ablation_to_csv(rows))
    print(f"rows {len(rows)}")


def cmd_verify(a):
    cfg = SweepConfig.from_dict(_load_config(a.config))
    if a.theorem == "fano":
        records = [r for r in run_synthetic_sweep(cfg) if not r.failed]
        c = cfg.csbm.num_classes
        est = summarize_fano(check_fano(r.mi_nats, c, r.accuracy) for r in records)
        ent = math.log(c)  # balanced labels
        vac = summarize_fano(check_fano(ent, c, r.accuracy, slack=0.0) for r in records)
        print(f"fano runs {est.runs} violations {est.violations} "
              f"rate {est.violation_rate:.4f} (limit 0.02)")
        print(f"fano with label entropy: violations {vac.violations}")
        ok = est.ok and vac.violations == 0
    else:
        rows = dpi_sweep(cfg)
        ok = True
        for r in rows:
            bad = r.mean_gap < -DPI_SLACK
            ok &= not bad
            print(f"h={r.h:g} bases={r.bases} agg={r.aggregation} I(B)={r.mean_i_b:.4f} "
                  f"I(B')={r.mean_i_b_prime:.4f} gap={r.mean_gap:+.4f}{'  VIOLATED' if bad else ''}")
    print("PASS" if ok else "FAIL")
    return 0 if ok else 2


def cmd_viz(a):
    g, _ = load_bundle(a.dir)
    render_sorted_adjacency(g, a.out, a.mode)


def cmd_bench(a):
    sizes = [int(s) for s in a.sizes.split(",")]
    rows = timing_benchmark(sizes, feature_dim=a.features, reps=a.reps)
    Path(a.out).write_text(timing_to_csv(rows))
    for r in rows:
        print(f"n={r[0]} similarity={r[1]:.2f}ms ratio={r[4]:.2f}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gsllab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("generate", help="sample a CSBM-H graph bundle")
    s.add_argument("--nodes", type=int, default=1000)
    s.add_argument("--features", type=int, default=10)
    s.add_argument("--classes", type=int, default=5)
    s.add_argument("--homophily", type=float, required=True)
    s.add_argument("--deg-min", type=int, default=2)
    s.add_argument("--deg-max", type=int, default=10)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_generate)

    s = sub.add_parser("homophily", help="print edge and node homophily")
    s.add_argument("dir")
    s.set_defaults(func=cmd_homophily)

    s = sub.add_parser("bases", help="build GSL bases to a CSV matrix")
    s.add_argument("dir")
    s.add_argument("--kind", default="raw", help="raw | agg:K | mlp | gcn")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--epochs", type=int, default=1000)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bases)

    s = sub.add_parser("rewire", help="construct a GSL graph bundle from bases")
    s.add_argument("dir")
    s.add_argument("--bases-file", required=True)
    s.add_argument("--method", default="knn:5", help="knn:K | cos-graph:R | cos-node:R")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_rewire)

    s = sub.add_parser("mi", help="kNN estimate of I(H;Y) in nats")
    s.add_argument("dir")
    s.add_argument("--bases-file")
    s.add_argument("--k", type=int, default=3)
    s.set_defaults(func=cmd_mi)

    s = sub.add_parser("train", help="train one model and print its report")
    s.add_argument("dir")
    s.add_argument("--model", default="gcn", help="mlp | gcn | sgc:K")
    s.add_argument("--fusion", default="only-new",
                   choices=["only-new", "early", "late-shared", "late-separate"])
    s.add_argument("--gsl", help="bundle holding the GSL graph")
    s.add_argument("--bases-file")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--epochs", type=int, default=1000)
    s.add_argument("--lr", type=float, default=1e-2)
    s.add_argument("--weight-decay", type=float, default=5e-4)
    s.add_argument("--hidden", type=int, default=64)
    s.add_argument("--layers", type=int, default=2)
    s.add_argument("--dropout", type=float, default=0.5)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("sweep", help="MI/accuracy sweep over homophily")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("ablate", help="GNN+GSL ablation table on a bundle")
    s.add_argument("dir")
    s.add_argument("--config")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_ablate)

    s = sub.add_parser("verify", help="numeric theorem checks")
    s.add_argument("--theorem", required=True, choices=["fano", "dpi"])
    s.add_argument("--config")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("viz", help="class-sorted adjacency as PGM or class-density CSV")
    s.add_argument("dir")
    s.add_argument("--mode", default="node", choices=["node", "class"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_viz)

    s = sub.add_parser("bench", help="construction timing benchmark")
    s.add_argument("--sizes", default="500,1000,2000")
    s.add_argument("--features", type=int, default=10)
    s.add_argument("--reps", type=int, default=3)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args) or 0
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
