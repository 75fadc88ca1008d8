"""Graph bundles on disk (meta.json + CSVs) and sorted-adjacency renderings."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import ValidationError
from .graph import Graph, build_graph
from .nn import DataSplit

ROLES = ("train", "val", "test")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _read_lines(path: Path) -> list:
    if not path.is_file():
        raise ValidationError(f"missing file {path}")
    return path.read_text().splitlines()


def _parse(path: Path, lineno: int, text: str, conv):
    try:
        return conv(text)
    except ValueError:
        raise ValidationError(f"{path.name}:{lineno}: cannot parse {text!r}") from None


def load_bundle(path) -> tuple:
    """Read a bundle directory; returns ``(graph, split or None)``."""
    root = Path(path)
    meta_path = root / "meta.json"
    if not meta_path.is_file():
        raise ValidationError(f"missing file {meta_path}")
    meta = json.loads(meta_path.read_text())
    try:
        n, c, f = int(meta["num_nodes"]), int(meta["num_classes"]), int(meta["feature_dim"])
    except KeyError as exc:
        raise ValidationError(f"meta.json lacks {exc.args[0]!r}") from None

    edges = []
    edge_file = root / "edges.csv"
    for i, line in enumerate(_read_lines(edge_file), 1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValidationError(f"edges.csv:{i}: expected 'u,v', got {line!r}")
        u, v = (_parse(edge_file, i, p.strip(), int) for p in parts)
        if u == v:
            raise ValidationError(f"edges.csv:{i}: self-loop {u},{v} is not allowed")
        if not (0 <= u < n and 0 <= v < n):
            raise ValidationError(f"edges.csv:{i}: node index outside [0, {n})")
        edges.append((u, v))

    feat_file = root / "features.csv"
    rows = [line for line in _read_lines(feat_file) if line.strip()]
    if len(rows) != n:
        raise ValidationError(f"features.csv has {len(rows)} rows, meta.json says {n} nodes")
    features = np.empty((n, f))
    for i, line in enumerate(rows):
        vals = line.split(",")
        if len(vals) != f:
            raise ValidationError(f"features.csv:{i + 1}: {len(vals)} values, expected {f}")
        features[i] = [_parse(feat_file, i + 1, v, float) for v in vals]

    label_file = root / "labels.csv"
    rows = [line for line in _read_lines(label_file) if line.strip()]
    if len(rows) != n:
        raise ValidationError(f"labels.csv has {len(rows)} rows, meta.json says {n} nodes")
    labels = np.array([_parse(label_file, i + 1, r.strip(), int) for i, r in enumerate(rows)])
    bad = np.flatnonzero((labels < 0) | (labels >= c))
    if bad.size:
        raise ValidationError(f"labels.csv:{bad[0] + 1}: label outside [0, {c})")

    g = build_graph(np.array(edges, dtype=np.int64).reshape(-1, 2), n, features, labels, c)

    split = None
    split_file = root / "splits.csv"
    if split_file.is_file():
        parts = {r: [] for r in ROLES}
        for i, line in enumerate(_read_lines(split_file), 1):
            if not line.strip() or (i == 1 and line.strip() == "node,role"):
                continue
            node, _, role = line.partition(",")
            role = role.strip()
            if role not in parts:
                raise ValidationError(f"splits.csv:{i}: unknown role {role!r}")
            node = _parse(split_file, i, node.strip(), int)
            if not 0 <= node < n:
                raise ValidationError(f"splits.csv:{i}: node index outside [0, {n})")
            parts[role].append(node)
        split = DataSplit(*(np.sort(parts[r]) for r in ROLES))
    return g, split


def save_bundle(g: Graph, split: Optional[DataSplit], path, name: str = "graph") -> None:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    meta = {"name": name, "num_nodes": g.num_nodes, "num_classes": g.num_classes,
            "feature_dim": g.feature_dim}
    (root / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    (root / "edges.csv").write_text("".join(f"{u},{v}\n" for u, v in g.edges()))
    (root / "features.csv").write_text(
        "".join(",".join(_fmt(x) for x in row) + "\n" for row in g.features))
    (root / "labels.csv").write_text("".join(f"{y}\n" for y in g.labels))
    split_file = root / "splits.csv"
    if split is not None:
        lines = ["node,role\n"]
        for role in ROLES:
            lines += [f"{u},{role}\n" for u in getattr(split, role)]
        split_file.write_text("".join(lines))
    elif split_file.exists():
        split_file.unlink()


def save_matrix(m: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(m):
            w.writerow([_fmt(x) for x in row])


def load_matrix(path) -> np.ndarray:
    path = Path(path)
    rows = []
    for i, line in enumerate(_read_lines(path), 1):
        if line.strip():
            rows.append([_parse(path, i, v, float) for v in line.split(",")])
    if len({len(r) for r in rows}) > 1:
        raise ValidationError(f"{path.name}: ragged rows")
    return np.array(rows, dtype=np.float64)


def class_block_density(g: Graph) -> np.ndarray:
    """C x C fraction of possible node pairs connected between each class pair."""
    c = g.num_classes
    e = g.edges()
    y = g.labels
    counts = np.zeros((c, c))
    np.add.at(counts, (y[e[:, 0]], y[e[:, 1]]), 1)
    counts = counts + counts.T - np.diag(np.diag(counts))
    sizes = np.bincount(y, minlength=c).astype(float)
    possible = np.outer(sizes, sizes)
    np.fill_diagonal(possible, sizes * (sizes - 1) / 2)
    return np.divide(counts, possible, out=np.zeros_like(counts), where=possible > 0)


def render_sorted_adjacency(g: Graph, out_path, cell: str = "node") -> None:
    """Adjacency with nodes sorted by label: PGM (P2) per node or a class-density CSV."""
    if cell == "class":
        save_matrix(class_block_density(g), out_path)
        return
    if cell != "node":
        raise ValidationError(f"unknown cell mode {cell!r}")
    order = np.argsort(g.labels, kind="stable")
    dense = g.adjacency[order][:, order].toarray() != 0
    n = g.num_nodes
    with open(out_path, "w") as fh:
        fh.write(f"P2\n{n} {n}\n1\n")
        for row in dense:
            fh.write(" ".join("1" if v else "0" for v in row) + "\n")
