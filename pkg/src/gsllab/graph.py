"""Undirected graphs on CSR adjacency, GCN normalization, aggregation and homophily."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ValidationError

log = logging.getLogger(__name__)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph.

    Each undirected edge is stored twice in ``adjacency``; self-loops are never
    stored. ``features``/``labels`` may be ``None`` for structure-only graphs
    such as freshly constructed GSL graphs.
    """

    adjacency: sp.csr_matrix
    features: Optional[np.ndarray] = None
    labels: Optional[np.ndarray] = None
    num_classes: int = 0

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        """Number of undirected edges."""
        return self.adjacency.nnz // 2

    @property
    def feature_dim(self) -> int:
        return 0 if self.features is None else self.features.shape[1]

    def edges(self) -> np.ndarray:
        """Undirected edge list as an (E, 2) array with u < v, sorted."""
        coo = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return np.stack([coo.row[order], coo.col[order]], axis=1).astype(np.int64)

    def degrees(self) -> np.ndarray:
        return np.diff(self.adjacency.indptr)

    def neighbors(self, u: int) -> np.ndarray:
        a = self.adjacency
        return a.indices[a.indptr[u]:a.indptr[u + 1]]

    def with_data(self, features, labels, num_classes: int) -> "Graph":
        return from_adjacency(self.adjacency, features, labels, num_classes)

    def structure(self) -> "Graph":
        return Graph(self.adjacency)

    def same_as(self, other: "Graph") -> bool:
        """Structural and data equality (exact)."""
        a, b = self.adjacency, other.adjacency
        if a.shape != b.shape or a.nnz != b.nnz:
            return False
        if not (np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
                and np.array_equal(a.data, b.data)):
            return False
        for x, y in ((self.features, other.features), (self.labels, other.labels)):
            if (x is None) != (y is None):
                return False
            if x is not None and not np.array_equal(x, y):
                return False
        return self.num_classes == other.num_classes


def _check_data(num_nodes: int, features, labels, num_classes: Optional[int]):
    if features is not None:
        features = np.asarray(features, dtype=np.float64)
        if features.ndim != 2 or features.shape[0] != num_nodes:
            raise ValidationError(
                f"feature matrix has shape {features.shape}, expected ({num_nodes}, F)")
        if not np.all(np.isfinite(features)):
            raise ValidationError("feature matrix contains non-finite entries")
    if labels is not None:
        labels = np.asarray(labels)
        if labels.shape != (num_nodes,):
            raise ValidationError(f"labels have shape {labels.shape}, expected ({num_nodes},)")
        if labels.size and not np.issubdtype(labels.dtype, np.integer):
            if not np.all(labels == np.round(labels)):
                raise ValidationError("labels must be integers")
        labels = labels.astype(np.int64)
        if num_classes is None:
            num_classes = int(labels.max()) + 1 if labels.size else 0
        bad = np.flatnonzero((labels < 0) | (labels >= num_classes))
        if bad.size:
            raise ValidationError(
                f"label {labels[bad[0]]} at node {bad[0]} outside [0, {num_classes})")
    return features, labels, int(num_classes or 0)


def build_graph(edges: Iterable, num_nodes: int, features=None, labels=None,
                num_classes: Optional[int] = None, weights=None) -> Graph:
    """Build a symmetric, deduplicated graph from an undirected edge list.

    Self-loops are dropped with a warning. With ``weights``, duplicate pairs
    keep the largest weight.
    """
    e = np.asarray(list(edges) if not isinstance(edges, np.ndarray) else edges, dtype=np.int64)
    e = e.reshape(-1, 2)
    if e.size and (e.min() < 0 or e.max() >= num_nodes):
        row = int(np.flatnonzero((e < 0).any(1) | (e >= num_nodes).any(1))[0])
        raise ValidationError(f"edge {tuple(e[row])} references a node outside [0, {num_nodes})")
    w = np.ones(len(e)) if weights is None else np.asarray(weights, dtype=np.float64)
    loops = e[:, 0] == e[:, 1]
    if loops.any():
        log.warning("dropping %d self-loop(s)", int(loops.sum()))
        e, w = e[~loops], w[~loops]
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    vals = np.concatenate([w, w])
    adj = _csr_max(rows, cols, vals, num_nodes)
    return from_adjacency(adj, features, labels, num_classes)


def _csr_max(rows, cols, vals, n: int) -> sp.csr_matrix:
    # duplicates collapse to their max weight instead of scipy's default sum
    if len(rows) == 0:
        return sp.csr_matrix((n, n), dtype=np.float64)
    order = np.lexsort((-vals, cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    keep = np.ones(len(rows), dtype=bool)
    keep[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
    adj = sp.csr_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n))
    adj.sort_indices()
    return adj


def from_adjacency(adjacency, features=None, labels=None, num_classes: Optional[int] = None) -> Graph:
    """Wrap an existing symmetric adjacency, validating the Graph invariants."""
    adj = sp.csr_matrix(adjacency, dtype=np.float64, copy=True)
    n = adj.shape[0]
    if adj.shape != (n, n):
        raise ValidationError(f"adjacency must be square, got {adj.shape}")
    adj.sum_duplicates()
    adj.eliminate_zeros()
    adj.sort_indices()
    if adj.diagonal().any():
        raise ValidationError("adjacency stores self-loops")
    if (adj != adj.T).nnz:
        raise ValidationError("adjacency is not symmetric")
    features, labels, num_classes = _check_data(n, features, labels, num_classes)
    for arr in (adj.indptr, adj.indices, adj.data):
        arr.setflags(write=False)
    return Graph(adj,
                 None if features is None else _frozen(features),
                 None if labels is None else _frozen(labels),
                 num_classes)


def normalized_adjacency(g: Graph) -> sp.csr_matrix:
    """D̃^{-1/2} (A + I) D̃^{-1/2}, with weighted degrees for weighted graphs."""
    n = g.num_nodes
    a_tilde = (g.adjacency + sp.identity(n, format="csr")).tocsr()
    d = np.asarray(a_tilde.sum(axis=1)).ravel()
    inv = 1.0 / np.sqrt(d)
    out = sp.diags(inv) @ a_tilde @ sp.diags(inv)
    out = out.tocsr()
    out.sort_indices()
    return out


def spmm(a: sp.spmatrix, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if a.shape[1] != m.shape[0]:
        raise ValidationError(f"dimension mismatch: {a.shape} @ {m.shape}")
    return np.asarray(a @ m)


def propagate(g: Graph, m: np.ndarray, hops: int = 1) -> np.ndarray:
    """Â^hops M."""
    a_hat = normalized_adjacency(g)
    out = np.asarray(m, dtype=np.float64)
    for _ in range(hops):
        out = spmm(a_hat, out)
    return out


def mean_aggregate(g: Graph, m: np.ndarray, include_self: bool = False) -> np.ndarray:
    """Row u becomes the mean of its neighbours' rows.

    Isolated nodes keep their own row (with or without ``include_self``).
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape[0] != g.num_nodes:
        raise ValidationError(f"matrix has {m.shape[0]} rows, graph has {g.num_nodes} nodes")
    structure = g.adjacency.copy()
    structure.data = np.ones_like(structure.data)
    if include_self:
        structure = (structure + sp.identity(g.num_nodes, format="csr")).tocsr()
    deg = np.asarray(structure.sum(axis=1)).ravel()
    summed = np.asarray(structure @ m)
    out = m.copy()
    has = deg > 0
    out[has] = summed[has] / deg[has, None]
    return out


def edge_homophily(g: Graph) -> float:
    if g.num_edges == 0:
        raise ValidationError("edge homophily is undefined on a graph without edges")
    e = g.edges()
    y = g.labels
    return float(np.mean(y[e[:, 0]] == y[e[:, 1]]))


def node_homophily(g: Graph, return_skipped: bool = False):
    """Mean over non-isolated nodes of the same-label neighbour fraction."""
    a = g.adjacency
    y = g.labels
    deg = np.diff(a.indptr)
    rows = np.repeat(np.arange(g.num_nodes), deg)
    same = np.bincount(rows, weights=(y[rows] == y[a.indices]).astype(float),
                       minlength=g.num_nodes)
    has = deg > 0
    skipped = int((~has).sum())
    if skipped:
        log.info("node homophily skipped %d isolated node(s)", skipped)
    value = float(np.mean(same[has] / deg[has])) if has.any() else float("nan")
    return (value, skipped) if return_skipped else value
