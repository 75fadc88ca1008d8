"""New-structure construction from GSL bases: kNN, cos-graph, cos-node, refinements."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .errors import ValidationError
from .graph import Graph, build_graph, from_adjacency

METHODS = ("knn", "cos-graph", "cos-node")


@dataclass(frozen=True)
class ConstructSpec:
    method: str = "knn"
    k: int = 5
    edge_ratio: float = 1.0
    similarity: str = ""  # default: euclidean for knn, cosine otherwise

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"unknown construction method {self.method!r}")
        if self.method == "knn" and self.k < 1:
            raise ValidationError("knn needs k >= 1")
        if self.method != "knn" and not self.edge_ratio > 0:
            raise ValidationError("edge_ratio must be > 0")
        if not self.similarity:
            object.__setattr__(self, "similarity",
                               "euclidean" if self.method == "knn" else "cosine")
        if self.similarity not in ("cosine", "euclidean"):
            raise ValidationError(f"unknown similarity {self.similarity!r}")

    @classmethod
    def parse(cls, text: str) -> "ConstructSpec":
        """``knn:K`` | ``cos-graph:R`` | ``cos-node:R``"""
        method, _, arg = text.partition(":")
        if method == "knn":
            return cls("knn", k=int(arg or 5))
        return cls(method, edge_ratio=float(arg or 1.0))

    def label(self) -> str:
        return f"knn:{self.k}" if self.method == "knn" else f"{self.method}:{self.edge_ratio:g}"


def _norms(b: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(b, axis=1)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ValidationError(f"row {zero[0]} has zero norm; cosine similarity is undefined")
    return norms


BLOCK_ROWS = 256


def pairwise_cosine(b) -> np.ndarray:
    """Cosine similarity matrix with -inf on the diagonal.

    Filled in row blocks so each product's working set stays cache-sized and
    the cost scales as N^2 F rather than with the memory hierarchy.
    """
    b = np.asarray(b, dtype=np.float64)
    unit = b / _norms(b)[:, None]
    n = unit.shape[0]
    s = np.empty((n, n))
    for start in range(0, n, BLOCK_ROWS):
        np.dot(unit[start:start + BLOCK_ROWS], unit.T, out=s[start:start + BLOCK_ROWS])
    np.fill_diagonal(s, -np.inf)
    return s


def pairwise_sq_euclidean(b) -> np.ndarray:
    """Squared Euclidean distances with +inf on the diagonal."""
    b = np.asarray(b, dtype=np.float64)
    d = cdist(b, b, "sqeuclidean")
    np.fill_diagonal(d, np.inf)
    return d


def _similarity(b, similarity: str) -> np.ndarray:
    """Higher is more similar; self-pairs are -inf."""
    if similarity == "cosine":
        return pairwise_cosine(b)
    return -pairwise_sq_euclidean(b)


def top_per_row(score: np.ndarray, q: int) -> np.ndarray:
    """Column indices of the q best entries per row; ties go to the lower index."""
    n = score.shape[0]
    q = min(q, n - 1)
    # stable argsort of -score keeps ascending column order among equal scores
    return np.argsort(-score, axis=1, kind="stable")[:, :q]


def knn_edges(b, k: int, similarity: str = "euclidean") -> np.ndarray:
    s = _similarity(b, similarity)
    nbrs = top_per_row(s, k)
    rows = np.repeat(np.arange(s.shape[0]), nbrs.shape[1])
    return np.stack([rows, nbrs.ravel()], axis=1)


def top_pairs(score: np.ndarray, m: int) -> np.ndarray:
    """The m best unordered pairs (i < j); ties broken by ascending (i, j)."""
    iu, ju = np.triu_indices(score.shape[0], 1)
    vals = score[iu, ju]
    m = min(m, len(vals))
    if m < len(vals):
        # shortlist everything at least as good as the m-th best, then order exactly
        cut = np.partition(-vals, m - 1)[m - 1]
        cand = np.flatnonzero(-vals <= cut)
    else:
        cand = np.arange(len(vals))
    order = np.lexsort((ju[cand], iu[cand], -vals[cand]))[:m]
    pick = cand[order]
    return np.stack([iu[pick], ju[pick]], axis=1)


def build_gsl_graph(b, spec: ConstructSpec, reference_edge_count: int = 0) -> Graph:
    """Structure-only graph built from bases ``b``.

    knn: each node links to its k nearest rows, then symmetrized.
    cos-graph: the ceil(r * |E|) most similar pairs overall.
    cos-node: each node keeps its q = max(1, round(r * |E| / N)) most similar
    nodes, then symmetrized, so no node is isolated.
    """
    b = np.asarray(b, dtype=np.float64)
    n = b.shape[0]
    if n < 2:
        raise ValidationError("need at least two rows to build a graph")
    if spec.method == "knn":
        return build_graph(knn_edges(b, spec.k, spec.similarity), n)
    target = spec.edge_ratio * reference_edge_count
    if target < 1:
        raise ValidationError(
            f"edge_ratio * reference_edge_count = {target:g} < 1; no edges would be kept")
    s = _similarity(b, spec.similarity)
    if spec.method == "cos-graph":
        return build_graph(top_pairs(s, math.ceil(target)), n)
    q = max(1, int(math.floor(target / n + 0.5)))
    nbrs = top_per_row(s, q)
    rows = np.repeat(np.arange(n), nbrs.shape[1])
    return build_graph(np.stack([rows, nbrs.ravel()], axis=1), n)


# ---- refinement -------------------------------------------------------------

@dataclass(frozen=True)
class TopK:
    k: int


@dataclass(frozen=True)
class Symmetrize:
    pass


@dataclass(frozen=True)
class RowNormalize:
    pass


@dataclass(frozen=True)
class SymNormalize:
    pass


def _top_k_rows(a: sp.csr_matrix, k: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for u in range(a.shape[0]):
        lo, hi = a.indptr[u], a.indptr[u + 1]
        idx, w = a.indices[lo:hi], a.data[lo:hi]
        keep = np.lexsort((idx, -w))[:k]
        rows.extend([u] * len(keep))
        cols.extend(idx[keep])
        vals.extend(w[keep])
    out = sp.csr_matrix((vals, (rows, cols)), shape=a.shape)
    out.sort_indices()
    return out


def refine(structure, steps: Sequence) -> sp.csr_matrix:
    """Apply refinement steps in order to an adjacency (Graph or sparse matrix).

    The result may be asymmetric until a Symmetrize step runs; wrap it with
    ``as_graph`` once it is.
    """
    a = structure.adjacency if isinstance(structure, Graph) else structure
    a = sp.csr_matrix(a, dtype=np.float64, copy=True)
    a.sort_indices()
    for step in steps:
        if isinstance(step, TopK):
            a = _top_k_rows(a, step.k)
        elif isinstance(step, Symmetrize):
            a = a.maximum(a.T).tocsr()
        elif isinstance(step, RowNormalize):
            s = np.asarray(a.sum(axis=1)).ravel()
            inv = np.divide(1.0, s, out=np.zeros_like(s), where=s != 0)
            a = (sp.diags(inv) @ a).tocsr()
        elif isinstance(step, SymNormalize):
            s = np.asarray(a.sum(axis=1)).ravel()
            inv = np.divide(1.0, np.sqrt(s), out=np.zeros_like(s), where=s > 0)
            a = (sp.diags(inv) @ a @ sp.diags(inv)).tocsr()
        else:
            raise ValidationError(f"unknown refinement step {step!r}")
        a.sort_indices()
    return a


def as_graph(a: sp.spmatrix) -> Graph:
    return from_adjacency(a)
