"""kNN mutual information between continuous representations and discrete labels.

Everything is in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# B_2n / (2n) for n = 1..6
_ASYMPTOTIC = (1 / 12, -1 / 120, 1 / 252, -1 / 240, 1 / 132, -691 / 32760)


def digamma(x):
    """ψ(x) for x > 0, accurate to ~1e-12 absolute.

    Shifts with ψ(x) = ψ(x + 1) - 1/x until x >= 6, then uses the asymptotic
    expansion. Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=np.float64)
    if np.any(~(x > 0)):
        raise ValueError("digamma is only defined here for x > 0")
    x = x.copy()
    acc = np.zeros_like(x)
    small = x < 6.0
    while small.any():
        acc[small] -= 1.0 / x[small]
        x[small] += 1.0
        small = x < 6.0
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    for coef in reversed(_ASYMPTOTIC):
        series = (series + coef) * inv2
    out = acc + np.log(x) - 0.5 / x - series
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MiConfig:
    k: int = 3
    metric: str = "chebyshev"
    clamp_nonnegative: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if self.metric != "chebyshev":
            raise ValidationError(f"unsupported metric {self.metric!r}")


def label_entropy(y) -> float:
    y = np.asarray(y)
    if y.size == 0:
        raise ValidationError("label entropy of an empty label vector")
    _, counts = np.unique(y, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def chebyshev_distances(h: np.ndarray, rows: slice | None = None) -> np.ndarray:
    """Max-norm distances from ``h[rows]`` to every row of ``h``."""
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 1:
        h = h[:, None]
    block = h if rows is None else h[rows]
    d = np.zeros((block.shape[0], h.shape[0]))
    for f in range(h.shape[1]):
        np.maximum(d, np.abs(block[:, f, None] - h[None, :, f]), out=d)
    return d


def knn_radii(h: np.ndarray, y: np.ndarray, k: int, block_rows: int = 1024):
    """Per sample: distance r to its k-th same-label neighbour and the number m
    of other samples (any label) within r.

    Without distance ties m is the inclusive count #{j != i : d_ij <= r}. When
    several samples sit exactly at r (duplicated points), m is the expected
    count under an infinitesimal jitter: the j = k - #{same, d < r} same-label
    samples still needed are drawn from the tied shell, and the other-label
    tied samples interleave uniformly, adding j * o / (s + 1).
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 1:
        h = h[:, None]
    y = np.asarray(y)
    n = h.shape[0]
    radius = np.empty(n)
    count = np.empty(n)
    for start in range(0, n, block_rows):
        sl = slice(start, min(start + block_rows, n))
        d = chebyshev_distances(h, sl)
        idx = np.arange(sl.start, sl.stop)
        d[np.arange(len(idx)), idx] = np.inf
        same = y[idx, None] == y[None, :]
        d_same = np.where(same, d, np.inf)
        r = np.partition(d_same, k - 1, axis=1)[:, k - 1]
        less = d < r[:, None]
        tied = d == r[:, None]
        need = k - (less & same).sum(axis=1)
        s_tied = (tied & same).sum(axis=1)
        o_tied = (tied & ~same).sum(axis=1)
        radius[sl] = r
        count[sl] = less.sum(axis=1) + need * (1.0 + o_tied / (s_tied + 1.0))
    return radius, count


def mi_discrete_continuous(h, y, cfg: MiConfig = MiConfig()) -> float:
    """I(H; Y) via the same-class k-th neighbour radius estimator.

    For sample i with label y_i: d_i is the Chebyshev distance to its k-th
    nearest same-label sample, m_i the number of samples of any label within
    d_i (the k-th neighbour included, i itself excluded; see ``knn_radii``
    for tied distances). Then

        I = ψ(N) - <ψ(N_y)> + ψ(k) - <ψ(m)>
    """
    h = np.asarray(h, dtype=np.float64)
    if h.ndim == 1:
        h = h[:, None]
    y = np.asarray(y)
    n = h.shape[0]
    if y.shape != (n,):
        raise ValidationError(f"{n} samples but {y.shape} labels")
    classes, inverse, counts = np.unique(y, return_inverse=True, return_counts=True)
    if len(classes) <= 1:
        return 0.0
    small = counts <= cfg.k
    if small.any():
        bad = classes[np.flatnonzero(small)[0]]
        raise ValidationError(
            f"class {bad} has {counts[small][0]} samples; the estimator needs more than k={cfg.k}")
    _, m = knn_radii(h, y, cfg.k)
    # fsum is exactly rounded, so the result does not depend on sample order
    mi = (digamma(n) - math.fsum(digamma(counts[inverse])) / n + digamma(cfg.k)
          - math.fsum(digamma(m)) / n)
    return max(mi, 0.0) if cfg.clamp_nonnegative else mi
