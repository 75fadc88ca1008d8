"""Contextual stochastic block model with a homophily knob (CSBM-H)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import build_graph

MAX_REROLLS = 16


@dataclass(frozen=True)
class CsbmConfig:
    num_nodes: int = 1000
    feature_dim: int = 10
    num_classes: int = 5
    homophily: float = 0.5
    degree_min: int = 2
    degree_max: int = 10
    class_mean_scale: float = 1.0
    class_std: float = 1.0

    def validate(self) -> None:
        if not 0.0 <= self.homophily <= 1.0:
            raise ValidationError(f"homophily must lie in [0, 1], got {self.homophily}")
        if self.degree_min < 1 or self.degree_max < self.degree_min:
            raise ValidationError(f"bad degree range [{self.degree_min}, {self.degree_max}]")
        if self.num_classes < 1 or self.num_nodes < self.num_classes:
            raise ValidationError("need num_nodes >= num_classes >= 1")
        if self.feature_dim < 1 or self.class_std <= 0 or self.class_mean_scale <= 0:
            raise ValidationError("feature_dim, class_std and class_mean_scale must be positive")


@dataclass(frozen=True)
class CsbmStats:
    proposals: int
    dropped: int

    @property
    def drop_rate(self) -> float:
        return self.dropped / max(self.proposals, 1)


def class_means(cfg: CsbmConfig, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal((cfg.num_classes, cfg.feature_dim))
    return cfg.class_mean_scale * v / np.linalg.norm(v, axis=1, keepdims=True)


def generate_csbm(cfg: CsbmConfig, seed: int, return_stats: bool = False):
    """Sample a CSBM-H graph; deterministic in ``(cfg, seed)``.

    Node ``u`` proposes ``d_u ~ U{degree_min..degree_max}`` edges. Each
    proposal targets its own class with probability ``h`` and otherwise a
    uniformly chosen other class. Self or duplicate targets are redrawn up to
    16 times and then dropped.
    """
    cfg.validate()
    rng = np.random.default_rng(seed)
    n, c = cfg.num_nodes, cfg.num_classes

    mu = class_means(cfg, rng)
    labels = rng.permutation(np.arange(n) % c)
    features = mu[labels] + cfg.class_std * rng.standard_normal((n, cfg.feature_dim))

    members = [np.flatnonzero(labels == k) for k in range(c)]
    degrees = rng.integers(cfg.degree_min, cfg.degree_max + 1, size=n)
    seen: set[tuple[int, int]] = set()
    edges: list[tuple[int, int]] = []
    proposals = dropped = 0
    for u in range(n):
        yu = int(labels[u])
        for _ in range(int(degrees[u])):
            proposals += 1
            if c == 1 or rng.random() < cfg.homophily:
                k = yu
            else:
                k = int(rng.integers(c - 1))
                k += k >= yu
            pool = members[k]
            for _ in range(MAX_REROLLS + 1):
                v = int(pool[rng.integers(len(pool))])
                key = (u, v) if u < v else (v, u)
                if v != u and key not in seen:
                    seen.add(key)
                    edges.append(key)
                    break
            else:
                dropped += 1

    g = build_graph(np.array(edges, dtype=np.int64).reshape(-1, 2), n, features, labels, c)
    if return_stats:
        return g, CsbmStats(proposals, dropped)
    return g
