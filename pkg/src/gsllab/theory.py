"""Numeric checks of the Fano accuracy bound and the no-MI-gain (DPI) claim."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .graph import Graph, mean_aggregate, propagate
from .mi import MiConfig, mi_discrete_continuous

FANO_SLACK = 0.10
DPI_SLACK = 0.05


def fano_bound(mi_nats: float, num_classes: int) -> float:
    """Accuracy ceiling min(1, (I + ln 2) / ln C)."""
    if num_classes < 2:
        raise ValidationError("the Fano bound needs at least two classes")
    if mi_nats < 0:
        raise ValidationError(f"mutual information must be >= 0, got {mi_nats}")
    return min(1.0, (mi_nats + math.log(2)) / math.log(num_classes))


@dataclass(frozen=True)
class BoundRecord:
    mi_nats: float
    num_classes: int
    bound: float
    observed_accuracy: float
    violated: bool
    slack_used: float


def check_fano(mi_nats: float, num_classes: int, accuracy: float,
               slack: float = FANO_SLACK) -> BoundRecord:
    bound = fano_bound(max(mi_nats, 0.0), num_classes)
    return BoundRecord(mi_nats, num_classes, bound, accuracy,
                       accuracy > bound + slack, slack)


@dataclass(frozen=True)
class FanoSummary:
    runs: int
    violations: int

    @property
    def violation_rate(self) -> float:
        return self.violations / max(self.runs, 1)

    @property
    def ok(self) -> bool:
        return self.violation_rate <= 0.02


def summarize_fano(records) -> FanoSummary:
    records = list(records)
    return FanoSummary(len(records), sum(r.violated for r in records))


def aggregate_bases(g_new: Graph, b: np.ndarray, aggregation: str) -> np.ndarray:
    """Neighbour mean (ego excluded) or the self-looped Â'B."""
    if aggregation == "mean":
        return mean_aggregate(g_new, b, include_self=False)
    if aggregation == "sym-norm":
        return propagate(g_new, b)
    raise ValidationError(f"unknown aggregation {aggregation!r}")


def check_dpi(g_new: Graph, b, y, aggregation: str = "mean",
              mi_cfg: MiConfig = MiConfig()):
    """Return ``(I(Y;B), I(Y;B'), gap)`` with B' aggregated over ``g_new``."""
    b = np.asarray(b, dtype=np.float64)
    i_b = mi_discrete_continuous(b, y, mi_cfg)
    i_bp = mi_discrete_continuous(aggregate_bases(g_new, b, aggregation), y, mi_cfg)
    return i_b, i_bp, i_b - i_bp
