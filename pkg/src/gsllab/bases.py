"""GSL bases: the node embeddings a new structure is built from."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .graph import Graph, propagate
from .nn import DataSplit, ModelSpec, TrainConfig, train

KINDS = ("raw", "agg", "mlp", "gcn")


@dataclass(frozen=True)
class BasesSpec:
    kind: str = "raw"
    hops: int = 1
    hidden: int = 128
    dropout: float = 0.5
    train_cfg: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown bases kind {self.kind!r}")
        if self.kind == "agg" and self.hops < 1:
            raise ValidationError("aggregated bases need hops >= 1")

    @classmethod
    def parse(cls, text: str, **kw) -> "BasesSpec":
        """``raw`` | ``agg:K`` | ``mlp`` | ``gcn``"""
        kind, _, arg = text.partition(":")
        if kind == "agg":
            kw["hops"] = int(arg or 1)
        elif arg:
            raise ValidationError(f"unexpected argument in bases {text!r}")
        return cls(kind=kind, **kw)

    def label(self) -> str:
        return f"agg:{self.hops}" if self.kind == "agg" else self.kind


def build_bases(g: Graph, spec: BasesSpec, split: DataSplit | None = None,
                seed: int = 0) -> np.ndarray:
    """Raw features, Â^k X, or the hidden layer of a pretrained 2-layer MLP/GCN."""
    if spec.kind == "raw":
        return np.array(g.features, dtype=np.float64, copy=True)
    if spec.kind == "agg":
        return propagate(g, g.features, spec.hops)
    if split is None or len(split.train) == 0:
        raise ValidationError("pretrained bases need a non-empty train split")
    model_spec = ModelSpec(kind=spec.kind, layers=2, hidden=spec.hidden, dropout=spec.dropout)
    cfg = spec.train_cfg
    cfg = TrainConfig(cfg.epochs, cfg.learning_rate, cfg.weight_decay, cfg.optimizer, seed)
    graphs = [] if spec.kind == "mlp" else [g]
    model, _ = train(model_spec, g.features, graphs, g.labels, split, cfg,
                     num_classes=g.num_classes)
    return model.hidden(g.features, graphs)
