"""Combining the original graph with a GSL graph for training."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ValidationError
from .graph import Graph, build_graph
from . import nn

MODES = ("only-new", "early", "late-shared", "late-separate")


@dataclass(frozen=True)
class FusionSpec:
    mode: str = "only-new"
    combine: Optional[str] = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValidationError(f"unknown fusion mode {self.mode!r}")
        if self.mode == "late-shared":
            if self.combine not in (None, "mean"):
                raise ValidationError("late-shared fusion averages embeddings (combine=mean)")
            object.__setattr__(self, "combine", "mean")
        elif self.mode == "late-separate":
            if self.combine not in (None, "mean", "concat"):
                raise ValidationError(f"unknown combine {self.combine!r}")
            object.__setattr__(self, "combine", self.combine or "concat")
        else:
            object.__setattr__(self, "combine", None)

    @property
    def param_sharing(self) -> str:
        return {"late-shared": "shared", "late-separate": "separate"}.get(self.mode, "-")


def fuse_graphs(g: Graph, g_new: Graph) -> Graph:
    """Edge union; the result keeps ``g``'s features and labels, weights become 1."""
    if g.num_nodes != g_new.num_nodes:
        raise ValidationError(f"node counts differ: {g.num_nodes} vs {g_new.num_nodes}")
    edges = np.concatenate([g.edges(), g_new.edges()])
    return build_graph(edges, g.num_nodes, g.features, g.labels,
                       g.num_classes if g.labels is not None else None)


@dataclass(frozen=True)
class TrainingPlan:
    """Branch wiring for the trainer: which graph each branch convolves over and
    which parameter set it uses."""

    graphs: tuple
    branch_params: tuple
    combine: Optional[str]

    @property
    def share_params(self) -> bool:
        return len(set(self.branch_params)) <= 1

    def classifier_input_width(self, branch_width: int) -> int:
        return branch_width * len(self.graphs) if self.combine == "concat" else branch_width

    def train(self, spec: nn.ModelSpec, inputs, labels, split, cfg=nn.TrainConfig(),
              num_classes=None):
        graphs = [] if spec.kind == "mlp" else list(self.graphs)
        return nn.train(spec, inputs, graphs, labels, split, cfg, combine=self.combine,
                        share_params=self.share_params, num_classes=num_classes)


def plan_training(fusion: FusionSpec, g: Graph, g_new: Optional[Graph]) -> TrainingPlan:
    """``g_new=None`` gives the plain single-graph baseline on ``g``."""
    if g_new is None:
        return TrainingPlan((g,), (0,), None)
    if fusion.mode == "only-new":
        return TrainingPlan((g_new,), (0,), None)
    if fusion.mode == "early":
        return TrainingPlan((fuse_graphs(g, g_new),), (0,), None)
    if fusion.mode == "late-shared":
        return TrainingPlan((g, g_new), (0, 0), "mean")
    return TrainingPlan((g, g_new), (0, 1), fusion.combine)
