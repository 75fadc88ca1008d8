"""Graph structure learning laboratory: CSBM graphs, GSL bases and rewiring,
kNN mutual information, small hand-differentiated GNNs, and the experiments
that ask whether a learned structure adds information."""

from .graph import (Graph, build_graph, edge_homophily, mean_aggregate, node_homophily,
                    normalized_adjacency, propagate, spmm)
from .csbm import CsbmConfig, generate_csbm
from .mi import MiConfig, digamma, label_entropy, mi_discrete_continuous
from .nn import DataSplit, ModelSpec, TrainConfig, evaluate, gradient_check, train
from .bases import BasesSpec, build_bases
from .construct import ConstructSpec, build_gsl_graph, pairwise_cosine, refine
from .fusion import FusionSpec, fuse_graphs, plan_training
from .theory import check_dpi, fano_bound

__version__ = "0.1.0"
