"""Minimal float64 neural-network engine: layers, backprop, SGD, cost model."""

from .costs import CostModel, count_costs, layer_macs_per_sample, param_count
from .network import (
    ACTIVATIONS,
    LayerSpec,
    Network,
    NetworkSpec,
    apply_activation,
    init_params,
    reinit_layer,
)
from .optim import OptimizerState, sgd_step
from .tree import (
    GradTree,
    LayerParams,
    NonFiniteError,
    ParameterTree,
    ensure_finite,
    tree_distance,
)

__all__ = [
    "ACTIVATIONS",
    "CostModel",
    "GradTree",
    "LayerParams",
    "LayerSpec",
    "Network",
    "NetworkSpec",
    "NonFiniteError",
    "OptimizerState",
    "ParameterTree",
    "apply_activation",
    "count_costs",
    "ensure_finite",
    "init_params",
    "layer_macs_per_sample",
    "param_count",
    "reinit_layer",
    "sgd_step",
    "tree_distance",
]
