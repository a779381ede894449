"""Unlearning strategies, perturbations, grafting, and exact compensations."""

from .compensate import (
    ALGEBRAIC_RELATIONS,
    activation_relation,
    affine_compensate,
    conv_norm_double_negate,
    negate_and_compensate,
)
from .nrfreeze import NrFreezeResult, nr_freeze
from .perturb import (
    PERTURBATION_KINDS,
    GraftAssignment,
    Perturbation,
    graft,
    negate_layers,
    perturb,
)
from .strategies import (
    STRATEGY_KINDS,
    Strategy,
    UnlearnRun,
    default_negation_layers,
    run_unlearning,
)

__all__ = [
    "ALGEBRAIC_RELATIONS",
    "GraftAssignment",
    "NrFreezeResult",
    "PERTURBATION_KINDS",
    "Perturbation",
    "STRATEGY_KINDS",
    "Strategy",
    "UnlearnRun",
    "activation_relation",
    "affine_compensate",
    "conv_norm_double_negate",
    "default_negation_layers",
    "graft",
    "negate_and_compensate",
    "negate_layers",
    "nr_freeze",
    "perturb",
    "run_unlearning",
]
