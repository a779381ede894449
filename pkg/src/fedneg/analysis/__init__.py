"""Measurement machinery: metrics, MIA, CKA, spectra, and the time bound."""

from .activation import (
    activation_distance,
    gaussian_relu_distance_ratio,
    layer_activation_norm,
    match_output_norm,
    relu_max_distance_term,
)
from .bound import LossGapTrace, estimate_time_bound, time_bound_for_run
from .cka import CkaProfile, cka, cka_depth_profile, cka_detailed
from .jacobi import jacobi_eigh
from .metrics import (
    MetricsReport,
    accuracy_pct,
    avg_gap,
    best_threshold_balanced_accuracy,
    build_report,
    evaluate,
    loss_gap,
    mia_score,
)
from .spectral import (
    SpectralCurve,
    curve_from_gradient_draws,
    sample_gradient_draws,
    spectral_content,
)

__all__ = [
    "CkaProfile",
    "LossGapTrace",
    "MetricsReport",
    "SpectralCurve",
    "accuracy_pct",
    "activation_distance",
    "avg_gap",
    "best_threshold_balanced_accuracy",
    "build_report",
    "cka",
    "cka_depth_profile",
    "cka_detailed",
    "curve_from_gradient_draws",
    "estimate_time_bound",
    "evaluate",
    "gaussian_relu_distance_ratio",
    "jacobi_eigh",
    "layer_activation_norm",
    "loss_gap",
    "match_output_norm",
    "mia_score",
    "relu_max_distance_term",
    "sample_gradient_draws",
    "spectral_content",
    "time_bound_for_run",
]
