"""Backdoor poisoning: a 3x3 trigger stamped into a corner, samples
relabeled to a chosen target class.

The trigger is a fixed checkerboard of extreme pixel values, so it is
salient at any noise level the generators produce. Samples that already
carry the target label are never poisoned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as rng_mod
from .datasets import Dataset

TRIGGER = np.array(
    [
        [1.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
        [1.0, 0.0, 1.0],
    ]
)

CORNERS = ("top_left", "top_right", "bottom_left", "bottom_right")


@dataclass(frozen=True)
class BackdoorConfig:
    target_class: int = 0
    poison_fraction: float = 0.8
    corner: str = "top_left"

    def __post_init__(self):
        if not 0.0 < self.poison_fraction <= 1.0:
            raise ValueError("poison fraction must lie in (0, 1]")
        if self.corner not in CORNERS:
            raise ValueError(f"unknown corner {self.corner!r}")


def _corner_slices(h, w, corner):
    t = TRIGGER.shape[0]
    if h < t or w < t:
        raise ValueError("trigger does not fit inside the image")
    rows = slice(0, t) if corner.startswith("top") else slice(h - t, h)
    cols = slice(0, t) if corner.endswith("left") else slice(w - t, w)
    return rows, cols


def stamp(inputs: np.ndarray, corner="top_left") -> np.ndarray:
    """Return a copy of (n, C, H, W) images with the trigger applied."""
    if inputs.ndim != 4:
        raise ValueError("expected image-shaped inputs (n, C, H, W)")
    rows, cols = _corner_slices(inputs.shape[2], inputs.shape[3], corner)
    out = inputs.copy()
    out[:, :, rows, cols] = TRIGGER
    return out


def poison(data: Dataset, cfg: BackdoorConfig, seed=0):
    """Stamp and relabel floor(fraction x eligible) samples.

    Returns (poisoned dataset, array of poisoned indices). Eligibility
    excludes samples already labeled with the target class.
    """
    if data.inputs.ndim != 4:
        raise ValueError("backdoor poisoning needs image-shaped inputs")
    if not 0 <= cfg.target_class < data.class_count:
        raise ValueError("target class out of range")
    eligible = np.flatnonzero(data.labels != cfg.target_class)
    if eligible.size == 0:
        raise ValueError("no samples eligible for poisoning")
    count = int(np.floor(cfg.poison_fraction * eligible.size))
    gen = rng_mod.stream(seed, "backdoor")
    chosen = np.sort(gen.choice(eligible, size=count, replace=False))

    inputs = data.inputs.copy()
    labels = data.labels.copy()
    if count:
        inputs[chosen] = stamp(inputs[chosen], cfg.corner)
        labels[chosen] = cfg.target_class
    out = Dataset(inputs, labels, data.class_count, data.provenance + "+backdoor")
    return out, chosen


def backdoor_success_rate(network, params, clean_test: Dataset, cfg: BackdoorConfig) -> float:
    """Fraction of stamped non-target test samples classified as the target."""
    keep = np.flatnonzero(clean_test.labels != cfg.target_class)
    if keep.size == 0:
        raise ValueError("no eligible test samples (all carry the target label)")
    stamped = stamp(clean_test.inputs[keep], cfg.corner)
    preds = network.predict(params, stamped)
    return float(np.mean(preds == cfg.target_class))
