"""Synthetic desk-scale datasets.

Two generators: Gaussian blobs (vector features for MLPs) and noisy
template images (grid features for conv nets and backdoor triggers).
Regeneration from (generator, seed) is bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as rng_mod


@dataclass(frozen=True)
class Dataset:
    """Inputs, integer class labels, and provenance."""

    inputs: np.ndarray  # (n, *feature_shape) float64
    labels: np.ndarray  # (n,) int64 in [0, class_count)
    class_count: int
    provenance: str = ""

    def __post_init__(self):
        if self.inputs.shape[0] != self.labels.shape[0]:
            raise ValueError("inputs and labels disagree on sample count")
        if self.inputs.shape[0] < 1:
            raise ValueError("datasets must be nonempty")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.class_count):
            raise ValueError("labels out of range")

    def __len__(self) -> int:
        return int(self.inputs.shape[0])

    @property
    def feature_shape(self) -> tuple[int, ...]:
        return self.inputs.shape[1:]

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(
            self.inputs[indices].copy(),
            self.labels[indices].copy(),
            self.class_count,
            self.provenance,
        )

    def concat(self, other: "Dataset") -> "Dataset":
        if other.feature_shape != self.feature_shape or other.class_count != self.class_count:
            raise ValueError("incompatible datasets")
        return Dataset(
            np.concatenate([self.inputs, other.inputs]),
            np.concatenate([self.labels, other.labels]),
            self.class_count,
            self.provenance,
        )


def make_blobs(classes=4, dims=8, per_class=40, spread=0.25, seed=0) -> Dataset:
    """Gaussian clusters with class means on a seeded random sphere.

    The default spread keeps the classes linearly separable; scenario
    configs raise it when class overlap (and so memorization) is wanted.
    """
    if classes < 2 or dims < 2 or per_class < 1 or spread <= 0:
        raise ValueError("need classes >= 2, dims >= 2, per_class >= 1, spread > 0")
    gen = rng_mod.stream(seed, rng_mod.DATA, "blobs")
    means = gen.normal(size=(classes, dims))
    means *= 2.0 / np.linalg.norm(means, axis=1, keepdims=True)
    inputs = np.empty((classes * per_class, dims))
    labels = np.empty(classes * per_class, dtype=np.int64)
    for c in range(classes):
        block = slice(c * per_class, (c + 1) * per_class)
        inputs[block] = means[c] + spread * gen.normal(size=(per_class, dims))
        labels[block] = c
    order = gen.permutation(len(labels))
    return Dataset(inputs[order], labels[order], classes, provenance=f"blobs:{seed}")


def make_grid_images(classes=4, side=8, per_class=40, noise=0.3, seed=0) -> Dataset:
    """Single-channel images: one binary template per class plus Gaussian noise."""
    if side < 6:
        raise ValueError("side must be >= 6 to leave room for a 3x3 trigger")
    if classes < 2 or per_class < 1 or noise < 0:
        raise ValueError("need classes >= 2, per_class >= 1, noise >= 0")
    gen = rng_mod.stream(seed, rng_mod.DATA, "grid")
    templates = _distinct_templates(classes, side, gen)
    inputs = np.empty((classes * per_class, 1, side, side))
    labels = np.empty(classes * per_class, dtype=np.int64)
    for c in range(classes):
        block = slice(c * per_class, (c + 1) * per_class)
        inputs[block] = templates[c][None, None] + noise * gen.normal(size=(per_class, 1, side, side))
        labels[block] = c
    order = gen.permutation(len(labels))
    return Dataset(inputs[order], labels[order], classes, provenance=f"grid:{seed}")


def split_train_test(data: Dataset, test_per_class: int, seed: int = 0):
    """Stratified, seeded split of one dataset into (train, test).

    Keeps the two sides identically distributed (same class structure),
    which matters for MIA calibration: the test set is the non-member
    population.
    """
    if test_per_class < 1:
        raise ValueError("test_per_class must be positive")
    gen = rng_mod.stream(seed, rng_mod.DATA, "train-test-split")
    train_idx, test_idx = [], []
    for c in range(data.class_count):
        idx = np.flatnonzero(data.labels == c)
        if len(idx) <= test_per_class:
            raise ValueError(f"class {c} has too few samples ({len(idx)}) to hold out {test_per_class}")
        gen.shuffle(idx)
        test_idx.extend(idx[:test_per_class].tolist())
        train_idx.extend(idx[test_per_class:].tolist())
    train_idx = np.asarray(train_idx)
    test_idx = np.asarray(test_idx)
    gen.shuffle(train_idx)
    gen.shuffle(test_idx)
    return data.subset(train_idx), data.subset(test_idx)


def _distinct_templates(classes, side, gen, max_tries=1000):
    seen = set()
    templates = []
    for _ in range(max_tries):
        t = gen.integers(0, 2, size=(side, side)).astype(np.float64)
        key = t.tobytes()
        if key in seen:
            continue
        seen.add(key)
        templates.append(t)
        if len(templates) == classes:
            return templates
    raise RuntimeError("could not draw distinct class templates")
