"""Linear centered kernel alignment between activation matrices.

The biased linear-kernel estimator with column centering:

    cka(X, Y) = ||Y^T X||_F^2 / (||X^T X||_F * ||Y^T Y||_F)

It is invariant to isotropic scaling and orthogonal right-multiplication
of either argument; self-similarity is 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..nn import Network, ParameterTree


def cka(x: np.ndarray, y: np.ndarray) -> float:
    value, _ = cka_detailed(x, y)
    return value


def cka_detailed(x: np.ndarray, y: np.ndarray):
    """(similarity, degenerate flag); zero-variance input gives (0.0, True)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2:
        raise ValueError("activations must be (samples, features) matrices")
    if x.shape[0] != y.shape[0]:
        raise ValueError("activation matrices disagree on sample count")
    if x.shape[0] < 3:
        raise ValueError("cka needs at least 3 samples")
    x = x - x.mean(axis=0, keepdims=True)
    y = y - y.mean(axis=0, keepdims=True)
    cross = np.linalg.norm(y.T @ x) ** 2
    nx = np.linalg.norm(x.T @ x)
    ny = np.linalg.norm(y.T @ y)
    if nx == 0.0 or ny == 0.0:
        return 0.0, True
    return float(cross / (nx * ny)), False


@dataclass(frozen=True)
class CkaProfile:
    """Per-layer CKA between two models on a shared probe batch."""

    layers: tuple[str, ...]
    values: tuple[float, ...]
    degenerate: tuple[bool, ...]

    def mean(self) -> float:
        return float(np.mean(self.values))

    def as_dict(self) -> dict:
        return dict(zip(self.layers, self.values))


def _features(network: Network, params: ParameterTree, probe, layers):
    _, acts = network.post_activations(params, probe, capture=layers)
    return {name: acts[name].reshape(acts[name].shape[0], -1) for name in layers}


def cka_depth_profile(
    network: Network,
    params_a: ParameterTree,
    params_b: ParameterTree,
    probe: np.ndarray,
    layers=None,
    baseline: ParameterTree | None = None,
) -> CkaProfile:
    """CKA between matched post-activation features, layer by layer.

    With a ``baseline`` tree (e.g. a freshly initialized model), values are
    normalized as (cka - cka_baseline) / (1 - cka_baseline), which rescales
    each layer so the baseline model sits at 0 and self-similarity at 1.
    """
    names = tuple(layers) if layers is not None else network.spec.layer_names()
    fa = _features(network, params_a, probe, names)
    fb = _features(network, params_b, probe, names)
    fbase = _features(network, baseline, probe, names) if baseline is not None else None

    values, flags = [], []
    for name in names:
        v, flag = cka_detailed(fa[name], fb[name])
        if fbase is not None:
            ref, ref_flag = cka_detailed(fa[name], fbase[name])
            flag = flag or ref_flag
            denom = 1.0 - ref
            v = (v - ref) / denom if abs(denom) > 1e-12 else 0.0
        values.append(v)
        flags.append(flag)
    return CkaProfile(names, tuple(values), tuple(flags))
