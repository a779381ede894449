"""Spectral content of the minibatch-gradient covariance.

The curve maps the fraction alpha of leading eigendirections to the
fraction of total eigenvalue mass they carry; the alpha at which it
crosses 95% is a proxy for the effective dimensionality of the
fine-tuning search space. Estimated on random coordinate subsets of the
parameter vector and averaged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as rng_mod
from ..data import Dataset
from ..nn import Network, ParameterTree
from .jacobi import jacobi_eigh

MAX_SUBSET = 256  # Jacobi stays fast and accurate below this
PSD_TOL = 1e-10


@dataclass(frozen=True)
class SpectralCurve:
    alphas: np.ndarray  # grid (1/k, 2/k, ..., 1)
    psi: np.ndarray  # averaged cumulative spectral mass, nondecreasing, ends at 1
    degenerate: bool  # some subset had (numerically) zero total mass

    def alpha_at(self, beta: float = 0.95) -> float:
        """Smallest grid alpha whose spectral content reaches beta."""
        idx = int(np.argmax(self.psi >= beta - 1e-12))
        return float(self.alphas[idx])


def curve_from_gradient_draws(draws: np.ndarray, subset_size: int, subsets: int, rng) -> SpectralCurve:
    """Build the averaged curve from a (b, d) matrix of gradient draws."""
    draws = np.asarray(draws, dtype=np.float64)
    if draws.ndim != 2 or draws.shape[0] < 2:
        raise ValueError("need at least two gradient draws")
    b, d = draws.shape
    if not 1 <= subset_size <= d:
        raise ValueError(f"subset size must lie in [1, {d}]")
    if subset_size > MAX_SUBSET:
        raise ValueError(f"subset size capped at {MAX_SUBSET}")
    if subsets < 1:
        raise ValueError("need at least one subset")

    psi_sum = np.zeros(subset_size)
    degenerate = False
    for _ in range(subsets):
        coords = np.sort(rng.choice(d, size=subset_size, replace=False))
        x = draws[:, coords]
        x = x - x.mean(axis=0, keepdims=True)
        cov = (x.T @ x) / (b - 1)
        values, _ = jacobi_eigh(cov)
        floor = -PSD_TOL * max(1.0, float(values.max(initial=0.0)))
        if values.min(initial=0.0) < floor:
            raise ValueError("covariance spectrum is not PSD within tolerance")
        values = np.clip(values, 0.0, None)
        total = values.sum()
        if total <= 0.0:
            degenerate = True
            psi_sum += 1.0  # rank-0 covariance: all-mass-by-convention
        else:
            psi_sum += np.cumsum(values) / total
    psi = psi_sum / subsets
    alphas = np.arange(1, subset_size + 1) / subset_size
    return SpectralCurve(alphas, psi, degenerate)


def sample_gradient_draws(
    network: Network,
    params: ParameterTree,
    data: Dataset,
    batch_size: int,
    draws: int,
    rng,
) -> np.ndarray:
    """Gradients of ``draws`` random minibatches at fixed parameters, flattened."""
    if draws < 2:
        raise ValueError("covariance needs at least two draws")
    n = len(data)
    size = min(batch_size, n)
    out = np.empty((draws, params.param_count()))
    for i in range(draws):
        idx = rng.choice(n, size=size, replace=False)
        grads = network.backward(params, data.inputs[idx], data.labels[idx])
        out[i] = grads.to_vector()
    return out


def spectral_content(
    network: Network,
    params: ParameterTree,
    data: Dataset,
    batch_size: int = 16,
    draws: int = 128,
    subset_size: int = 64,
    subsets: int = 8,
    seed: int = 0,
) -> SpectralCurve:
    """End-to-end estimator: sample gradients, project, average the curves."""
    rng = rng_mod.stream(seed, "spectral")
    g = sample_gradient_draws(network, params, data, batch_size, draws, rng)
    return curve_from_gradient_draws(g, subset_size, subsets, rng)
