"""Post-activation distances between a model and a perturbed copy.

Used to check that negation maximizes the change in a layer's activations
among norm-matched perturbations, and to Monte-Carlo the independent-
Gaussian distance ratio that makes weight randomization weaker.
"""

from __future__ import annotations

import numpy as np

from .. import rng as rng_mod
from ..nn import Network, ParameterTree, apply_activation


def _post_activations(network: Network, params: ParameterTree, layer: str, probe):
    _, acts = network.post_activations(params, probe, capture=(layer,))
    a = acts[layer]
    return a.reshape(a.shape[0], -1)


def activation_distance(
    network: Network,
    params: ParameterTree,
    perturbed: ParameterTree,
    layer: str,
    probe: np.ndarray,
):
    """(mean squared post-activation distance, mean absolute norm mismatch).

    Distances are per-sample squared Euclidean norms at the given layer,
    averaged over the probe. The second value is the measured violation of
    the matched-norm hypothesis.
    """
    a = _post_activations(network, params, layer, probe)
    b = _post_activations(network, perturbed, layer, probe)
    dist = float(np.mean(np.sum((a - b) ** 2, axis=1)))
    mismatch = float(np.mean(np.abs(np.sum(a * a, axis=1) - np.sum(b * b, axis=1))))
    return dist, mismatch


def match_output_norm(
    network: Network,
    params: ParameterTree,
    perturbed: ParameterTree,
    layer: str,
    probe: np.ndarray,
    tol: float = 0.01,
    max_iters: int = 32,
) -> ParameterTree:
    """Rescale the perturbed layer until its mean squared post-activation
    norm matches the original within ``tol`` (relative).

    For positively homogeneous activations (relu, identity) one step is
    exact; otherwise the multiplicative fixed-point iteration converges
    for any monotone activation.
    """
    target = float(np.mean(np.sum(_post_activations(network, params, layer, probe) ** 2, axis=1)))
    if target == 0.0:
        raise ValueError("original layer has zero activation norm; nothing to match")
    out = perturbed
    for _ in range(max_iters):
        current = float(
            np.mean(np.sum(_post_activations(network, out, layer, probe) ** 2, axis=1))
        )
        if current > 0 and abs(current - target) <= tol * target:
            return out
        if current == 0.0:
            raise ValueError("perturbed layer is stuck at zero activations")
        factor = np.sqrt(target / current)
        out = out.map(lambda arr: factor * arr, names=(layer,))
    raise RuntimeError("norm matching did not converge")


def relu_max_distance_term(y: np.ndarray) -> np.ndarray:
    """Per-draw maximum of the squared distance to any same-norm point in
    the nonnegative orthant: twice the squared relu norm, except when every
    coordinate is already positive, where only the orthogonal move remains.
    """
    act = np.maximum(y, 0.0)
    norms = np.sum(act * act, axis=1)
    all_positive = np.all(y > 0.0, axis=1)
    return np.where(all_positive, norms, 2.0 * norms)


def gaussian_relu_distance_ratio(dim: int = 64, draws: int = 100_000, seed: int = 0) -> float:
    """Monte-Carlo estimate of E||relu(Y1)-relu(Y2)||^2 over the expected
    maximum-distance term, for IID standard Gaussian vectors.
    """
    gen = rng_mod.stream(seed, "relu-ratio")
    y1 = gen.normal(size=(draws, dim))
    y2 = gen.normal(size=(draws, dim))
    num = np.mean(np.sum((np.maximum(y1, 0) - np.maximum(y2, 0)) ** 2, axis=1))
    den = np.mean(relu_max_distance_term(y1))
    return float(num / den)


def layer_activation_norm(network: Network, params: ParameterTree, layer: str, probe) -> float:
    act = _post_activations(network, params, layer, probe)
    return float(np.mean(np.sum(act * act, axis=1)))


__all__ = [
    "activation_distance",
    "apply_activation",
    "gaussian_relu_distance_ratio",
    "layer_activation_norm",
    "match_output_norm",
    "relu_max_distance_term",
]
