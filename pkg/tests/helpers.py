"""Shared test utilities: independent oracles kept deliberately naive."""

from __future__ import annotations

import math

import numpy as np

from fedneg.nn import Network, ParameterTree


def numerical_gradient(network: Network, params: ParameterTree, x, y, h=1e-5):
    """Central finite differences on every scalar parameter.

    Returns a dict {(layer, tensor): array}. Independent of the backprop
    path: only the forward loss is evaluated.
    """
    out = {}
    for layer in params.layers:
        for field in ("weight", "bias"):
            base = getattr(layer, field)
            if base is None:
                continue
            grad = np.zeros_like(base)
            flat = grad.ravel()
            for i in range(base.size):
                bumped = base.copy().ravel()
                bumped[i] += h
                plus = _loss_with(network, params, layer.name, field, bumped.reshape(base.shape), x, y)
                bumped[i] -= 2 * h
                minus = _loss_with(network, params, layer.name, field, bumped.reshape(base.shape), x, y)
                flat[i] = (plus - minus) / (2 * h)
            out[(layer.name, field)] = grad
    return out


def _loss_with(network, params, name, field, tensor, x, y):
    kwargs = {field: tensor}
    tweaked = params.replace(name, **kwargs)
    return network.loss(tweaked, x, y)


def gradient_error(network: Network, params: ParameterTree, x, y, h=1e-5) -> float:
    """Worst-case scaled error between backprop and finite differences.

    Per element: |a - n| / max(1, |a|, |n|), so tiny gradients are held to
    an absolute tolerance and large ones to a relative one.
    """
    analytic = network.backward(params, x, y)
    numeric = numerical_gradient(network, params, x, y, h=h)
    worst = 0.0
    for layer in analytic.layers:
        for field in ("weight", "bias"):
            a = getattr(layer, field)
            if a is None:
                continue
            n = numeric[(layer.name, field)]
            scale = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
            worst = max(worst, float(np.max(np.abs(a - n) / scale)))
    return worst


def loopnest_conv_macs(in_channels, height, width, out_channels, kernel) -> int:
    """Count multiplications of a stride-1 valid conv by literally looping."""
    count = 0
    for _ in range(out_channels):
        for _ in range(height - kernel + 1):
            for _ in range(width - kernel + 1):
                for _ in range(in_channels):
                    for _ in range(kernel):
                        for _ in range(kernel):
                            count += 1
    return count


def loopnest_dense_macs(in_features, out_features) -> int:
    count = 0
    for _ in range(out_features):
        for _ in range(in_features):
            count += 1
    return count


def straight_line_tanh_mlp(w1, b1, w2, b2, x_row):
    """Scalar re-implementation of dense->tanh->dense for one sample."""
    hidden = []
    for j in range(w1.shape[1]):
        acc = b1[j]
        for i in range(w1.shape[0]):
            acc += x_row[i] * w1[i, j]
        hidden.append(math.tanh(acc))
    out = []
    for j in range(w2.shape[1]):
        acc = b2[j]
        for i in range(w2.shape[0]):
            acc += hidden[i] * w2[i, j]
        out.append(acc)
    return np.array(out)
