"""Parameter and FLOP accounting for cost ledgers.

Conventions, declared once and used everywhere:

* a MAC is one multiply-accumulate; forward FLOPs = 2 x MACs;
* backward FLOPs = 2 x forward FLOPs;
* dense MACs per sample = in_features x out_features (bias adds not counted);
* conv2d MACs per sample = output positions x (in_channels x kh x kw) x out_channels;
* normalization layers contribute parameters but no MACs (their cost is
  negligible next to the matmuls at any scale this simulator runs at).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import NetworkSpec


@dataclass(frozen=True)
class CostModel:
    params: int
    fwd_flops: int
    bwd_flops: int

    @property
    def train_step_flops(self) -> int:
        return self.fwd_flops + self.bwd_flops


def layer_macs_per_sample(spec: NetworkSpec) -> dict[str, int]:
    shapes = spec.shapes()
    macs = {}
    for i, layer in enumerate(spec.layers):
        in_shape = shapes[i]
        if layer.kind == "dense":
            macs[layer.name] = int(np.prod(in_shape)) * layer.units
        elif layer.kind == "conv2d":
            c, h, w = in_shape
            k = layer.kernel
            positions = (h - k + 1) * (w - k + 1)
            macs[layer.name] = positions * (c * k * k) * layer.channels
        else:
            macs[layer.name] = 0
    return macs


def param_count(spec: NetworkSpec) -> int:
    shapes = spec.shapes()
    total = 0
    for i, layer in enumerate(spec.layers):
        in_shape = shapes[i]
        if layer.kind == "dense":
            total += int(np.prod(in_shape)) * layer.units + layer.units
        elif layer.kind == "conv2d":
            c = in_shape[0]
            k = layer.kernel
            total += layer.channels * c * k * k + layer.channels
        else:
            total += 2 * int(np.prod(in_shape))
    return total


def count_costs(spec: NetworkSpec, batch_size: int) -> CostModel:
    """Parameters plus forward/backward FLOPs for one batch."""
    if batch_size < 1:
        raise ValueError("batch size must be positive")
    macs = sum(layer_macs_per_sample(spec).values()) * batch_size
    fwd = 2 * macs
    return CostModel(params=param_count(spec), fwd_flops=fwd, bwd_flops=2 * fwd)
