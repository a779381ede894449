"""SGD with classic momentum and coupled weight decay.

Update rule, per tensor:

    v <- momentum * v + g + weight_decay * theta
    theta <- theta - lr * v

Frozen layers are skipped entirely (no velocity, no decay), which is what
the negate-and-freeze harness relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import GradTree, LayerParams, NonFiniteError, ParameterTree, ensure_finite


@dataclass
class OptimizerState:
    lr: float
    momentum: float = 0.0
    weight_decay: float = 0.0
    velocity: ParameterTree | None = None
    frozen: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ValueError("weight decay must be non-negative")


def _zero_velocity(params: ParameterTree) -> ParameterTree:
    return params.map(np.zeros_like)


def sgd_step(params: ParameterTree, grads: GradTree, opt: OptimizerState) -> ParameterTree:
    """One optimizer step; returns the updated tree and mutates opt.velocity."""
    if opt.velocity is None:
        opt.velocity = _zero_velocity(params)
    if params.names() != tuple(l.name for l in grads.layers):
        raise ValueError("gradient tree does not match parameter tree")

    new_layers = []
    new_vel = []
    for layer, g, v in zip(params.layers, grads.layers, opt.velocity.layers):
        if layer.name in opt.frozen:
            new_layers.append(layer.copy())
            new_vel.append(v.copy())
            continue
        if layer.weight.shape != g.weight.shape:
            raise ValueError(f"gradient shape mismatch in layer {layer.name!r}")
        vw = opt.momentum * v.weight + g.weight + opt.weight_decay * layer.weight
        w = layer.weight - opt.lr * vw
        if layer.bias is not None:
            vb = opt.momentum * v.bias + g.bias + opt.weight_decay * layer.bias
            b = layer.bias - opt.lr * vb
        else:
            vb, b = None, None
        try:
            ensure_finite(w, f"updated weights of {layer.name}")
            if b is not None:
                ensure_finite(b, f"updated bias of {layer.name}")
        except NonFiniteError:
            raise
        new_layers.append(LayerParams(layer.name, layer.kind, w, b))
        new_vel.append(LayerParams(layer.name, layer.kind, vw, vb))
    opt.velocity = ParameterTree(new_vel)
    return ParameterTree(new_layers)
