"""Exact functional compensations for layer negation.

Two constructions, both identities at float64 precision:

* affine compensation: when the activation between two linear layers
  satisfies a*psi(x) + b*psi(-x) = c with ab != 0, transforming the
  second layer by W -> -(b/a) W, bias -> bias + c * (column sums of W)
  makes layer2' o psi o (-layer1) equal layer2 o psi o layer1;
* conv/norm double negation: negating a conv layer and conjugating the
  following normalization's affine by the sign flip leaves the composite
  unchanged, which is exactly why negating such a pair is useless as an
  unlearning perturbation.
"""

from __future__ import annotations

import numpy as np

from ..nn import LayerParams, NetworkSpec, ParameterTree

# a*psi(x) + b*psi(-x) = c. Odd activations: (1, 1, 0); sigmoid-like
# (sigmoid, binary step with the midpoint convention): (1, 1, 1).
# Even activations would use (1, -1, 0); none are built in.
ALGEBRAIC_RELATIONS = {
    "tanh": (1.0, 1.0, 0.0),
    "identity": (1.0, 1.0, 0.0),
    "sigmoid": (1.0, 1.0, 1.0),
    "step": (1.0, 1.0, 1.0),
}


def activation_relation(activation: str) -> tuple[float, float, float]:
    try:
        return ALGEBRAIC_RELATIONS[activation]
    except KeyError:
        raise ValueError(
            f"activation {activation!r} has no a*psi(x)+b*psi(-x)=c relation with ab != 0"
        ) from None


def affine_compensate(layer2: LayerParams, activation: str, relation=None) -> LayerParams:
    """Return the second-layer parameters compensating a negated first layer.

    ``relation`` overrides the built-in (a, b, c) table, e.g. (1, -1, 0)
    for a custom even activation.
    """
    a, b, c = activation_relation(activation) if relation is None else relation
    if a == 0 or b == 0:
        raise ValueError("relation must have ab != 0")
    ratio = b / a
    shift = c / a
    if layer2.kind == "dense":
        # layer2(z) = z @ W + bias; substituting z -> c/a - (b/a) z folds the
        # constant into the bias through the column sums of W.
        weight = -ratio * layer2.weight
        bias = layer2.bias + shift * layer2.weight.sum(axis=0)
    elif layer2.kind == "conv2d":
        weight = -ratio * layer2.weight
        bias = layer2.bias + shift * layer2.weight.sum(axis=(1, 2, 3))
    else:
        raise ValueError("affine compensation applies to dense or conv layers")
    return LayerParams(layer2.name, layer2.kind, weight, bias)


def negate_and_compensate(params: ParameterTree, spec: NetworkSpec, first: str, second: str) -> ParameterTree:
    """Negate ``first`` and compensate ``second`` so the composite is unchanged."""
    activation = spec.layer(first).activation
    out = []
    for layer in params.layers:
        if layer.name == first:
            out.append(LayerParams(layer.name, layer.kind, -layer.weight, -layer.bias))
        elif layer.name == second:
            out.append(affine_compensate(layer, activation))
        else:
            out.append(layer.copy())
    return ParameterTree(out)


def conv_norm_double_negate(params: ParameterTree, spec: NetworkSpec, conv: str, norm: str) -> ParameterTree:
    """Negate an adjacent conv + layernorm pair so the negations cancel.

    The conv is negated wholesale; standardization is odd in its input,
    so the sign lands on the normalized values and the norm's scale flip
    absorbs it while its shift stays put. Rejects pairs separated by a
    nonlinearity, where no such cancellation exists.
    """
    names = list(spec.layer_names())
    try:
        i, j = names.index(conv), names.index(norm)
    except ValueError as exc:
        raise KeyError(f"unknown layer in pair ({conv!r}, {norm!r})") from exc
    if j != i + 1:
        raise ValueError(f"{conv!r} and {norm!r} are not adjacent")
    if spec.layer(conv).kind != "conv2d" or spec.layer(norm).kind != "layernorm":
        raise ValueError("the pair must be a conv2d followed by a layernorm")
    if spec.layer(conv).activation != "identity":
        raise ValueError(
            f"a nonlinearity ({spec.layer(conv).activation!r}) sits between the pair; "
            "the negations do not cancel"
        )
    out = []
    for layer in params.layers:
        if layer.name == conv:
            out.append(LayerParams(layer.name, layer.kind, -layer.weight, -layer.bias))
        elif layer.name == norm:
            out.append(LayerParams(layer.name, layer.kind, -layer.weight, layer.bias.copy()))
        else:
            out.append(layer.copy())
    return ParameterTree(out)
