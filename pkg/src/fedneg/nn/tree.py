"""Named, ordered parameter trees and their gradient counterparts.

A :class:`ParameterTree` is the object that gets negated, grafted,
aggregated, and optimized. Trees are treated as immutable values: every
operation returns a fresh tree with freshly-allocated arrays, so mutating
an output never reaches back into its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

LAYER_KINDS = ("dense", "conv2d", "layernorm")


class NonFiniteError(ValueError):
    """Raised when a NaN or Inf shows up where only finite values belong."""


def ensure_finite(array: np.ndarray, context: str) -> None:
    if not np.all(np.isfinite(array)):
        raise NonFiniteError(f"non-finite values in {context}")


@dataclass(frozen=True)
class LayerParams:
    """Parameters of one layer: a weight tensor and an optional bias."""

    name: str
    kind: str
    weight: np.ndarray
    bias: np.ndarray | None = None

    def copy(self) -> "LayerParams":
        bias = None if self.bias is None else self.bias.copy()
        return LayerParams(self.name, self.kind, self.weight.copy(), bias)

    def param_count(self) -> int:
        n = self.weight.size
        if self.bias is not None:
            n += self.bias.size
        return n


class ParameterTree:
    """Ordered collection of named layer parameters.

    Layer order is fixed at construction and follows the sequential
    computational-graph order of the owning network.
    """

    def __init__(self, layers):
        layers = tuple(layers)
        names = [layer.name for layer in layers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate layer names: {names}")
        for layer in layers:
            if layer.kind not in LAYER_KINDS:
                raise ValueError(f"unknown layer kind {layer.kind!r}")
        self.layers = layers
        self._index = {layer.name: i for i, layer in enumerate(layers)}

    def __iter__(self):
        return iter(self.layers)

    def __len__(self) -> int:
        return len(self.layers)

    def names(self) -> tuple[str, ...]:
        return tuple(layer.name for layer in self.layers)

    def __getitem__(self, name: str) -> LayerParams:
        return self.layers[self._index[name]]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def param_count(self) -> int:
        return sum(layer.param_count() for layer in self.layers)

    def copy(self) -> "ParameterTree":
        return ParameterTree(layer.copy() for layer in self.layers)

    def replace(self, name: str, weight=None, bias=None) -> "ParameterTree":
        """Return a copy of the tree with one layer's tensors swapped out."""
        if name not in self._index:
            raise KeyError(f"unknown layer {name!r}")
        out = []
        for layer in self.layers:
            if layer.name != name:
                out.append(layer.copy())
                continue
            new_w = layer.weight.copy() if weight is None else np.array(weight, dtype=np.float64)
            if bias is None:
                new_b = None if layer.bias is None else layer.bias.copy()
            else:
                new_b = np.array(bias, dtype=np.float64)
            out.append(LayerParams(layer.name, layer.kind, new_w, new_b))
        return ParameterTree(out)

    def map(self, fn, names=None) -> "ParameterTree":
        """Apply ``fn(array) -> array`` to the tensors of selected layers.

        ``names=None`` selects every layer. Unselected layers are copied.
        """
        selected = set(self.names() if names is None else names)
        unknown = selected - set(self.names())
        if unknown:
            raise KeyError(f"unknown layer names: {sorted(unknown)}")
        out = []
        for layer in self.layers:
            if layer.name not in selected:
                out.append(layer.copy())
                continue
            weight = np.asarray(fn(layer.weight), dtype=np.float64)
            bias = None if layer.bias is None else np.asarray(fn(layer.bias), dtype=np.float64)
            out.append(LayerParams(layer.name, layer.kind, weight, bias))
        return ParameterTree(out)

    def congruent_with(self, other: "ParameterTree") -> bool:
        if self.names() != other.names():
            return False
        for a, b in zip(self.layers, other.layers):
            if a.kind != b.kind or a.weight.shape != b.weight.shape:
                return False
            if (a.bias is None) != (b.bias is None):
                return False
            if a.bias is not None and a.bias.shape != b.bias.shape:
                return False
        return True

    def to_vector(self) -> np.ndarray:
        """Flatten all tensors (layer order, weight before bias) into one vector."""
        chunks = []
        for layer in self.layers:
            chunks.append(layer.weight.ravel())
            if layer.bias is not None:
                chunks.append(layer.bias.ravel())
        return np.concatenate(chunks) if chunks else np.zeros(0)

    def allclose(self, other: "ParameterTree", atol=0.0, rtol=0.0) -> bool:
        if not self.congruent_with(other):
            return False
        return bool(
            np.allclose(self.to_vector(), other.to_vector(), atol=atol, rtol=rtol)
        )


@dataclass(frozen=True)
class GradTree:
    """Per-layer gradients, shape-congruent with a ParameterTree, plus the loss."""

    layers: tuple[LayerParams, ...]
    loss: float

    def __getitem__(self, name: str) -> LayerParams:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(name)

    def to_vector(self) -> np.ndarray:
        return ParameterTree(l.copy() for l in self.layers).to_vector()


def tree_distance(a: ParameterTree, b: ParameterTree) -> float:
    """Euclidean distance between two congruent trees, flattened."""
    if not a.congruent_with(b):
        raise ValueError("trees are not congruent")
    return float(np.linalg.norm(a.to_vector() - b.to_vector()))
