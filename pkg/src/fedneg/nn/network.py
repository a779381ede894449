"""Feedforward networks: specs, initialization, forward, and backprop.

Everything runs in float64. The engine supports exactly the layer kinds
the simulator needs (dense, conv2d with stride 1 / valid padding, and
layer normalization over the per-sample feature shape), with activations
applied after each layer. Activations captured for analysis are always
the pre-nonlinearity outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tree import GradTree, LayerParams, ParameterTree, ensure_finite

LAYERNORM_VAR_FLOOR = 1e-12  # below this, normalized output is defined as 0


def _relu(x):
    return np.maximum(x, 0.0)


def _relu_grad(x):
    return (x > 0).astype(np.float64)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _sigmoid_grad(x):
    s = _sigmoid(x)
    return s * (1.0 - s)


def _step(x):
    # Binary step with the midpoint convention at 0, so step(x)+step(-x)=1
    # holds pointwise. Forward-only: the training derivative is 0.
    return 0.5 * (np.sign(x) + 1.0)


ACTIVATIONS = {
    "identity": (lambda x: x, lambda x: np.ones_like(x)),
    "relu": (_relu, _relu_grad),
    "tanh": (np.tanh, lambda x: 1.0 - np.tanh(x) ** 2),
    "sigmoid": (_sigmoid, _sigmoid_grad),
    "step": (_step, lambda x: np.zeros_like(x)),
}


def apply_activation(name: str, x: np.ndarray) -> np.ndarray:
    return ACTIVATIONS[name][0](x)


@dataclass(frozen=True)
class LayerSpec:
    """Architecture of one layer.

    dense uses ``units``; conv2d uses ``channels`` and ``kernel``;
    layernorm takes no size arguments (it keeps the incoming shape).
    """

    name: str
    kind: str
    activation: str = "identity"
    units: int | None = None
    channels: int | None = None
    kernel: int | None = None

    def __post_init__(self):
        if self.kind not in ("dense", "conv2d", "layernorm"):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.kind == "dense" and (self.units is None or self.units < 1):
            raise ValueError(f"dense layer {self.name!r} needs units >= 1")
        if self.kind == "conv2d" and (
            self.channels is None or self.channels < 1 or self.kernel is None or self.kernel < 1
        ):
            raise ValueError(f"conv2d layer {self.name!r} needs channels and kernel")


@dataclass(frozen=True)
class NetworkSpec:
    """Input shape plus an ordered stack of layer specs.

    The loss is softmax cross-entropy over the final layer's output,
    which must be one-dimensional per sample (the logits).
    """

    input_shape: tuple[int, ...]
    layers: tuple[LayerSpec, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("a network needs at least one trainable layer")
        names = [layer.name for layer in self.layers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate layer names: {names}")
        self.shapes()  # validates composition

    def shapes(self) -> list[tuple[int, ...]]:
        """Per-layer output feature shapes, input first (len(layers)+1 entries)."""
        shape = tuple(int(d) for d in self.input_shape)
        if any(d < 1 for d in shape):
            raise ValueError(f"bad input shape {shape}")
        out = [shape]
        for layer in self.layers:
            if layer.kind == "dense":
                shape = (layer.units,)
            elif layer.kind == "conv2d":
                if len(shape) != 3:
                    raise ValueError(f"conv2d layer {layer.name!r} needs (C,H,W) input, got {shape}")
                c, h, w = shape
                k = layer.kernel
                if h < k or w < k:
                    raise ValueError(f"conv2d layer {layer.name!r}: kernel {k} exceeds input {shape}")
                shape = (layer.channels, h - k + 1, w - k + 1)
            out.append(shape)
        if len(out[-1]) != 1:
            raise ValueError(f"final layer must produce 1-D logits, got shape {out[-1]}")
        return out

    @property
    def classes(self) -> int:
        return self.shapes()[-1][0]

    def layer(self, name: str) -> LayerSpec:
        for layer in self.layers:
            if layer.name == name:
                return layer
        raise KeyError(f"unknown layer {name!r}")

    def layer_names(self) -> tuple[str, ...]:
        return tuple(layer.name for layer in self.layers)


def init_params(spec: NetworkSpec, rng: np.random.Generator) -> ParameterTree:
    """Seeded initialization: uniform in +/-sqrt(1/fan_in) per trainable tensor.

    Layernorm scale starts at 1 and shift at 0 (it has no fan-in).
    Draw order is fixed (layer order, weight before bias) so a given
    generator state always produces the same tree.
    """
    shapes = spec.shapes()
    layers = []
    for i, layer in enumerate(spec.layers):
        in_shape = shapes[i]
        if layer.kind == "dense":
            fan_in = int(np.prod(in_shape))
            bound = np.sqrt(1.0 / fan_in)
            weight = rng.uniform(-bound, bound, size=(fan_in, layer.units))
            bias = rng.uniform(-bound, bound, size=(layer.units,))
        elif layer.kind == "conv2d":
            c_in = in_shape[0]
            k = layer.kernel
            fan_in = c_in * k * k
            bound = np.sqrt(1.0 / fan_in)
            weight = rng.uniform(-bound, bound, size=(layer.channels, c_in, k, k))
            bias = rng.uniform(-bound, bound, size=(layer.channels,))
        else:  # layernorm
            weight = np.ones(in_shape)
            bias = np.zeros(in_shape)
        layers.append(LayerParams(layer.name, layer.kind, weight, bias))
    return ParameterTree(layers)


def reinit_layer(spec: NetworkSpec, name: str, rng: np.random.Generator) -> LayerParams:
    """Redraw one layer from the initialization distribution."""
    fresh = init_params(spec, rng)
    return fresh[name]


class Network:
    """A NetworkSpec bound to shape bookkeeping; parameters stay external."""

    def __init__(self, spec: NetworkSpec):
        self.spec = spec
        self._shapes = spec.shapes()

    @property
    def classes(self) -> int:
        return self._shapes[-1][0]

    def init_params(self, rng: np.random.Generator) -> ParameterTree:
        return init_params(self.spec, rng)

    def _check_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch, dtype=np.float64)
        if batch.shape[1:] != self._shapes[0]:
            raise ValueError(
                f"batch feature shape {batch.shape[1:]} does not match input {self._shapes[0]}"
            )
        ensure_finite(batch, "network input")
        return batch

    def _run(self, params: ParameterTree, batch: np.ndarray, want_caches: bool):
        """Forward pass; returns (logits, pre-activations per layer, caches)."""
        if params.names() != self.spec.layer_names():
            raise ValueError("parameter tree does not match network layers")
        x = batch
        pre_acts = []
        caches = [] if want_caches else None
        for layer_spec, layer in zip(self.spec.layers, params.layers):
            if layer_spec.kind == "dense":
                flat = x.reshape(x.shape[0], -1)
                y = flat @ layer.weight + layer.bias
                if want_caches:
                    caches.append(("dense", flat, x.shape))
            elif layer_spec.kind == "conv2d":
                k = layer_spec.kernel
                windows = sliding_window_view(x, (k, k), axis=(2, 3))
                y = np.einsum("nchwij,ocij->nohw", windows, layer.weight, optimize=True)
                y += layer.bias[None, :, None, None]
                if want_caches:
                    caches.append(("conv2d", windows, x.shape))
            else:  # layernorm
                n = x.shape[0]
                flat = x.reshape(n, -1)
                mu = flat.mean(axis=1, keepdims=True)
                var = flat.var(axis=1, keepdims=True)
                ok = var >= LAYERNORM_VAR_FLOOR
                inv_std = np.where(ok, 1.0 / np.sqrt(np.where(ok, var, 1.0)), 0.0)
                xhat = (flat - mu) * inv_std
                y = (layer.weight.reshape(1, -1) * xhat + layer.bias.reshape(1, -1)).reshape(x.shape)
                if want_caches:
                    caches.append(("layernorm", xhat, inv_std))
            pre_acts.append(y)
            x = ACTIVATIONS[layer_spec.activation][0](y)
        logits = x
        ensure_finite(logits, "network output")
        return logits, pre_acts, caches

    def forward(self, params: ParameterTree, batch: np.ndarray, capture=()):
        """Run the network; return (logits, {layer name: pre-nonlinearity output}).

        Captured tensors are copies; callers may mutate them freely.
        """
        batch = self._check_batch(batch)
        names = self.spec.layer_names()
        unknown = set(capture) - set(names)
        if unknown:
            raise KeyError(f"cannot capture unknown layers: {sorted(unknown)}")
        logits, pre_acts, _ = self._run(params, batch, want_caches=False)
        captured = {}
        for name, pre in zip(names, pre_acts):
            if name in capture:
                ensure_finite(pre, f"activation of {name}")
                captured[name] = pre.copy()
        return logits, captured

    def post_activations(self, params: ParameterTree, batch: np.ndarray, capture=()):
        """Like forward's capture, but after each layer's activation."""
        logits, pre = self.forward(params, batch, capture=capture)
        out = {}
        for name in pre:
            act = self.spec.layer(name).activation
            out[name] = ACTIVATIONS[act][0](pre[name])
        return logits, out

    def logits(self, params: ParameterTree, batch: np.ndarray) -> np.ndarray:
        return self.forward(params, batch)[0]

    def predict(self, params: ParameterTree, batch: np.ndarray) -> np.ndarray:
        # np.argmax breaks ties toward the lowest class index.
        return np.argmax(self.logits(params, batch), axis=1)

    def per_sample_losses(self, params, batch, labels) -> np.ndarray:
        logits = self.logits(params, batch)
        labels = _check_labels(labels, logits.shape)
        return _cross_entropy_per_sample(logits, labels)

    def loss(self, params, batch, labels) -> float:
        return float(np.mean(self.per_sample_losses(params, batch, labels)))

    def accuracy(self, params, batch, labels) -> float:
        labels = np.asarray(labels)
        return float(np.mean(self.predict(params, batch) == labels))

    def backward(self, params: ParameterTree, batch, labels) -> GradTree:
        """Gradient of the mean softmax cross-entropy over the batch."""
        batch = self._check_batch(batch)
        logits, pre_acts, caches = self._run(params, batch, want_caches=True)
        labels = _check_labels(labels, logits.shape)

        n = batch.shape[0]
        losses = _cross_entropy_per_sample(logits, labels)
        loss = float(np.mean(losses))
        probs = _softmax(logits)
        grad = probs.copy()
        grad[np.arange(n), labels] -= 1.0
        grad /= n

        grads: list[LayerParams] = []
        for idx in range(len(self.spec.layers) - 1, -1, -1):
            layer_spec = self.spec.layers[idx]
            layer = params.layers[idx]
            # grad currently holds dL/d(post-activation of this layer)
            act_grad = ACTIVATIONS[layer_spec.activation][1](pre_acts[idx])
            g = grad * act_grad
            kind, a, b = caches[idx]
            if kind == "dense":
                flat, in_shape = a, b
                dw = flat.T @ g
                db = g.sum(axis=0)
                grad = (g @ layer.weight.T).reshape(in_shape)
            elif kind == "conv2d":
                windows, in_shape = a, b
                k = layer_spec.kernel
                dw = np.einsum("nchwij,nohw->ocij", windows, g, optimize=True)
                db = g.sum(axis=(0, 2, 3))
                padded = np.pad(g, ((0, 0), (0, 0), (k - 1, k - 1), (k - 1, k - 1)))
                gwin = sliding_window_view(padded, (k, k), axis=(2, 3))
                flipped = layer.weight[:, :, ::-1, ::-1]
                grad = np.einsum("nohwij,ocij->nchw", gwin, flipped, optimize=True)
            else:  # layernorm
                xhat, inv_std = a, b
                gflat = g.reshape(n, -1)
                w = layer.weight.reshape(1, -1)
                dw = (gflat * xhat).sum(axis=0).reshape(layer.weight.shape)
                db = gflat.sum(axis=0).reshape(layer.bias.shape)
                dxhat = gflat * w
                mean_dxhat = dxhat.mean(axis=1, keepdims=True)
                mean_dxhat_xhat = (dxhat * xhat).mean(axis=1, keepdims=True)
                grad = ((dxhat - mean_dxhat - xhat * mean_dxhat_xhat) * inv_std).reshape(g.shape)
            grads.append(LayerParams(layer.name, layer.kind, dw, db))

        grads.reverse()
        tree = GradTree(tuple(grads), loss)
        for g_layer in tree.layers:
            ensure_finite(g_layer.weight, f"gradient of {g_layer.name}")
            if g_layer.bias is not None:
                ensure_finite(g_layer.bias, f"bias gradient of {g_layer.name}")
        return tree


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _cross_entropy_per_sample(logits: np.ndarray, labels: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return log_norm - z[np.arange(logits.shape[0]), labels]


def _check_labels(labels, logits_shape) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (logits_shape[0],):
        raise ValueError(f"labels shape {labels.shape} does not match batch of {logits_shape[0]}")
    if labels.size and (labels.min() < 0 or labels.max() >= logits_shape[1]):
        raise ValueError("labels out of range")
    return labels.astype(np.intp)
