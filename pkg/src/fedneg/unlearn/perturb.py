"""Parameter perturbations: negation, its ablation competitors, and grafting.

Negation multiplies the selected layers' weights AND biases by -1 and
leaves every other layer bit-identical. The ablation kinds exist to
compare against it under a matched output-norm budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nn import NetworkSpec, ParameterTree, init_params

PERTURBATION_KINDS = ("negate", "gaussian_noise", "reinit", "zero", "kernel_flip", "scale")


def negate_layers(params: ParameterTree, names) -> ParameterTree:
    """Flip the sign of the selected layers' parameters (weights and biases)."""
    names = set(names)
    return params.map(np.negative, names=names)


@dataclass(frozen=True)
class Perturbation:
    kind: str
    layers: tuple[str, ...]
    sigma: float = 0.1  # gaussian_noise
    factor: float = 1.0  # scale

    def __post_init__(self):
        if self.kind not in PERTURBATION_KINDS:
            raise ValueError(f"unknown perturbation kind {self.kind!r}")
        if not self.layers:
            raise ValueError("a perturbation needs at least one target layer")
        if self.kind == "gaussian_noise" and self.sigma <= 0:
            raise ValueError("gaussian_noise needs sigma > 0")


def perturb(
    params: ParameterTree,
    p: Perturbation,
    rng: np.random.Generator | None = None,
    spec: NetworkSpec | None = None,
) -> ParameterTree:
    """Apply a perturbation to the target layers; other layers are copied.

    ``reinit`` needs the network spec (to redraw from the init
    distribution) and both ``reinit`` and ``gaussian_noise`` need an RNG.
    """
    targets = set(p.layers)
    unknown = targets - set(params.names())
    if unknown:
        raise KeyError(f"unknown layer names: {sorted(unknown)}")
    if p.kind == "negate":
        return negate_layers(params, targets)
    if p.kind == "zero":
        return params.map(np.zeros_like, names=targets)
    if p.kind == "scale":
        return params.map(lambda a: p.factor * a, names=targets)
    if p.kind == "kernel_flip":
        for name in targets:
            if params[name].kind != "conv2d":
                raise ValueError(f"kernel_flip applies only to conv layers, not {name!r}")
        out = []
        for layer in params.layers:
            if layer.name in targets:
                flipped = layer.weight[:, :, ::-1, ::-1].copy()
                out.append(type(layer)(layer.name, layer.kind, flipped, layer.bias.copy()))
            else:
                out.append(layer.copy())
        return ParameterTree(out)
    if p.kind == "gaussian_noise":
        if rng is None:
            raise ValueError("gaussian_noise needs an RNG")
        return params.map(lambda a: a + p.sigma * rng.normal(size=a.shape), names=targets)
    # reinit
    if rng is None or spec is None:
        raise ValueError("reinit needs an RNG and the network spec")
    fresh = init_params(spec, rng)
    out = []
    for layer in params.layers:
        out.append(fresh[layer.name].copy() if layer.name in targets else layer.copy())
    return ParameterTree(out)


@dataclass(frozen=True)
class GraftAssignment:
    """Layer name -> index of the source tree supplying that layer."""

    sources: dict = field(default_factory=dict)

    def source_for(self, name: str) -> int:
        return self.sources[name]


def graft(trees, assignment: GraftAssignment) -> ParameterTree:
    """Assemble a tree taking each layer from the assigned source model."""
    trees = list(trees)
    if not trees:
        raise ValueError("graft needs at least one source tree")
    base = trees[0]
    for t in trees[1:]:
        if not base.congruent_with(t):
            raise ValueError("graft sources are not congruent")
    missing = set(base.names()) - set(assignment.sources)
    if missing:
        raise ValueError(f"graft assignment misses layers: {sorted(missing)}")
    out = []
    for layer in base.layers:
        i = assignment.source_for(layer.name)
        if not 0 <= i < len(trees):
            raise ValueError(f"graft source index {i} out of range for layer {layer.name!r}")
        out.append(trees[i][layer.name].copy())
    return ParameterTree(out)
