"""Negate-and-freeze harness: the direct experimental test of whether
negation preserves layer-wise optimality.

Procedure: negate the selected layers of the converged tree, freeze them,
reinitialize every other layer from the init distribution, and fine-tune
on the full retain data. If negation preserves layer-wise optimality, the
result should match a model retrained from scratch.
"""

from __future__ import annotations

from dataclasses import dataclass

from .. import rng as rng_mod
from ..data import ForgetSpec
from ..data.partition import pooled_val
from ..fed.ledger import CostLedger
from ..fed.session import Checkpoint, FederationSession, fine_tune
from ..nn import LayerParams, ParameterTree, init_params
from .perturb import negate_layers


@dataclass
class NrFreezeResult:
    checkpoints: list[Checkpoint]
    ledger: CostLedger
    frozen: tuple[str, ...]

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]


def nr_freeze(
    session: FederationSession,
    freeze_layers,
    forget_spec: ForgetSpec,
    max_rounds: int | None = None,
    reference_acc: float | None = None,
    negate: bool = True,
) -> NrFreezeResult:
    """Negate (optionally) and freeze ``freeze_layers``; reinit and tune the rest.

    ``negate=False`` freezes the original weights instead, which reduces
    the harness to partial retraining around an unperturbed layer.
    """
    freeze_layers = tuple(freeze_layers)
    theta = session.global_tree
    all_names = set(theta.names())
    unknown = set(freeze_layers) - all_names
    if unknown:
        raise KeyError(f"unknown layers: {sorted(unknown)}")
    if set(freeze_layers) == all_names:
        raise ValueError("cannot freeze every layer; nothing would train")

    start = negate_layers(theta, freeze_layers) if negate else theta.copy()
    fresh = init_params(session.network.spec, rng_mod.stream(session.config.seed, rng_mod.INIT, "nr-freeze"))
    layers = []
    for layer in start.layers:
        if layer.name in freeze_layers:
            layers.append(layer.copy())
        else:
            layers.append(fresh[layer.name].copy())
    start_tree = ParameterTree(layers)

    views = {}
    for k in forget_spec.participants(session.split):
        retained = forget_spec.retain_data(session.split, k)
        if retained is not None:
            views[k] = retained
    val = pooled_val(session.split, sorted(views))
    retain_pooled = forget_spec.pooled(session.split, "retain")

    ledger = CostLedger()
    budget = session.config.unlearn_rounds if max_rounds is None else max_rounds
    checkpoints = fine_tune(
        session,
        start_tree,
        views,
        val,
        retain_pooled,
        ledger,
        max_rounds=budget,
        reference_acc=reference_acc,
        frozen=frozenset(freeze_layers),
        phase="nr_freeze",
    )
    return NrFreezeResult(checkpoints, ledger, freeze_layers)
