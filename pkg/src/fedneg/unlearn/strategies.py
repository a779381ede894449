"""Unlearning strategies: negation plus the desk-scale baselines.

Every strategy follows perturb-then-fine-tune:

* ``not``      negate the selected layers of the converged tree, then
               fine-tune on retain data (the target clients sit out in
               client-wise mode);
* ``ft``       no perturbation, natural forgetting via fine-tuning;
* ``retrain``  fresh seeded initialization, trained on retain data for
               the full budget (the gold standard and stop-rule reference);
* ``randl``    forget samples are relabeled uniformly at random (never to
               their original label) and training continues on
               retain + relabeled data;
* ``ga``       gradient-ascent rounds on the forget data, then fine-tuning.
               The only strategy whose updates read forget data, so it is
               rejected when no fine-tuning participant holds any.

For the perturbation ablation there is additionally ``perturb``, which
applies an arbitrary Perturbation to the converged tree and fine-tunes,
so negation can be compared against noise, reinit, zeroing, kernel
flips, and scaling under one protocol.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import rng as rng_mod
from ..data import Dataset, ForgetSpec
from ..fed.ledger import CostLedger
from ..fed.session import UNLEARNING, Checkpoint, FederationSession, fine_tune
from ..data.partition import pooled_val
from .perturb import Perturbation, negate_layers, perturb

STRATEGY_KINDS = ("not", "ft", "retrain", "randl", "ga", "perturb")


@dataclass(frozen=True)
class Strategy:
    kind: str
    negate: tuple[str, ...] = ()  # "not": layers to negate; () = first non-norm layer
    ascent_rounds: int = 1  # "ga"
    perturbation: Perturbation | None = None  # "perturb"

    def __post_init__(self):
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "ga" and self.ascent_rounds < 1:
            raise ValueError("ga needs at least one ascent round")
        if self.kind == "perturb" and self.perturbation is None:
            raise ValueError("perturb strategy needs a Perturbation")

    def label(self) -> str:
        if self.kind == "perturb":
            return f"perturb_{self.perturbation.kind}"
        return self.kind


def default_negation_layers(session: FederationSession) -> tuple[str, ...]:
    """The first trainable non-normalization layer."""
    for layer in session.network.spec.layers:
        if layer.kind != "layernorm":
            return (layer.name,)
    raise ValueError("network has no dense or conv layer to negate")


@dataclass
class UnlearnRun:
    strategy: Strategy
    checkpoints: list[Checkpoint] = field(default_factory=list)
    ledger: CostLedger = field(default_factory=CostLedger)
    stopped_early: bool = False

    @property
    def start(self) -> Checkpoint:
        return self.checkpoints[0]

    @property
    def final(self) -> Checkpoint:
        return self.checkpoints[-1]

    @property
    def rounds_run(self) -> int:
        return len(self.checkpoints) - 1


def _relabeled_view(data: Dataset, forget_idx, rng) -> Dataset:
    labels = data.labels.copy()
    for i in forget_idx:
        choices = [c for c in range(data.class_count) if c != labels[i]]
        labels[i] = choices[rng.integers(0, len(choices))]
    return Dataset(data.inputs.copy(), labels, data.class_count, data.provenance + "+randl")


def _fine_tune_views(session, forget_spec: ForgetSpec, strategy: Strategy):
    """Per-client training views for the recovery phase."""
    split = session.split
    views = {}
    for k in forget_spec.participants(split):
        if strategy.kind == "randl":
            forget_idx = forget_spec.forget_indices[k]
            rng = rng_mod.stream(session.config.seed, rng_mod.RELABEL, k)
            local = _relabeled_view(split.clients[k].train, forget_idx, rng)
            views[k] = local
        else:
            retained = forget_spec.retain_data(split, k)
            if retained is not None:
                views[k] = retained
    if not views:
        raise ValueError("no client has data to fine-tune on")
    return views


def run_unlearning(
    session: FederationSession,
    strategy: Strategy,
    forget_spec: ForgetSpec,
    reference_acc: float | None = None,
    max_rounds: int | None = None,
) -> UnlearnRun:
    """Alg-style unlearning: perturb the global tree once, fine-tune on retain.

    The returned checkpoints start at round 0 (post-perturbation,
    pre-fine-tune). The ledger covers only the unlearning phase; the
    request itself costs one small uplink message per requesting client.
    """
    cfg = session.config
    split = session.split
    theta_star = session.global_tree
    run = UnlearnRun(strategy)
    budget = cfg.unlearn_rounds if max_rounds is None else max_rounds

    requesting = [k for k in range(split.n_clients) if len(forget_spec.forget_indices[k])]
    run.ledger.add(0, cfg.request_bytes * len(requesting), 0, "unlearning_request")
    session.phase = UNLEARNING  # one transition per request; idempotent across strategies

    views = _fine_tune_views(session, forget_spec, strategy)
    val = pooled_val(split, sorted(views))
    retain_pooled = forget_spec.pooled(split, "retain")

    if strategy.kind == "not":
        names = strategy.negate or default_negation_layers(session)
        start_tree = negate_layers(theta_star, names)
    elif strategy.kind == "perturb":
        start_tree = perturb(
            theta_star,
            strategy.perturbation,
            rng=rng_mod.stream(cfg.seed, rng_mod.PERTURBATION, strategy.perturbation.kind),
            spec=session.network.spec,
        )
    elif strategy.kind == "retrain":
        start_tree = session.network.init_params(
            rng_mod.stream(cfg.seed, rng_mod.INIT, "retrain")
        )
    elif strategy.kind == "ga":
        start_tree = _ascent_phase(session, forget_spec, strategy, theta_star, run.ledger)
    else:  # ft, randl: no perturbation
        start_tree = theta_star.copy()

    run.checkpoints = fine_tune(
        session,
        start_tree,
        views,
        val,
        retain_pooled,
        run.ledger,
        max_rounds=budget,
        reference_acc=reference_acc,
        phase="unlearning_fine_tune",
    )
    run.stopped_early = run.rounds_run < budget
    return run


def _ascent_phase(session, forget_spec, strategy, tree, ledger):
    split = session.split
    participants = set(forget_spec.participants(split))
    forget_views = {}
    for k in sorted(participants):
        data = forget_spec.forget_data(split, k)
        if data is not None:
            forget_views[k] = data
    if not forget_views:
        raise ValueError(
            "ga is incompatible with this forget spec: no fine-tuning "
            "participant holds any forget data"
        )
    for r in range(1, strategy.ascent_rounds + 1):
        tree = session.run_round(
            tree, forget_views, "unlearning_ascent", r, ledger, ascend=True
        )
    return tree
