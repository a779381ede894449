"""Scenario orchestration: one trained global model per seed, every
strategy unlearned from it, analyses on the stored checkpoints."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import rng as rng_mod
from ..analysis import (
    build_report,
    cka_depth_profile,
    spectral_content,
    time_bound_for_run,
)
from ..data import (
    BackdoorConfig,
    backdoor_success_rate,
    build_forget_spec,
    make_blobs,
    make_grid_images,
    partition,
    poison,
    split_train_test,
)
from ..data.partition import ClientData, FederatedSplit
from ..fed import FederationConfig, FederationSession
from ..nn import LayerSpec, Network, NetworkSpec
from ..unlearn import Perturbation, Strategy, nr_freeze, run_unlearning
from .configio import ExperimentConfig

NRF_LABEL = "nr_freeze"


def build_network(cfg: ExperimentConfig) -> Network:
    classes = cfg["dataset.classes"]
    if cfg["model.kind"] == "mlp":
        spec = NetworkSpec(
            (cfg["dataset.dims"],),
            (
                LayerSpec("hidden", "dense", "tanh", units=cfg["model.hidden"]),
                LayerSpec("head", "dense", units=classes),
            ),
        )
    else:
        layers = []
        for i, ch in enumerate(cfg["model.channels"], start=1):
            layers.append(LayerSpec(f"conv{i}", "conv2d", "relu", channels=ch, kernel=cfg["model.kernel"]))
            layers.append(LayerSpec(f"norm{i}", "layernorm"))
        layers.append(LayerSpec("head", "dense", units=classes))
        spec = NetworkSpec((1, cfg["dataset.side"], cfg["dataset.side"]), tuple(layers))
    return Network(spec)


def feature_layers(network: Network) -> tuple[str, ...]:
    """Conv/dense layers: where depth profiles are measured."""
    return tuple(l.name for l in network.spec.layers if l.kind != "layernorm")


def build_data(cfg: ExperimentConfig, seed: int):
    kind = cfg["dataset.kind"]
    if kind == "blobs":
        full = make_blobs(
            cfg["dataset.classes"], cfg["dataset.dims"], cfg["dataset.per_class"],
            cfg["dataset.spread"], seed=seed,
        )
    else:
        full = make_grid_images(
            cfg["dataset.classes"], cfg["dataset.side"], cfg["dataset.per_class"],
            cfg["dataset.noise"], seed=seed,
        )
    return split_train_test(full, cfg["dataset.test_per_class"], seed=seed)


def _poison_client(split: FederatedSplit, client: int, bd: BackdoorConfig, seed: int) -> FederatedSplit:
    clients = list(split.clients)
    local = clients[client]
    poisoned, _ = poison(local.train, bd, seed=seed)
    clients[client] = ClientData(poisoned, local.val)
    return FederatedSplit(tuple(clients), split.test, split.mode, split.beta)


def make_strategy(name: str, cfg: ExperimentConfig) -> Strategy:
    negate = tuple(cfg["unlearn.negate_layers"])
    if name == "not":
        return Strategy("not", negate=negate)
    if name in ("retrain", "ft", "randl"):
        return Strategy(name)
    if name == "ga":
        return Strategy("ga", ascent_rounds=cfg["unlearn.ga_ascent_rounds"])
    kind = name.removeprefix("perturb_")
    # target layers resolved at run time when left empty
    return Strategy(
        "perturb",
        perturbation=Perturbation(
            kind,
            negate or ("__default__",),
            sigma=cfg["unlearn.noise_sigma"],
            factor=cfg["unlearn.scale_factor"],
        ),
    )


@dataclass
class SeedResult:
    seed: int
    reports: dict = field(default_factory=dict)  # label -> MetricsReport (with deltas)
    rounds: dict = field(default_factory=dict)
    ledgers: dict = field(default_factory=dict)  # label -> CostLedger
    backdoor: dict = field(default_factory=dict)  # label -> success pct; plus "pre"
    cka_start: dict = field(default_factory=dict)  # layer -> value (not@0 vs ft@0)
    cka_origin: dict = field(default_factory=dict)  # label -> {layer: value at final}
    spectral: dict = field(default_factory=dict)  # label -> SpectralCurve
    bound: dict = field(default_factory=dict)  # label -> LossGapTrace


@dataclass
class ScenarioResult:
    config: ExperimentConfig
    seeds: list[SeedResult] = field(default_factory=list)
    layer_names: tuple[str, ...] = ()
    strategy_order: tuple[str, ...] = ()


def run_seed(cfg: ExperimentConfig, seed: int, threads: int | None = None) -> SeedResult:
    network = build_network(cfg)
    train, test = build_data(cfg, seed)
    split = partition(
        train, test, cfg["fed.clients"], mode=cfg["partition.mode"],
        beta=cfg["partition.beta"], seed=seed,
    )
    bd = None
    if cfg["backdoor.enabled"]:
        bd = BackdoorConfig(
            target_class=cfg["backdoor.target_class"],
            poison_fraction=cfg["backdoor.fraction"],
            corner=cfg["backdoor.corner"],
        )
        split = _poison_client(split, cfg["backdoor.client"], bd, seed)

    fed_cfg = FederationConfig(
        clients=cfg["fed.clients"],
        rounds=cfg["fed.rounds"],
        local_iters=cfg["fed.local_iters"],
        batch_size=cfg["fed.batch_size"],
        lr=cfg["fed.lr"],
        momentum=cfg["fed.momentum"],
        weight_decay=cfg["fed.weight_decay"],
        seed=seed,
        unlearn_rounds=cfg["fed.unlearn_rounds"],
        recovery_eps=cfg["fed.recovery_eps"],
        recovery_patience=cfg["fed.recovery_patience"],
        threads=threads if threads is not None else cfg["fed.threads"],
    )
    session = FederationSession(network, split, fed_cfg)
    session.train_to_convergence()
    theta_star = session.global_tree

    mode_kwargs = dict(
        target_clients=tuple(cfg["forget.clients"]),
        target_class=cfg["forget.class"],
        ratio=cfg["forget.ratio"],
        seed=seed,
    )
    fspec = build_forget_spec(split, cfg["forget.mode"], **mode_kwargs)
    retain = fspec.pooled(split, "retain")
    forget = fspec.pooled(split, "forget")

    result = SeedResult(seed)

    # retrain always runs: it is the gold standard and the stop reference
    order = list(dict.fromkeys(["retrain"] + list(cfg["strategies"])))
    runs = {}
    retrain_run = run_unlearning(session, Strategy("retrain"), fspec)
    runs["retrain"] = retrain_run
    reference = retrain_run.final.val_acc if cfg["unlearn.stop_rule"] == "reference" else None
    for name in order[1:]:
        strategy = make_strategy(name, cfg)
        if strategy.kind == "perturb" and strategy.perturbation.layers == ("__default__",):
            from ..unlearn import default_negation_layers

            strategy = Strategy(
                "perturb",
                perturbation=Perturbation(
                    strategy.perturbation.kind,
                    default_negation_layers(session),
                    sigma=strategy.perturbation.sigma,
                    factor=strategy.perturbation.factor,
                ),
            )
        runs[name] = run_unlearning(session, strategy, fspec, reference_acc=reference)

    if cfg["analysis.nrfreeze"]:
        freeze = tuple(cfg["unlearn.negate_layers"])
        if not freeze:
            from ..unlearn import default_negation_layers

            freeze = default_negation_layers(session)
        nrf = nr_freeze(session, freeze, fspec)
        result.rounds[NRF_LABEL] = len(nrf.checkpoints) - 1
        result.ledgers[NRF_LABEL] = nrf.ledger
        result.reports[NRF_LABEL] = build_report(
            network, nrf.final.tree, split, fspec, NRF_LABEL, seed=seed,
            bytes_total=nrf.ledger.total_bytes, flops_total=nrf.ledger.total_flops,
        )

    raw_reports = {}
    for name in order:
        run = runs[name]
        raw_reports[name] = build_report(
            network, run.final.tree, split, fspec, name, seed=seed,
            bytes_total=run.ledger.total_bytes, flops_total=run.ledger.total_flops,
        )
        result.rounds[name] = run.rounds_run
        result.ledgers[name] = run.ledger
    reference_report = raw_reports["retrain"]
    for name in order:
        result.reports[name] = raw_reports[name].with_reference(reference_report)
    if NRF_LABEL in result.reports:
        result.reports[NRF_LABEL] = result.reports[NRF_LABEL].with_reference(reference_report)

    if bd is not None:
        result.backdoor["pre"] = 100.0 * backdoor_success_rate(network, theta_star, test, bd)
        for name in order:
            result.backdoor[name] = 100.0 * backdoor_success_rate(
                network, runs[name].final.tree, test, bd
            )

    probe = np.concatenate([test.inputs, forget.inputs]) if forget is not None else test.inputs
    layers = feature_layers(network)
    if cfg["analysis.cka"]:
        start_prof = cka_depth_profile(
            network, runs["not"].start.tree, runs["ft"].start.tree, probe, layers=layers
        )
        result.cka_start = dict(zip(start_prof.layers, start_prof.values))
        for name in order:
            prof = cka_depth_profile(network, runs[name].final.tree, theta_star, probe, layers=layers)
            result.cka_origin[name] = dict(zip(prof.layers, prof.values))

    if cfg["analysis.spectral"]:
        for label, tree in (("not_start", runs["not"].start.tree if "not" in runs else None),
                            ("retrain_start", retrain_run.start.tree)):
            if tree is None:
                continue
            result.spectral[label] = spectral_content(
                network, tree, retain,
                batch_size=cfg["analysis.spectral_batch"],
                draws=cfg["analysis.spectral_draws"],
                subset_size=min(cfg["analysis.spectral_subset"], tree.param_count()),
                subsets=cfg["analysis.spectral_subsets"],
                seed=seed,
            )

    if cfg["analysis.bound"] and forget is not None:
        for name in order:
            if name == "retrain":
                continue
            result.bound[name] = time_bound_for_run(
                network, runs[name].checkpoints, retrain_run.final.tree,
                retain, forget, eps=cfg["analysis.bound_eps"],
            )

    return result


def run_scenario(cfg: ExperimentConfig, threads: int | None = None) -> ScenarioResult:
    out = ScenarioResult(cfg)
    out.layer_names = feature_layers(build_network(cfg))
    order = list(dict.fromkeys(["retrain"] + list(cfg["strategies"])))
    if cfg["analysis.nrfreeze"]:
        order.append(NRF_LABEL)
    out.strategy_order = tuple(order)
    for seed in cfg["seeds"]:
        out.seeds.append(run_seed(cfg, seed, threads=threads))
    return out
