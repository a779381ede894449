"""The federated round loop: client updates, aggregation, convergence.

A session owns the global tree and the cost ledger. Client updates within
a round are independent given the broadcast tree; they may run on a thread
pool, and aggregation always reduces in ascending client order, so results
are bit-identical to sequential execution.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import rng as rng_mod
from ..data import Dataset, FederatedSplit, pooled_val
from ..nn import Network, OptimizerState, ParameterTree, count_costs, sgd_step
from .config import FederationConfig
from .ledger import CostLedger

TRAINING = "training"
UNLEARNING = "unlearning_fine_tune"


class DivergenceError(RuntimeError):
    """Training left the land of finite, sane losses."""


@dataclass(frozen=True)
class Checkpoint:
    """Immutable snapshot of the global model at the end of a round."""

    round: int
    phase: str
    tree: ParameterTree
    val_acc: float
    retain_loss: float


@dataclass
class RoundResult:
    tree: ParameterTree
    flops: int
    participants: int


def client_update(
    network: Network,
    tree: ParameterTree,
    data: Dataset,
    config: FederationConfig,
    rng: np.random.Generator,
    frozen: frozenset = frozenset(),
    ascend: bool = False,
):
    """Run ``local_iters`` epochs of shuffled minibatch SGD from ``tree``.

    Returns (updated tree, flops spent). ``ascend=True`` flips the sign of
    the update (gradient ascent), used only by strategies allowed to touch
    forget data.
    """
    if len(data) == 0:
        raise ValueError("client update needs nonempty data")
    opt = OptimizerState(
        lr=config.lr,
        momentum=config.momentum,
        weight_decay=config.weight_decay,
        frozen=frozen,
    )
    step_flops = count_costs(network.spec, 1)
    per_sample = step_flops.fwd_flops + step_flops.bwd_flops
    flops = 0
    for _ in range(config.local_iters):
        order = rng.permutation(len(data))
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            grads = network.backward(tree, data.inputs[batch], data.labels[batch])
            if ascend:
                grads = type(grads)(
                    tuple(type(g)(g.name, g.kind, -g.weight, None if g.bias is None else -g.bias) for g in grads.layers),
                    grads.loss,
                )
            tree = sgd_step(tree, grads, opt)
            flops += per_sample * len(batch)
    return tree, flops


def aggregate(trees, weights) -> ParameterTree:
    """Per-parameter weighted mean; accumulation follows list order."""
    trees = list(trees)
    weights = [float(w) for w in weights]
    if not trees or len(trees) != len(weights):
        raise ValueError("need matching nonempty trees and weights")
    if any(w <= 0 for w in weights):
        raise ValueError("aggregation weights must be positive")
    base = trees[0]
    for t in trees[1:]:
        if not base.congruent_with(t):
            raise ValueError("cannot aggregate incongruent trees")
    total = sum(weights)
    out_layers = []
    for i, layer in enumerate(base.layers):
        w = np.zeros_like(layer.weight)
        b = None if layer.bias is None else np.zeros_like(layer.bias)
        for tree, weight in zip(trees, weights):
            w += (weight / total) * tree.layers[i].weight
            if b is not None:
                b += (weight / total) * tree.layers[i].bias
        out_layers.append(type(layer)(layer.name, layer.kind, w, b))
    return ParameterTree(out_layers)


class FederationSession:
    """Server + client state for one federation."""

    def __init__(self, network: Network, split: FederatedSplit, config: FederationConfig):
        if split.n_clients != config.clients:
            raise ValueError("config.clients disagrees with the split")
        self.network = network
        self.split = split
        self.config = config
        self.ledger = CostLedger()
        self.round = 0
        self.phase = TRAINING
        self.global_tree = network.init_params(rng_mod.stream(config.seed, rng_mod.INIT))
        self._param_count = self.global_tree.param_count()

    # -- one communication round -------------------------------------------------

    def run_round(
        self,
        tree: ParameterTree,
        views: dict[int, Dataset],
        phase: str,
        round_idx: int,
        ledger: CostLedger,
        frozen: frozenset = frozenset(),
        ascend: bool = False,
    ) -> ParameterTree:
        """All clients in ``views`` train locally; server aggregates."""
        if not views:
            raise ValueError("a round needs at least one participating client")
        cfg = self.config

        def one(k: int):
            rng = rng_mod.stream(cfg.seed, rng_mod.SHUFFLE, phase, round_idx, k)
            try:
                return client_update(self.network, tree, views[k], cfg, rng, frozen, ascend)
            except Exception as exc:
                raise DivergenceError(
                    f"client {k} failed in {phase} round {round_idx}: {exc}"
                ) from exc

        ids = sorted(views)
        if cfg.threads > 1 and len(ids) > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                results = dict(zip(ids, pool.map(one, ids)))
        else:
            results = {k: one(k) for k in ids}

        trees = [results[k][0] for k in ids]
        weights = [len(views[k]) for k in ids]
        new_tree = aggregate(trees, weights)

        flops = sum(results[k][1] for k in ids)
        nbytes = ledger.round_exchange_bytes(len(ids), self._param_count)
        ledger.add(round_idx, nbytes, flops, phase)
        return new_tree

    # -- evaluation helpers --------------------------------------------------------

    def _snapshot(self, tree, round_idx, phase, val_data, retain_data) -> Checkpoint:
        val_acc = 100.0 * self.network.accuracy(tree, val_data.inputs, val_data.labels)
        retain_loss = self.network.loss(tree, retain_data.inputs, retain_data.labels)
        return Checkpoint(round_idx, phase, tree.copy(), val_acc, retain_loss)

    # -- training to convergence ---------------------------------------------------

    def train_to_convergence(self, max_rounds: int | None = None) -> Checkpoint:
        """Run FedAvg for the configured budget; return the final checkpoint.

        Divergence (non-finite validation loss, or more than 10x the
        initial one) aborts with diagnostics.
        """
        cfg = self.config
        budget = cfg.rounds if max_rounds is None else max_rounds
        views = {k: self.split.clients[k].train for k in range(cfg.clients)}
        val = pooled_val(self.split)
        pooled_train = views[0]
        for k in range(1, cfg.clients):
            pooled_train = pooled_train.concat(views[k])

        initial_val_loss = self.network.loss(self.global_tree, val.inputs, val.labels)
        for _ in range(budget):
            self.round += 1
            self.global_tree = self.run_round(
                self.global_tree, views, TRAINING, self.round, self.ledger
            )
            val_loss = self.network.loss(self.global_tree, val.inputs, val.labels)
            if not np.isfinite(val_loss) or val_loss > 10.0 * max(initial_val_loss, 1e-9):
                raise DivergenceError(
                    f"validation loss {val_loss:.4g} at round {self.round} "
                    f"(initial {initial_val_loss:.4g})"
                )
        return self._snapshot(self.global_tree, self.round, TRAINING, val, pooled_train)


def fine_tune(
    session: FederationSession,
    start_tree: ParameterTree,
    views: dict[int, Dataset],
    val_data: Dataset,
    retain_data: Dataset,
    ledger: CostLedger,
    max_rounds: int,
    reference_acc: float | None = None,
    frozen: frozenset = frozenset(),
    phase: str = UNLEARNING,
    keep_trees: bool = True,
) -> list[Checkpoint]:
    """Drive recovery fine-tuning; returns checkpoints (round 0 = start).

    With a ``reference_acc``, stops at the earliest round whose validation
    accuracy stayed at or above (reference - ``recovery_eps``) for
    ``recovery_patience`` consecutive rounds; otherwise runs the full budget.
    """
    cfg = session.config
    checkpoints = [session._snapshot(start_tree, 0, phase, val_data, retain_data)]
    tree = start_tree
    streak = 0
    for r in range(1, max_rounds + 1):
        tree = session.run_round(tree, views, phase, r, ledger, frozen=frozen)
        ckpt = session._snapshot(tree, r, phase, val_data, retain_data)
        if not keep_trees:
            ckpt = Checkpoint(ckpt.round, ckpt.phase, tree, ckpt.val_acc, ckpt.retain_loss)
        checkpoints.append(ckpt)
        if reference_acc is not None:
            recovered = ckpt.val_acc >= reference_acc - cfg.recovery_eps
            streak = streak + 1 if recovered else 0
            if streak >= cfg.recovery_patience:
                break
    return checkpoints
