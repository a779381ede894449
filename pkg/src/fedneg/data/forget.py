"""Forget-set construction: which local samples each client must unlearn.

Three modes mirror the supported forgetting granularities:

* client_wise(targets): the target clients forget everything they hold;
* class_wise(label): every client forgets its samples of one class;
* instance_wise(ratio): every client forgets floor(ratio * |local|)
  randomly chosen samples.

Indices are relative to each client's local train split.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import rng as rng_mod
from .datasets import Dataset
from .partition import FederatedSplit

MODES = ("client_wise", "class_wise", "instance_wise")


@dataclass(frozen=True)
class ForgetSpec:
    mode: str
    forget_indices: tuple[np.ndarray, ...]  # per client, into the local train set
    target_clients: frozenset = field(default_factory=frozenset)
    target_class: int | None = None
    ratio: float | None = None

    def retain_indices(self, split: FederatedSplit) -> tuple[np.ndarray, ...]:
        out = []
        for k, forget in enumerate(self.forget_indices):
            n = len(split.clients[k].train)
            mask = np.ones(n, dtype=bool)
            mask[forget] = False
            out.append(np.flatnonzero(mask))
        return tuple(out)

    def retain_data(self, split: FederatedSplit, client: int) -> Dataset | None:
        idx = self.retain_indices(split)[client]
        return split.clients[client].train.subset(idx) if len(idx) else None

    def forget_data(self, split: FederatedSplit, client: int) -> Dataset | None:
        idx = self.forget_indices[client]
        return split.clients[client].train.subset(idx) if len(idx) else None

    def pooled(self, split: FederatedSplit, which: str) -> Dataset | None:
        """Union across clients of retain ('retain') or forget ('forget') data."""
        getter = self.retain_data if which == "retain" else self.forget_data
        parts = [d for d in (getter(split, k) for k in range(split.n_clients)) if d is not None]
        if not parts:
            return None
        out = parts[0]
        for p in parts[1:]:
            out = out.concat(p)
        return out

    def participants(self, split: FederatedSplit) -> list[int]:
        """Clients contributing updates during unlearning fine-tuning."""
        if self.mode == "client_wise":
            return [k for k in range(split.n_clients) if k not in self.target_clients]
        return list(range(split.n_clients))


def build_forget_spec(
    split: FederatedSplit,
    mode: str,
    *,
    target_clients=(0,),
    target_class: int = 0,
    ratio: float = 0.1,
    seed: int = 0,
) -> ForgetSpec:
    if mode not in MODES:
        raise ValueError(f"unknown forget mode {mode!r}")
    forget = []
    if mode == "client_wise":
        targets = frozenset(int(k) for k in target_clients)
        bad = [k for k in targets if not 0 <= k < split.n_clients]
        if bad:
            raise ValueError(f"target clients out of range: {bad}")
        for k in range(split.n_clients):
            n = len(split.clients[k].train)
            forget.append(np.arange(n, dtype=np.intp) if k in targets else np.zeros(0, dtype=np.intp))
        spec = ForgetSpec(mode, tuple(forget), target_clients=targets)
    elif mode == "class_wise":
        have = {int(c) for client in split.clients for c in np.unique(client.train.labels)}
        if int(target_class) not in have:
            raise ValueError(f"class {target_class} not present in any client")
        for k in range(split.n_clients):
            labels = split.clients[k].train.labels
            forget.append(np.flatnonzero(labels == int(target_class)).astype(np.intp))
        spec = ForgetSpec(mode, tuple(forget), target_class=int(target_class))
    else:
        if not 0.0 < ratio < 1.0:
            raise ValueError("instance-wise ratio must lie in (0, 1)")
        gen = rng_mod.stream(seed, "forget", "instance")
        for k in range(split.n_clients):
            n = len(split.clients[k].train)
            count = int(np.floor(ratio * n))
            chosen = np.sort(gen.choice(n, size=count, replace=False)).astype(np.intp)
            forget.append(chosen)
        spec = ForgetSpec(mode, tuple(forget), ratio=float(ratio))

    if spec.pooled(split, "retain") is None:
        raise ValueError("forget spec would leave no retain data at all")
    return spec
