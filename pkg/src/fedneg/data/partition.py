"""Federated partitioning of a source dataset across clients.

Two modes: ``iid`` (shuffled equal shares, remainder spread one sample
each to the first clients) and ``dirichlet`` (per-class client proportions
drawn from Dirichlet(beta), the standard label-skew construction). Each
client's local data is further split 80:20 into train and validation,
fixed once per experiment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as rng_mod
from .datasets import Dataset

VAL_FRACTION = 0.2


@dataclass(frozen=True)
class ClientData:
    """One client's local view: train split, validation split.

    val is None for degenerate one-sample clients (nothing to hold out).
    """

    train: Dataset
    val: Dataset | None


@dataclass(frozen=True)
class FederatedSplit:
    clients: tuple[ClientData, ...]
    test: Dataset
    mode: str
    beta: float | None = None

    @property
    def n_clients(self) -> int:
        return len(self.clients)

    def train_sizes(self) -> list[int]:
        return [len(c.train) for c in self.clients]


def partition(data: Dataset, test: Dataset, n: int, mode="iid", beta=0.1, seed=0) -> FederatedSplit:
    """Split ``data`` across ``n`` clients; ``test`` is shared by all."""
    if n < 1 or n > len(data):
        raise ValueError(f"cannot split {len(data)} samples across {n} clients")
    gen = rng_mod.stream(seed, rng_mod.PARTITION)
    if mode == "iid":
        shares = _iid_shares(len(data), n, gen)
    elif mode == "dirichlet":
        if beta <= 0:
            raise ValueError("dirichlet beta must be positive")
        shares = _dirichlet_shares(data.labels, n, beta, gen)
    else:
        raise ValueError(f"unknown partition mode {mode!r}")

    clients = []
    for k in range(n):
        local = data.subset(shares[k])
        clients.append(_train_val_split(local, gen))
    return FederatedSplit(tuple(clients), test, mode, beta if mode == "dirichlet" else None)


def _iid_shares(total, n, gen):
    order = gen.permutation(total)
    base, extra = divmod(total, n)
    shares, start = [], 0
    for k in range(n):
        size = base + (1 if k < extra else 0)
        shares.append(np.sort(order[start : start + size]))
        start += size
    return shares


def _dirichlet_shares(labels, n, beta, gen):
    shares = [[] for _ in range(n)]
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        gen.shuffle(idx)
        props = gen.dirichlet(np.full(n, beta))
        cuts = (np.cumsum(props)[:-1] * len(idx)).astype(np.intp)
        for k, chunk in enumerate(np.split(idx, cuts)):
            shares[k].extend(chunk.tolist())
    shares = [np.sort(np.asarray(s, dtype=np.intp)) for s in shares]
    # Repair empty clients by moving one sample from the largest client.
    for k in range(n):
        while len(shares[k]) == 0:
            donor = int(np.argmax([len(s) for s in shares]))
            shares[k] = shares[donor][:1]
            shares[donor] = shares[donor][1:]
    return shares


def _train_val_split(local: Dataset, gen) -> ClientData:
    n = len(local)
    n_val = int(round(VAL_FRACTION * n))
    if n > 1:
        n_val = min(max(n_val, 0), n - 1)  # keep train nonempty
    else:
        n_val = 0
    order = gen.permutation(n)
    val_idx = np.sort(order[:n_val])
    train_idx = np.sort(order[n_val:])
    if n_val == 0:
        return ClientData(local.subset(train_idx), None)
    return ClientData(local.subset(train_idx), local.subset(val_idx))


def pooled_val(split: FederatedSplit, client_ids=None) -> Dataset:
    """Union of the selected clients' validation sets (all clients by default)."""
    ids = range(split.n_clients) if client_ids is None else sorted(client_ids)
    parts = [split.clients[k].val for k in ids if split.clients[k].val is not None]
    if not parts:
        raise ValueError("no validation data among the selected clients")
    out = parts[0]
    for p in parts[1:]:
        out = out.concat(p)
    return out
