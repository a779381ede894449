"""Deterministic RNG streams derived from a single master seed.

Every source of randomness in the simulator draws from a named stream so
that toggling one analysis (say, MIA subsampling) never shifts the draws
seen by another (say, client shuffling). Stream identity is the master
seed plus a label path; the same path always yields the same generator.
"""

from __future__ import annotations

import hashlib

import numpy as np

# Canonical stream names used across the package. Free-form labels are
# allowed; these constants just keep call sites consistent.
INIT = "init"
SHUFFLE = "shuffle"
PARTITION = "partition"
MIA_SUBSAMPLE = "mia-subsample"
PERTURBATION = "perturbation"
DATA = "data"
RELABEL = "relabel"


def _label_words(label) -> list[int]:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError(f"stream labels must be non-negative, got {label}")
        return [int(label)]
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 16, 4)]


def stream(master_seed: int, *labels) -> np.random.Generator:
    """Return the generator for the stream named by ``labels``.

    Labels may be strings (hashed stably) or non-negative ints (taken as
    is, so round/client counters can index streams directly).
    """
    entropy = [int(master_seed)]
    for label in labels:
        entropy.extend(_label_words(label))
    return np.random.default_rng(np.random.SeedSequence(entropy))
