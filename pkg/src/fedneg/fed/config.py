"""Federation hyperparameters and stop rules."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class FederationConfig:
    """Knobs for both the training and the unlearning phases.

    Every communication round involves all participating clients; there
    is no client sampling. The recovery stop rule ends an unlearning run
    at the earliest round whose validation accuracy has stayed at or
    above (retrain reference - ``recovery_eps``) for
    ``recovery_patience`` consecutive rounds, capped at
    ``unlearn_rounds``. The floor is one-sided on purpose: a run that
    beats the reference has recovered; only falling short blocks the stop.
    """

    clients: int = 5
    rounds: int = 150
    local_iters: int = 1
    batch_size: int = 16
    lr: float = 0.05
    momentum: float = 0.9
    weight_decay: float = 0.0
    seed: int = 0
    unlearn_rounds: int = 120
    recovery_eps: float = 1.0
    recovery_patience: int = 5
    threads: int = 1
    request_bytes: int = 64  # declared size of one unlearning-request message

    def __post_init__(self):
        for name in ("clients", "batch_size", "threads"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("rounds", "unlearn_rounds", "local_iters"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.recovery_patience < 1:
            raise ValueError("recovery_patience must be positive")
