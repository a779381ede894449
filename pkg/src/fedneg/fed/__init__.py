"""FedAvg rounds, aggregation, cost ledger, and the unlearning phase driver."""

from .config import FederationConfig
from .ledger import BYTES_PER_SCALAR, CostLedger, LedgerRow
from .store import load_checkpoint, load_tree, save_checkpoint, save_tree
from .session import (
    TRAINING,
    UNLEARNING,
    Checkpoint,
    DivergenceError,
    FederationSession,
    aggregate,
    client_update,
    fine_tune,
)

__all__ = [
    "BYTES_PER_SCALAR",
    "Checkpoint",
    "CostLedger",
    "DivergenceError",
    "FederationConfig",
    "FederationSession",
    "LedgerRow",
    "TRAINING",
    "UNLEARNING",
    "aggregate",
    "client_update",
    "fine_tune",
    "load_checkpoint",
    "load_tree",
    "save_checkpoint",
    "save_tree",
]
