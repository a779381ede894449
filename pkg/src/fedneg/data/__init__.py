"""Synthetic data, federated partitioning, forget sets, and poisoning."""

from .backdoor import TRIGGER, BackdoorConfig, backdoor_success_rate, poison, stamp
from .datasets import Dataset, make_blobs, make_grid_images, split_train_test
from .forget import ForgetSpec, build_forget_spec
from .partition import ClientData, FederatedSplit, partition, pooled_val
from .store import load_dataset, save_dataset

__all__ = [
    "BackdoorConfig",
    "ClientData",
    "Dataset",
    "FederatedSplit",
    "ForgetSpec",
    "TRIGGER",
    "backdoor_success_rate",
    "build_forget_spec",
    "load_dataset",
    "make_blobs",
    "make_grid_images",
    "partition",
    "poison",
    "pooled_val",
    "save_dataset",
    "split_train_test",
    "stamp",
]
