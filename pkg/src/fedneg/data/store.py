"""Columnar binary serialization for datasets.

Layout (all integers little-endian, documented in docs/formats.md):

    magic     8 bytes   b"FNDATA\\x00\\x01" (last byte = format version)
    class_count  uint32
    ndim         uint32   number of input dimensions, sample axis included
    dims         uint64 x ndim
    prov_len     uint32
    provenance   utf-8 bytes
    inputs       float64 x prod(dims), row-major
    labels       int64 x dims[0]
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .datasets import Dataset

MAGIC = b"FNDATA\x00\x01"


def save_dataset(data: Dataset, path) -> None:
    path = Path(path)
    prov = data.provenance.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", data.class_count, data.inputs.ndim))
        fh.write(struct.pack(f"<{data.inputs.ndim}Q", *data.inputs.shape))
        fh.write(struct.pack("<I", len(prov)))
        fh.write(prov)
        fh.write(np.ascontiguousarray(data.inputs, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(data.labels, dtype="<i8").tobytes())


def load_dataset(path) -> Dataset:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a dataset file (bad magic)")
        class_count, ndim = struct.unpack("<II", fh.read(8))
        dims = struct.unpack(f"<{ndim}Q", fh.read(8 * ndim))
        (prov_len,) = struct.unpack("<I", fh.read(4))
        provenance = fh.read(prov_len).decode("utf-8")
        count = int(np.prod(dims))
        inputs = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(dims).astype(np.float64)
        labels = np.frombuffer(fh.read(8 * dims[0]), dtype="<i8").astype(np.int64)
    return Dataset(inputs, labels, class_count, provenance)
