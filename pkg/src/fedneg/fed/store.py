"""Binary serialization of parameter trees and checkpoints.

Tree layout (little-endian; documented in docs/formats.md):

    magic     8 bytes  b"FNTREE\\x00\\x01"
    layers    uint32
    per layer:
        name_len  uint16, name utf-8
        kind      uint8 (0 dense, 1 conv2d, 2 layernorm)
        has_bias  uint8
        w_ndim    uint32, w_dims uint64 x ndim
        b_ndim    uint32, b_dims uint64 x ndim   (only if has_bias)
    payload: float64 tensors in header order, weight before bias

A checkpoint file wraps a tree with the round index, phase, and the
snapshot metrics.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..nn.tree import LAYER_KINDS, LayerParams, ParameterTree
from .session import Checkpoint

TREE_MAGIC = b"FNTREE\x00\x01"
CKPT_MAGIC = b"FNCKPT\x00\x01"


def _write_tree(fh, tree: ParameterTree) -> None:
    fh.write(TREE_MAGIC)
    fh.write(struct.pack("<I", len(tree.layers)))
    for layer in tree.layers:
        name = layer.name.encode("utf-8")
        fh.write(struct.pack("<H", len(name)))
        fh.write(name)
        fh.write(struct.pack("<BB", LAYER_KINDS.index(layer.kind), layer.bias is not None))
        fh.write(struct.pack("<I", layer.weight.ndim))
        fh.write(struct.pack(f"<{layer.weight.ndim}Q", *layer.weight.shape))
        if layer.bias is not None:
            fh.write(struct.pack("<I", layer.bias.ndim))
            fh.write(struct.pack(f"<{layer.bias.ndim}Q", *layer.bias.shape))
    for layer in tree.layers:
        fh.write(np.ascontiguousarray(layer.weight, dtype="<f8").tobytes())
        if layer.bias is not None:
            fh.write(np.ascontiguousarray(layer.bias, dtype="<f8").tobytes())


def _read_tree(fh) -> ParameterTree:
    magic = fh.read(len(TREE_MAGIC))
    if magic != TREE_MAGIC:
        raise ValueError("not a parameter-tree stream (bad magic)")
    (count,) = struct.unpack("<I", fh.read(4))
    headers = []
    for _ in range(count):
        (name_len,) = struct.unpack("<H", fh.read(2))
        name = fh.read(name_len).decode("utf-8")
        kind_id, has_bias = struct.unpack("<BB", fh.read(2))
        (w_ndim,) = struct.unpack("<I", fh.read(4))
        w_shape = struct.unpack(f"<{w_ndim}Q", fh.read(8 * w_ndim))
        b_shape = None
        if has_bias:
            (b_ndim,) = struct.unpack("<I", fh.read(4))
            b_shape = struct.unpack(f"<{b_ndim}Q", fh.read(8 * b_ndim))
        headers.append((name, LAYER_KINDS[kind_id], w_shape, b_shape))
    layers = []
    for name, kind, w_shape, b_shape in headers:
        w_count = int(np.prod(w_shape)) if w_shape else 1
        weight = np.frombuffer(fh.read(8 * w_count), dtype="<f8").reshape(w_shape).astype(np.float64)
        bias = None
        if b_shape is not None:
            b_count = int(np.prod(b_shape)) if b_shape else 1
            bias = np.frombuffer(fh.read(8 * b_count), dtype="<f8").reshape(b_shape).astype(np.float64)
        layers.append(LayerParams(name, kind, weight, bias))
    return ParameterTree(layers)


def save_tree(tree: ParameterTree, path) -> None:
    with open(Path(path), "wb") as fh:
        _write_tree(fh, tree)


def load_tree(path) -> ParameterTree:
    with open(Path(path), "rb") as fh:
        return _read_tree(fh)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    with open(Path(path), "wb") as fh:
        fh.write(CKPT_MAGIC)
        phase = ckpt.phase.encode("utf-8")
        fh.write(struct.pack("<qH", ckpt.round, len(phase)))
        fh.write(phase)
        fh.write(struct.pack("<dd", ckpt.val_acc, ckpt.retain_loss))
        _write_tree(fh, ckpt.tree)


def load_checkpoint(path) -> Checkpoint:
    with open(Path(path), "rb") as fh:
        magic = fh.read(len(CKPT_MAGIC))
        if magic != CKPT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (bad magic)")
        round_idx, phase_len = struct.unpack("<qH", fh.read(10))
        phase = fh.read(phase_len).decode("utf-8")
        val_acc, retain_loss = struct.unpack("<dd", fh.read(16))
        tree = _read_tree(fh)
    return Checkpoint(round_idx, phase, tree, val_acc, retain_loss)
