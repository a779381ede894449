"""Cost model against arithmetic and a naive loop-nest oracle."""

import numpy as np
import pytest

from fedneg import rng
from fedneg.nn import LayerSpec, NetworkSpec, count_costs, layer_macs_per_sample, param_count

from helpers import loopnest_conv_macs, loopnest_dense_macs


def test_dense_4_to_3():
    spec = NetworkSpec((4,), (LayerSpec("d", "dense", units=3),))
    costs = count_costs(spec, 1)
    assert layer_macs_per_sample(spec)["d"] == 12
    assert costs.fwd_flops == 24
    assert costs.bwd_flops == 48
    assert costs.params == 15


def test_conv_example():
    spec = NetworkSpec(
        (1, 8, 8),
        (LayerSpec("c", "conv2d", channels=2, kernel=3), LayerSpec("o", "dense", units=2)),
    )
    assert layer_macs_per_sample(spec)["c"] == 6 * 6 * 9 * 2 == 648
    assert layer_macs_per_sample(spec)["c"] == loopnest_conv_macs(1, 8, 8, 2, 3)


def test_batch_scaling_and_validation():
    spec = NetworkSpec((4,), (LayerSpec("d", "dense", units=3),))
    assert count_costs(spec, 10).fwd_flops == 10 * count_costs(spec, 1).fwd_flops
    with pytest.raises(ValueError):
        count_costs(spec, 0)


def test_macs_match_loopnest_oracle_on_random_specs():
    gen = rng.stream(21, "costs")
    for _ in range(6):
        side = int(gen.integers(6, 10))
        c_in = int(gen.integers(1, 3))
        c_out = int(gen.integers(1, 4))
        k = int(gen.integers(2, 4))
        units = int(gen.integers(2, 6))
        classes = int(gen.integers(2, 5))
        spec = NetworkSpec(
            (c_in, side, side),
            (
                LayerSpec("c", "conv2d", "relu", channels=c_out, kernel=k),
                LayerSpec("n", "layernorm"),
                LayerSpec("h", "dense", "tanh", units=units),
                LayerSpec("o", "dense", units=classes),
            ),
        )
        macs = layer_macs_per_sample(spec)
        out_side = side - k + 1
        assert macs["c"] == loopnest_conv_macs(c_in, side, side, c_out, k)
        assert macs["n"] == 0
        assert macs["h"] == loopnest_dense_macs(c_out * out_side * out_side, units)
        assert macs["o"] == loopnest_dense_macs(units, classes)


def test_param_count_includes_norm_affine():
    spec = NetworkSpec(
        (1, 6, 6),
        (
            LayerSpec("c", "conv2d", channels=2, kernel=3),
            LayerSpec("n", "layernorm"),
            LayerSpec("o", "dense", units=2),
        ),
    )
    conv = 2 * 1 * 3 * 3 + 2
    norm = 2 * (2 * 4 * 4)
    dense = (2 * 4 * 4) * 2 + 2
    assert param_count(spec) == conv + norm + dense
