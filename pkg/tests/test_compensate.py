"""Exact compensation identities: affine pairing and conv/norm cancellation."""

import numpy as np
import pytest

from fedneg import rng
from fedneg.nn import LayerSpec, Network, NetworkSpec
from fedneg.unlearn import (
    activation_relation,
    affine_compensate,
    conv_norm_double_negate,
    negate_and_compensate,
)


def two_layer(activation, in_dim=5, hidden=7, out_dim=3):
    spec = NetworkSpec(
        (in_dim,),
        (
            LayerSpec("l1", "dense", activation, units=hidden),
            LayerSpec("l2", "dense", units=out_dim),
        ),
    )
    return Network(spec)


@pytest.mark.parametrize("activation", ["tanh", "sigmoid", "step", "identity"])
def test_negate_plus_compensate_is_functionally_exact(activation):
    net = two_layer(activation)
    for seed in range(20):
        gen = rng.stream(seed, "compensate", activation)
        params = net.init_params(gen)
        params = params.map(lambda a: gen.normal(size=a.shape))
        tilde = negate_and_compensate(params, net.spec, "l1", "l2")
        x = gen.normal(size=(100, 5))
        a, _ = net.forward(params, x)
        b, _ = net.forward(tilde, x)
        assert np.max(np.abs(a - b)) < 1e-12


def test_tanh_compensation_is_plain_negation():
    # Odd activation: the compensating layer is just the negated weight.
    net = two_layer("tanh")
    params = net.init_params(rng.stream(0, rng.INIT))
    comp = affine_compensate(params["l2"], "tanh")
    np.testing.assert_array_equal(comp.weight, -params["l2"].weight)
    np.testing.assert_array_equal(comp.bias, params["l2"].bias)


def test_step_compensation_matches_boolean_not():
    # step: relation a=b=1, c=1, i.e. the substitution x -> 1 - x.
    a, b, c = activation_relation("step")
    assert (a, b, c) == (1.0, 1.0, 1.0)
    net = two_layer("step")
    params = net.init_params(rng.stream(1, rng.INIT))
    comp = affine_compensate(params["l2"], "step")
    np.testing.assert_array_equal(comp.weight, -params["l2"].weight)
    np.testing.assert_allclose(
        comp.bias, params["l2"].bias + params["l2"].weight.sum(axis=0), atol=0
    )


def test_relu_has_no_compensation():
    with pytest.raises(ValueError):
        activation_relation("relu")


def test_custom_even_relation():
    # an even activation: psi(x) - psi(-x) = 0, so (a, b, c) = (1, -1, 0)
    net = two_layer("identity")
    params = net.init_params(rng.stream(2, rng.INIT))
    comp = affine_compensate(params["l2"], "identity", relation=(1.0, -1.0, 0.0))
    np.testing.assert_array_equal(comp.weight, params["l2"].weight)


def conv_norm_net(activation_between="identity"):
    spec = NetworkSpec(
        (1, 8, 8),
        (
            LayerSpec("c", "conv2d", activation_between, channels=3, kernel=3),
            LayerSpec("n", "layernorm", "relu"),
            LayerSpec("o", "dense", units=4),
        ),
    )
    return Network(spec)


def test_conv_norm_double_negation_cancels():
    net = conv_norm_net()
    for seed in range(5):
        gen = rng.stream(seed, "convnorm")
        params = net.init_params(gen)
        params = params.map(lambda a: gen.normal(size=a.shape))
        doubled = conv_norm_double_negate(params, net.spec, "c", "n")
        x = gen.normal(size=(50, 1, 8, 8))
        a, _ = net.forward(params, x)
        b, _ = net.forward(doubled, x)
        assert np.max(np.abs(a - b)) < 1e-12


def test_conv_norm_zero_input_consistent_bias_path():
    net = conv_norm_net()
    gen = rng.stream(9, "convnorm-zero")
    params = net.init_params(gen)
    params = params.map(lambda a: gen.normal(size=a.shape))
    doubled = conv_norm_double_negate(params, net.spec, "c", "n")
    x = np.zeros((3, 1, 8, 8))
    a, _ = net.forward(params, x)
    b, _ = net.forward(doubled, x)
    assert np.max(np.abs(a - b)) < 1e-12


def test_interposed_relu_breaks_cancellation():
    net = conv_norm_net(activation_between="relu")
    with pytest.raises(ValueError):
        conv_norm_double_negate(
            net.init_params(rng.stream(0, rng.INIT)), net.spec, "c", "n"
        )
    # Apply the same double negation by hand: the identity must fail.
    gen = rng.stream(3, "convnorm-relu")
    params = net.init_params(gen)
    params = params.map(lambda a: gen.normal(size=a.shape))
    plain = conv_norm_net()  # identical parameters, no relu between
    doubled = conv_norm_double_negate(params, plain.spec, "c", "n")
    x = gen.normal(size=(50, 1, 8, 8))
    a, _ = net.forward(params, x)
    b, _ = net.forward(doubled, x)
    assert np.max(np.abs(a - b)) > 1e-2


def test_adjacency_is_required():
    spec = NetworkSpec(
        (1, 8, 8),
        (
            LayerSpec("c", "conv2d", channels=2, kernel=3),
            LayerSpec("h", "dense", "tanh", units=5),
            LayerSpec("n", "layernorm"),
            LayerSpec("o", "dense", units=3),
        ),
    )
    net = Network(spec)
    params = net.init_params(rng.stream(0, rng.INIT))
    with pytest.raises(ValueError):
        conv_norm_double_negate(params, spec, "c", "n")
