"""SGD update rule: hand recursions, freezing, and no-op cases."""

import numpy as np
import pytest

from fedneg.nn import (
    GradTree,
    LayerParams,
    NonFiniteError,
    OptimizerState,
    ParameterTree,
    sgd_step,
)


def one_param_tree(value):
    return ParameterTree([LayerParams("d", "dense", np.array([[float(value)]]), None)])


def one_param_grads(value, loss=0.0):
    return GradTree((LayerParams("d", "dense", np.array([[float(value)]]), None),), loss)


def test_plain_step():
    opt = OptimizerState(lr=1.0)
    out = sgd_step(one_param_tree(3.0), one_param_grads(1.0), opt)
    assert out["d"].weight[0, 0] == 2.0


def test_two_momentum_steps_hand_recursion():
    # v1 = 1, theta1 = -1; v2 = 0.9 + 1 = 1.9, theta2 = -1 - 1.9 = -2.9.
    opt = OptimizerState(lr=1.0, momentum=0.9)
    tree = one_param_tree(0.0)
    tree = sgd_step(tree, one_param_grads(1.0), opt)
    tree = sgd_step(tree, one_param_grads(1.0), opt)
    assert tree["d"].weight[0, 0] == pytest.approx(-2.9, abs=1e-15)


def test_zero_gradient_zero_decay_is_identity():
    opt = OptimizerState(lr=0.5, momentum=0.0, weight_decay=0.0)
    tree = one_param_tree(1.25)
    out = sgd_step(tree, one_param_grads(0.0), opt)
    assert out["d"].weight[0, 0] == 1.25


def test_weight_decay_is_coupled():
    # v = g + lambda * theta = 0 + 0.1 * 2 = 0.2; theta = 2 - 1 * 0.2.
    opt = OptimizerState(lr=1.0, weight_decay=0.1)
    out = sgd_step(one_param_tree(2.0), one_param_grads(0.0), opt)
    assert out["d"].weight[0, 0] == pytest.approx(1.8, abs=1e-15)


def test_frozen_layer_never_moves_even_under_decay():
    opt = OptimizerState(lr=1.0, momentum=0.9, weight_decay=0.1, frozen=frozenset({"d"}))
    tree = one_param_tree(2.0)
    for _ in range(3):
        tree = sgd_step(tree, one_param_grads(1.0), opt)
    assert tree["d"].weight[0, 0] == 2.0


def test_nonfinite_update_is_an_error():
    opt = OptimizerState(lr=1.0)
    with pytest.raises(NonFiniteError):
        sgd_step(one_param_tree(1.0), one_param_grads(np.inf), opt)


def test_output_never_aliases_input():
    opt = OptimizerState(lr=1.0)
    tree = one_param_tree(1.0)
    out = sgd_step(tree, one_param_grads(0.0), opt)
    out["d"].weight[0, 0] = 123.0
    assert tree["d"].weight[0, 0] == 1.0


def test_invalid_hyperparameters_rejected():
    with pytest.raises(ValueError):
        OptimizerState(lr=0.0)
    with pytest.raises(ValueError):
        OptimizerState(lr=0.1, momentum=1.0)
    with pytest.raises(ValueError):
        OptimizerState(lr=0.1, weight_decay=-1e-9)
