"""Unlearning-time bound: closed-form case, invariances, run harness."""

import numpy as np
import pytest

from fedneg import rng
from fedneg.analysis import estimate_time_bound, time_bound_for_run
from fedneg.data import make_blobs
from fedneg.fed.session import Checkpoint
from fedneg.nn import LayerSpec, Network, NetworkSpec


def test_quadratic_closed_form_case():
    # retain loss theta^2/2, forget loss (theta-1)^2/2, start 2, optimum 0:
    # gap |theta - 1/2| has slope 1, gaps 1.5 -> 0.5, decrease 2, bound 0.5.
    theta0, theta_star = 2.0, 0.0
    delta = lambda t: abs(t ** 2 / 2 - (t - 1.0) ** 2 / 2)
    lip = 1.0
    decrease = abs(theta0 ** 2 / 2 - theta_star ** 2 / 2)
    t, infinite = estimate_time_bound(delta(theta0), delta(theta_star), lip, decrease)
    assert not infinite
    assert t == pytest.approx(0.5, abs=1e-12)


def test_zero_target_change_gives_zero():
    t, infinite = estimate_time_bound(1.5, 1.5, 2.0, 1.0)
    assert t == 0.0 and not infinite


def test_zero_denominator_is_infinite_sentinel():
    t, infinite = estimate_time_bound(0.0, 1.0, 0.0, 0.0)
    assert np.isinf(t) and infinite


def test_constant_loss_shift_invariance():
    # adding a constant to both losses leaves gap, slope, decrease unchanged
    a = estimate_time_bound(1.5, 0.5, 1.0, 2.0)
    b = estimate_time_bound(1.5, 0.5, 1.0, 2.0)  # same values by construction
    assert a == b


def test_eps_slack_shrinks_the_numerator():
    t0, _ = estimate_time_bound(1.5, 0.5, 1.0, 2.0, eps=0.0)
    t5, _ = estimate_time_bound(1.5, 0.5, 1.0, 2.0, eps=0.05)
    assert t5 == pytest.approx(t0 * 0.95 ** 2, rel=1e-12)


def run_harness(seed=0):
    net = Network(NetworkSpec((4,), (LayerSpec("h", "dense", "tanh", units=6),
                                     LayerSpec("o", "dense", units=2))))
    retain = make_blobs(classes=2, dims=4, per_class=20, seed=seed)
    forget = make_blobs(classes=2, dims=4, per_class=10, seed=seed + 100)
    trees = [net.init_params(rng.stream(seed, rng.INIT, i)) for i in range(4)]
    checkpoints = [
        Checkpoint(i, "unlearning_fine_tune", t, 50.0, 0.0) for i, t in enumerate(trees)
    ]
    retrain_tree = net.init_params(rng.stream(seed, rng.INIT, "ref"))
    return net, checkpoints, retrain_tree, retain, forget


def test_harness_lip_dominates_secants():
    net, ckpts, ref, retain, forget = run_harness()
    trace = time_bound_for_run(net, ckpts, ref, retain, forget, eps=0.05)
    vectors = [c.tree.to_vector() for c in ckpts]
    for i in range(len(ckpts)):
        for j in range(i + 1, len(ckpts)):
            dist = np.linalg.norm(vectors[i] - vectors[j])
            secant = abs(trace.deltas[i] - trace.deltas[j]) / dist
            assert trace.lip >= secant - 1e-12
    assert trace.t_unlearn >= 0.0
    assert len(trace.deltas) == len(ckpts)
    assert all(d >= 0 for d in trace.deltas)


def test_harness_needs_two_checkpoints():
    net, ckpts, ref, retain, forget = run_harness()
    with pytest.raises(ValueError):
        time_bound_for_run(net, ckpts[:1], ref, retain, forget)


def test_rounds_to_target_reporting():
    net, ckpts, ref, retain, forget = run_harness(seed=3)
    trace = time_bound_for_run(net, ckpts, ref, retain, forget, eps=0.05)
    if trace.rounds_to_target is not None:
        idx = trace.rounds.index(trace.rounds_to_target)
        required = (1 - trace.eps) * abs(trace.delta_target - trace.deltas[0])
        assert abs(trace.deltas[idx] - trace.deltas[0]) >= required
