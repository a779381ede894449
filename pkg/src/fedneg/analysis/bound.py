"""Unlearning-time lower bound: estimator and run harness.

The bound on the (gradient-flow) time needed to move the loss gap from
its starting value to a target value is

    t >= ((1 - eps) * |delta_target - delta_start|)^2
         / (lip^2 * (loss_decrease + A))

where lip bounds the Lipschitz constant of the gap, loss_decrease is the
retain-loss headroom available to fine-tuning, and A is the stochasticity
term (negligible in practice, 0 by default).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset
from ..fed.session import Checkpoint
from ..nn import Network, ParameterTree

# The stochasticity term is negligible against the available loss
# decrease in every regime this simulator runs, so callers pass 0 (the
# default). A diagonal approximation of the noise-covariance/Hessian
# trace could refine it but is deliberately not implemented; pass a
# precomputed value through ``stochastic_term`` if one is ever needed.
DIAGONAL_STOCHASTIC_TERM_IMPLEMENTED = False


@dataclass(frozen=True)
class LossGapTrace:
    """Gap values along a run plus everything the bound needs."""

    rounds: tuple[int, ...]
    deltas: tuple[float, ...]
    lip: float
    loss_decrease: float
    stochastic_term: float
    eps: float
    delta_target: float
    t_unlearn: float
    infinite: bool
    rounds_to_target: int | None


def estimate_time_bound(
    delta_start: float,
    delta_target: float,
    lip: float,
    loss_decrease: float,
    stochastic_term: float = 0.0,
    eps: float = 0.0,
):
    """The pure formula. Returns (t, infinite flag).

    A zero denominator (already-converged start with zero Lipschitz
    estimate) is reported as +inf with the flag set; the degenerate
    numerator-zero case stays 0.
    """
    numerator = ((1.0 - eps) * abs(delta_target - delta_start)) ** 2
    denominator = lip * lip * (abs(loss_decrease) + stochastic_term)
    if denominator == 0.0:
        if numerator == 0.0:
            return 0.0, False
        return float("inf"), True
    return numerator / denominator, False


def _gap_and_gradient(network: Network, tree: ParameterTree, retain: Dataset, forget: Dataset):
    gr = network.backward(tree, retain.inputs, retain.labels)
    gu = network.backward(tree, forget.inputs, forget.labels)
    gap = gr.loss - gu.loss
    diff = gr.to_vector() - gu.to_vector()
    return abs(gap), float(np.linalg.norm(diff))


def _sample_checkpoints(checkpoints, limit):
    if len(checkpoints) <= limit:
        return list(checkpoints)
    idx = np.unique(np.linspace(0, len(checkpoints) - 1, limit).round().astype(int))
    return [checkpoints[i] for i in idx]


def time_bound_for_run(
    network: Network,
    checkpoints: list[Checkpoint],
    retrain_tree: ParameterTree,
    retain: Dataset,
    forget: Dataset,
    eps: float = 0.05,
    stochastic_term: float = 0.0,
    sample_limit: int = 12,
) -> LossGapTrace:
    """Estimate the bound for one unlearning run against a retrain optimum.

    The Lipschitz estimate is the max gap-gradient norm over sampled
    checkpoints, raised if needed to dominate every observed secant slope
    |delta_i - delta_j| / ||theta_i - theta_j|| among them. The loss
    decrease is measured between the run's start and the retrain optimum.
    The target gap is the retrain model's gap. ``rounds_to_target`` is the
    first sampled round achieving (1 - eps) of the required gap change,
    None when the run never got there.
    """
    if len(checkpoints) < 2:
        raise ValueError("need at least the start and one later checkpoint")
    sampled = _sample_checkpoints(checkpoints, sample_limit)

    deltas, grad_norms, vectors = [], [], []
    for ckpt in sampled:
        gap, gnorm = _gap_and_gradient(network, ckpt.tree, retain, forget)
        deltas.append(gap)
        grad_norms.append(gnorm)
        vectors.append(ckpt.tree.to_vector())

    lip = max(grad_norms)
    for i in range(len(sampled)):
        for j in range(i + 1, len(sampled)):
            dist = np.linalg.norm(vectors[i] - vectors[j])
            if dist > 0:
                lip = max(lip, abs(deltas[i] - deltas[j]) / dist)

    delta_target, _ = _gap_and_gradient(network, retrain_tree, retain, forget)
    start_tree = checkpoints[0].tree
    loss_start = network.loss(start_tree, retain.inputs, retain.labels)
    loss_end = network.loss(retrain_tree, retain.inputs, retain.labels)
    loss_decrease = abs(loss_start - loss_end)

    t, infinite = estimate_time_bound(
        deltas[0], delta_target, lip, loss_decrease, stochastic_term, eps
    )

    required = (1.0 - eps) * abs(delta_target - deltas[0])
    rounds_to_target = None
    for ckpt, gap in zip(sampled, deltas):
        if abs(gap - deltas[0]) >= required and ckpt.round > 0:
            rounds_to_target = ckpt.round
            break
    if required == 0.0:
        rounds_to_target = 0

    return LossGapTrace(
        rounds=tuple(c.round for c in sampled),
        deltas=tuple(deltas),
        lip=lip,
        loss_decrease=loss_decrease,
        stochastic_term=stochastic_term,
        eps=eps,
        delta_target=delta_target,
        t_unlearn=t,
        infinite=infinite,
        rounds_to_target=rounds_to_target,
    )
