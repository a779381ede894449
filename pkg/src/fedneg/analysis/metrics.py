"""Accuracy metrics, the loss-threshold membership inference attack,
loss gap, and report assembly (deltas against the retrain gold standard).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import rng as rng_mod
from ..data import Dataset, FederatedSplit, ForgetSpec
from ..nn import Network, ParameterTree


def accuracy_pct(network: Network, params, data: Dataset) -> float:
    return 100.0 * network.accuracy(params, data.inputs, data.labels)


def evaluate(
    network: Network,
    params: ParameterTree,
    split: FederatedSplit,
    forget_spec: ForgetSpec,
):
    """Top-1 accuracy percentages on retain, forget, and test data.

    Forget accuracy is NaN when the forget set is empty. Argmax ties
    break toward the lowest class index.
    """
    retain = forget_spec.pooled(split, "retain")
    forget = forget_spec.pooled(split, "forget")
    retain_acc = accuracy_pct(network, params, retain)
    forget_acc = accuracy_pct(network, params, forget) if forget is not None else float("nan")
    test_acc = accuracy_pct(network, params, split.test)
    return retain_acc, forget_acc, test_acc


def best_threshold_balanced_accuracy(member_losses, nonmember_losses) -> float:
    """Best balanced accuracy of the rule "member iff loss < t" over all t.

    Members are expected to have lower loss. The sweep includes +inf, so
    the result is always >= 0.5; identical loss multisets give exactly 0.5.
    """
    members = np.asarray(member_losses, dtype=np.float64)
    others = np.asarray(nonmember_losses, dtype=np.float64)
    if members.size == 0 or others.size == 0:
        raise ValueError("both loss populations must be nonempty")
    thresholds = np.unique(np.concatenate([members, others, [np.inf]]))
    best = 0.0
    for t in thresholds:
        tpr = np.mean(members < t)
        tnr = np.mean(others >= t)
        best = max(best, 0.5 * (tpr + tnr))
    return float(best)


def mia_score(
    network: Network,
    params: ParameterTree,
    forget_data: Dataset,
    test_data: Dataset,
    seed: int = 0,
) -> float:
    """Loss-threshold membership inference, as a percentage.

    Members (forget data) and non-members (held-out test data) are
    subsampled to equal size, per-sample cross-entropy losses are
    computed, and the best balanced accuracy over all thresholds is
    returned. 50 means the forget data is indistinguishable from unseen
    data.
    """
    n = min(len(forget_data), len(test_data))
    if n < 1:
        raise ValueError("mia needs nonempty member and non-member sets")
    gen = rng_mod.stream(seed, rng_mod.MIA_SUBSAMPLE)
    m_idx = np.sort(gen.choice(len(forget_data), size=n, replace=False))
    t_idx = np.sort(gen.choice(len(test_data), size=n, replace=False))
    member_losses = network.per_sample_losses(
        params, forget_data.inputs[m_idx], forget_data.labels[m_idx]
    )
    nonmember_losses = network.per_sample_losses(
        params, test_data.inputs[t_idx], test_data.labels[t_idx]
    )
    return 100.0 * best_threshold_balanced_accuracy(member_losses, nonmember_losses)


def loss_gap(network: Network, params, retain: Dataset, forget: Dataset) -> float:
    """Absolute difference of mean cross-entropy between retain and forget data."""
    lr = network.loss(params, retain.inputs, retain.labels)
    lu = network.loss(params, forget.inputs, forget.labels)
    return abs(lr - lu)


@dataclass
class MetricsReport:
    """Per-strategy outcome: accuracies, MIA, gaps to a reference, costs."""

    method: str
    retain_acc: float
    forget_acc: float
    test_acc: float
    mia: float
    bytes: int = 0
    flops: int = 0
    deltas: dict = field(default_factory=dict)
    avg_gap: float = float("nan")

    def fields(self):
        return (self.retain_acc, self.forget_acc, self.test_acc, self.mia)

    def with_reference(self, reference: "MetricsReport") -> "MetricsReport":
        """Fill deltas and avg_gap against the gold-standard report."""
        out = MetricsReport(
            self.method,
            self.retain_acc,
            self.forget_acc,
            self.test_acc,
            self.mia,
            self.bytes,
            self.flops,
        )
        names = ("retain", "forget", "test", "mia")
        out.deltas = {
            name: mine - ref
            for name, mine, ref in zip(names, self.fields(), reference.fields())
        }
        out.avg_gap = avg_gap(self, reference)
        return out


def avg_gap(report: MetricsReport, reference: MetricsReport) -> float:
    """Mean absolute deviation of (retain, forget, test, MIA) from the reference."""
    mine = report.fields()
    ref = reference.fields()
    if any(math.isnan(v) for v in mine + ref):
        raise ValueError("avg_gap needs complete reports on both sides")
    return float(np.mean([abs(a - b) for a, b in zip(mine, ref)]))


def build_report(
    network: Network,
    params: ParameterTree,
    split: FederatedSplit,
    forget_spec: ForgetSpec,
    method: str,
    seed: int = 0,
    bytes_total: int = 0,
    flops_total: int = 0,
) -> MetricsReport:
    retain_acc, forget_acc, test_acc = evaluate(network, params, split, forget_spec)
    forget = forget_spec.pooled(split, "forget")
    mia = (
        mia_score(network, params, forget, split.test, seed=seed)
        if forget is not None
        else float("nan")
    )
    return MetricsReport(
        method, retain_acc, forget_acc, test_acc, mia, bytes_total, flops_total
    )
