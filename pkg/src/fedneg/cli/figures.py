"""Figure rendering alongside the delimited output.

The CSVs remain the contract; these PNGs are the same numbers drawn for
humans. Everything routes through the Agg backend so headless runs work.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .runner import ScenarioResult

_COLORS = {
    "retrain": "#444444",
    "not": "#c0392b",
    "ft": "#2980b9",
    "randl": "#8e44ad",
    "ga": "#16a085",
    "nr_freeze": "#d35400",
}


def _color(method: str):
    return _COLORS.get(method, "#7f8c8d")


def _save(fig, path: Path):
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
    return path


def render_gap_bars(result: ScenarioResult, path: Path):
    methods = [m for m in result.strategy_order if m != "retrain"]
    if not methods:
        return None
    gaps = []
    for m in methods:
        vals = [s.reports[m].avg_gap for s in result.seeds if m in s.reports]
        gaps.append(np.mean(vals) if vals else math.nan)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(methods, gaps, color=[_color(m) for m in methods])
    ax.set_ylabel("avg gap vs retrain (points)")
    ax.set_title("Unlearning quality (lower is better)")
    ax.grid(axis="y", alpha=0.3)
    return _save(fig, path)


def render_cost_curves(result: ScenarioResult, path: Path):
    fig, ax = plt.subplots(figsize=(5.5, 3.2))
    drew = False
    seed_result = result.seeds[0]
    for method in result.strategy_order:
        ledger = seed_result.ledgers.get(method)
        if ledger is None:
            continue
        rounds = [row.round for row in ledger.rows]
        cum = np.cumsum([row.bytes for row in ledger.rows])
        if not rounds:
            continue
        ax.step(rounds, cum / 1e6, where="post", label=method, color=_color(method))
        drew = True
    if not drew:
        plt.close(fig)
        return None
    ax.set_xlabel("unlearning round")
    ax.set_ylabel("cumulative MB exchanged")
    ax.set_title(f"Communication (seed {seed_result.seed})")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def render_cka_profiles(result: ScenarioResult, path: Path):
    if not any(s.cka_origin for s in result.seeds):
        return None
    layers = list(result.layer_names)
    x = np.arange(len(layers))
    fig, ax = plt.subplots(figsize=(5.5, 3.4))
    for method in result.strategy_order:
        profiles = [
            [s.cka_origin[method][layer] for layer in layers]
            for s in result.seeds
            if method in s.cka_origin
        ]
        if not profiles:
            continue
        mean = np.mean(profiles, axis=0)
        ax.plot(x, mean, marker="o", label=f"{method} (final)", color=_color(method))
    start = [
        [s.cka_start[layer] for layer in layers] for s in result.seeds if s.cka_start
    ]
    if start:
        ax.plot(x, np.mean(start, axis=0), marker="s", linestyle="--",
                color="#c0392b", alpha=0.5, label="not vs ft (start)")
    ax.set_xticks(x, layers)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("CKA similarity")
    ax.set_title("Representation similarity by depth")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def render_spectral_curves(result: ScenarioResult, path: Path):
    if not any(s.spectral for s in result.seeds):
        return None
    fig, ax = plt.subplots(figsize=(5, 3.4))
    styles = {"not_start": ("#c0392b", "-"), "retrain_start": ("#444444", "--")}
    for label in ("not_start", "retrain_start"):
        curves = [s.spectral[label] for s in result.seeds if label in s.spectral]
        if not curves:
            continue
        alphas = curves[0].alphas
        mean = np.mean([c.psi for c in curves], axis=0)
        color, ls = styles.get(label, ("#7f8c8d", "-"))
        ax.plot(alphas, mean, color=color, linestyle=ls, label=label)
    ax.plot([0, 1], [0, 1], color="#bbbbbb", lw=0.8, label="isotropic")
    ax.axhline(0.95, color="#999999", lw=0.6, linestyle=":")
    ax.set_xlabel("fraction of leading eigendirections")
    ax.set_ylabel("cumulative spectral mass")
    ax.set_title("Gradient-covariance spectral content")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    return _save(fig, path)


def render_backdoor_bars(result: ScenarioResult, path: Path):
    if not any(s.backdoor for s in result.seeds):
        return None
    labels = ["pre"] + [m for m in result.strategy_order]
    means = []
    for label in labels:
        vals = [s.backdoor[label] for s in result.seeds if label in s.backdoor]
        means.append(np.mean(vals) if vals else math.nan)
    fig, ax = plt.subplots(figsize=(5, 3.2))
    ax.bar(labels, means, color=["#7f8c8d"] + [_color(m) for m in labels[1:]])
    ax.set_ylabel("trigger success (%)")
    ax.set_title("Backdoor before/after unlearning")
    ax.grid(axis="y", alpha=0.3)
    return _save(fig, path)


def render_figures(result: ScenarioResult, fig_dir) -> list[Path]:
    fig_dir = Path(fig_dir)
    fig_dir.mkdir(parents=True, exist_ok=True)
    out = []
    for name, renderer in (
        ("avg_gap.png", render_gap_bars),
        ("costs.png", render_cost_curves),
        ("cka.png", render_cka_profiles),
        ("spectral.png", render_spectral_curves),
        ("backdoor.png", render_backdoor_bars),
    ):
        written = renderer(result, fig_dir / name)
        if written is not None:
            out.append(written)
    return out
