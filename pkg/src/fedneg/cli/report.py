"""Report serialization. CSV/JSON bytes are a pure function of the
results: fixed column orders, fixed float formatting, sorted JSON keys,
newline line terminators. Re-running an identical scenario writes
identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .. import __version__
from .runner import ScenarioResult

REPORT_COLUMNS = ["method", "retain", "forget", "test", "mia", "avg_gap", "bytes", "flops"]


def _f(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    return f"{value:.6f}"


def _mean(values):
    values = [v for v in values if v is not None]
    if not values or any(isinstance(v, float) and math.isnan(v) for v in values):
        return float("nan") if values else None
    return float(np.mean(values))


def write_report_csv(result: ScenarioResult, path: Path) -> None:
    """The contract file: per-method means over seeds, fixed column order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for method in result.strategy_order:
            rows = [s.reports[method] for s in result.seeds if method in s.reports]
            writer.writerow(
                [
                    method,
                    _f(_mean([r.retain_acc for r in rows])),
                    _f(_mean([r.forget_acc for r in rows])),
                    _f(_mean([r.test_acc for r in rows])),
                    _f(_mean([r.mia for r in rows])),
                    _f(_mean([r.avg_gap for r in rows])),
                    _f(_mean([float(r.bytes) for r in rows])),
                    _f(_mean([float(r.flops) for r in rows])),
                ]
            )


def write_report_by_seed_csv(result: ScenarioResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["seed"] + REPORT_COLUMNS)
        for seed_result in result.seeds:
            for method in result.strategy_order:
                if method not in seed_result.reports:
                    continue
                r = seed_result.reports[method]
                writer.writerow(
                    [seed_result.seed, method, _f(r.retain_acc), _f(r.forget_acc),
                     _f(r.test_acc), _f(r.mia), _f(r.avg_gap), r.bytes, r.flops]
                )


def write_costs_csv(result: ScenarioResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "seed", "round", "bytes", "flops", "phase"])
        for seed_result in result.seeds:
            for method in result.strategy_order:
                ledger = seed_result.ledgers.get(method)
                if ledger is None:
                    continue
                for row in ledger.rows:
                    writer.writerow([method, seed_result.seed, row.round, row.bytes, row.flops, row.phase])


def write_cka_csv(result: ScenarioResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["profile", "seed", "layer", "cka"])
        for seed_result in result.seeds:
            for layer in result.layer_names:
                if layer in seed_result.cka_start:
                    writer.writerow(
                        ["not_vs_ft_start", seed_result.seed, layer, _f(seed_result.cka_start[layer])]
                    )
            for method in result.strategy_order:
                profile = seed_result.cka_origin.get(method)
                if profile is None:
                    continue
                for layer in result.layer_names:
                    writer.writerow(
                        [f"origin_final_{method}", seed_result.seed, layer, _f(profile[layer])]
                    )


def write_spectral_csv(result: ScenarioResult, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "seed", "alpha", "psi"])
        for seed_result in result.seeds:
            for label in sorted(seed_result.spectral):
                curve = seed_result.spectral[label]
                for alpha, psi in zip(curve.alphas, curve.psi):
                    writer.writerow([label, seed_result.seed, _f(alpha), _f(psi)])


def write_bound_json(result: ScenarioResult, path: Path) -> None:
    payload = {}
    for seed_result in result.seeds:
        entry = {}
        for method, trace in sorted(seed_result.bound.items()):
            entry[method] = {
                "t_unlearn": trace.t_unlearn,
                "infinite": trace.infinite,
                "lip": trace.lip,
                "loss_decrease": trace.loss_decrease,
                "delta_start": trace.deltas[0],
                "delta_target": trace.delta_target,
                "eps": trace.eps,
                "rounds_to_target": trace.rounds_to_target,
                "rounds_run": seed_result.rounds.get(method),
                "deltas": list(trace.deltas),
                "rounds": list(trace.rounds),
            }
        payload[str(seed_result.seed)] = entry
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_report_json(result: ScenarioResult, path: Path) -> None:
    payload = {
        "version": __version__,
        "strategies": list(result.strategy_order),
        "layers": list(result.layer_names),
        "seeds": {},
    }
    for seed_result in result.seeds:
        entry = {"reports": {}, "rounds": seed_result.rounds}
        for method in result.strategy_order:
            if method not in seed_result.reports:
                continue
            r = seed_result.reports[method]
            entry["reports"][method] = {
                "retain": r.retain_acc,
                "forget": r.forget_acc,
                "test": r.test_acc,
                "mia": r.mia,
                "avg_gap": r.avg_gap,
                "bytes": r.bytes,
                "flops": r.flops,
                "deltas": r.deltas,
            }
        if seed_result.backdoor:
            entry["backdoor_success"] = seed_result.backdoor
        if seed_result.spectral:
            entry["alpha95"] = {
                label: curve.alpha_at(0.95) for label, curve in sorted(seed_result.spectral.items())
            }
            entry["spectral_degenerate"] = {
                label: curve.degenerate for label, curve in sorted(seed_result.spectral.items())
            }
        payload["seeds"][str(seed_result.seed)] = entry

    def default(obj):
        if isinstance(obj, (np.floating, np.integer)):
            return obj.item()
        raise TypeError(f"unserializable {type(obj)}")

    path.write_text(json.dumps(payload, indent=2, sort_keys=True, default=default) + "\n")


def write_all(result: ScenarioResult, out_dir, figures: bool = True) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    def emit(name, writer):
        target = out_dir / name
        writer(result, target)
        written.append(target)

    (out_dir / "config-echo.cfg").write_text(result.config.echo())
    written.append(out_dir / "config-echo.cfg")
    emit("report.csv", write_report_csv)
    emit("report_by_seed.csv", write_report_by_seed_csv)
    emit("costs.csv", write_costs_csv)
    emit("report.json", write_report_json)
    if result.config["analysis.cka"]:
        emit("cka.csv", write_cka_csv)
    if result.config["analysis.spectral"]:
        emit("spectral.csv", write_spectral_csv)
    if result.config["analysis.bound"]:
        emit("bound.json", write_bound_json)
    if figures:
        from .figures import render_figures

        written.extend(render_figures(result, out_dir / "figures"))
    return written
