"""Command-line entry point.

Verbs:
    run <config>       execute a scenario, write reports and figures
    validate <config>  schema + cross-field checks without running
    list               print the bundled scenario catalog

A bundled scenario name (see ``list``) can stand in for a config path.
Exit codes: 0 ok, 2 configuration error, 3 runtime divergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..fed import DivergenceError
from .configio import ConfigError, describe_schema, load_config, validate_config
from .scenarios import list_scenarios, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DIVERGENCE = 3


def _resolve_config(token: str, overrides: dict):
    if Path(token).exists():
        cfg = load_config(token)
    else:
        try:
            cfg = load_scenario(token)
        except KeyError as exc:
            raise ConfigError(str(exc)) from None
    if overrides:
        raw = dict(cfg.values)
        raw.update(overrides)
        cfg = validate_config(raw)
    return cfg


def _overrides_from_args(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None):
        overrides["seeds"] = [int(s) for s in args.seed.split(",")]
    if getattr(args, "out", None):
        overrides["output.dir"] = args.out
    if getattr(args, "threads", None):
        overrides["fed.threads"] = args.threads
    if getattr(args, "max_rounds", None) is not None:
        overrides["fed.rounds"] = args.max_rounds
        overrides["fed.unlearn_rounds"] = args.max_rounds
    if getattr(args, "no_figures", False):
        overrides["output.figures"] = False
    return overrides


def cmd_run(args) -> int:
    from .report import write_all
    from .runner import run_scenario

    cfg = _resolve_config(args.config, _overrides_from_args(args))
    result = run_scenario(cfg)
    written = write_all(result, cfg["output.dir"], figures=cfg["output.figures"])
    for seed_result in result.seeds:
        for method in result.strategy_order:
            if method not in seed_result.reports:
                continue
            r = seed_result.reports[method]
            print(
                f"seed {seed_result.seed} {method:24s} retain {r.retain_acc:6.2f} "
                f"forget {r.forget_acc:6.2f} test {r.test_acc:6.2f} mia {r.mia:6.2f} "
                f"gap {r.avg_gap:6.2f} rounds {seed_result.rounds.get(method, 0):4d}"
            )
    print("wrote:")
    for path in written:
        print(f"  {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    _resolve_config(args.config, {})
    print(f"{args.config}: ok")
    return EXIT_OK


def cmd_list(_args) -> int:
    entries = list_scenarios()
    width = max(len(e.name) for e in entries)
    for entry in entries:
        print(f"{entry.name:<{width}}  {entry.description}")
    return EXIT_OK


def cmd_schema(_args) -> int:
    print(describe_schema())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedneg",
        description="Deterministic federated-unlearning simulator (weight negation).",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config", help="config file path or bundled scenario name")
    run.add_argument("--seed", help="comma-separated seed list override")
    run.add_argument("--out", help="output directory override")
    run.add_argument("--threads", type=int, help="client-update thread count")
    run.add_argument("--max-rounds", type=int, help="cap training and unlearning rounds")
    run.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    run.set_defaults(fn=cmd_run)

    val = sub.add_parser("validate", help="check a config without running")
    val.add_argument("config")
    val.set_defaults(fn=cmd_validate)

    lst = sub.add_parser("list", help="print the bundled scenario catalog")
    lst.set_defaults(fn=cmd_list)

    schema = sub.add_parser("schema", help="print every config key with its default")
    schema.set_defaults(fn=cmd_schema)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE


if __name__ == "__main__":
    sys.exit(main())
