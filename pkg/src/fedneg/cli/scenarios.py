"""Bundled scenario catalog, shipped as package data."""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .configio import ExperimentConfig, parse_config_text, validate_config


@dataclass(frozen=True)
class ScenarioEntry:
    name: str
    description: str
    path: Path


def _scenario_dir():
    return resources.files("fedneg.scenarios")


def list_scenarios() -> list[ScenarioEntry]:
    entries = []
    for item in sorted(_scenario_dir().iterdir(), key=lambda p: p.name):
        if not item.name.endswith(".cfg"):
            continue
        raw = parse_config_text(item.read_text())
        entries.append(
            ScenarioEntry(item.name[: -len(".cfg")], str(raw.get("description", "")), Path(str(item)))
        )
    return entries


def load_scenario(name: str) -> ExperimentConfig:
    target = _scenario_dir() / f"{name}.cfg"
    try:
        text = target.read_text()
    except (FileNotFoundError, OSError):
        known = ", ".join(e.name for e in list_scenarios())
        raise KeyError(f"unknown scenario {name!r} (bundled: {known})") from None
    return validate_config(parse_config_text(text))
