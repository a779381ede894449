"""Experiment runner: config parsing, scenario orchestration, reporting."""

from .configio import ConfigError, ExperimentConfig, load_config, parse_config_text, validate_config
from .runner import ScenarioResult, SeedResult, run_scenario, run_seed
from .scenarios import ScenarioEntry, list_scenarios, load_scenario

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ScenarioEntry",
    "ScenarioResult",
    "SeedResult",
    "list_scenarios",
    "load_config",
    "load_scenario",
    "parse_config_text",
    "run_scenario",
    "run_seed",
    "validate_config",
]
