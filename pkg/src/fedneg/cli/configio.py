"""Experiment configuration: a flat key-tree text format with a schema.

Grammar (documented in docs/formats.md): one ``dotted.key = value`` per
line, ``#`` comments, blank lines ignored. Values parse as int, float,
bool (true/false), bare or quoted strings, or comma-separated lists.
Every key has a documented default; unknown keys are errors; the file
must declare ``schema = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


def _parse_scalar(text: str):
    text = text.strip()
    if text.startswith('"') and text.endswith('"') and len(text) >= 2:
        return text[1:-1]
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def parse_config_text(text: str) -> dict:
    """Raw key -> value dict; values may be scalars or lists."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        value = value.strip()
        if value.startswith('"') and value.endswith('"'):
            out[key] = _parse_scalar(value)
        elif "," in value:
            out[key] = [_parse_scalar(v) for v in value.split(",") if v.strip() != ""]
        elif value == "":
            out[key] = []
        else:
            out[key] = _parse_scalar(value)
    return out


# ---------------------------------------------------------------------------
# schema: key -> (type tag, default, help)
# type tags: int, float, bool, str, list[str], list[int]

SCHEMA: dict[str, tuple] = {
    "schema": ("int", None, "config format version; must be 1"),
    "description": ("str", "", "one-line human description of the scenario"),
    # data
    "dataset.kind": ("str", "blobs", "blobs | grid"),
    "dataset.classes": ("int", 4, "number of classes"),
    "dataset.dims": ("int", 8, "blobs: feature dimension"),
    "dataset.side": ("int", 8, "grid: image side length"),
    "dataset.per_class": ("int", 120, "samples drawn per class (train pool + test)"),
    "dataset.test_per_class": ("int", 60, "held-out test samples per class"),
    "dataset.spread": ("float", 0.8, "blobs: cluster standard deviation"),
    "dataset.noise": ("float", 1.0, "grid: pixel noise standard deviation"),
    # partition
    "partition.mode": ("str", "iid", "iid | dirichlet"),
    "partition.beta": ("float", 0.1, "dirichlet concentration"),
    # forgetting
    "forget.mode": ("str", "client_wise", "client_wise | class_wise | instance_wise"),
    "forget.clients": ("list[int]", [0], "client_wise: target clients"),
    "forget.class": ("int", 0, "class_wise: class to forget"),
    "forget.ratio": ("float", 0.1, "instance_wise: forget fraction per client"),
    # model
    "model.kind": ("str", "mlp", "mlp | cnn"),
    "model.hidden": ("int", 48, "mlp: hidden units (tanh)"),
    "model.channels": ("list[int]", [4, 8], "cnn: conv channels (relu + layernorm each)"),
    "model.kernel": ("int", 3, "cnn: kernel side"),
    # federation
    "fed.clients": ("int", 5, "number of clients (all participate each round)"),
    "fed.rounds": ("int", 120, "training rounds"),
    "fed.local_iters": ("int", 2, "local epochs per round"),
    "fed.batch_size": ("int", 8, "local minibatch size"),
    "fed.lr": ("float", 0.1, "SGD learning rate"),
    "fed.momentum": ("float", 0.9, "SGD momentum"),
    "fed.weight_decay": ("float", 0.0, "coupled weight decay"),
    "fed.unlearn_rounds": ("int", 80, "unlearning-phase round cap"),
    "fed.recovery_eps": ("float", 5.0, "stop rule: allowed shortfall below the retrain reference, points"),
    "fed.recovery_patience": ("int", 8, "stop rule: consecutive recovered rounds required"),
    "fed.threads": ("int", 1, "client-update thread pool size"),
    # strategies
    "strategies": ("list[str]", ["retrain", "not", "ft"], "unlearning strategies to run"),
    "unlearn.negate_layers": ("list[str]", [], "layers to negate; empty = first non-norm layer"),
    "unlearn.ga_ascent_rounds": ("int", 1, "ga: ascent rounds before fine-tuning"),
    "unlearn.noise_sigma": ("float", 0.3, "perturb_gaussian_noise: noise scale"),
    "unlearn.scale_factor": ("float", 0.5, "perturb_scale: multiplier"),
    "unlearn.stop_rule": ("str", "reference", "reference | budget"),
    # backdoor
    "backdoor.enabled": ("bool", False, "poison one client and measure trigger success"),
    "backdoor.client": ("int", 0, "poisoned client id"),
    "backdoor.fraction": ("float", 0.8, "fraction of eligible local samples poisoned"),
    "backdoor.target_class": ("int", 0, "label the trigger forces"),
    "backdoor.corner": ("str", "top_left", "trigger placement"),
    # analyses
    "analysis.cka": ("bool", False, "depth profiles at start and final checkpoints"),
    "analysis.spectral": ("bool", False, "gradient-covariance spectral content"),
    "analysis.spectral_batch": ("int", 32, "minibatch size for gradient draws"),
    "analysis.spectral_draws": ("int", 256, "number of gradient draws"),
    "analysis.spectral_subset": ("int", 64, "coordinate subset size (max 256)"),
    "analysis.spectral_subsets": ("int", 4, "number of coordinate subsets"),
    "analysis.bound": ("bool", False, "unlearning-time lower bound per strategy"),
    "analysis.bound_eps": ("float", 0.05, "slack in the bound numerator"),
    "analysis.nrfreeze": ("bool", False, "negate-freeze-reinit harness row"),
    # run control
    "seeds": ("list[int]", [0, 1, 2, 3, 4], "seeds; one full scenario per seed"),
    "output.dir": ("str", "out", "output directory"),
    "output.figures": ("bool", True, "render figures next to the CSV output"),
}

_VALID_STRATEGIES = (
    "retrain",
    "not",
    "ft",
    "randl",
    "ga",
    "perturb_negate",
    "perturb_gaussian_noise",
    "perturb_reinit",
    "perturb_zero",
    "perturb_kernel_flip",
    "perturb_scale",
)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration; ``values`` holds every schema key."""

    values: dict = field(default_factory=dict)

    def __getitem__(self, key: str):
        return self.values[key]

    def echo(self) -> str:
        """Canonical text form; parsing it back yields the same config."""
        lines = [f"schema = {SCHEMA_VERSION}"]
        for key in sorted(self.values):
            if key == "schema":
                continue
            value = self.values[key]
            if isinstance(value, list):
                rendered = ", ".join(_render_scalar(v) for v in value)
            else:
                rendered = _render_scalar(value)
            lines.append(f"{key} = {rendered}")
        return "\n".join(lines) + "\n"


def _render_scalar(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        safe = value and all(c.isalnum() or c in "._-/" for c in value)
        return value if safe else f'"{value}"'
    return str(value)


def _coerce(key: str, value, tag: str):
    def fail(why):
        raise ConfigError(f"{key}: {why}")

    if tag == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            fail(f"expected an integer, got {value!r}")
        return value
    if tag == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            fail(f"expected a number, got {value!r}")
        return float(value)
    if tag == "bool":
        if not isinstance(value, bool):
            fail(f"expected true/false, got {value!r}")
        return value
    if tag == "str":
        if not isinstance(value, str):
            fail(f"expected a string, got {value!r}")
        return value
    if tag == "list[int]":
        items = value if isinstance(value, list) else [value]
        for item in items:
            if isinstance(item, bool) or not isinstance(item, int):
                fail(f"expected a list of integers, got {value!r}")
        return list(items)
    if tag == "list[str]":
        items = value if isinstance(value, list) else [value]
        for item in items:
            if not isinstance(item, str):
                fail(f"expected a list of names, got {value!r}")
        return list(items)
    raise AssertionError(f"unhandled schema tag {tag}")


def validate_config(raw: dict) -> ExperimentConfig:
    """Schema plus cross-field checks; raises ConfigError naming the key."""
    unknown = set(raw) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown keys: {', '.join(sorted(unknown))}")
    if "schema" not in raw:
        raise ConfigError("schema: missing (expected 'schema = 1')")
    values = {}
    for key, (tag, default, _help) in SCHEMA.items():
        if key in raw:
            values[key] = _coerce(key, raw[key], tag)
        else:
            values[key] = default
    if values["schema"] != SCHEMA_VERSION:
        raise ConfigError(f"schema: unsupported version {values['schema']} (expected {SCHEMA_VERSION})")

    _cross_checks(values)
    return ExperimentConfig(values)


def _cross_checks(v: dict) -> None:
    def fail(key, why):
        raise ConfigError(f"{key}: {why}")

    if v["dataset.kind"] not in ("blobs", "grid"):
        fail("dataset.kind", f"unknown kind {v['dataset.kind']!r}")
    if v["dataset.classes"] < 2:
        fail("dataset.classes", "need at least 2 classes")
    if not 0 < v["dataset.test_per_class"] < v["dataset.per_class"]:
        fail("dataset.test_per_class", "must leave at least one training sample per class")
    if v["dataset.kind"] == "grid" and v["dataset.side"] < 6:
        fail("dataset.side", "grid images need side >= 6")
    if v["partition.mode"] not in ("iid", "dirichlet"):
        fail("partition.mode", f"unknown mode {v['partition.mode']!r}")
    if v["partition.beta"] <= 0:
        fail("partition.beta", "must be positive")

    if v["forget.mode"] not in ("client_wise", "class_wise", "instance_wise"):
        fail("forget.mode", f"unknown mode {v['forget.mode']!r}")
    if v["forget.mode"] == "client_wise":
        bad = [k for k in v["forget.clients"] if not 0 <= k < v["fed.clients"]]
        if bad:
            fail("forget.clients", f"clients out of range: {bad}")
        if len(set(v["forget.clients"])) >= v["fed.clients"]:
            fail("forget.clients", "cannot forget every client; no retain data would remain")
    if v["forget.mode"] == "class_wise" and not 0 <= v["forget.class"] < v["dataset.classes"]:
        fail("forget.class", "class out of range")
    if v["forget.mode"] == "instance_wise" and not 0.0 < v["forget.ratio"] < 1.0:
        fail("forget.ratio", "must lie strictly between 0 and 1 (1.0 would empty the retain set)")

    if v["model.kind"] not in ("mlp", "cnn"):
        fail("model.kind", f"unknown kind {v['model.kind']!r}")
    if v["model.kind"] == "cnn" and v["dataset.kind"] != "grid":
        fail("model.kind", "cnn needs grid (image) data")
    if not v["model.channels"]:
        fail("model.channels", "cnn needs at least one conv layer")

    strategies = v["strategies"]
    if not strategies:
        fail("strategies", "need at least one strategy")
    bad = [s for s in strategies if s not in _VALID_STRATEGIES]
    if bad:
        fail("strategies", f"unknown strategies: {bad} (known: {', '.join(_VALID_STRATEGIES)})")
    if len(set(strategies)) != len(strategies):
        fail("strategies", "duplicate strategy names")
    if v["forget.mode"] == "client_wise" and "ga" in strategies:
        fail("strategies", "ga needs forget data on a fine-tuning participant; "
                           "client_wise forgetting provides none")
    if "perturb_kernel_flip" in strategies and v["model.kind"] != "cnn":
        fail("strategies", "perturb_kernel_flip applies only to conv models")
    if v["analysis.cka"]:
        for needed in ("not", "ft", "retrain"):
            if needed not in strategies:
                fail("analysis.cka", f"needs strategy {needed!r} in the run")
    if v["unlearn.stop_rule"] not in ("reference", "budget"):
        fail("unlearn.stop_rule", "expected 'reference' or 'budget'")

    if v["backdoor.enabled"]:
        if v["dataset.kind"] != "grid":
            fail("backdoor.enabled", "triggers need image data (dataset.kind = grid)")
        if not 0 <= v["backdoor.client"] < v["fed.clients"]:
            fail("backdoor.client", "client out of range")
        if not 0.0 < v["backdoor.fraction"] <= 1.0:
            fail("backdoor.fraction", "must lie in (0, 1]")
        if not 0 <= v["backdoor.target_class"] < v["dataset.classes"]:
            fail("backdoor.target_class", "class out of range")
        if v["backdoor.corner"] not in ("top_left", "top_right", "bottom_left", "bottom_right"):
            fail("backdoor.corner", f"unknown corner {v['backdoor.corner']!r}")

    if v["analysis.spectral"]:
        if not 1 <= v["analysis.spectral_subset"] <= 256:
            fail("analysis.spectral_subset", "subset size must lie in [1, 256]")
        if v["analysis.spectral_draws"] < 2:
            fail("analysis.spectral_draws", "need at least 2 draws")
    if not 0.0 <= v["analysis.bound_eps"] < 1.0:
        fail("analysis.bound_eps", "must lie in [0, 1)")

    if not v["seeds"]:
        fail("seeds", "need at least one seed")
    if len(set(v["seeds"])) != len(v["seeds"]):
        fail("seeds", "duplicate seeds")

    for key in ("fed.clients", "fed.batch_size", "fed.threads", "fed.recovery_patience"):
        if v[key] < 1:
            fail(key, "must be positive")
    for key in ("fed.rounds", "fed.unlearn_rounds", "fed.local_iters"):
        if v[key] < 0:
            fail(key, "must be non-negative")
    if v["fed.lr"] <= 0:
        fail("fed.lr", "must be positive")
    if not 0.0 <= v["fed.momentum"] < 1.0:
        fail("fed.momentum", "must lie in [0, 1)")


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return validate_config(parse_config_text(text))


def describe_schema() -> str:
    lines = []
    for key, (tag, default, help_text) in SCHEMA.items():
        lines.append(f"{key:28s} {tag:10s} default={default!r}  {help_text}")
    return "\n".join(lines)
