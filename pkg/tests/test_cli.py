"""Config grammar, schema validation, catalog, runner outputs, exit codes."""

import json
from pathlib import Path

import pytest

from fedneg.cli import (
    ConfigError,
    list_scenarios,
    load_scenario,
    parse_config_text,
    run_scenario,
    validate_config,
)
from fedneg.cli.main import main
from fedneg.cli.report import write_all

SMOKE_OVERRIDES = {
    "schema": 1,
    "dataset.kind": "blobs",
    "dataset.classes": 2,
    "dataset.dims": 4,
    "dataset.per_class": 20,
    "dataset.test_per_class": 8,
    "dataset.spread": 0.4,
    "fed.clients": 2,
    "fed.rounds": 5,
    "fed.local_iters": 1,
    "fed.batch_size": 4,
    "fed.unlearn_rounds": 5,
    "fed.recovery_patience": 2,
    "model.kind": "mlp",
    "model.hidden": 8,
    "seeds": [0],
}


def smoke_config(**extra):
    raw = dict(SMOKE_OVERRIDES)
    raw.update(extra)
    return validate_config(raw)


def test_parser_types_and_comments():
    raw = parse_config_text(
        """
        # comment
        schema = 1
        fed.lr = 0.25        # trailing comment
        seeds = 3, 4, 5
        backdoor.enabled = true
        description = "quoted, with commas"
        unlearn.negate_layers =
        """
    )
    assert raw["schema"] == 1
    assert raw["fed.lr"] == 0.25
    assert raw["seeds"] == [3, 4, 5]
    assert raw["backdoor.enabled"] is True
    assert raw["description"] == "quoted, with commas"
    assert raw["unlearn.negate_layers"] == []


def test_parser_rejects_garbage():
    with pytest.raises(ConfigError):
        parse_config_text("this is not a key value line")
    with pytest.raises(ConfigError):
        parse_config_text("a = 1\na = 2")


def test_unknown_key_is_named():
    with pytest.raises(ConfigError, match="fed.lerning_rate"):
        validate_config({"schema": 1, "fed.lerning_rate": 0.1})


def test_schema_line_required_and_versioned():
    with pytest.raises(ConfigError, match="schema"):
        validate_config({})
    with pytest.raises(ConfigError, match="schema"):
        validate_config({"schema": 99})


def test_forget_ratio_one_rejected():
    with pytest.raises(ConfigError, match="forget.ratio"):
        smoke_config(**{"forget.mode": "instance_wise", "forget.ratio": 1.0})


def test_cross_field_rejections():
    with pytest.raises(ConfigError, match="strategies"):
        smoke_config(strategies=["retrain", "ga"])  # ga in client-wise mode
    with pytest.raises(ConfigError, match="model.kind"):
        smoke_config(**{"model.kind": "cnn"})  # cnn on blobs data
    with pytest.raises(ConfigError, match="forget.clients"):
        smoke_config(**{"forget.clients": [0, 1]})  # all clients forgotten
    with pytest.raises(ConfigError, match="backdoor.enabled"):
        smoke_config(**{"backdoor.enabled": True})  # trigger on vector data


def test_echo_round_trips():
    cfg = smoke_config()
    again = validate_config(parse_config_text(cfg.echo()))
    assert again.values == cfg.values


def test_catalog_nonempty_and_valid():
    entries = list_scenarios()
    assert len(entries) >= 8
    for entry in entries:
        assert entry.description, f"{entry.name} lacks a description"
        cfg = load_scenario(entry.name)
        assert cfg["schema"] == 1


def test_unknown_scenario_listed():
    with pytest.raises(KeyError, match="smoke"):
        load_scenario("não-existe")


def test_smoke_run_emits_declared_files(tmp_path):
    cfg = smoke_config(**{"output.dir": str(tmp_path / "out"), "analysis.bound": True})
    result = run_scenario(cfg)
    written = write_all(result, cfg["output.dir"], figures=True)
    names = {p.name for p in written}
    assert {"config-echo.cfg", "report.csv", "report_by_seed.csv", "costs.csv",
            "report.json", "bound.json"} <= names
    assert any(p.suffix == ".png" for p in written)
    # retrain row has all-zero deltas against itself
    retrain = result.seeds[0].reports["retrain"]
    assert retrain.avg_gap == 0.0
    assert all(d == 0.0 for d in retrain.deltas.values())


def test_rerun_is_byte_identical(tmp_path):
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        cfg = smoke_config(**{"output.dir": str(out)})
        write_all(run_scenario(cfg), out, figures=False)
        outputs.append(out)
    for fname in ("report.csv", "report_by_seed.csv", "costs.csv", "report.json"):
        a = (outputs[0] / fname).read_bytes()
        b = (outputs[1] / fname).read_bytes()
        assert a == b, f"{fname} differs between identical runs"


def test_thread_count_does_not_change_output(tmp_path):
    blobs = {}
    for threads in (1, 3):
        out = tmp_path / f"t{threads}"
        cfg = smoke_config(**{"output.dir": str(out), "fed.threads": threads})
        write_all(run_scenario(cfg), out, figures=False)
        blobs[threads] = (out / "report.csv").read_bytes()
    assert blobs[1] == blobs[3]


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("schema = 1\nnope.nope = 1\n")
    assert main(["validate", str(bad)]) == 2
    good = tmp_path / "good.cfg"
    good.write_text("schema = 1\n")
    assert main(["validate", str(good)]) == 0
    assert main(["list"]) == 0
    capsys.readouterr()


def test_cli_run_with_overrides(tmp_path, capsys):
    cfg_path = tmp_path / "smoke.cfg"
    cfg = smoke_config()
    cfg_path.write_text(cfg.echo())
    out = tmp_path / "result"
    code = main(["run", str(cfg_path), "--out", str(out), "--no-figures", "--seed", "7"])
    assert code == 0
    by_seed = (out / "report_by_seed.csv").read_text()
    assert by_seed.splitlines()[1].startswith("7,")
    capsys.readouterr()


def test_strategy_label_perturb():
    from fedneg.unlearn import Perturbation, Strategy

    s = Strategy("perturb", perturbation=Perturbation("zero", ("hidden",)))
    assert s.label() == "perturb_zero"


def test_cli_divergence_exit_code(tmp_path, capsys):
    # runaway weight decay blows the parameters up geometrically
    cfg_path = tmp_path / "diverge.cfg"
    cfg = smoke_config(**{"fed.weight_decay": 1000.0})
    cfg_path.write_text(cfg.echo())
    code = main(["run", str(cfg_path), "--out", str(tmp_path / "boom"), "--no-figures"])
    assert code == 3
    capsys.readouterr()
