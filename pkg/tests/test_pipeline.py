import filecmp
import json

import numpy as np
import pytest

from saetrade import cli, pipeline
from saetrade.config import ConfigError, RunConfig, parse_text


def _same_tree(a, b):
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.diff_files or cmp.funny_files:
        return False
    return all(_same_tree(a / d, b / d) for d in cmp.common_dirs)


def test_parse_text():
    vals = parse_text("# comment\nrun.approach = 3\nlabel.lam=0.001\nmetrics.market = crypto\n")
    assert vals == {"run.approach": 3, "label.lam": 0.001, "metrics.market": "crypto"}
    with pytest.raises(ConfigError):
        parse_text("nonsense line")


@pytest.mark.parametrize("approach,mode,act,ae,noise", [(1, "regression", "tanh", False, 0.0),
                                                        (2, "binary", "tanh", False, 0.0),
                                                        (3, "binary", "swish", True, 0.05),
                                                        (4, "ternary", "swish", True, 0.05)])
def test_approach_defaults(approach, mode, act, ae, noise):
    cfg = RunConfig.from_mapping({"run.approach": approach})
    s = cfg.sae_config(3)
    assert (s.output_mode, s.activation, s.autoencoder, s.noise_rate) == (mode, act, ae, noise)
    assert (s.epochs, s.learning_rate, s.encoder_layers) == (50, 0.01, 1)


@pytest.mark.parametrize("overrides", [{"run.approach": 5}, {"no.such": 1},
                                       {"run.approach": 1, "sae.output_mode": "binary"},
                                       {"run.approach": 2, "sae.noise_rate": 0.05},
                                       {"run.approach": 3, "sae.autoencoder": False},
                                       {"run.approach": 2, "backtest.execution": "tbl"},
                                       {"search.space": {"run.seed": [1]}},
                                       {"phi.delta": 0.001}])
def test_invalid_configs(overrides):
    with pytest.raises(ConfigError):
        RunConfig.from_mapping(overrides)


def test_config_round_trip(tmp_path):
    cfg = RunConfig.from_mapping({"run.approach": 3, "label.lam": 0.001, "data.bars": ["/x/a.csv"]})
    path = tmp_path / "c.cfg"
    path.write_text(cfg.dumps())
    back = RunConfig.load(path)
    assert back.dumps() == cfg.dumps()
    assert back.digest() == cfg.digest()


def test_run_writes_artifacts_and_is_deterministic(write_run_config, tmp_path):
    cfg_path = write_run_config(approach=4)
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "b")]) == 0
    assert _same_tree(tmp_path / "a", tmp_path / "b")
    sym = tmp_path / "a" / "SYN"
    for name in ("predictions.csv", "splits.json", "equity.csv", "trades.csv", "report.json", "report.txt"):
        assert (sym / name).exists()
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["seed"] == 0 and len(report["config_sha256"]) == 64
    head = (sym / "equity.csv").read_text().splitlines()[:2]
    assert head == ["# seed=0", f"# config_sha256={report['config_sha256']}"]


def test_effective_config_reproduces_run(write_run_config, tmp_path):
    cfg_path = write_run_config(approach=2)
    cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "a")])
    eff = tmp_path / "a" / "config.effective"
    cli.main(["run", "--config", str(eff), "--out", str(tmp_path / "b")])
    assert _same_tree(tmp_path / "a", tmp_path / "b")


@pytest.mark.parametrize("approach", [1, 2, 3])
def test_other_approaches_report_finite_ir(write_run_config, tmp_path, approach):
    cfg = RunConfig.load(write_run_config(approach=approach))
    rep = pipeline.run_approach(cfg, tmp_path / "o")
    assert rep["ir"] is not None and np.isfinite(rep["ir"])


def test_failed_run_leaves_nothing(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp,open,high,low,close\n100,1,1,1,1\n")
    cfg = RunConfig.from_mapping({"data.bars": [str(bad)]})
    with pytest.raises(Exception):
        pipeline.run_approach(cfg, tmp_path / "out")
    assert not (tmp_path / "out").exists()
    assert list(tmp_path.iterdir()) == [bad]


def test_sweep_table_and_determinism(write_run_config, tmp_path):
    cfg_path = write_run_config(approach=4, extra="sae.epochs = 3")
    grid = tmp_path / "grid.cfg"
    grid.write_text("label.lam = [0.002, 0.003, 0.004]\nlabel.n = [5, 10, 20]\n")
    args = ["sweep", "--config", str(cfg_path), "--grid", str(grid), "--jobs", "3"]
    assert cli.main(args + ["--out", str(tmp_path / "s1")]) == 0
    assert cli.main(args[:-2] + ["--jobs", "1", "--out", str(tmp_path / "s2")]) == 0
    t1 = (tmp_path / "s1" / "heat_table.csv").read_text()
    assert t1 == (tmp_path / "s2" / "heat_table.csv").read_text()
    rows = [ln for ln in t1.splitlines() if not ln.startswith("#")]
    assert rows[0].startswith("label.lam,label.n,seed,IR,IR_star2")
    assert len(rows) == 10
    assert [r.split(",")[2] for r in rows[1:]] == [str(0 ^ i) for i in range(9)]


def test_degenerate_sweep_matches_run(write_run_config, tmp_path):
    cfg_path = write_run_config(approach=4, extra="sae.epochs = 3")
    cfg = RunConfig.load(cfg_path)
    pipeline.sweep(cfg, [("label.lam", [0.003])], tmp_path / "s")
    pipeline.run_approach(cfg, tmp_path / "r")
    assert _same_tree(tmp_path / "s" / "cell_000", tmp_path / "r")


def test_sweep_unknown_key_fails_before_running(write_run_config, tmp_path):
    cfg = RunConfig.load(write_run_config())
    with pytest.raises(ConfigError):
        pipeline.sweep(cfg, [("label.lambda", [0.1])], tmp_path / "s")
    assert not (tmp_path / "s").exists()


def test_cli_data_commands(write_run_config, tmp_path):
    cfg = RunConfig.load(write_run_config())
    bars = cfg["data.bars"][0]
    assert cli.main(["ingest", "--bars", bars, "--resample", "15", "--out", str(tmp_path / "r.csv")]) == 0
    assert len((tmp_path / "r.csv").read_text().splitlines()) == 1 + 500
    assert cli.main(["label", "--bars", bars, "--lambda", "0.003", "--horizon", "10", "--use-high-low",
                     "--out", str(tmp_path / "l.csv")]) == 0
    assert (tmp_path / "l.csv").read_text().splitlines()[0] == "timestamp,label"
    feat = cfg["data.features"]["level"]
    assert cli.main(["fracdiff-scan", "--feature", f"level={feat}", "--tau", "1e-3",
                     "--out", str(tmp_path / "fd.csv")]) == 0
    lines = (tmp_path / "fd.csv").read_text().splitlines()
    assert lines[0] == "feature,d,adf_stat,p_value,corr"
    assert len(lines) == 22


def test_cli_report(write_run_config, tmp_path):
    cfg_path = write_run_config(approach=2)
    cli.main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "a")])
    eq = tmp_path / "a" / "SYN" / "equity.csv"
    assert cli.main(["report", "--equity", str(eq), str(eq), "--market", "crypto",
                     "--trades", str(tmp_path / "a" / "SYN" / "trades.csv"), "--out", str(tmp_path / "rep")]) == 0
    payload = json.loads((tmp_path / "rep" / "report.json").read_text())
    assert "portfolio" in payload and "trades" in payload
    assert "IR**" in (tmp_path / "rep" / "report.txt").read_text()


def test_cli_reports_errors(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("run.approach = 5\n")
    assert cli.main(["run", "--config", str(cfg)]) == 2
