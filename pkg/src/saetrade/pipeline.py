"""End-to-end runs: ingest, walk-forward fit/predict, backtest, report.

Outputs are staged in a temporary sibling directory and moved into place
only when the run succeeds, so a failed run leaves nothing behind.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
import shutil
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from saetrade import backtest, metrics
from saetrade.config import ConfigError, RunConfig
from saetrade.ingest import BarSeries, align_features, format_timestamp, load_bars, load_feature, resample
from saetrade.walkforward import WalkForwardResult, bars_per_month, make_splits, run_walkforward

logger = logging.getLogger(__name__)

HEAT_METRICS = ("IR", "IR_star2", "ARC", "ASD", "MDD", "MLD", "cumulative_return")


class RunError(RuntimeError):
    pass


@dataclass
class AssetRun:
    symbol: str
    bars: BarSeries
    walk: WalkForwardResult
    equity: backtest.EquityCurve
    trades: list
    report: metrics.PerfReport


def _header(cfg: RunConfig) -> list[str]:
    return [f"seed={cfg.seed}", f"config_sha256={cfg.digest()}"]


def load_inputs(cfg: RunConfig):
    """Bars per asset (resampled if asked) plus raw feature series."""
    paths = cfg["data.bars"]
    if not paths:
        raise ConfigError("data.bars lists no input files")
    symbols = cfg["data.symbols"] or [Path(p).stem for p in paths]
    assets = []
    for sym, p in zip(symbols, paths):
        bars = load_bars(p, sym)
        if cfg["data.frequency"] is not None:
            bars = resample(bars, int(cfg["data.frequency"]))
        assets.append(bars)
    features = {name: load_feature(p) for name, p in sorted(cfg["data.features"].items())}
    return assets, features


def _feature_frame(bars: BarSeries, features: Mapping, include_close: bool):
    feats = dict(features)
    if include_close:
        feats = {"log_close": (bars.timestamps, np.log(bars.close)), **feats}
    if not feats:
        raise ConfigError("no features: set data.features or data.include_close")
    return align_features(bars, feats)


def run_asset(cfg: RunConfig, bars: BarSeries, features: Mapping, cost: backtest.CostModel) -> AssetRun:
    frame = _feature_frame(bars, features, cfg["data.include_close"])
    period = cfg["walkforward.period"] or bars_per_month(bars.frequency, cfg["walkforward.minutes_per_day"])
    plan = make_splits(len(frame), period, cfg["walkforward.max_train_periods"], cfg["walkforward.initial"])
    walk = run_walkforward(bars, frame, plan, cfg.fracdiff_settings(), cfg.target(),
                           cfg.sae_config(len(frame.names)), cfg.seed, cfg.phi_params(), cfg.search_settings())
    idx = frame.bar_index[walk.rows]
    oos = bars.slice(int(idx[0]), int(idx[-1]) + 1)
    initial = cfg["backtest.initial"]
    if cfg.execution() == "tbl":
        res = backtest.simulate_tbl(walk.predictions, oos, cfg.label_spec(), cost, initial,
                                    cfg["label.use_high_low"])
        equity, trades = res.equity, res.trades
    else:
        mode = {1: "regression-sign", 2: "binary", 3: "binary", 4: "ternary"}[cfg.approach]
        pos = backtest.to_positions(walk.predictions, mode)
        equity = backtest.simulate(pos, oos.close, cost, initial, oos.timestamps)
        trades = backtest.position_trades(pos, oos, cost)
    mcfg = cfg.metric_config(bars.frequency)
    report = metrics.evaluate(equity, mcfg, comparison_tests(cfg, walk, oos, equity, mcfg))
    return AssetRun(bars.symbol, bars, walk, equity, trades, report)


def comparison_tests(cfg, walk: WalkForwardResult, oos: BarSeries, equity, mcfg) -> dict:
    """DM and IR tests of the strategy against buy-and-hold on the same bars."""
    out: dict[str, Any] = {}
    c = oos.close
    nxt = np.sign(c[1:] / c[:-1] - 1.0)
    pred = np.asarray(walk.predictions[:-1], dtype=float)
    if cfg.approach == 1:
        realized = c[1:] / c[:-1] - 1.0
        la, lb = (pred - realized) ** 2, realized ** 2
    else:
        la = (np.sign(pred) != nxt).astype(float)
        lb = (nxt != 1.0).astype(float)
    bh = backtest.simulate(np.ones(len(c), dtype=np.int64), c, initial=equity.initial).returns()
    for name, fn, args in (("dm", metrics.dm_test, (la, lb, True)),
                           ("ir_ttest", metrics.ir_ttest, (equity.returns(), bh, mcfg.periods_per_year, True))):
        try:
            stat, p = fn(*args)
            out[name] = {"statistic": stat, "p_value": p}
        except ValueError as exc:
            out[name] = {"statistic": None, "p_value": None, "error": str(exc)}
    return out


def _write_predictions(path, walk: WalkForwardResult, header):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["timestamp", "prediction"])
        for ts, p in zip(walk.timestamps, walk.predictions):
            w.writerow([format_timestamp(ts), repr(p.item())])


def _write_json(path, payload: dict):
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _report_payload(cfg: RunConfig, report: metrics.PerfReport, **extra) -> dict:
    return {"seed": cfg.seed, "config_sha256": cfg.digest(), "approach": cfg.approach,
            "metrics": asdict(report), **extra}


def _write_asset(dir_: Path, cfg: RunConfig, run: AssetRun):
    header = _header(cfg)
    dir_.mkdir(parents=True, exist_ok=True)
    _write_predictions(dir_ / "predictions.csv", run.walk, header)
    _write_json(dir_ / "splits.json", {"seed": cfg.seed, "config_sha256": cfg.digest(), "symbol": run.symbol,
                                        "splits": [r.to_dict() for r in run.walk.splits]})
    backtest.write_equity(run.equity, dir_ / "equity.csv", header)
    backtest.write_trades(run.trades, dir_ / "trades.csv", header)
    _write_json(dir_ / "report.json", _report_payload(cfg, run.report, symbol=run.symbol))
    (dir_ / "report.txt").write_text("".join(f"# {h}\n" for h in header) + run.report.to_table(run.symbol),
                                     encoding="utf-8")


def run_approach(cfg: RunConfig, out_dir=None) -> dict:
    """Execute one configured run and write its artifacts under ``out_dir``.

    Returns the portfolio metrics as a dict.
    """
    out = Path(out_dir if out_dir is not None else cfg["run.out"])
    assets, features = load_inputs(cfg)
    costs = cfg.cost_models(len(assets))
    runs = []
    for bars, cost in zip(assets, costs):
        try:
            runs.append(run_asset(cfg, bars, features, cost))
        except Exception as exc:
            raise RunError(f"{bars.symbol}: {type(exc).__module__}.{type(exc).__name__}: {exc}") from exc
    portfolio = metrics.portfolio_equal_weight([r.equity for r in runs])
    freq = assets[0].frequency
    preport = metrics.evaluate(portfolio, cfg.metric_config(freq))

    out.parent.mkdir(parents=True, exist_ok=True)
    stage = Path(tempfile.mkdtemp(prefix=f".{out.name}.", dir=out.parent))
    try:
        for r in runs:
            _write_asset(stage / r.symbol, cfg, r)
        header = _header(cfg)
        backtest.write_equity(portfolio, stage / "equity.csv", header)
        payload = _report_payload(cfg, preport, symbols=[r.symbol for r in runs],
                                  assets={r.symbol: metrics_dict(r.report) for r in runs})
        _write_json(stage / "report.json", payload)
        table = preport.to_table("portfolio")
        (stage / "report.txt").write_text("".join(f"# {h}\n" for h in header) + table, encoding="utf-8")
        (stage / "config.effective").write_text("".join(f"# {h}\n" for h in header) + cfg.dumps(),
                                                encoding="utf-8")
        if out.exists():
            shutil.rmtree(out)
        os.replace(stage, out)
    except BaseException:
        shutil.rmtree(stage, ignore_errors=True)
        raise
    logger.info("run written to %s", out)
    return metrics_dict(preport)


def metrics_dict(report: metrics.PerfReport) -> dict:
    return asdict(report)


# ----------------------------------------------------------------------
# sweeps

def parse_grid(mapping: Mapping[str, Any]) -> list[tuple[str, list]]:
    grid = []
    for key, vals in mapping.items():
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"grid entry {key} must be a nonempty list")
        grid.append((key, vals))
    return grid


def grid_cells(cfg: RunConfig, grid: Sequence[tuple[str, list]]) -> list[RunConfig]:
    """One config per grid cell; cell ``i`` runs with seed ``seed ^ i``.

    All cells are validated before anything runs.
    """
    keys = [k for k, _ in grid]
    cells = []
    for i, combo in enumerate(itertools.product(*(v for _, v in grid))):
        overrides = dict(zip(keys, combo))
        overrides["run.seed"] = cfg.seed ^ i
        cells.append(cfg.with_overrides(overrides))
    return cells


def _run_cell(args):
    i, values, out = args
    cell = RunConfig(values)
    try:
        return i, run_approach(cell, out), None
    except Exception as exc:  # reported in the heat table
        logger.error("cell %d failed: %s", i, exc)
        return i, None, f"{type(exc).__name__}: {exc}"


def sweep(cfg: RunConfig, grid: Sequence[tuple[str, list]], out_dir, jobs: int = 1) -> Path:
    """Run every grid cell and write ``heat_table.csv``; returns its path."""
    out = Path(out_dir)
    cells = grid_cells(cfg, grid)
    out.mkdir(parents=True, exist_ok=True)
    tasks = [(i, c.values, str(out / f"cell_{i:03d}")) for i, c in enumerate(cells)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = sorted(pool.map(_run_cell, tasks))
    else:
        results = [_run_cell(t) for t in tasks]
    keys = [k for k, _ in grid]
    buf = io.StringIO()
    for h in _header(cfg):
        buf.write(f"# {h}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(keys + ["seed"] + list(HEAT_METRICS) + ["error"])
    for (i, rep, err), cell in zip(results, cells):
        row = [format_cell(cell[k]) for k in keys] + [cell.seed]
        if rep is None:
            row += [""] * len(HEAT_METRICS) + [err]
        else:
            vals = {"IR": rep["ir"], "IR_star2": rep["ir_star2"], "ARC": rep["arc"], "ASD": rep["asd"],
                    "MDD": rep["mdd"], "MLD": rep["mld"], "cumulative_return": rep["cumulative_return"]}
            row += ["" if vals[m] is None else repr(vals[m]) for m in HEAT_METRICS] + [""]
        w.writerow(row)
    path = out / "heat_table.csv"
    tmp = out / ".heat_table.csv.tmp"
    tmp.write_text(buf.getvalue(), encoding="utf-8")
    os.replace(tmp, path)
    return path


def format_cell(value) -> str:
    return value if isinstance(value, str) else json.dumps(value)
