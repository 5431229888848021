"""Command-line entry point."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from saetrade import backtest, fracdiff, metrics, pipeline
from saetrade.config import ConfigError, RunConfig, parse_text
from saetrade.ingest import format_timestamp, load_bars, load_feature, parse_timestamp, resample, write_bars
from saetrade.labeling import LabelSpec, triple_barrier_labels

logger = logging.getLogger("saetrade")


def _load_config(args) -> RunConfig:
    if args.config is None:
        raise ConfigError("--config is required")
    cfg = RunConfig.load(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["run.out"] = args.out
    return cfg.with_overrides(overrides) if overrides else cfg


def cmd_ingest(args) -> int:
    bars = load_bars(args.bars, args.symbol or Path(args.bars).stem)
    if args.resample:
        bars = resample(bars, args.resample)
    write_bars(bars, args.out)
    print(f"{bars.symbol}: {len(bars)} bars at {bars.frequency} min -> {args.out}")
    return 0


def cmd_label(args) -> int:
    bars = load_bars(args.bars, Path(args.bars).stem)
    spec = LabelSpec(args.lam, args.horizon)
    hl = (bars.high, bars.low) if args.use_high_low else (None, None)
    labels = triple_barrier_labels(bars.close, spec, *hl)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "label"])
        for ts, v in zip(bars.timestamps, labels.values):
            w.writerow([format_timestamp(ts), int(v)])
    counts = {k: int(np.sum(labels.values == k)) for k in (-1, 0, 1)}
    print(f"{len(labels)} labels: {counts}")
    return 0


def cmd_fracdiff_scan(args) -> int:
    series = {}
    for item in args.feature:
        name, _, path = item.partition("=")
        if not path:
            raise ConfigError(f"--feature expects name=path, got {item!r}")
        series[name] = load_feature(path)[1]
    if args.bars:
        bars = load_bars(args.bars, Path(args.bars).stem)
        series["log_close"] = np.log(bars.close)
    if not series:
        raise ConfigError("nothing to scan: give --feature and/or --bars")
    grid = fracdiff.DEFAULT_D_GRID if args.grid is None else [float(v) for v in args.grid.split(",")]
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["feature", "d", "adf_stat", "p_value", "corr"])
        for name, x in series.items():
            rows = fracdiff.scan_d(x, grid, args.tau, args.max_lags, k_max=args.k_max)
            for r in rows:
                w.writerow([name, f"{r.d:.2f}", repr(r.statistic), repr(r.p_value), repr(r.correlation)])
            passing = [r.d for r in rows if r.p_value < args.alpha]
            print(f"{name}: d* = {passing[0] if passing else 'none'} at alpha={args.alpha}")
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    rep = pipeline.run_approach(cfg)
    print(f"approach {cfg.approach}: IR={rep['ir']} IR**={rep['ir_star2']} -> {cfg['run.out']}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    grid = pipeline.parse_grid(parse_text(Path(args.grid).read_text(encoding="utf-8"), args.grid))
    path = pipeline.sweep(cfg, grid, cfg["run.out"], args.jobs)
    print(f"heat table -> {path}")
    return 0


def _read_equity(path) -> backtest.EquityCurve:
    ts, vals = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(ln for ln in fh if not ln.startswith("#"))
        for rec in reader:
            ts.append(parse_timestamp(rec["timestamp"]))
            vals.append(float(rec["value"]))
    return backtest.EquityCurve(np.array(ts, dtype=np.int64), np.array(vals))


def cmd_report(args) -> int:
    curves = [_read_equity(p) for p in args.equity]
    if args.periods_per_year:
        mcfg = metrics.MetricConfig(args.periods_per_year)
    else:
        mcfg = metrics.MetricConfig.for_bars(args.frequency, args.market)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload, tables = {}, []
    for p, c in zip(args.equity, curves):
        rep = metrics.evaluate(c, mcfg)
        payload[str(p)] = json.loads(rep.to_json())
        tables.append(rep.to_table(Path(p).parent.name or Path(p).stem))
    if len(curves) > 1:
        rep = metrics.evaluate(metrics.portfolio_equal_weight(curves), mcfg)
        payload["portfolio"] = json.loads(rep.to_json())
        tables.append(rep.to_table("portfolio"))
    if args.trades:
        reasons: dict[str, int] = {}
        with open(args.trades, newline="", encoding="utf-8") as fh:
            for rec in csv.DictReader(ln for ln in fh if not ln.startswith("#")):
                reasons[rec["exit_reason"]] = reasons.get(rec["exit_reason"], 0) + 1
        payload["trades"] = reasons
    (out / "report.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    (out / "report.txt").write_text("\n".join(tables), encoding="utf-8")
    sys.stdout.write("\n".join(tables))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="saetrade", description="Fractional features, barrier labels and SAE trading.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate (and optionally resample) a bar CSV")
    p.add_argument("--bars", required=True)
    p.add_argument("--symbol")
    p.add_argument("--resample", type=int, help="target frequency in minutes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("label", help="write triple-barrier labels")
    p.add_argument("--bars", required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--use-high-low", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("fracdiff-scan", help="ADF/correlation table over the d grid")
    p.add_argument("--feature", action="append", default=[], metavar="NAME=PATH")
    p.add_argument("--bars", help="also scan the log close of this bar file")
    p.add_argument("--grid", help="comma-separated d values")
    p.add_argument("--tau", type=float, default=fracdiff.DEFAULT_TAU)
    p.add_argument("--k-max", type=int, default=fracdiff.DEFAULT_K_MAX)
    p.add_argument("--max-lags", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fracdiff_scan)

    for name, func, help_ in (("run", cmd_run, "run one configured approach"),
                              ("sweep", cmd_sweep, "run a parameter grid")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True)
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        if name == "sweep":
            p.add_argument("--grid", required=True, help="file of 'dotted.key = [values]' lines")
            p.add_argument("--jobs", type=int, default=1)
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="metrics for equity CSVs")
    p.add_argument("--equity", nargs="+", required=True)
    p.add_argument("--trades")
    p.add_argument("--frequency", type=int, default=5)
    p.add_argument("--market", default="equity", choices=sorted(metrics.MINUTES_PER_YEAR))
    p.add_argument("--periods-per-year", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, RuntimeError, OSError) as exc:
        logger.error("%s failed: %s", args.command, exc)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
