"""Synthetic bars and features with a known, learnable signal.

The log return of bar ``t+1`` loads on a persistent AR(1) factor observed
as the ``signal`` feature at bar ``t``. A random-walk ``level`` feature and
a white-noise ``noise`` feature carry no information.
"""

from __future__ import annotations

import argparse
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from saetrade.ingest import BarSeries, format_timestamp, write_bars

logger = logging.getLogger(__name__)

START = 1_704_067_200  # 2024-01-01T00:00:00Z


@dataclass(frozen=True)
class SyntheticSpec:
    n_bars: int = 3000
    frequency: int = 5
    phi: float = 0.95
    loading: float = 0.0006
    vol: float = 0.001
    start_price: float = 100.0


def make_synthetic(spec: SyntheticSpec = SyntheticSpec(), seed: int = 0):
    """Generate one instrument plus its feature series.

    Returns:
        ``(bars, features)`` where ``features`` maps a name to
        ``(timestamps, values)``.
    """
    rng = np.random.default_rng(seed)
    n = spec.n_bars
    shocks = rng.standard_normal(n)
    s = np.empty(n)
    s[0] = shocks[0]
    gain = np.sqrt(1 - spec.phi ** 2)
    for t in range(1, n):
        s[t] = spec.phi * s[t - 1] + gain * shocks[t]
    r = np.r_[0.0, spec.loading * s[:-1] + spec.vol * rng.standard_normal(n - 1)]
    close = spec.start_price * np.exp(np.cumsum(r))
    open_ = np.r_[spec.start_price, close[:-1]]
    wick = spec.vol * np.abs(rng.standard_normal((2, n))) * 0.5
    high = np.maximum(open_, close) * (1 + wick[0])
    low = np.minimum(open_, close) * (1 - wick[1])
    ts = START + 60 * spec.frequency * np.arange(n, dtype=np.int64)
    volume = np.round(1000 + 100 * np.abs(rng.standard_normal(n)))
    bars = BarSeries("SYN", spec.frequency, ts, open_, high, low, close, volume).validate()
    features = {
        "signal": (ts, s),
        "level": (ts, np.cumsum(rng.standard_normal(n))),
        "noise": (ts, rng.standard_normal(n)),
    }
    return bars, features


def write_synthetic(out_dir, spec: SyntheticSpec = SyntheticSpec(), seed: int = 0, symbol: str = "SYN") -> dict:
    """Write ``bars.csv`` and one ``<feature>.csv`` per feature; returns the paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    bars, features = make_synthetic(spec, seed)
    paths = {"bars": str(out / f"{symbol}.csv")}
    write_bars(bars, paths["bars"], [f"synthetic seed={seed}"])
    for name, (ts, vals) in features.items():
        p = out / f"{name}.csv"
        with open(p, "w", encoding="utf-8") as fh:
            fh.write("timestamp,value\n")
            for t, v in zip(ts, vals):
                fh.write(f"{format_timestamp(t)},{float(v)!r}\n")
        paths[name] = str(p)
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Write a synthetic bar/feature dataset.")
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--bars", type=int, default=SyntheticSpec.n_bars)
    parser.add_argument("--frequency", type=int, default=SyntheticSpec.frequency)
    args = parser.parse_args(argv)
    paths = write_synthetic(args.out, SyntheticSpec(n_bars=args.bars, frequency=args.frequency), args.seed)
    for name, p in paths.items():
        print(f"{name}: {p}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
