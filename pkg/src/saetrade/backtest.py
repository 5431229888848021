"""Equity-line simulation with per-leg transaction costs.

Orders fill at the bar close they were generated on. Costs are charged per
leg (opening or closing a position) as a multiplicative ``(1 - cost)``
factor, so a long-to-short flip pays two legs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from saetrade.ingest import BarSeries, format_timestamp
from saetrade.labeling import LabelSpec

POSITION_MODES = ("regression-sign", "binary", "ternary")
DEFAULT_CAPITAL = 1000.0


@dataclass(frozen=True)
class CostModel:
    per_side: float = 0.0

    def __post_init__(self):
        if not 0 <= self.per_side < 1:
            raise ValueError(f"per-side cost must lie in [0, 1), got {self.per_side}")

    def factor(self, legs: int) -> float:
        return (1.0 - self.per_side) ** legs


@dataclass(frozen=True)
class EquityCurve:
    timestamps: np.ndarray
    values: np.ndarray

    @property
    def initial(self) -> float:
        return float(self.values[0])

    def __len__(self):
        return len(self.values)

    def returns(self) -> np.ndarray:
        return self.values[1:] / self.values[:-1] - 1.0


@dataclass(frozen=True)
class Trade:
    entry_index: int
    exit_index: int
    entry_ts: int
    exit_ts: int
    direction: int
    exit_reason: str  # "tp", "sl" or "timed"
    gross_return: float
    net_return: float


@dataclass
class TblResult:
    equity: EquityCurve
    trades: list[Trade] = field(default_factory=list)
    dropped_signals: int = 0


def to_positions(predictions, mode: str) -> np.ndarray:
    """Map model output to positions in {-1, 0, +1}.

    ``regression-sign`` follows the sign of the predicted return and holds
    the previous position on an exact zero (flat before any position).
    """
    if mode not in POSITION_MODES:
        raise ValueError(f"mode must be one of {POSITION_MODES}")
    p = np.asarray(predictions)
    if mode == "regression-sign":
        p = p.astype(float)
        if not np.all(np.isfinite(p)):
            raise ValueError("regression predictions must be finite")
        out = np.sign(p).astype(np.int64)
        for t in range(1, len(out)):
            if out[t] == 0:
                out[t] = out[t - 1]
        return out
    allowed = (-1, 1) if mode == "binary" else (-1, 0, 1)
    if p.size and not np.all(np.isin(p, allowed)):
        raise ValueError(f"{mode} predictions must lie in {allowed}")
    return p.astype(np.int64)


def simulate(positions, closes, costs: CostModel = CostModel(), initial: float = DEFAULT_CAPITAL,
             timestamps: Optional[Sequence[int]] = None) -> EquityCurve:
    """Compound ``position[t] * (close[t+1] / close[t] - 1)`` bar by bar.

    A change of position at bar ``t`` pays ``|position[t] - position[t-1]|``
    legs (the position before the first bar is flat), charged on bar ``t``.
    The curve has one value per bar and starts at ``initial``, so legs
    opened on the first bar are charged on the second.
    """
    pos = np.asarray(positions, dtype=np.int64)
    c = np.asarray(closes, dtype=float)
    if len(pos) != len(c):
        raise ValueError(f"length mismatch: {len(pos)} positions vs {len(c)} closes")
    if len(c) == 0:
        raise ValueError("empty input")
    if not np.all(c > 0):
        raise ValueError("closes must be positive")
    if not np.all(np.isin(pos, (-1, 0, 1))):
        raise ValueError("positions must lie in {-1, 0, 1}")
    legs = np.abs(np.diff(pos, prepend=0))
    # costs land on the bar of the change; the first bar is pinned to ``initial``
    # so an opening leg at t=0 is charged on bar 1
    growth = (1.0 + pos[:-1] * (c[1:] / c[:-1] - 1.0)) * (1.0 - costs.per_side) ** legs[1:]
    if len(growth):
        growth[0] *= costs.factor(int(legs[0]))
    values = initial * np.r_[1.0, np.cumprod(growth)]
    ts = np.arange(len(c)) if timestamps is None else np.asarray(timestamps)
    return EquityCurve(ts, values)


def simulate_tbl(signals, bars: BarSeries, spec: LabelSpec, costs: CostModel = CostModel(),
                 initial: float = DEFAULT_CAPITAL, use_high_low: bool = False) -> TblResult:
    """Single-position barrier execution.

    A nonzero signal at ``t`` with no open trade enters at ``close[t]`` with
    take-profit and stop-loss at ``close[t] * (1 +/- lam)`` and a timed exit
    at ``t + n`` (or the last bar). Barrier exits fill exactly at the barrier.
    Signals arriving while a trade is open are dropped; a signal on the exit
    bar may open the next trade. The equity curve is marked to market at
    each close.

    With ``use_high_low`` barrier touches are read from bar highs/lows, and a
    bar touching both barriers is resolved as a stop-loss.
    """
    sig = np.asarray(signals, dtype=np.int64)
    c = bars.close
    n = len(c)
    if len(sig) != n:
        raise ValueError(f"length mismatch: {len(sig)} signals vs {n} bars")
    if not np.all(np.isin(sig, (-1, 0, 1))):
        raise ValueError("signals must lie in {-1, 0, 1}")
    hi = bars.high if use_high_low else c
    lo = bars.low if use_high_low else c
    keep = costs.factor(1)

    values = np.empty(n)
    values[0] = initial
    capital = initial
    trades: list[Trade] = []
    dropped = 0
    open_trade = None  # (entry index, direction, entry price, capital after entry cost, horizon index)
    for t in range(n):
        if open_trade is not None:
            i0, direction, entry, cap0, horizon = open_trade
            up, dn = entry * (1 + spec.lam), entry * (1 - spec.down)
            hit_up, hit_dn = hi[t] >= up, lo[t] <= dn
            reason = None
            if hit_up and hit_dn:
                reason, gross = "sl", -(spec.down if direction > 0 else spec.lam)
            elif hit_up:
                reason, gross = ("tp", spec.lam) if direction > 0 else ("sl", -spec.lam)
            elif hit_dn:
                reason, gross = ("sl", -spec.down) if direction > 0 else ("tp", spec.down)
            elif t == horizon:
                reason, gross = "timed", direction * (c[t] / entry - 1.0)
            if reason is not None:
                capital = cap0 * (1.0 + gross) * keep
                net = capital / (cap0 / keep) - 1.0
                trades.append(Trade(i0, t, int(bars.timestamps[i0]), int(bars.timestamps[t]),
                                    direction, reason, float(gross), float(net)))
                open_trade = None
                values[t] = capital
            else:
                values[t] = cap0 * (1.0 + direction * (c[t] / entry - 1.0))
                if sig[t] != 0:
                    dropped += 1
                continue
        if sig[t] != 0 and t < n - 1:
            cap0 = capital * keep
            open_trade = (t, int(sig[t]), c[t], cap0, min(t + spec.n, n - 1))
            capital = cap0
        # bar 0 stays at ``initial``; an entry there shows from bar 1
        values[t] = capital if t > 0 else initial
    return TblResult(EquityCurve(bars.timestamps.copy(), values), trades, dropped)


def write_equity(curve: EquityCurve, path, header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["timestamp", "value"])
        for ts, v in zip(curve.timestamps, curve.values):
            w.writerow([format_timestamp(ts), repr(float(v))])


def write_trades(trades: Sequence[Trade], path, header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["entry_ts", "exit_ts", "direction", "exit_reason", "gross_return", "net_return"])
        for tr in trades:
            w.writerow([format_timestamp(tr.entry_ts), format_timestamp(tr.exit_ts), tr.direction,
                        tr.exit_reason, repr(tr.gross_return), repr(tr.net_return)])


def position_trades(positions, bars: BarSeries, costs: CostModel = CostModel()) -> list[Trade]:
    """Trade log for a position series: one trade per run of equal nonzero positions.

    A run still open on the last bar is closed there. Exit reason is
    ``signal``.
    """
    pos = np.asarray(positions, dtype=np.int64)
    c = bars.close
    trades = []
    start = None
    for t in range(len(pos) + 1):
        cur = pos[t] if t < len(pos) else 0
        if start is not None and (t == len(pos) or cur != pos[start]):
            end = min(t, len(pos) - 1)
            direction = int(pos[start])
            gross = direction * (c[end] / c[start] - 1.0)
            net = (1.0 + gross) * costs.factor(2) - 1.0
            trades.append(Trade(start, end, int(bars.timestamps[start]), int(bars.timestamps[end]),
                                direction, "signal", float(gross), float(net)))
            start = None
        if start is None and t < len(pos) and cur != 0:
            start = t
    return trades
