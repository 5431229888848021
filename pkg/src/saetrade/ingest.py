"""Loading, validating, resampling and aligning bar and feature series.

Timestamps are held as int64 UTC epoch seconds.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

BAR_COLUMNS = ("timestamp", "open", "high", "low", "close")


class BarParseError(ValueError):
    def __init__(self, path, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.line = line


class BarValidationError(ValueError):
    def __init__(self, reason: str, timestamps: Sequence[int] = ()):
        listed = ", ".join(format_timestamp(t) for t in list(timestamps)[:10])
        more = f" (+{len(timestamps) - 10} more)" if len(timestamps) > 10 else ""
        super().__init__(f"{reason}: {listed}{more}" if listed else reason)
        self.timestamps = list(timestamps)


def parse_timestamp(text: str) -> int:
    """Epoch seconds from an epoch number or an ISO-8601 string (naive = UTC)."""
    text = text.strip()
    try:
        return int(round(float(text)))
    except ValueError:
        pass
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def format_timestamp(ts: int) -> str:
    return datetime.fromtimestamp(int(ts), tz=timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class BarSeries:
    symbol: str
    frequency: int  # minutes
    timestamps: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: Optional[np.ndarray] = None

    def __len__(self):
        return len(self.timestamps)

    def slice(self, start: int, stop: int) -> "BarSeries":
        vol = None if self.volume is None else self.volume[start:stop]
        return BarSeries(self.symbol, self.frequency, self.timestamps[start:stop], self.open[start:stop],
                         self.high[start:stop], self.low[start:stop], self.close[start:stop], vol)

    def validate(self) -> "BarSeries":
        ts = self.timestamps
        n = len(ts)
        for name in ("open", "high", "low", "close"):
            if len(getattr(self, name)) != n:
                raise BarValidationError(f"column {name} has wrong length")
        if self.volume is not None and len(self.volume) != n:
            raise BarValidationError("column volume has wrong length")
        if n == 0:
            raise BarValidationError("bar series is empty")
        cols = np.vstack([self.open, self.high, self.low, self.close])
        bad = ~np.all(np.isfinite(cols), axis=0)
        if bad.any():
            raise BarValidationError("missing or non-finite prices at", ts[bad])
        bad = np.any(cols <= 0, axis=0)
        if bad.any():
            raise BarValidationError("nonpositive prices at", ts[bad])
        bad = (self.low > np.minimum(self.open, self.close)) | (self.high < np.maximum(self.open, self.close))
        bad |= self.low > self.high
        if bad.any():
            raise BarValidationError("OHLC invariant violated at", ts[bad])
        if self.volume is not None and np.any(~(self.volume >= 0)):
            raise BarValidationError("negative or missing volume at", ts[~(self.volume >= 0)])
        dup = ts[1:] == ts[:-1]
        if dup.any():
            raise BarValidationError("duplicate timestamps", ts[1:][dup])
        if np.any(ts[1:] < ts[:-1]):
            raise BarValidationError("timestamps not sorted")
        return self


def _infer_frequency(ts: np.ndarray) -> int:
    if len(ts) < 2:
        return 1
    step = int(np.min(np.diff(ts)))
    return max(1, step // 60)


def load_bars(path, symbol: str, frequency: Optional[int] = None) -> BarSeries:
    """Read ``timestamp,open,high,low,close[,volume]`` CSV into a validated series.

    Rows are sorted by timestamp; duplicates are rejected. Frequency (minutes)
    defaults to the smallest timestamp step.
    """
    path = Path(path)
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        lines = (ln for ln in fh if not ln.startswith("#"))
        reader = csv.reader(lines)
        header = next(reader, None)
        if header is None:
            raise BarValidationError(f"{path} is empty")
        header = [h.strip().lower() for h in header]
        if tuple(header[:5]) != BAR_COLUMNS or len(header) > 6 or (len(header) == 6 and header[5] != "volume"):
            raise BarParseError(path, 1, f"expected header timestamp,open,high,low,close[,volume], got {','.join(header)}")
        has_volume = len(header) == 6
        for line_no, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise BarParseError(path, line_no, f"expected {len(header)} fields, got {len(rec)}")
            try:
                ts = parse_timestamp(rec[0])
                vals = [float(v) for v in rec[1:]]
            except ValueError as exc:
                raise BarParseError(path, line_no, str(exc)) from None
            rows.append((ts, *vals))
    if not rows:
        raise BarValidationError(f"{path} contains no bars")
    rows.sort(key=lambda r: r[0])
    arr = np.array([r[1:] for r in rows], dtype=float)
    ts = np.array([r[0] for r in rows], dtype=np.int64)
    bars = BarSeries(
        symbol=symbol,
        frequency=frequency or _infer_frequency(ts),
        timestamps=ts,
        open=arr[:, 0], high=arr[:, 1], low=arr[:, 2], close=arr[:, 3],
        volume=arr[:, 4] if has_volume else None,
    )
    return bars.validate()


def write_bars(bars: BarSeries, path, header_lines: Sequence[str] = ()) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        cols = list(BAR_COLUMNS) + (["volume"] if bars.volume is not None else [])
        w.writerow(cols)
        for i in range(len(bars)):
            row = [format_timestamp(bars.timestamps[i]), repr(float(bars.open[i])), repr(float(bars.high[i])),
                   repr(float(bars.low[i])), repr(float(bars.close[i]))]
            if bars.volume is not None:
                row.append(repr(float(bars.volume[i])))
            w.writerow(row)


def resample(bars: BarSeries, target: int) -> BarSeries:
    """Aggregate bars into ``target``-minute windows anchored on the epoch.

    Open/close take the first/last bar, high/low the extremes, volume the
    sum. Windows straddling closures simply hold fewer bars; a trailing
    window that has not reached its final source bar is dropped. Output
    bars carry the timestamp of their first source bar.
    """
    if target < bars.frequency or target % bars.frequency:
        raise ValueError(f"target {target} min is not a multiple of source frequency {bars.frequency} min")
    if target == bars.frequency:
        return bars
    width = target * 60
    bucket = bars.timestamps // width
    starts = np.flatnonzero(np.r_[True, bucket[1:] != bucket[:-1]])
    ends = np.r_[starts[1:], len(bars)]
    last_needed = (bucket[-1] + 1) * width - bars.frequency * 60
    if bars.timestamps[-1] < last_needed:
        starts, ends = starts[:-1], ends[:-1]
    if len(starts) == 0:
        raise ValueError("not enough bars for one complete window")
    stop = ends[-1]
    vol = None if bars.volume is None else np.add.reduceat(bars.volume[:stop], starts)
    return BarSeries(
        symbol=bars.symbol,
        frequency=target,
        timestamps=bars.timestamps[starts],
        open=bars.open[starts],
        high=np.maximum.reduceat(bars.high[:stop], starts),
        low=np.minimum.reduceat(bars.low[:stop], starts),
        close=bars.close[ends - 1],
        volume=vol,
    )


@dataclass(frozen=True)
class FeatureFrame:
    names: list[str]
    timestamps: np.ndarray
    values: np.ndarray  # rows = timestamps, cols = names
    bar_index: np.ndarray  # row -> index into the source BarSeries
    policy: str = "forward-fill"

    def __len__(self):
        return len(self.timestamps)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]


def load_feature(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a ``timestamp,value`` CSV; returns sorted (timestamps, values)."""
    path = Path(path)
    ts, vals = [], []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(ln for ln in fh if not ln.startswith("#"))
        header = [h.strip().lower() for h in next(reader, [])]
        if header != ["timestamp", "value"]:
            raise BarParseError(path, 1, f"expected header timestamp,value, got {','.join(header)}")
        for line_no, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 2:
                raise BarParseError(path, line_no, f"expected 2 fields, got {len(rec)}")
            try:
                ts.append(parse_timestamp(rec[0]))
                vals.append(float(rec[1]))
            except ValueError as exc:
                raise BarParseError(path, line_no, str(exc)) from None
    if not ts:
        raise BarValidationError(f"{path} contains no observations")
    order = np.argsort(np.array(ts), kind="stable")
    return np.array(ts, dtype=np.int64)[order], np.array(vals, dtype=float)[order]


def align_features(bars: BarSeries, features: Mapping[str, tuple[Sequence[int], Sequence[float]]]) -> FeatureFrame:
    """Forward-fill each feature onto the bar timestamps.

    A bar sees the latest observation stamped at or before it. Bars before
    the first observation of any feature are dropped.
    """
    if not features:
        raise ValueError("no features given")
    names = list(features)
    cols, first = [], 0
    for name in names:
        ts, vals = features[name]
        ts = np.asarray(ts, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        if len(ts) == 0:
            raise ValueError(f"feature {name!r} is empty")
        if np.any(np.diff(ts) < 0):
            raise ValueError(f"feature {name!r} is not sorted by timestamp")
        if ts[0] > bars.timestamps[-1]:
            raise ValueError(f"feature {name!r} starts after the last bar")
        pos = np.searchsorted(ts, bars.timestamps, side="right") - 1
        first = max(first, int(np.searchsorted(bars.timestamps, ts[0], side="left")))
        cols.append(np.where(pos >= 0, vals[np.clip(pos, 0, None)], np.nan))
    values = np.column_stack(cols)[first:]
    index = np.arange(first, len(bars))
    return FeatureFrame(names, bars.timestamps[first:], values, index)
