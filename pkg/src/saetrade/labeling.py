"""Triple-barrier labels and the payoff-derived optimization metric."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

LABELS = (-1, 0, 1)


@dataclass(frozen=True)
class LabelSpec:
    """Barrier width ``lam`` (fraction of entry price) and horizon ``n`` in bars.

    ``lower`` overrides the stop-loss width for asymmetric barriers; by
    default both barriers sit at ``lam``.
    """

    lam: float
    n: int
    lower: Optional[float] = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"barrier width must be positive, got {self.lam}")
        if self.lower is not None and not 0 < self.lower < 1:
            raise ValueError(f"lower barrier width must lie in (0, 1), got {self.lower}")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"horizon must be a positive integer, got {self.n}")

    @property
    def down(self) -> float:
        return self.lam if self.lower is None else self.lower


@dataclass(frozen=True)
class LabelSeries:
    values: np.ndarray
    spec: LabelSpec
    source_length: int

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class TradeOutcomeCounts:
    dcc: int
    dic: int
    tec: int

    @property
    def trades(self) -> int:
        return self.dcc + self.dic + self.tec


@dataclass(frozen=True)
class PhiParams:
    lam: float
    delta: float = 20.0

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")
        if not self.delta > self.lam:
            raise ValueError(f"delta must exceed lambda (delta={self.delta}, lambda={self.lam})")


@dataclass(frozen=True)
class PayoffCell:
    """Trade return for one (predicted, actual) pair.

    Exact cells have ``low == high``; timed-exit cells are the open
    interval ``(low, high)``.
    """

    low: float
    high: float
    exact: bool

    @property
    def value(self) -> float:
        if not self.exact:
            raise ValueError("timed-exit cell has no single value")
        return self.low


def _check_prices(prices) -> np.ndarray:
    p = np.asarray(prices, dtype=float)
    if p.ndim != 1 or len(p) < 2:
        raise ValueError("need at least two prices to label")
    if not np.all(p > 0):
        raise ValueError("prices must be strictly positive")
    return p


def triple_barrier_labels(
    prices: Sequence[float],
    spec: LabelSpec,
    high: Optional[Sequence[float]] = None,
    low: Optional[Sequence[float]] = None,
) -> LabelSeries:
    """Label each bar by which barrier its forward window touches first.

    Bar ``t`` is scanned over ``t .. min(t + n, last)``; a close at or above
    ``p_t * (1 + lam)`` gives +1, at or below ``p_t * (1 - lam)`` gives -1,
    and reaching the horizon gives 0. The last bar has no future and is not
    labelled, so the output has ``len(prices) - 1`` entries.

    When ``high`` and ``low`` are given, barrier touches are read from the
    bar extremes of ``t+1 .. horizon`` instead of closes; a bar touching both
    barriers resolves to +1.
    """
    p = _check_prices(prices)
    n_out = len(p) - 1
    up_level = p[:n_out] * (1 + spec.lam)
    dn_level = p[:n_out] * (1 - spec.down)
    use_hl = high is not None or low is not None
    if use_hl:
        if high is None or low is None:
            raise ValueError("high/low mode needs both high and low")
        hi = np.asarray(high, dtype=float)
        lo = np.asarray(low, dtype=float)
        if len(hi) != len(p) or len(lo) != len(p):
            raise ValueError("high/low must align with prices")
    else:
        hi = lo = p

    idx = np.arange(n_out)
    first_up = np.full(n_out, np.iinfo(np.int64).max)
    first_dn = np.full(n_out, np.iinfo(np.int64).max)
    # offset 0 is the entry bar; inert on closes, skipped for bar extremes
    for k in range(1 if use_hl else 0, spec.n + 1):
        j = idx + k
        valid = j < len(p)
        jj = np.where(valid, j, len(p) - 1)
        hit_up = valid & (hi[jj] >= up_level) & (first_up == np.iinfo(np.int64).max)
        hit_dn = valid & (lo[jj] <= dn_level) & (first_dn == np.iinfo(np.int64).max)
        first_up[hit_up] = k
        first_dn[hit_dn] = k
    labels = np.zeros(n_out, dtype=np.int64)
    labels[first_up <= first_dn] = 1
    labels[first_dn < first_up] = -1
    labels[(first_up == np.iinfo(np.int64).max) & (first_dn == np.iinfo(np.int64).max)] = 0
    return LabelSeries(values=labels, spec=spec, source_length=len(p))


def _check_labels(values, name: str) -> np.ndarray:
    a = np.asarray(values)
    if a.size and not np.all(np.isin(a, LABELS)):
        bad = a[~np.isin(a, LABELS)][0]
        raise ValueError(f"{name} contains {bad!r}; labels must be in {{-1, 0, 1}}")
    return a.astype(np.int64)


def payoff_counts(predicted: Sequence[int], actual: Sequence[int]) -> TradeOutcomeCounts:
    """Count directly correct, directly incorrect and timed-exit trades.

    Only nonzero predictions are trades. A trade against a nonzero label of
    the opposite sign is directly incorrect; a trade on a 0 label is a timed
    exit.
    """
    pred = _check_labels(predicted, "predicted")
    act = _check_labels(actual, "actual")
    if len(pred) != len(act):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(act)} labels")
    traded = pred != 0
    dcc = int(np.sum(traded & (pred == act)))
    dic = int(np.sum(traded & (act != 0) & (pred == -act)))
    tec = int(np.sum(traded & (act == 0)))
    return TradeOutcomeCounts(dcc, dic, tec)


def phi(counts: TradeOutcomeCounts, params: PhiParams, include_tec: bool = True) -> float:
    """Compounded trade payoff ``(1+lam)^DCC (1-lam)^DIC [(1-lam/delta)^TEC]``."""
    lam = params.lam
    value = (1 + lam) ** counts.dcc * (1 - lam) ** counts.dic
    if include_tec:
        value *= (1 - lam / params.delta) ** counts.tec
    return value


def phi_score(predicted, actual, params: PhiParams, include_tec: bool = True) -> float:
    return phi(payoff_counts(predicted, actual), params, include_tec)


def payoff_table_cell(pred: int, actual: int, lam: float) -> PayoffCell:
    """Return bound of a single trade for a (predicted, actual) label pair."""
    _check_labels([pred], "pred")
    _check_labels([actual], "actual")
    if pred == 0:
        return PayoffCell(0.0, 0.0, True)
    if actual == 0:
        return PayoffCell(-lam, lam, False)
    if pred == actual:
        return PayoffCell(lam, lam, True)
    return PayoffCell(-lam, -lam, True)
