"""Performance metrics for equity curves and strategy-comparison tests."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from saetrade.backtest import EquityCurve

MINUTES_PER_YEAR = {"equity": 252 * 390, "fx": 260 * 24 * 60, "crypto": 365 * 24 * 60}


class UndefinedMetricError(ValueError):
    pass


class DegenerateTestError(ValueError):
    pass


@dataclass(frozen=True)
class MetricConfig:
    """Annualization basis: number of bars in one year."""

    periods_per_year: float = 252.0

    def __post_init__(self):
        if not self.periods_per_year > 0:
            raise ValueError("periods_per_year must be positive")

    @classmethod
    def for_bars(cls, frequency_minutes: int, market: str = "equity") -> "MetricConfig":
        if market not in MINUTES_PER_YEAR:
            raise ValueError(f"market must be one of {tuple(MINUTES_PER_YEAR)}")
        return cls(MINUTES_PER_YEAR[market] / frequency_minutes)


@dataclass(frozen=True)
class LossDuration:
    periods: int
    start: int
    end: int
    unrecovered: bool


@dataclass
class PerfReport:
    cumulative_return: float
    arc: float
    asd: float
    ir: Optional[float]
    mdd: float
    mld: float
    mld_periods: int
    mld_unrecovered: bool
    ir_star2: Optional[float]
    n_bars: int
    years: float
    tests: Optional[dict] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    def to_table(self, name: str = "strategy") -> str:
        def fmt(v, pct=False):
            if v is None:
                return "n/a"
            return f"{100 * v:.2f}%" if pct else f"{v:.4f}"

        rows = [
            ("Cumulative return", fmt(self.cumulative_return, True)),
            ("ARC", fmt(self.arc, True)),
            ("ASD", fmt(self.asd, True)),
            ("IR", fmt(self.ir)),
            ("MDD", fmt(self.mdd, True)),
            ("MLD (years)", fmt(self.mld)),
            ("MLD (periods)", str(self.mld_periods) + (" (unrecovered)" if self.mld_unrecovered else "")),
            ("IR**", fmt(self.ir_star2)),
        ]
        width = max(len(r[0]) for r in rows)
        lines = [f"{'Metric':<{width}}  {name}"]
        lines += [f"{k:<{width}}  {v}" for k, v in rows]
        return "\n".join(lines) + "\n"


def _values(equity) -> np.ndarray:
    v = np.asarray(equity.values if isinstance(equity, EquityCurve) else equity, dtype=float)
    if v.ndim != 1 or len(v) == 0:
        raise ValueError("equity must be a nonempty 1-D series")
    if not np.all(v > 0):
        raise ValueError("equity values must be positive")
    return v


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / math.sqrt(2.0))


def arc(equity, years: float) -> float:
    """Annualized compounded return ``(V_n / V_0) ** (1 / years) - 1``."""
    if not years > 0:
        raise ValueError("years must be positive")
    v = _values(equity)
    return float((v[-1] / v[0]) ** (1.0 / years) - 1.0)


def asd(returns: Sequence[float], periods_per_year: float) -> float:
    """Sample standard deviation (ddof 1) scaled by ``sqrt(periods_per_year)``."""
    r = np.asarray(returns, dtype=float)
    if len(r) < 2:
        raise ValueError("need at least two returns")
    return float(np.std(r, ddof=1) * math.sqrt(periods_per_year))


def information_ratio(arc_value: float, asd_value: float) -> float:
    if not asd_value > 0:
        raise UndefinedMetricError("IR undefined for zero volatility")
    return arc_value / asd_value


def mdd(equity) -> float:
    """Largest fall from a running peak, as a fraction of that peak."""
    v = _values(equity)
    peak = np.maximum.accumulate(v)
    return float(np.max((peak - v) / peak))


def loss_duration(equity) -> LossDuration:
    """Longest underwater spell in bars.

    A spell starts at a running high and ends at the first later bar
    strictly above it, or at the final bar if that never happens. A high
    followed immediately by a higher bar has no spell.
    """
    v = _values(equity)
    best = LossDuration(0, 0, 0, False)
    peak_idx = 0
    for t in range(1, len(v)):
        if v[t] > v[peak_idx]:
            gap = t - peak_idx
            if gap > 1 and gap > best.periods:
                best = LossDuration(gap, peak_idx, t, False)
            peak_idx = t
    tail = len(v) - 1 - peak_idx
    if tail > 0 and tail >= best.periods:
        best = LossDuration(tail, peak_idx, len(v) - 1, True)
    return best


def mld(equity, periods_per_year: float) -> float:
    """Maximum loss duration in years."""
    return loss_duration(equity).periods / periods_per_year


def ir_star2(arc_value: float, asd_value: float, mdd_value: float) -> float:
    """``ARC^2 * sign(ARC) / (ASD * MDD)``."""
    if not asd_value > 0:
        raise UndefinedMetricError("IR** undefined for zero volatility")
    if not mdd_value > 0:
        raise UndefinedMetricError("IR** undefined without a drawdown; report IR instead")
    return arc_value ** 2 * float(np.sign(arc_value)) / (asd_value * mdd_value)


def _paired(a, b) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-D and of equal length")
    if len(x) < 10:
        raise ValueError("need at least 10 observations")
    return x, y


def dm_test(losses_a, losses_b, one_sided: bool = False) -> tuple[float, float]:
    """Diebold-Mariano statistic on ``d = loss_a - loss_b`` with a normal reference.

    The one-sided p-value tests whether model A has lower expected loss
    (small p when the statistic is strongly negative).
    """
    x, y = _paired(losses_a, losses_b)
    d = x - y
    if np.all(d == 0):
        return 0.0, 0.5 if one_sided else 1.0
    sd = np.std(d, ddof=1)
    if sd == 0:
        raise DegenerateTestError("loss differential has zero variance")
    stat = float(np.mean(d) / (sd / math.sqrt(len(d))))
    if one_sided:
        return stat, _norm_cdf(stat)
    return stat, 2.0 * _norm_cdf(-abs(stat))


def ir_ttest(returns_a, returns_b, periods_per_year: float = 1.0,
             one_sided: bool = False) -> tuple[float, float]:
    """Compare annualized IRs with standard error ``sigma_diff / sqrt(n)``.

    ``sigma_diff`` is the annualized std of per-period return differences.
    The one-sided p-value tests IR_A > IR_B.
    """
    x, y = _paired(returns_a, returns_b)
    diff = x - y
    if np.all(diff == 0):
        return 0.0, 0.5 if one_sided else 1.0
    scale = math.sqrt(periods_per_year)
    sd_a, sd_b, sd_d = np.std(x, ddof=1), np.std(y, ddof=1), np.std(diff, ddof=1)
    if sd_d == 0:
        raise DegenerateTestError("return differences have zero variance")
    if sd_a == 0 or sd_b == 0:
        raise DegenerateTestError("IR undefined for a zero-volatility series")
    ir_a = np.mean(x) * periods_per_year / (sd_a * scale)
    ir_b = np.mean(y) * periods_per_year / (sd_b * scale)
    stat = float((ir_a - ir_b) / (sd_d * scale / math.sqrt(len(x))))
    if one_sided:
        return stat, 1.0 - _norm_cdf(stat)
    return stat, 2.0 * _norm_cdf(-abs(stat))


def portfolio_equal_weight(curves: Sequence[EquityCurve], initial: Optional[float] = None) -> EquityCurve:
    """Rebalanced equal-weight portfolio over the common timestamps."""
    if not curves:
        raise ValueError("no curves given")
    common = curves[0].timestamps
    for c in curves[1:]:
        common = np.intersect1d(common, c.timestamps)
    if len(common) == 0:
        raise ValueError("curves share no timestamps")
    rets = []
    for c in curves:
        idx = np.searchsorted(c.timestamps, common)
        rets.append(c.values[idx][1:] / c.values[idx][:-1] - 1.0)
    mean_ret = np.mean(rets, axis=0)
    v0 = curves[0].initial if initial is None else initial
    return EquityCurve(np.asarray(common), v0 * np.r_[1.0, np.cumprod(1.0 + mean_ret)])


def evaluate(curve: EquityCurve, config: MetricConfig, tests: Optional[dict] = None) -> PerfReport:
    """Full metric suite for one curve; undefined ratios are reported as None."""
    v = _values(curve)
    n_year = config.periods_per_year
    years = max(len(v) - 1, 1) / n_year
    a = arc(v, years)
    s = asd(curve.returns(), n_year) if len(v) >= 3 else 0.0
    m = mdd(v)
    ld = loss_duration(v)
    ir = a / s if s > 0 else None
    irs = ir_star2(a, s, m) if s > 0 and m > 0 else None
    return PerfReport(
        cumulative_return=float(v[-1] / v[0] - 1.0),
        arc=a, asd=s, ir=ir, mdd=m,
        mld=ld.periods / n_year, mld_periods=ld.periods, mld_unrecovered=ld.unrecovered,
        ir_star2=irs, n_bars=len(v), years=years, tests=tests,
    )
