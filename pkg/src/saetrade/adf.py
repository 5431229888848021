"""Augmented Dickey-Fuller unit-root test (constant, no trend).

The p-value comes from a stored surface of Dickey-Fuller tau quantiles
indexed by effective sample size. The surface was produced by
:func:`simulate_tau_quantiles` (see ``tools/build_adf_table.py``) and is
interpolated linearly in the statistic and in ``1/nobs``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from saetrade import _adf_table

logger = logging.getLogger(__name__)

LAG_POLICIES = ("fixed", "aic")


class DegenerateSeriesError(ValueError):
    """Raised when the ADF regression cannot be formed (e.g. constant input)."""


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    p_value: float
    lags: int
    nobs: int

    def critical_values(self) -> dict[str, float]:
        return {
            f"{int(level * 100)}%": critical_value(level, self.nobs)
            for level in (0.01, 0.05, 0.10)
        }


def _surface_at(nobs: int) -> np.ndarray:
    """Tau quantiles for one sample size, interpolated linearly in 1/nobs."""
    inv = np.asarray(_adf_table.INV_NOBS)  # ascending, first entry 0 (asymptotic)
    table = np.asarray(_adf_table.QUANTILES)
    x = 1.0 / nobs
    if x >= inv[-1]:
        return table[-1]
    hi = int(np.searchsorted(inv, x, side="right"))
    lo = hi - 1
    w = (x - inv[lo]) / (inv[hi] - inv[lo])
    return (1.0 - w) * table[lo] + w * table[hi]


def adf_pvalue(statistic: float, nobs: int) -> float:
    """Left-tail probability of the DF tau distribution at ``statistic``.

    Statistics beyond the tabulated range are clamped to the extreme
    tabulated probabilities.
    """
    quantiles = _surface_at(nobs)
    levels = np.asarray(_adf_table.LEVELS)
    return float(np.interp(statistic, quantiles, levels))


def critical_value(level: float, nobs: int) -> float:
    """Tau critical value for a left-tail ``level`` at sample size ``nobs``."""
    levels = np.asarray(_adf_table.LEVELS)
    if not levels[0] <= level <= levels[-1]:
        raise ValueError(f"level {level} outside tabulated range [{levels[0]}, {levels[-1]}]")
    return float(np.interp(level, levels, _surface_at(nobs)))


def _design(x: np.ndarray, lags: int, start: int) -> tuple[np.ndarray, np.ndarray]:
    dx = np.diff(x)
    # row for t uses dx[t], x[t], dx[t-1..t-lags]; t indexes dx
    rows = np.arange(start, len(dx))
    cols = [np.ones(len(rows)), x[rows]]
    for i in range(1, lags + 1):
        cols.append(dx[rows - i])
    return np.column_stack(cols), dx[rows]


def _ols_tstat(X: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    """t-ratio of the level coefficient (column 1) and the regression AIC."""
    n, k = X.shape
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < k:
        raise DegenerateSeriesError("ADF design matrix is rank deficient")
    resid = y - X @ beta
    rss = float(resid @ resid)
    if rss <= 0.0:
        raise DegenerateSeriesError("ADF regression has zero residual variance")
    sigma2 = rss / (n - k)
    cov = sigma2 * np.linalg.inv(X.T @ X)
    tstat = beta[1] / np.sqrt(cov[1, 1])
    aic = n * np.log(rss / n) + 2 * k
    return float(tstat), float(aic)


def adf_test(series: Sequence[float], max_lags: int = 1, lag_policy: str = "fixed") -> AdfResult:
    """Run the ADF test with a constant and ``max_lags`` lagged differences.

    Args:
        series: Observations, oldest first.
        max_lags: Number of lagged differences (``fixed``) or the upper bound
            of the search (``aic``).
        lag_policy: ``"fixed"`` or ``"aic"``.

    Returns:
        AdfResult with the tau statistic and its interpolated p-value.
    """
    if lag_policy not in LAG_POLICIES:
        raise ValueError(f"lag_policy must be one of {LAG_POLICIES}, got {lag_policy!r}")
    if max_lags < 0:
        raise ValueError("max_lags must be nonnegative")
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if len(x) < max_lags + 10:
        raise ValueError(f"series too short for ADF: need at least {max_lags + 10} points, got {len(x)}")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    if np.ptp(x) == 0.0:
        raise DegenerateSeriesError("constant series: ADF regression is degenerate")

    lags = max_lags
    if lag_policy == "aic" and max_lags > 0:
        # compare candidates on a common sample
        best = None
        for p in range(max_lags + 1):
            X, y = _design(x, p, max_lags)
            _, aic = _ols_tstat(X, y)
            if best is None or aic < best[0]:
                best = (aic, p)
        lags = best[1]

    X, y = _design(x, lags, lags)
    stat, _ = _ols_tstat(X, y)
    nobs = len(y)
    return AdfResult(statistic=stat, p_value=adf_pvalue(stat, nobs), lags=lags, nobs=nobs)


def simulate_tau_quantiles(
    sizes: Sequence[int],
    levels: Sequence[float],
    reps: int,
    seed: int = 0,
    chunk: int = 4000,
) -> np.ndarray:
    """Monte Carlo quantiles of the constant-only DF tau statistic.

    Simulates driftless Gaussian random walks and the regression
    ``dy_t = c + g * y_{t-1} + e_t`` with ``nobs`` observations.

    Returns:
        Array of shape ``(len(sizes), len(levels))``.
    """
    rng = np.random.default_rng(seed)
    out = np.empty((len(sizes), len(levels)))
    for row, nobs in enumerate(sizes):
        stats = []
        for start in range(0, reps, chunk):
            m = min(chunk, reps - start)
            y = np.cumsum(rng.standard_normal((m, nobs + 1)), axis=1)
            x = y[:, :-1] - y[:, :-1].mean(axis=1, keepdims=True)
            z = np.diff(y, axis=1)
            z -= z.mean(axis=1, keepdims=True)
            sxx = np.einsum("ij,ij->i", x, x)
            sxz = np.einsum("ij,ij->i", x, z)
            szz = np.einsum("ij,ij->i", z, z)
            g = sxz / sxx
            se = np.sqrt((szz - g * sxz) / (nobs - 2) / sxx)
            stats.append(g / se)
        out[row] = np.quantile(np.concatenate(stats), levels)
        logger.info("simulated tau quantiles for nobs=%d", nobs)
    return out
