"""Fixed-width-window fractional differentiation and optimal-order search."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from saetrade.adf import adf_test

logger = logging.getLogger(__name__)

DEFAULT_TAU = 1e-5
DEFAULT_K_MAX = 10_000
DEFAULT_D_GRID = tuple(round(0.05 * i, 2) for i in range(21))


@dataclass(frozen=True)
class FracDiffSpec:
    """Fitted fractional order and realized weights for one feature."""

    d: float
    tau: float
    weights: np.ndarray = field(repr=False)
    alpha: float = 0.01

    @property
    def window(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class DiagnosticRow:
    d: float
    statistic: float
    p_value: float
    correlation: float


class NoStationaryOrderError(ValueError):
    """No grid value produced a stationary series; carries the full scan."""

    def __init__(self, message: str, diagnostics: list[DiagnosticRow]):
        super().__init__(message)
        self.diagnostics = diagnostics


def fd_weights(d: float, tau: float = DEFAULT_TAU, k_max: int = DEFAULT_K_MAX) -> np.ndarray:
    """Binomial-expansion weights of ``(1 - B)^d``.

    Uses ``w_k = -w_{k-1} * (d - k + 1) / k`` and stops at the first ``k``
    with ``|w_k| < tau`` (excluded) or once ``k_max`` weights are held.

    Returns:
        Weights ordered by lag, ``w[0] == 1``.
    """
    if d < 0:
        raise ValueError(f"fractional order must be nonnegative, got {d}")
    if tau <= 0:
        raise ValueError("tau must be positive")
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    w = [1.0]
    k = 1
    while len(w) < k_max:
        nxt = -w[-1] * (d - k + 1) / k
        if abs(nxt) < tau:
            break
        w.append(nxt)
        k += 1
    return np.array(w)


def fd_weights_product(d: float, k: int) -> float:
    """Closed-form weight ``(-1)^k prod_{i<k} (d - i) / k!`` (reference form)."""
    num = 1.0
    for i in range(k):
        num *= d - i
    return (-1) ** k * num / float(np.prod(np.arange(1, k + 1), dtype=float))


def apply_weights(series: Sequence[float], weights: np.ndarray) -> np.ndarray:
    """Convolve ``series`` with lag weights, keeping only full windows."""
    x = np.asarray(series, dtype=float)
    width = len(weights)
    if len(x) < width:
        raise ValueError(f"series of length {len(x)} shorter than weight window; need at least {width}")
    # out[t] = sum_k w[k] * x[t + width - 1 - k]
    return np.convolve(x, weights, mode="valid")


def ffd_transform(
    series: Sequence[float],
    d: float,
    tau: float = DEFAULT_TAU,
    k_max: int = DEFAULT_K_MAX,
) -> np.ndarray:
    """Fractionally differentiate ``series`` with a fixed-width window.

    Output length is ``len(series) - (window - 1)``; element ``i`` of the
    output corresponds to input index ``i + window - 1``.
    """
    x = np.asarray(series, dtype=float)
    weights = fd_weights(d, tau, k_max)
    if len(x) <= len(weights):
        raise ValueError(
            f"series of length {len(x)} too short for d={d}: need at least {len(weights) + 1} points"
        )
    return apply_weights(x, weights)


def _corr(a: np.ndarray, b: np.ndarray) -> float:
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])


def _diagnose(x: np.ndarray, d: float, tau: float, max_lags: int, lag_policy: str,
              k_max: int, start: int) -> DiagnosticRow:
    w = fd_weights(d, tau, k_max)
    # y[i] aligns with x[i + window - 1]; keep input indices >= start
    y = apply_weights(x, w)[start - (len(w) - 1):]
    res = adf_test(y, max_lags=max_lags, lag_policy=lag_policy)
    corr = _corr(x[start:], y)
    return DiagnosticRow(float(d), res.statistic, res.p_value, corr)


def required_length(d: float, tau: float = DEFAULT_TAU, k_max: int = DEFAULT_K_MAX,
                    max_lags: int = 1) -> int:
    """Shortest series whose order-``d`` FFD output is long enough for ADF."""
    return len(fd_weights(d, tau, k_max)) - 1 + max_lags + 10


def scan_d(
    series: Sequence[float],
    d_grid: Sequence[float] = DEFAULT_D_GRID,
    tau: float = DEFAULT_TAU,
    max_lags: int = 1,
    lag_policy: str = "fixed",
    k_max: int = DEFAULT_K_MAX,
) -> list[DiagnosticRow]:
    """ADF statistic, p-value and memory correlation for every grid value.

    All orders are evaluated over the same trailing sample (the rows left
    after the widest fitting window), so rows are comparable across d.
    Orders whose weight window does not fit the series get a NaN row.
    """
    x = np.asarray(series, dtype=float)
    fits = [len(x) >= required_length(d, tau, k_max, max_lags) for d in d_grid]
    widths = [len(fd_weights(d, tau, k_max)) for d, ok in zip(d_grid, fits) if ok]
    start = max(widths, default=1) - 1
    rows = []
    for d, ok in zip(d_grid, fits):
        if not ok:
            rows.append(DiagnosticRow(float(d), np.nan, np.nan, np.nan))
            continue
        rows.append(_diagnose(x, d, tau, max_lags, lag_policy, k_max, start))
    return rows


def optimal_d(
    series: Sequence[float],
    d_grid: Sequence[float] = DEFAULT_D_GRID,
    alpha: float = 0.01,
    tau: float = DEFAULT_TAU,
    max_lags: int = 1,
    lag_policy: str = "fixed",
    k_max: int = DEFAULT_K_MAX,
) -> tuple[float, list[DiagnosticRow]]:
    """Smallest grid order whose FFD series rejects a unit root at ``alpha``.

    The whole grid is scanned so the diagnostics form a complete table.
    Orders above ``d*`` whose window is too wide for the series are
    reported as NaN rows; an unfit order below any passing one is an error,
    since minimality could not be established.

    Raises:
        NoStationaryOrderError: if no grid value passes; ``.diagnostics``
            holds every evaluated row.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    grid = [float(d) for d in d_grid]
    if not grid:
        raise ValueError("empty d grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("d grid must be strictly ascending")
    x = np.asarray(series, dtype=float)
    diagnostics = scan_d(x, grid, tau, max_lags, lag_policy, k_max)
    for row in diagnostics:
        if np.isnan(row.p_value):
            raise ValueError(
                f"series of length {len(x)} too short for d={row.d}: need at least "
                f"{required_length(row.d, tau, k_max, max_lags)} points "
                f"(raise tau or lower k_max to shorten the weight window)"
            )
        if row.p_value < alpha:
            logger.debug("optimal d=%.2f (p=%.4f)", row.d, row.p_value)
            return row.d, diagnostics
    raise NoStationaryOrderError(
        f"no d in grid [{grid[0]}, {grid[-1]}] passes ADF at alpha={alpha}", diagnostics
    )


def fit_spec(series: Sequence[float], d_grid=DEFAULT_D_GRID, alpha=0.01, tau=DEFAULT_TAU,
             max_lags=1, lag_policy="fixed", k_max=DEFAULT_K_MAX) -> tuple[FracDiffSpec, list[DiagnosticRow]]:
    d, diag = optimal_d(series, d_grid, alpha, tau, max_lags, lag_policy, k_max)
    return FracDiffSpec(d=d, tau=tau, weights=fd_weights(d, tau, k_max), alpha=alpha), diag


def transform_with_history(series: Sequence[float], weights: np.ndarray) -> np.ndarray:
    """FFD over the whole series, NaN where the window lacks history.

    Output is aligned with the input index, so slicing the result by a test
    range uses trailing values from before the range but never later ones.
    """
    x = np.asarray(series, dtype=float)
    out = np.full(len(x), np.nan)
    if len(x) >= len(weights):
        out[len(weights) - 1:] = apply_weights(x, weights)
    return out
