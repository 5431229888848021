import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saetrade.backtest import CostModel, position_trades, simulate, simulate_tbl, to_positions, write_equity, write_trades
from saetrade.ingest import BarSeries
from saetrade.labeling import LabelSpec


def bars_from_closes(closes, high=None, low=None):
    c = np.asarray(closes, dtype=float)
    high = c if high is None else np.asarray(high, dtype=float)
    low = c if low is None else np.asarray(low, dtype=float)
    ts = 1_700_000_000 + 300 * np.arange(len(c), dtype=np.int64)
    return BarSeries("T", 5, ts, c.copy(), np.maximum(high, c), np.minimum(low, c), c)


def test_positions_regression_sign():
    assert to_positions([0.01, -0.02], "regression-sign").tolist() == [1, -1]
    assert to_positions([0.0, 0.01, 0.0], "regression-sign").tolist() == [0, 1, 1]


def test_positions_ternary_and_alphabet():
    assert to_positions([1, 0, -1], "ternary").tolist() == [1, 0, -1]
    with pytest.raises(ValueError):
        to_positions([0, 1], "binary")
    with pytest.raises(ValueError):
        to_positions([2], "ternary")


def test_always_long_is_buy_and_hold():
    closes = 100 * np.exp(np.cumsum(np.random.default_rng(0).normal(0, 0.01, 500)))
    eq = simulate(np.ones(500, dtype=int), closes)
    assert abs(eq.values[-1] / eq.values[0] - closes[-1] / closes[0]) < 1e-12
    assert simulate([1, 1], [100.0, 110.0]).values[-1] == pytest.approx(1100.0, abs=1e-12)


def test_flat_is_constant():
    assert simulate([0, 0, 0], [1.0, 2.0, 3.0]).values.tolist() == [1000.0] * 3


def test_flip_cost_hand_example():
    c = 0.001
    eq = simulate([1, 1, -1, -1], [100.0, 110.0, 99.0, 99.0], CostModel(c))
    v1 = 1000 * 1.1 * (1 - c)
    v2 = v1 * (1 + (99 / 110 - 1)) * (1 - c) ** 2
    v3 = v2 * (1 - (99 / 99 - 1))
    np.testing.assert_allclose(eq.values, [1000, v1, v2, v3], rtol=0, atol=1e-12)
    zero = simulate([1, 1, -1, -1], [100.0, 110.0, 99.0, 99.0])
    assert eq.values[2] / zero.values[2] == pytest.approx((1 - c) ** 3, abs=1e-15)


def test_closing_on_last_bar_pays_a_leg():
    eq = simulate([1, 0], [100.0, 100.0], CostModel(0.01))
    assert eq.values[-1] == pytest.approx(1000 * 0.99 * 0.99, abs=1e-12)


def test_length_mismatch():
    with pytest.raises(ValueError):
        simulate([1, 1], [1.0])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), cost=st.floats(0, 0.01))
def test_costs_only_lower_equity(seed, cost):
    rng = np.random.default_rng(seed)
    closes = 100 * np.exp(np.cumsum(rng.normal(0, 0.02, 40)))
    pos = rng.integers(-1, 2, 40)
    free = simulate(pos, closes).values
    paid = simulate(pos, closes, CostModel(cost)).values
    assert np.all(paid <= free + 1e-9)
    assert np.all(paid > 0)


def test_tbl_two_trade_example():
    c, lam = 0.001, 0.02
    closes = [100, 101, 102.5, 99, 100, 101.5, 101, 101, 101, 101]
    signals = [1, -1, 0, -1, 0, 0, 0, 0, 0, 0]
    res = simulate_tbl(signals, bars_from_closes(closes), LabelSpec(lam, 3), CostModel(c))
    assert [t.exit_reason for t in res.trades] == ["tp", "sl"]
    assert [t.gross_return for t in res.trades] == [lam, -lam]
    assert [(t.entry_index, t.exit_index, t.direction) for t in res.trades] == [(0, 2, 1), (3, 5, -1)]
    assert res.dropped_signals == 1
    after1 = 1000 * (1 - c) * (1 + lam) * (1 - c)
    final = after1 * (1 - c) * (1 - lam) * (1 - c)
    v = res.equity.values
    assert v[0] == 1000.0
    assert abs(v[1] - 1000 * (1 - c) * 1.01) < 1e-12
    assert abs(v[2] - after1) < 1e-12
    assert abs(v[3] - after1 * (1 - c)) < 1e-12
    assert abs(v[4] - after1 * (1 - c) * (1 - (100 / 99 - 1))) < 1e-12
    assert abs(v[-1] - final) < 1e-12
    assert res.trades[1].net_return == pytest.approx((1 - c) ** 2 * (1 - lam) - 1, abs=1e-15)


def test_tbl_timed_exit_inside_band():
    closes = [100, 100.5, 100.2, 100.4, 100.1]
    res = simulate_tbl([1, 0, 0, 0, 0], bars_from_closes(closes), LabelSpec(0.02, 3))
    (t,) = res.trades
    assert t.exit_reason == "timed" and t.exit_index == 3
    assert t.gross_return == pytest.approx(0.004, abs=1e-15)


def test_tbl_same_bar_reentry():
    closes = [100, 103, 103, 103, 103]
    res = simulate_tbl([1, 1, 0, 0, 0], bars_from_closes(closes), LabelSpec(0.02, 2))
    assert [(t.entry_index, t.exit_index) for t in res.trades] == [(0, 1), (1, 3)]
    assert res.dropped_signals == 0


def test_tbl_high_low_both_touched_is_stop():
    closes = [100, 100, 100]
    res = simulate_tbl([1, 0, 0], bars_from_closes(closes, high=[100, 103, 100], low=[100, 97, 100]),
                       LabelSpec(0.02, 2), use_high_low=True)
    assert res.trades[0].exit_reason == "sl"
    assert res.trades[0].gross_return == -0.02
    short = simulate_tbl([-1, 0, 0], bars_from_closes(closes, high=[100, 103, 100], low=[100, 97, 100]),
                         LabelSpec(0.02, 2), use_high_low=True)
    assert short.trades[0].gross_return == -0.02


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 10_000), lam=st.floats(0.002, 0.05), n=st.integers(1, 10))
def test_tbl_return_bounds(seed, lam, n):
    rng = np.random.default_rng(seed)
    closes = 100 * np.exp(np.cumsum(rng.normal(0, 0.01, 60)))
    res = simulate_tbl(rng.integers(-1, 2, 60), bars_from_closes(closes), LabelSpec(lam, n), CostModel(0.001))
    for t in res.trades:
        if t.exit_reason in ("tp", "sl"):
            assert abs(t.gross_return) == lam
        else:
            assert -lam < t.gross_return < lam
    assert np.all(res.equity.values > 0)


def test_position_trades_log():
    bars = bars_from_closes([100, 101, 102, 101, 100])
    trades = position_trades([1, 1, -1, 0, 0], bars)
    assert [(t.entry_index, t.exit_index, t.direction) for t in trades] == [(0, 2, 1), (2, 3, -1)]
    assert trades[0].gross_return == pytest.approx(0.02)


def test_writers(tmp_path):
    bars = bars_from_closes([100, 103, 103])
    res = simulate_tbl([1, 0, 0], bars, LabelSpec(0.02, 2))
    write_equity(res.equity, tmp_path / "e.csv", ["seed=1"])
    write_trades(res.trades, tmp_path / "t.csv", ["seed=1"])
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[:2] == ["# seed=1", "timestamp,value"]
    assert (tmp_path / "t.csv").read_text().splitlines()[1] == \
        "entry_ts,exit_ts,direction,exit_reason,gross_return,net_return"
