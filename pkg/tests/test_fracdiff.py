import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from saetrade import fracdiff
from saetrade.fracdiff import (NoStationaryOrderError, fd_weights, fd_weights_product, ffd_transform,
                               optimal_d, scan_d, transform_with_history)


def test_weights_zero_order_is_identity():
    assert fd_weights(0.0).tolist() == [1.0]


def test_weights_first_difference():
    assert fd_weights(1.0).tolist() == [1.0, -1.0]


def test_weights_half_order_hand_values():
    w = fd_weights(0.5, tau=1e-12, k_max=4)
    np.testing.assert_allclose(w, [1, -0.5, -0.125, -0.0625], rtol=0, atol=1e-15)


@pytest.mark.parametrize("d", [0.3, 0.5, 1.0, 2.0])
def test_recursion_matches_product(d):
    w = fd_weights(d, tau=1e-300, k_max=21)
    for k in range(min(len(w), 21)):
        assert abs(w[k] - fd_weights_product(d, k)) < 1e-12


def test_negative_order_rejected():
    with pytest.raises(ValueError):
        fd_weights(-0.1)


def test_truncation_keeps_weights_above_tau():
    tau = 1e-4
    w = fd_weights(0.4, tau=tau)
    assert w[0] == 1.0
    assert np.all(np.abs(w[1:]) >= tau)
    nxt = -w[-1] * (0.4 - len(w) + 1) / len(w)
    assert abs(nxt) < tau


def test_partial_sums_shrink_with_window():
    sums = [abs(fd_weights(0.4, tau=1e-300, k_max=k).sum()) for k in (50, 100, 200, 400)]
    assert all(b < a for a, b in zip(sums, sums[1:]))


def test_transform_identity_and_first_difference():
    x = np.array([10.0, 11.0, 13.0])
    np.testing.assert_array_equal(ffd_transform(x, 0.0), x)
    np.testing.assert_array_equal(ffd_transform(x, 1.0), [1.0, 2.0])


def test_transform_capped_half_order():
    w = fd_weights(0.5, tau=1e-12, k_max=4)
    out = fracdiff.apply_weights(np.ones(5), w)
    np.testing.assert_allclose(out, [0.3125, 0.3125], atol=1e-15)


def test_transform_matches_direct_sum():
    rng = np.random.default_rng(3)
    x = rng.standard_normal(60)
    w = fd_weights(0.35, tau=1e-2)
    out = fracdiff.apply_weights(x, w)
    for i, t in enumerate(range(len(w) - 1, len(x))):
        assert out[i] == pytest.approx(sum(w[k] * x[t - k] for k in range(len(w))), abs=1e-12)


def test_transform_too_short_reports_length():
    with pytest.raises(ValueError, match="at least"):
        ffd_transform(np.ones(3), 0.5, tau=1e-3)


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 10_000), d=st.floats(0, 1.5))
def test_transform_is_linear(a, b, seed, d):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 80))
    lhs = ffd_transform(a * x + b * y, d, tau=1e-3)
    rhs = a * ffd_transform(x, d, tau=1e-3) + b * ffd_transform(y, d, tau=1e-3)
    np.testing.assert_allclose(lhs, rhs, atol=1e-10)


def test_white_noise_needs_no_differencing():
    x = np.random.default_rng(11).standard_normal(500)
    d, diag = optimal_d(x)
    assert d == 0.0
    assert len(diag) == len(fracdiff.DEFAULT_D_GRID)


def test_random_walk_order_in_unit_interval():
    x = np.cumsum(np.random.default_rng(5).standard_normal(2000))
    d, diag = optimal_d(x, tau=1e-4)
    assert 0 < d <= 1
    assert diag[0].p_value > 0.01


def test_exhausted_grid_carries_diagnostics():
    x = np.cumsum(np.random.default_rng(2).standard_normal(500))
    with pytest.raises(NoStationaryOrderError) as err:
        optimal_d(x, d_grid=[0.0])
    assert len(err.value.diagnostics) == 1
    assert err.value.diagnostics[0].d == 0.0


def test_unfit_order_before_pass_is_an_error():
    x = np.cumsum(np.random.default_rng(2).standard_normal(200))
    with pytest.raises(ValueError, match="too short"):
        optimal_d(x, tau=1e-5)


def test_grid_must_ascend():
    with pytest.raises(ValueError):
        optimal_d(np.random.default_rng(0).standard_normal(100), d_grid=[0.5, 0.1])


def test_correlation_non_increasing_on_random_walks():
    for seed in range(5):
        x = np.cumsum(np.random.default_rng(100 + seed).standard_normal(1500))
        corr = [r.correlation for r in scan_d(x, tau=1e-3)]
        assert all(b <= a + 0.02 for a, b in zip(corr, corr[1:]))


def test_history_transform_is_causal():
    x = np.cumsum(np.random.default_rng(1).standard_normal(100))
    w = fd_weights(0.4, tau=1e-2)
    full = transform_with_history(x, w)
    y = x.copy()
    y[70:] += 50.0
    part = transform_with_history(y, w)
    assert np.all(np.isnan(full[: len(w) - 1]))
    np.testing.assert_array_equal(full[:70], part[:70])


def test_required_length_matches_window():
    w = fd_weights(0.3, tau=1e-3)
    assert fracdiff.required_length(0.3, tau=1e-3) == len(w) - 1 + 1 + 10
    assert not math.isnan(scan_d(np.random.default_rng(0).standard_normal(len(w) + 11), [0.3], tau=1e-3)[0].p_value)
