import numpy as np
import pytest

from errors import DegenerateInputError, LengthError, NonStationarizableError
from models import DifferencingOrders, TimeSeries
from stationarity import (
    differencing_table, kpss_pvalue, kpss_statistic, kpss_test, short_lag, suggest_differencing,
)


def test_short_lag():
    assert short_lag(100) == 4
    assert short_lag(364) == 5
    assert short_lag(520) == 6


def test_pvalue_band_is_clamped_and_interpolated():
    assert kpss_pvalue(0.05) == pytest.approx(0.10)
    assert kpss_pvalue(0.463) == pytest.approx(0.05)
    assert kpss_pvalue(0.574) == pytest.approx(0.025)
    assert kpss_pvalue(5.0) == pytest.approx(0.01)
    assert 0.025 < kpss_pvalue(0.52) < 0.05


def test_statistic_by_hand():
    x = np.array([1.0, 3.0, 2.0, 5.0, 4.0, 6.0, 5.0, 8.0, 7.0, 9.0, 8.0, 10.0])
    e = x - x.mean()
    s = np.cumsum(e)
    long_run = e @ e / 12 + 2 * 0.5 * (e[1:] @ e[:-1]) / 12
    statistic, lags = kpss_statistic(x, lags=1)
    assert lags == 1
    assert statistic == pytest.approx(s @ s / 144 / long_run)


def test_result_fields(rng):
    result = kpss_test(TimeSeries.from_array(rng.normal(size=200)))
    assert result.lags_used == short_lag(200)
    assert result.stationary_at_5pct == (result.statistic < 0.463)
    assert 0.01 <= result.p_value_band <= 0.10


def test_short_and_constant_series():
    with pytest.raises(LengthError):
        kpss_test(TimeSeries.from_array(np.arange(11.0)))
    with pytest.raises(DegenerateInputError):
        kpss_test(TimeSeries.from_array([4.2] * 50))


def test_statistic_ignores_scale_and_shift(rng):
    x = rng.normal(size=200)
    base = kpss_test(TimeSeries.from_array(x)).statistic
    for c in (1e3, 1e-3, 1e-6, 1e-8, 1e-12):
        assert kpss_test(TimeSeries.from_array(c * x)).statistic == pytest.approx(base, rel=1e-9)
    assert kpss_test(TimeSeries.from_array(x + 5000.0)).statistic == pytest.approx(base, rel=1e-7)
    orders = suggest_differencing(TimeSeries.from_array(np.cumsum(x) * 1e-9, period=1), 1)
    assert orders == suggest_differencing(TimeSeries.from_array(np.cumsum(x), period=1), 1)


@pytest.mark.slow
def test_size_on_white_noise(rng):
    rejected = sum(not kpss_test(TimeSeries.from_array(rng.normal(size=500))).stationary_at_5pct
                   for _ in range(1000))
    assert 0.02 <= rejected / 1000 <= 0.08


@pytest.mark.slow
def test_power_against_trend_and_random_walk(rng):
    t = np.arange(500)
    trend = sum(not kpss_test(TimeSeries.from_array(0.02 * t + rng.normal(size=500))).stationary_at_5pct
                for _ in range(300))
    walk = sum(not kpss_test(TimeSeries.from_array(np.cumsum(rng.normal(size=500)))).stationary_at_5pct
               for _ in range(1000))
    assert trend / 300 >= 0.99
    assert walk / 1000 >= 0.99


def test_random_walk_gets_regular_difference(rng):
    x = TimeSeries.from_array(np.cumsum(rng.normal(size=400)) * 10, period=1)
    orders = suggest_differencing(x, 1)
    assert orders.D == 0
    assert orders.d >= 1


def test_seasonal_pattern_gets_seasonal_difference(rng):
    t = np.arange(240)
    x = TimeSeries.from_array(10 * np.sin(2 * np.pi * t / 12) + rng.normal(size=240), period=12)
    orders = suggest_differencing(x, 12)
    assert orders.D == 1
    assert orders.S == 12


def test_suggestion_needs_two_full_cycles():
    with pytest.raises(LengthError):
        suggest_differencing(TimeSeries.from_array(np.arange(24.0), period=12), 12)


def test_cubic_trend_is_not_stationarizable():
    x = TimeSeries.from_array(np.arange(100.0) ** 3, period=1)
    with pytest.raises(NonStationarizableError) as info:
        suggest_differencing(x, 1)
    assert info.value.result is not None
    assert not info.value.result.stationary_at_5pct
    assert info.value.exit_code == 3


def test_differencing_table_rows(rng):
    x = TimeSeries.from_array(np.cumsum(rng.normal(size=150)), period=1)
    rows = differencing_table(x, DifferencingOrders(d=1, D=0, S=1))
    assert [label for label, _ in rows] == ["before", "after"]
    assert rows[1][1].statistic < rows[0][1].statistic
