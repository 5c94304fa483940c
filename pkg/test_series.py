import numpy as np
import pytest
from pydantic import ValidationError

from errors import ArityError, DegenerateInputError, LengthError, RangeError
from models import DifferencingOrders, TimeSeries, parse_week, shift_week, week_label, week_ordinal
from series import acf, difference, differencing_polynomial, durbin_levinson, integrate, pacf


def test_week_arithmetic_wraps_years():
    assert shift_week("2016-W52", 1) == "2017-W01"
    assert shift_week("2017-W01", -1) == "2016-W52"
    assert week_label(week_ordinal("2013-W07")) == "2013-W07"
    assert week_ordinal("2017-W01") - week_ordinal("2016-W01") == 52


def test_week_53_only_parses_when_allowed():
    with pytest.raises(ValueError):
        parse_week("2015-W53")
    assert parse_week("2015-W53", allow_53=True) == (2015, 53)
    with pytest.raises(ValueError):
        parse_week("2015-53")


def test_series_rejects_missing_values():
    with pytest.raises(ValidationError):
        TimeSeries(values=(1.0, float("nan"), 3.0))


def test_series_end_and_slice():
    s = TimeSeries.from_array(np.arange(10.0), start="2016-W50")
    assert s.end == "2017-W07"
    part = s.slice(3, 6)
    assert part.start == "2017-W01"
    assert part.values == (3.0, 4.0, 5.0)


def test_differencing_polynomial_matches_operator_product():
    poly = differencing_polynomial(DifferencingOrders(d=1, D=1, S=4))
    # (1 - B^4)(1 - B) = 1 - B - B^4 + B^5
    np.testing.assert_allclose(poly, [1, -1, 0, 0, -1, 1])


def test_difference_then_integrate_recovers_series(rng):
    orders = DifferencingOrders(d=1, D=1, S=4)
    x = TimeSeries.from_array(np.cumsum(rng.normal(size=40)) + 5 * np.sin(np.arange(40)), start="2010-W10", period=4)
    w = difference(x, orders)
    assert w.n == 40 - orders.lost
    assert w.start == shift_week(x.start, orders.lost)
    back = integrate(w, orders, x.values[:orders.lost])
    assert back.start == x.start
    np.testing.assert_allclose(back.array(), x.array(), atol=1e-9)


def test_difference_too_short():
    with pytest.raises(LengthError):
        difference(TimeSeries.from_array([1.0, 2.0, 3.0]), DifferencingOrders(d=0, D=1, S=4))


def test_integrate_needs_exact_initial_values():
    orders = DifferencingOrders(d=1, D=0, S=1)
    with pytest.raises(ArityError):
        integrate(TimeSeries.from_array([1.0, 2.0]), orders, [0.0, 0.0])


def test_acf_alternating_series():
    x = TimeSeries.from_array([1.0, -1.0] * 5)
    rho = acf(x, 2)
    assert rho[0] == pytest.approx(1.0)
    assert rho[1] == pytest.approx(-0.9)
    assert rho[2] == pytest.approx(0.8)


def test_acf_edge_cases():
    with pytest.raises(DegenerateInputError):
        acf(TimeSeries.from_array([3.0] * 10), 2)
    with pytest.raises(RangeError):
        acf(TimeSeries.from_array(np.arange(5.0)), 5)
    with pytest.raises(RangeError):
        acf(TimeSeries.from_array(np.arange(5.0)), 0)


def test_durbin_levinson_on_ar1_autocorrelations():
    rho = 0.6 ** np.arange(6)
    np.testing.assert_allclose(durbin_levinson(rho), [0.6, 0, 0, 0, 0], atol=1e-12)


def test_pacf_of_ar1_sample_cuts_off(rng):
    e = rng.normal(size=2000)
    x = np.zeros(2000)
    for t in range(1, 2000):
        x[t] = 0.7 * x[t - 1] + e[t]
    partial = pacf(TimeSeries.from_array(x), 5)
    assert partial[0] == pytest.approx(0.7, abs=0.06)
    assert np.all(np.abs(partial[1:]) < 0.1)


ROUND_TRIP_ORDERS = [(d, D, S) for S in (1, 4, 12, 52) for d in (0, 1, 2) for D in ((0,) if S == 1 else (0, 1))]


@pytest.mark.parametrize("d, D, S", ROUND_TRIP_ORDERS)
def test_round_trip_across_orders(rng, d, D, S):
    orders = DifferencingOrders(d=d, D=D, S=S)
    # values on a 2**-10 grid keep every partial sum exact
    x = TimeSeries.from_array(np.round(np.cumsum(rng.normal(size=200)) * 1024) / 1024 + 50.0, period=S)
    back = integrate(difference(x, orders), orders, x.values[:orders.lost])
    assert np.max(np.abs(back.array() - x.array())) <= 1e-12 * np.max(np.abs(x.array()))


def test_first_partial_autocorrelation_is_the_first_autocorrelation(rng):
    x = TimeSeries.from_array(np.cumsum(rng.normal(size=300)))
    assert pacf(x, 3)[0] == pytest.approx(acf(x, 3)[1], abs=1e-12)
