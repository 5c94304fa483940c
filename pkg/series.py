"""
Series core: differencing, integration and sample autocorrelations.

The combined differencing operator (1 - B)^d (1 - B^S)^D is expanded once into
a polynomial 1 - c_1 B - ... - c_m B^m with m = d + D*S; differencing applies
it directly and integration inverts it with the recursion
x_t = y_t + sum_j c_j x_{t-j}.
"""
from __future__ import annotations
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly

from errors import ArityError, DegenerateInputError, LengthError, RangeError
from models import DifferencingOrders, TimeSeries, shift_week


def differencing_polynomial(orders: DifferencingOrders) -> np.ndarray:
    """Ascending coefficients of (1 - B^S)^D (1 - B)^d, seasonal factor first."""
    poly = np.array([1.0])
    seasonal = np.zeros(orders.S + 1)
    seasonal[0], seasonal[-1] = 1.0, -1.0
    for _ in range(orders.D):
        poly = npoly.polymul(poly, seasonal)
    for _ in range(orders.d):
        poly = npoly.polymul(poly, [1.0, -1.0])
    return poly


def difference_array(x: np.ndarray, orders: DifferencingOrders) -> np.ndarray:
    """Difference along axis 0 (works for a vector or a matrix of columns)."""
    x = np.asarray(x, dtype=float)
    for _ in range(orders.D):
        x = x[orders.S:] - x[:-orders.S]
    for _ in range(orders.d):
        x = x[1:] - x[:-1]
    return x


def integrate_array(y: np.ndarray, orders: DifferencingOrders, initial: np.ndarray) -> np.ndarray:
    poly = differencing_polynomial(orders)
    m = orders.lost
    coeffs = -poly[1:]  # c_1..c_m
    out = np.empty(m + len(y))
    out[:m] = initial
    for t in range(len(y)):
        past = out[t:t + m][::-1]  # x_{t+m-1}, ..., x_t
        out[m + t] = y[t] + coeffs @ past if m else y[t]
    return out


def difference(series: TimeSeries, orders: DifferencingOrders) -> TimeSeries:
    m = orders.lost
    if series.n <= m:
        raise LengthError(m + 1, series.n)
    values = difference_array(series.array(), orders)
    return TimeSeries.from_array(values, start=shift_week(series.start, m), period=series.period)


def integrate(differenced: TimeSeries, orders: DifferencingOrders, initial_values: Sequence[float]) -> TimeSeries:
    """Invert ``difference`` given the d + D*S pre-sample values."""
    m = orders.lost
    initial = np.asarray(initial_values, dtype=float).ravel()
    if len(initial) != m:
        raise ArityError(f"integration needs exactly {m} initial values, got {len(initial)}")
    values = integrate_array(differenced.array(), orders, initial)
    return TimeSeries.from_array(values, start=shift_week(differenced.start, -m), period=differenced.period)


# ==========================================
# Sample autocorrelation
# ==========================================

def acf_array(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = len(x)
    if max_lag < 1:
        raise RangeError(f"max_lag must be positive, got {max_lag}")
    if max_lag >= n:
        raise RangeError(f"max_lag {max_lag} must be below the series length {n}")
    centered = x - x.mean()
    # n divisor keeps the implied autocovariance sequence positive semi-definite
    gamma0 = centered @ centered / n
    if gamma0 <= 0:
        raise DegenerateInputError("autocorrelation undefined for a constant series")
    full = np.correlate(centered, centered, mode="full")[n - 1:n + max_lag] / n
    return full / gamma0


def acf(series: TimeSeries, max_lag: int) -> np.ndarray:
    """ρ̂(0..max_lag) with ρ̂(0) = 1."""
    return acf_array(series.array(), max_lag)


def durbin_levinson(rho: np.ndarray) -> np.ndarray:
    """Partial autocorrelations at lags 1..len(rho)-1 from ρ(0..K)."""
    max_lag = len(rho) - 1
    partial = np.zeros(max_lag)
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, max_lag + 1):
        num = rho[k] - (phi @ rho[k - 1:0:-1] if k > 1 else 0.0)
        a_kk = num / v
        phi = np.concatenate([phi - a_kk * phi[::-1], [a_kk]])
        v *= 1.0 - a_kk * a_kk
        partial[k - 1] = a_kk
    return partial


def pacf(series: TimeSeries, max_lag: int) -> np.ndarray:
    """Partial autocorrelations at lags 1..max_lag."""
    return durbin_levinson(acf(series, max_lag))
