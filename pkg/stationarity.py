"""
KPSS level-stationarity test and automatic differencing-order suggestion.
"""
from __future__ import annotations
from typing import List, Optional, Tuple
import logging
import math

import numpy as np

from errors import DegenerateInputError, LengthError, NonStationarizableError
from models import DifferencingOrders, KpssResult, TimeSeries
from series import acf_array, difference_array

logger = logging.getLogger(__name__)

MIN_LENGTH = 12
MAX_D = 2

# Level-stationarity critical values, ascending in the statistic
KPSS_CRITICAL = np.array([0.347, 0.463, 0.574, 0.739])
KPSS_PVALUES = np.array([0.10, 0.05, 0.025, 0.01])
KPSS_5PCT = 0.463


def short_lag(n: int) -> int:
    """Bartlett truncation lag floor(4 (n/100)^(1/4))."""
    return int(math.floor(4.0 * (n / 100.0) ** 0.25))


def kpss_statistic(x: np.ndarray, lags: Optional[int] = None) -> Tuple[float, int]:
    x = np.asarray(x, dtype=float)
    n = len(x)
    if n < MIN_LENGTH:
        raise LengthError(MIN_LENGTH, n)
    e = x - x.mean()
    partial_sums = np.cumsum(e)
    lags = short_lag(n) if lags is None else lags
    lags = min(lags, n - 1)

    if np.ptp(x) == 0:
        raise DegenerateInputError("KPSS long-run variance is zero (constant series)")
    gamma0 = float(e @ e) / n
    long_run = gamma0
    for i in range(1, lags + 1):
        weight = 1.0 - i / (lags + 1.0)
        long_run += 2.0 * weight * (e[i:] @ e[:-i]) / n
    # compared with the lag-0 variance, so the check is scale free
    if long_run <= 1e-14 * gamma0:
        raise DegenerateInputError(f"KPSS long-run variance {long_run:.3g} is numerically zero at {lags} lags")
    return float(partial_sums @ partial_sums / (n * n) / long_run), lags


def kpss_pvalue(statistic: float) -> float:
    # np.interp clamps outside the table, giving the [0.01, 0.10] band
    return float(np.interp(statistic, KPSS_CRITICAL, KPSS_PVALUES))


def kpss_test(series: TimeSeries, lags: Optional[int] = None) -> KpssResult:
    statistic, used = kpss_statistic(series.array(), lags)
    return KpssResult(
        statistic=statistic,
        p_value_band=kpss_pvalue(statistic),
        lags_used=used,
        stationary_at_5pct=statistic < KPSS_5PCT,
    )


def seasonal_strength(x: np.ndarray, S: int) -> float:
    """Sample autocorrelation at the seasonal lag."""
    return float(acf_array(np.asarray(x, dtype=float), S)[S])


def suggest_differencing(series: TimeSeries, S: int, threshold: float = 0.5,
                         lags: Optional[int] = None) -> DifferencingOrders:
    """Pick (d, D): seasonal difference once if lag-S autocorrelation exceeds
    ``threshold``, then raise d until KPSS no longer rejects at 5%."""
    if series.n <= 2 * S:
        raise LengthError(2 * S + 1, series.n)
    x = series.array()
    D = 0
    if S > 1:
        strength = seasonal_strength(x, S)
        D = int(strength > threshold)
        logger.info(f"Seasonal autocorrelation at lag {S}: {strength:.3f} -> D={D}")

    result = None
    for d in range(MAX_D + 1):
        orders = DifferencingOrders(d=d, D=D, S=S)
        w = difference_array(x, orders)
        if len(w) < MIN_LENGTH:
            break
        result = kpss_test(TimeSeries.from_array(w, period=S), lags)
        logger.debug(f"KPSS d={d} D={D}: eta={result.statistic:.4f} p={result.p_value_band:.3f}")
        if result.stationary_at_5pct:
            return orders
    raise NonStationarizableError(
        f"KPSS still rejects stationarity at d={MAX_D}, D={D}", result)


def differencing_table(series: TimeSeries, orders: DifferencingOrders,
                       lags: Optional[int] = None) -> List[Tuple[str, KpssResult]]:
    """KPSS before and after differencing, one row each."""
    before = kpss_test(series, lags)
    after = kpss_test(TimeSeries.from_array(difference_array(series.array(), orders),
                                            period=series.period), lags)
    return [("before", before), ("after", after)]
