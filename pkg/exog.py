"""
Environmental regressors: term-level combinations and design matrices.
"""
from __future__ import annotations
from itertools import product
from typing import Dict, List, Optional
import logging

import numpy as np

from errors import AlignmentError, RangeError
from models import EXOG_VARIABLES, TERM_LEVELS, WEEKS_PER_YEAR, DesignMatrix, ExogSpec, TimeSeries, shift_week, week_ordinal

logger = logging.getLogger(__name__)

PREFIXES = tuple(prefix for _, prefix in EXOG_VARIABLES)


def enumerate_specs() -> List[ExogSpec]:
    """All 27 none/linear/quadratic combinations, max varying slowest."""
    return [
        ExogSpec(max_temp=a, min_temp=b, solar=c)
        for a, b, c in product(TERM_LEVELS, repeat=len(EXOG_VARIABLES))
    ]


def _check_aligned(named: Dict[str, TimeSeries]) -> None:
    reference_name, reference = next(iter(named.items()))
    for name, s in named.items():
        if s.n != reference.n:
            raise AlignmentError(name, f"length {s.n} differs from '{reference_name}' ({reference.n})")
        if s.start != reference.start:
            raise AlignmentError(name, f"starts at {s.start}, '{reference_name}' starts at {reference.start}")


def build_design(spec: ExogSpec, max_t: TimeSeries, min_t: TimeSeries, sol_t: TimeSeries,
                 centering: Optional[Dict[str, float]] = None) -> DesignMatrix:
    """Columns in fixed order max, max^2, min, min^2, sol, sol^2 (as selected).

    Variables are centered before squaring. Without ``centering`` the means of
    the given series are used; pass the training constants when building a
    design for the forecast horizon.
    """
    series = {"max": max_t, "min": min_t, "sol": sol_t}
    _check_aligned(series)
    centering = dict(centering) if centering is not None else {
        prefix: float(np.mean(s.array())) for prefix, s in series.items()
    }

    names, columns = [], []
    for (variable, prefix) in EXOG_VARIABLES:
        level = spec.level(variable)
        if level == "none":
            continue
        centered = series[prefix].array() - centering[prefix]
        names.append(prefix)
        columns.append(tuple(centered))
        if level == "quadratic":
            names.append(f"{prefix}^2")
            columns.append(tuple(centered * centered))

    return DesignMatrix(
        names=tuple(names),
        columns=tuple(columns),
        n_rows=max_t.n,
        start=max_t.start,
        centering=centering,
    )


def climatology(history: TimeSeries, horizon: int, start: Optional[str] = None) -> TimeSeries:
    """Same-week-of-year mean of ``history``, laid out over ``horizon`` weeks from ``start``."""
    if horizon < 1:
        raise RangeError(f"horizon must be positive, got {horizon}")
    x = history.array()
    first = week_ordinal(history.start)
    slots = (first + np.arange(history.n)) % WEEKS_PER_YEAR
    means = np.full(WEEKS_PER_YEAR, np.nan)
    for w in range(WEEKS_PER_YEAR):
        hit = slots == w
        if hit.any():
            means[w] = x[hit].mean()
    if np.isnan(means).any():
        # weeks never observed fall back to the overall mean
        means[np.isnan(means)] = x.mean()
    start = start or shift_week(history.end, 1)
    s0 = week_ordinal(start)
    values = means[(s0 + np.arange(horizon)) % WEEKS_PER_YEAR]
    return TimeSeries.from_array(values, start=start, period=history.period)
