from __future__ import annotations
from typing import Dict, List, Literal, Optional, Tuple
from datetime import datetime
import math
import re

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# ==========================================
# 📅 WEEK CALENDAR
# ==========================================
# Every year contributes exactly 52 weeks; ISO week 53 is merged into week 52
# at ingestion, so week arithmetic is plain integer arithmetic.
WEEKS_PER_YEAR = 52
REGIONS = ("NSW", "VIC", "SA")

_WEEK_RE = re.compile(r"^(\d{4})-W(\d{2})$")


def parse_week(label: str, allow_53: bool = False) -> Tuple[int, int]:
    match = _WEEK_RE.match(label.strip())
    if not match:
        raise ValueError(f"invalid ISO week label '{label}' (expected YYYY-Www)")
    year, week = int(match.group(1)), int(match.group(2))
    top = 53 if allow_53 else WEEKS_PER_YEAR
    if not 1 <= week <= top:
        raise ValueError(f"week number out of range in '{label}'")
    return year, week


def week_ordinal(label: str) -> int:
    year, week = parse_week(label)
    return year * WEEKS_PER_YEAR + (week - 1)


def week_label(ordinal: int) -> str:
    year, idx = divmod(ordinal, WEEKS_PER_YEAR)
    return f"{year:04d}-W{idx + 1:02d}"


def shift_week(label: str, steps: int) -> str:
    return week_label(week_ordinal(label) + steps)


# ==========================================
# SERIES CORE
# ==========================================

class TimeSeries(BaseModel):
    """Regularly spaced weekly observations starting at an ISO week."""
    model_config = ConfigDict(frozen=True)

    values: Tuple[float, ...]
    start: str = "2000-W01"
    period: int = Field(default=WEEKS_PER_YEAR, ge=1)  # observations per seasonal cycle

    @field_validator("values")
    @classmethod
    def _no_missing(cls, v):
        if not all(math.isfinite(x) for x in v):
            raise ValueError("series contains missing or non-finite values")
        return v

    @field_validator("start")
    @classmethod
    def _valid_start(cls, v):
        parse_week(v)
        return v

    @classmethod
    def from_array(cls, values, start: str = "2000-W01", period: int = WEEKS_PER_YEAR) -> "TimeSeries":
        return cls(values=tuple(float(x) for x in np.asarray(values, dtype=float).ravel()), start=start, period=period)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def end(self) -> str:
        return shift_week(self.start, self.n - 1)

    def array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def weeks(self) -> List[str]:
        first = week_ordinal(self.start)
        return [week_label(first + i) for i in range(self.n)]

    def index_of(self, label: str) -> int:
        return week_ordinal(label) - week_ordinal(self.start)

    def slice(self, i: int, j: int) -> "TimeSeries":
        return TimeSeries(values=self.values[i:j], start=shift_week(self.start, i), period=self.period)


class DifferencingOrders(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int = Field(default=0, ge=0, le=2)
    D: int = Field(default=0, ge=0, le=1)
    S: int = Field(default=WEEKS_PER_YEAR, ge=1)

    @property
    def lost(self) -> int:
        """Observations consumed by differencing."""
        return self.d + self.D * self.S


# ==========================================
# STATIONARITY
# ==========================================

class KpssResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    statistic: float = Field(ge=0)
    p_value_band: float = Field(ge=0.01, le=0.10)
    lags_used: int = Field(ge=0)
    stationary_at_5pct: bool


# ==========================================
# SARIMA ENGINE
# ==========================================

class SarimaSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int = Field(default=0, ge=0)
    q: int = Field(default=0, ge=0)
    P: int = Field(default=0, ge=0)
    Q: int = Field(default=0, ge=0)
    orders: DifferencingOrders = DifferencingOrders(S=1)
    include_intercept: bool = False

    @model_validator(mode="before")
    @classmethod
    def _default_intercept(cls, data):
        # δ is present exactly when nothing is differenced, unless overridden
        if isinstance(data, dict) and data.get("include_intercept") is None:
            orders = data.get("orders") or DifferencingOrders(S=1)
            if isinstance(orders, dict):
                orders = DifferencingOrders(**orders)
            data = {**data, "include_intercept": orders.d + orders.D == 0}
        return data

    @model_validator(mode="after")
    def _seasonal_consistency(self):
        if self.orders.S == 1 and (self.P or self.Q or self.orders.D):
            raise ValueError("seasonal orders P, Q, D must be zero when S = 1")
        return self

    def with_orders(self, orders: DifferencingOrders) -> "SarimaSpec":
        """Same ARMA orders on new differencing; the intercept follows the new d and D."""
        return SarimaSpec(p=self.p, q=self.q, P=self.P, Q=self.Q, orders=orders)

    @property
    def order_sum(self) -> int:
        return self.p + self.q + self.P + self.Q

    @property
    def ar_degree(self) -> int:
        return self.p + self.P * self.orders.S

    @property
    def ma_degree(self) -> int:
        return self.q + self.Q * self.orders.S

    @property
    def label(self) -> str:
        o = self.orders
        return f"({self.p},{o.d},{self.q})x({self.P},{o.D},{self.Q})_{o.S}"


class SarimaParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    phi: Tuple[float, ...] = ()
    theta: Tuple[float, ...] = ()
    Phi: Tuple[float, ...] = ()
    Theta: Tuple[float, ...] = ()
    delta: float = 0.0
    sigma2: float = Field(default=1.0, gt=0)


# ==========================================
# EXOGENOUS REGRESSION
# ==========================================

TermLevel = Literal["none", "linear", "quadratic"]
TERM_LEVELS: Tuple[str, ...] = ("none", "linear", "quadratic")
# variable name on ExogSpec -> column prefix
EXOG_VARIABLES: Tuple[Tuple[str, str], ...] = (("max_temp", "max"), ("min_temp", "min"), ("solar", "sol"))


class ExogSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_temp: TermLevel = "none"
    min_temp: TermLevel = "none"
    solar: TermLevel = "none"

    def level(self, variable: str) -> str:
        return getattr(self, variable)

    @property
    def n_columns(self) -> int:
        return sum(TERM_LEVELS.index(self.level(v)) for v, _ in EXOG_VARIABLES)

    @property
    def column_names(self) -> List[str]:
        names = []
        for variable, prefix in EXOG_VARIABLES:
            lvl = self.level(variable)
            if lvl in ("linear", "quadratic"):
                names.append(prefix)
            if lvl == "quadratic":
                names.append(f"{prefix}^2")
        return names

    @property
    def label(self) -> str:
        return " + ".join(self.column_names) or "none"


class DesignMatrix(BaseModel):
    model_config = ConfigDict(frozen=True)

    names: Tuple[str, ...] = ()
    columns: Tuple[Tuple[float, ...], ...] = ()
    n_rows: int = Field(ge=0)
    start: str = "2000-W01"
    # training means per variable prefix ("max", "min", "sol"), reused at forecast time
    centering: Dict[str, float] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_shape(self):
        if len(self.names) != len(self.columns):
            raise ValueError("names and columns differ in length")
        if len(set(self.names)) != len(self.names):
            raise ValueError("column names must be unique")
        for name, col in zip(self.names, self.columns):
            if len(col) != self.n_rows:
                raise ValueError(f"column '{name}' has {len(col)} rows, expected {self.n_rows}")
            if not all(math.isfinite(x) for x in col):
                raise ValueError(f"column '{name}' has non-finite entries")
        return self

    @property
    def k(self) -> int:
        return len(self.names)

    def array(self) -> np.ndarray:
        if not self.columns:
            return np.zeros((self.n_rows, 0))
        return np.column_stack([np.asarray(c, dtype=float) for c in self.columns])


# ==========================================
# FITTED MODELS & FORECASTS
# ==========================================

class FittedModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: SarimaSpec
    params: SarimaParams
    beta: Tuple[float, ...] = ()
    beta_names: Tuple[str, ...] = ()
    loglik: float
    aicc: float
    n_effective: int
    residuals: TimeSeries  # standardized one-step innovations
    converged: bool = True
    iterations: int = 0
    series: TimeSeries  # training data on the original scale
    exog: Optional[DesignMatrix] = None
    exog_spec: Optional[ExogSpec] = None

    @model_validator(mode="after")
    def _check_lengths(self):
        if self.residuals.n != self.n_effective:
            raise ValueError("residual length must equal n_effective")
        if len(self.beta) != len(self.beta_names):
            raise ValueError("beta and beta_names differ in length")
        return self

    @property
    def n_params(self) -> int:
        """Parameter count used by AICc: ARMA + δ + β + σ²."""
        return self.spec.order_sum + int(self.spec.include_intercept) + len(self.beta) + 1

    @property
    def is_hybrid(self) -> bool:
        return len(self.beta) > 0


class Forecast(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: str
    point: Tuple[float, ...]
    lower: Tuple[float, ...]
    upper: Tuple[float, ...]
    level: float = Field(gt=0, lt=1)

    @model_validator(mode="after")
    def _ordered(self):
        if not len(self.point) == len(self.lower) == len(self.upper):
            raise ValueError("forecast vectors differ in length")
        for lo, pt, hi in zip(self.lower, self.point, self.upper):
            if not lo <= pt <= hi:
                raise ValueError("forecast bounds must satisfy lower <= point <= upper")
        return self

    @property
    def h(self) -> int:
        return len(self.point)

    def weeks(self) -> List[str]:
        first = week_ordinal(self.start)
        return [week_label(first + i) for i in range(self.h)]


# ==========================================
# MODEL SELECTION
# ==========================================

class Candidate(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: SarimaSpec
    exog_spec: ExogSpec = ExogSpec()
    k: int
    loglik: Optional[float] = None
    aicc: Optional[float] = None
    converged: bool = False
    error: Optional[str] = None


class SearchReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    stage: str = "orders"  # orders | exog | joint
    candidates: Tuple[Candidate, ...]
    best: int
    ties: Tuple[int, ...] = ()


# ==========================================
# EVALUATION
# ==========================================

class AccuracyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    mae: float = Field(ge=0)   # MW
    mape: float = Field(ge=0)  # percent
    h: int = Field(ge=1)


class ResidualDiagnostics(BaseModel):
    model_config = ConfigDict(frozen=True)

    acf_values: Tuple[float, ...]  # lags 1..max_lag
    band: float = Field(gt=0)
    lags_outside_band: Tuple[int, ...]
    qq_points: Tuple[Tuple[float, float], ...]

    def passes(self, max_fraction: float = 0.10) -> bool:
        if not self.acf_values:
            return True
        return len(self.lags_outside_band) / len(self.acf_values) <= max_fraction


# ==========================================
# DATA PIPELINE
# ==========================================

class DemandRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    timestamp: datetime
    demand: float = Field(gt=0)  # MW
    region: str

    @field_validator("region")
    @classmethod
    def _known_region(cls, v):
        v = v.strip().upper()
        if v not in REGIONS:
            raise ValueError(f"unknown region '{v}' (expected one of {', '.join(REGIONS)})")
        return v

    @field_validator("timestamp")
    @classmethod
    def _quarter_hour(cls, v):
        if v.minute % 15 or v.second or v.microsecond:
            raise ValueError(f"timestamp {v.isoformat()} is not on a 15-minute boundary")
        return v


class WeeklyEnvRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    week: str
    max_temp: float  # °C
    min_temp: float  # °C
    solar: float = Field(ge=0)  # MJ/m²

    @field_validator("week")
    @classmethod
    def _valid_week(cls, v):
        parse_week(v, allow_53=True)
        return v

    @model_validator(mode="after")
    def _temps_ordered(self):
        if self.max_temp < self.min_temp:
            raise ValueError(f"max_temp {self.max_temp} below min_temp {self.min_temp} in {self.week}")
        return self


class AlignedDataset(BaseModel):
    model_config = ConfigDict(frozen=True)

    region: str = ""
    aggregation_mode: str = "sum"
    wpd: TimeSeries
    max_t: Optional[TimeSeries] = None
    min_t: Optional[TimeSeries] = None
    sol_t: Optional[TimeSeries] = None
    train_len: int = Field(ge=1)
    test_len: int = Field(ge=0)
    # weeks whose environmental value was filled in at ingestion, per prefix
    filled: Dict[str, Tuple[str, ...]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _shared_index(self):
        if self.train_len + self.test_len != self.wpd.n:
            raise ValueError("train and test spans must cover the series exactly")
        for name, s in self.env_items():
            if s.n != self.wpd.n or s.start != self.wpd.start:
                raise ValueError(f"environmental series '{name}' does not share the demand index")
        return self

    def env_items(self) -> List[Tuple[str, TimeSeries]]:
        return [(n, s) for n, s in (("max", self.max_t), ("min", self.min_t), ("sol", self.sol_t)) if s is not None]

    @property
    def has_env(self) -> bool:
        return self.max_t is not None and self.min_t is not None and self.sol_t is not None

    @property
    def train_span(self) -> Tuple[str, str]:
        return self.wpd.start, shift_week(self.wpd.start, self.train_len - 1)

    @property
    def test_span(self) -> Tuple[str, str]:
        first = shift_week(self.wpd.start, self.train_len)
        return first, shift_week(first, self.test_len - 1)

    def train(self, series: TimeSeries) -> TimeSeries:
        return series.slice(0, self.train_len)

    def test(self, series: TimeSeries) -> TimeSeries:
        return series.slice(self.train_len, self.train_len + self.test_len)
