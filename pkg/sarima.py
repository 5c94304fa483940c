"""
SARIMA engine: exact Gaussian likelihood, estimation, simulation and
interval forecasting for regression models with SARIMA errors,

    x_t = beta' z_t + eta_t,   Phi(B^S) phi(B) (1-B^S)^D (1-B)^d eta_t = delta + Theta(B^S) theta(B) w_t

Differencing is applied to x and to every column of z inside the likelihood.
The intercept delta enters as the mean mu = delta / (phi(1) Phi(1)) of the
differenced series.
"""
from __future__ import annotations
from typing import List, Optional, Sequence, Tuple
from pathlib import Path
import json
import logging

import numpy as np
from numpy.polynomial import polynomial as npoly
from pydantic import ValidationError
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import ndtri

from errors import ArityError, CollinearityError, DomainError, InputFileError, LengthError, ParseError, RangeError
from models import DesignMatrix, ExogSpec, FittedModel, Forecast, SarimaParams, SarimaSpec, TimeSeries, shift_week
from selection import aicc
from series import difference_array, differencing_polynomial, integrate_array
from statespace import (
    ar_polynomial, constrain, gaussian_loglik, kalman_filter, ma_polynomial, propagate,
    roots_outside_unit_circle, unconstrain,
)

logger = logging.getLogger(__name__)

DOCUMENT_VERSION = 1
INTERCEPT_NAME = "const"

# Optimizer settings
MAX_ITERATIONS = 500
GRADIENT_TOL = 1e-5
FD_RELATIVE_STEP = 1e-6
PENALTY = 1e10


# ==========================================
# Polynomials
# ==========================================

def _seasonal_expand(coeffs: Sequence[float], S: int) -> np.ndarray:
    out = np.zeros(len(coeffs) * S)
    for i, c in enumerate(coeffs, start=1):
        out[i * S - 1] = c
    return out


def _multiply_minus(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Coefficients of (1 - sum a B^i)(1 - sum b B^i) in the same convention."""
    return -npoly.polymul(ar_polynomial(a), ar_polynomial(b))[1:]


def _check_dims(spec: SarimaSpec, params: SarimaParams) -> None:
    expected = {"phi": spec.p, "theta": spec.q, "Phi": spec.P, "Theta": spec.Q}
    for name, size in expected.items():
        got = len(getattr(params, name))
        if got != size:
            raise ArityError(f"{name} has {got} coefficients but the spec asks for {size}")


def expand_polynomials(spec: SarimaSpec, params: SarimaParams) -> Tuple[np.ndarray, np.ndarray]:
    """Multiplied-out Phi(B^S)phi(B) ("minus" convention) and Theta(B^S)theta(B) ("plus")."""
    _check_dims(spec, params)
    S = spec.orders.S
    ar = _multiply_minus(np.asarray(params.phi, dtype=float), _seasonal_expand(params.Phi, S))
    ma = npoly.polymul(ma_polynomial(params.theta), ma_polynomial(_seasonal_expand(params.Theta, S)))[1:]
    # polymul trims trailing zeros; pad back to the nominal degrees
    ar = np.pad(ar, (0, spec.ar_degree - len(ar)))[:spec.ar_degree]
    ma = np.pad(ma, (0, spec.ma_degree - len(ma)))[:spec.ma_degree]
    return ar, ma


def check_params(spec: SarimaSpec, params: SarimaParams) -> None:
    _check_dims(spec, params)
    S = spec.orders.S
    if not roots_outside_unit_circle(ar_polynomial(params.phi)) or \
            not roots_outside_unit_circle(ar_polynomial(_seasonal_expand(params.Phi, S))):
        raise DomainError(f"AR polynomial of {spec.label} is not stationary")
    if not roots_outside_unit_circle(ma_polynomial(params.theta)) or \
            not roots_outside_unit_circle(ma_polynomial(_seasonal_expand(params.Theta, S))):
        raise DomainError(f"MA polynomial of {spec.label} is not invertible")


def intercept_mean(spec: SarimaSpec, params: SarimaParams) -> float:
    """Mean of the differenced series implied by delta."""
    if not spec.include_intercept:
        return 0.0
    ar, _ = expand_polynomials(spec, params)
    return params.delta / (1.0 - ar.sum())


def psi_weights(spec: SarimaSpec, params: SarimaParams, count: int) -> np.ndarray:
    """First ``count`` MA(inf) weights of the integrated process, psi_0 = 1."""
    check_params(spec, params)
    ar, ma = expand_polynomials(spec, params)
    full_ar = npoly.polymul(ar_polynomial(ar), differencing_polynomial(spec.orders))
    impulse = np.zeros(count)
    impulse[0] = 1.0
    return lfilter(ma_polynomial(ma), full_ar, impulse)


def normal_quantile(level: float) -> float:
    """Two-sided standard normal quantile z_{(1+level)/2}."""
    if not 0 < level < 1:
        raise RangeError(f"confidence level must lie in (0, 1), got {level}")
    return float(ndtri((1.0 + level) / 2.0))


# ==========================================
# Likelihood
# ==========================================

def _min_length(spec: SarimaSpec) -> int:
    return spec.orders.lost + max(spec.ar_degree, spec.ma_degree) + 1


def _regression_inputs(series: TimeSeries, spec: SarimaSpec,
                       exog: Optional[DesignMatrix]) -> Tuple[np.ndarray, np.ndarray, List[str]]:
    """Differenced response and differenced regressors (intercept column first)."""
    if series.n < _min_length(spec):
        raise LengthError(_min_length(spec), series.n)
    w = difference_array(series.array(), spec.orders)
    columns, names = [], []
    if spec.include_intercept:
        columns.append(np.ones(len(w)))
        names.append(INTERCEPT_NAME)
    if exog is not None and exog.k:
        if exog.n_rows != series.n:
            raise ArityError(f"design has {exog.n_rows} rows but the series has {series.n}")
        Xd = difference_array(exog.array(), spec.orders)
        columns.extend(Xd.T)
        names.extend(exog.names)
    X = np.column_stack(columns) if columns else np.zeros((len(w), 0))
    return w, X, names


def _check_rank(X: np.ndarray, names: List[str]) -> None:
    if X.shape[1] == 0:
        return
    if np.linalg.matrix_rank(X) == X.shape[1]:
        return
    offending, kept = [], []
    for j, name in enumerate(names):
        trial = X[:, kept + [j]]
        if np.linalg.matrix_rank(trial) < len(kept) + 1:
            offending.append(name)
        else:
            kept.append(j)
    raise CollinearityError(offending)


def _coefficients(spec: SarimaSpec, params: SarimaParams, beta: Optional[Sequence[float]],
                  exog: Optional[DesignMatrix]) -> np.ndarray:
    k = exog.k if exog is not None else 0
    beta = np.zeros(k) if beta is None else np.asarray(beta, dtype=float)
    if len(beta) != k:
        raise ArityError(f"beta has {len(beta)} entries but the design has {k} columns")
    if spec.include_intercept:
        return np.concatenate([[intercept_mean(spec, params)], beta])
    return beta


def loglikelihood(series: TimeSeries, spec: SarimaSpec, params: SarimaParams,
                  exog_design: Optional[DesignMatrix] = None,
                  beta: Optional[Sequence[float]] = None) -> float:
    """Exact Gaussian log-likelihood of the differenced, regression-adjusted series."""
    check_params(spec, params)
    ar, ma = expand_polynomials(spec, params)
    w, X, _ = _regression_inputs(series, spec, exog_design)
    coef = _coefficients(spec, params, beta, exog_design)
    out = kalman_filter(w - X @ coef, ar, ma, params.sigma2)
    return gaussian_loglik(out.innovations, out.variances)


def fixed_model(series: TimeSeries, spec: SarimaSpec, params: SarimaParams,
                exog_design: Optional[DesignMatrix] = None, beta: Optional[Sequence[float]] = None,
                exog_spec: Optional[ExogSpec] = None, converged: bool = True,
                iterations: int = 0) -> FittedModel:
    """Assemble a FittedModel at given parameter values (filter only)."""
    check_params(spec, params)
    ar, ma = expand_polynomials(spec, params)
    w, X, _ = _regression_inputs(series, spec, exog_design)
    coef = _coefficients(spec, params, beta, exog_design)
    out = kalman_filter(w - X @ coef, ar, ma, params.sigma2)
    loglik = gaussian_loglik(out.innovations, out.variances)
    standardized = out.innovations[:, 0] / np.sqrt(out.variances)

    exog_k = exog_design.k if exog_design is not None else 0
    names = tuple(exog_design.names) if exog_k else ()
    beta_t = tuple(float(b) for b in (coef[-exog_k:] if exog_k else ()))
    k = spec.order_sum + int(spec.include_intercept) + exog_k + 1
    return FittedModel(
        spec=spec,
        params=params,
        beta=beta_t,
        beta_names=names,
        loglik=loglik,
        aicc=aicc(loglik, k, len(w)),
        n_effective=len(w),
        residuals=TimeSeries.from_array(standardized, start=shift_week(series.start, spec.orders.lost),
                                        period=series.period),
        converged=converged,
        iterations=iterations,
        series=series,
        exog=exog_design if exog_k else None,
        exog_spec=exog_spec,
    )


# ==========================================
# Estimation
# ==========================================

def _hannan_rissanen(e: np.ndarray, p: int, q: int, lag: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Regression of e_t on its own lags and on lagged long-AR residuals."""
    n = len(e)
    if p == 0 and q == 0:
        return np.zeros(0), np.zeros(0), e
    eps = np.zeros(n)
    long_order = 0
    if q:
        long_order = max(p + q, 3)
        start = lag * long_order
        if n - start <= long_order + 1:
            return np.zeros(p), np.zeros(q), e
        lagged = np.column_stack([e[start - lag * i:n - lag * i] for i in range(1, long_order + 1)])
        coef = np.linalg.lstsq(lagged, e[start:], rcond=None)[0]
        eps[start:] = e[start:] - lagged @ coef
    start = lag * (max(p, q) + long_order)
    if n - start <= p + q + 1:
        return np.zeros(p), np.zeros(q), e
    cols = [e[start - lag * i:n - lag * i] for i in range(1, p + 1)]
    cols += [eps[start - lag * j:n - lag * j] for j in range(1, q + 1)]
    design = np.column_stack(cols)
    coef = np.linalg.lstsq(design, e[start:], rcond=None)[0]
    resid = e.copy()
    resid[start:] = e[start:] - design @ coef
    return coef[:p], coef[p:], resid


def _starting_values(w: np.ndarray, X: np.ndarray, spec: SarimaSpec) -> np.ndarray:
    e = w - X @ np.linalg.lstsq(X, w, rcond=None)[0] if X.shape[1] else w - 0.0
    phi, theta, resid = _hannan_rissanen(e, spec.p, spec.q, 1)
    Phi, Theta, _ = _hannan_rissanen(resid, spec.P, spec.Q, spec.orders.S)

    def _safe_ar(c):
        return c if roots_outside_unit_circle(ar_polynomial(c)) else np.zeros(len(c))

    def _safe_ma(c):
        return c if roots_outside_unit_circle(ma_polynomial(c)) else np.zeros(len(c))

    return np.concatenate([
        unconstrain(_safe_ar(phi)),
        unconstrain(_safe_ar(Phi)),
        unconstrain(-_safe_ma(theta)),
        unconstrain(-_safe_ma(Theta)),
    ])


def _unpack(u: np.ndarray, spec: SarimaSpec) -> Tuple[np.ndarray, ...]:
    p, P, q, Q = spec.p, spec.P, spec.q, spec.Q
    phi = constrain(u[:p])
    Phi = constrain(u[p:p + P])
    theta = -constrain(u[p + P:p + P + q])
    Theta = -constrain(u[p + P + q:p + P + q + Q])
    return phi, Phi, theta, Theta


def _profile(stacked: np.ndarray, ar: np.ndarray, ma: np.ndarray) -> Tuple[float, np.ndarray, float]:
    """Log-likelihood with regression coefficients and sigma2 concentrated out."""
    out = kalman_filter(stacked, ar, ma, 1.0)
    scale = 1.0 / np.sqrt(out.variances)
    vy = out.innovations[:, 0] * scale
    VX = out.innovations[:, 1:] * scale[:, None]
    if VX.shape[1]:
        coef = np.linalg.lstsq(VX, vy, rcond=None)[0]
        resid = vy - VX @ coef
    else:
        coef = np.zeros(0)
        resid = vy
    n = len(vy)
    sigma2 = max(float(resid @ resid) / n, 1e-12 * max(1.0, float(stacked[:, 0] @ stacked[:, 0]) / n))
    loglik = -0.5 * n * (np.log(2.0 * np.pi) + np.log(sigma2)) - 0.5 * float(resid @ resid) / sigma2 \
        - 0.5 * float(np.sum(np.log(out.variances)))
    return float(loglik), coef, sigma2


def fit(series: TimeSeries, spec: SarimaSpec, exog_design: Optional[DesignMatrix] = None,
        exog_spec: Optional[ExogSpec] = None) -> FittedModel:
    """Maximum likelihood fit of a regression model with SARIMA errors.

    The optimizer works on unconstrained partial autocorrelations, so every
    iterate is stationary and invertible; beta, the intercept and sigma2 are
    profiled out by GLS at each step. Hitting the iteration cap returns the
    best point found with converged=False.
    """
    w, X, names = _regression_inputs(series, spec, exog_design)
    _check_rank(X, names)
    stacked = np.column_stack([w, X])
    n_eff = len(w)

    def objective(u):
        phi, Phi, theta, Theta = _unpack(u, spec)
        try:
            ar, ma = expand_polynomials(spec, SarimaParams(phi=tuple(phi), theta=tuple(theta),
                                                           Phi=tuple(Phi), Theta=tuple(Theta)))
            loglik, _, _ = _profile(stacked, ar, ma)
        except (DomainError, np.linalg.LinAlgError, ValueError, FloatingPointError):
            return PENALTY
        return -loglik / n_eff if np.isfinite(loglik) else PENALTY

    u0 = _starting_values(w, X, spec)
    converged, iterations = True, 0
    u = u0
    if len(u0):
        res = minimize(objective, u0, method="BFGS", jac="3-point",
                       options={"gtol": GRADIENT_TOL, "maxiter": MAX_ITERATIONS,
                                "finite_diff_rel_step": FD_RELATIVE_STEP})
        u = res.x
        iterations = int(res.nit)
        converged = res.status != 1 and bool(np.isfinite(res.fun)) and res.fun < PENALTY
        if not converged:
            logger.warning(f"⚠️ {spec.label} did not converge after {iterations} iterations: {res.message}")

    phi, Phi, theta, Theta = _unpack(u, spec)
    shape = SarimaParams(phi=tuple(phi), theta=tuple(theta), Phi=tuple(Phi), Theta=tuple(Theta))
    ar, ma = expand_polynomials(spec, shape)
    loglik, coef, sigma2 = _profile(stacked, ar, ma)

    delta = 0.0
    if spec.include_intercept:
        delta = float(coef[0]) * (1.0 - ar.sum())
        coef = coef[1:]
    params = shape.model_copy(update={"delta": delta, "sigma2": sigma2})
    logger.debug(f"Fitted {spec.label} [{exog_spec.label if exog_spec else 'none'}]: "
                 f"loglik={loglik:.4f} iterations={iterations}")
    return fixed_model(series, spec, params, exog_design, coef, exog_spec=exog_spec,
                       converged=converged, iterations=iterations)


# ==========================================
# Simulation
# ==========================================

def simulate(spec: SarimaSpec, params: SarimaParams, n: int, seed: int,
             start: str = "2000-W01") -> TimeSeries:
    """Draw n observations; differencing is undone with cumulative sums from zero."""
    if n < 1:
        raise RangeError(f"n must be positive, got {n}")
    check_params(spec, params)
    S = spec.orders.S
    burn_in = 10 * (spec.p + spec.q + (spec.P + spec.Q) * S + S)
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, np.sqrt(params.sigma2), n + burn_in)
    ar, ma = expand_polynomials(spec, params)
    w = lfilter(ma_polynomial(ma), ar_polynomial(ar), eps)[burn_in:] + intercept_mean(spec, params)
    m = spec.orders.lost
    x = integrate_array(w, spec.orders, np.zeros(m))[m:]
    return TimeSeries.from_array(x, start=start, period=S)


# ==========================================
# Forecasting
# ==========================================

def forecast(model: FittedModel, h: int, future_exog: Optional[DesignMatrix] = None,
             level: float = 0.99) -> Forecast:
    if h < 1:
        raise RangeError(f"forecast horizon must be positive, got {h}")
    z = normal_quantile(level)
    spec, params = model.spec, model.params
    k = len(model.beta)
    beta = np.asarray(model.beta, dtype=float)
    if k:
        if future_exog is None or future_exog.n_rows < h:
            got = 0 if future_exog is None else future_exog.n_rows
            raise ArityError(f"model has exogenous terms: future_exog must supply {h} rows, got {got}")
        if tuple(future_exog.names) != tuple(model.beta_names):
            raise ArityError(f"future_exog columns {list(future_exog.names)} do not match {list(model.beta_names)}")
        Zf = future_exog.array()[:h]
    elif future_exog is not None and future_exog.k:
        raise ArityError("model has no exogenous terms but future_exog was supplied")
    else:
        Zf = np.zeros((h, 0))

    x = model.series.array()
    n = len(x)
    Z = model.exog.array() if k else np.zeros((n, 0))
    eta = x - Z @ beta
    ar, ma = expand_polynomials(spec, params)
    mu = intercept_mean(spec, params)
    out = kalman_filter(difference_array(eta, spec.orders) - mu, ar, ma, params.sigma2)
    w_future = propagate(out.state[:, 0], ar, ma, h)[:, 0] + mu

    m = spec.orders.lost
    eta_future = integrate_array(w_future, spec.orders, eta[n - m:])[m:]
    point = eta_future + Zf @ beta

    psi = psi_weights(spec, params, h)
    half = z * np.sqrt(params.sigma2 * np.cumsum(psi * psi))
    return Forecast(
        start=shift_week(model.series.start, n),
        point=tuple(point),
        lower=tuple(point - half),
        upper=tuple(point + half),
        level=level,
    )


# ==========================================
# Model documents
# ==========================================

def named_coefficients(model: FittedModel) -> dict:
    p = model.params
    named = {}
    for prefix, values in (("phi", p.phi), ("theta", p.theta), ("Phi", p.Phi), ("Theta", p.Theta)):
        for i, v in enumerate(values, start=1):
            named[f"{prefix}{i}"] = v
    if model.spec.include_intercept:
        named["delta"] = p.delta
    named["sigma2"] = p.sigma2
    for name, b in zip(model.beta_names, model.beta):
        named[f"beta[{name}]"] = b
    return named


def to_document(model: FittedModel) -> str:
    doc = {
        "format_version": DOCUMENT_VERSION,
        "label": model.spec.label,
        "exog": model.exog_spec.label if model.exog_spec else "none",
        "coefficients": named_coefficients(model),
        "loglik": model.loglik,
        "aicc": model.aicc,
        "converged": model.converged,
        "model": model.model_dump(mode="json"),
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def from_document(text: str) -> FittedModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"model document is not valid JSON ({e.msg})", line=e.lineno)
    version = doc.get("format_version") if isinstance(doc, dict) else None
    if version != DOCUMENT_VERSION:
        raise ParseError(f"unsupported model document version {version!r}")
    try:
        return FittedModel.model_validate(doc["model"])
    except (KeyError, ValidationError) as e:
        raise ParseError(f"malformed model document: {e}")


def save_model(model: FittedModel, path: str) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(to_document(model), encoding="utf-8")


def load_model(path: str) -> FittedModel:
    if not Path(path).exists():
        raise InputFileError(path, "model file not found")
    return from_document(Path(path).read_text(encoding="utf-8"))
