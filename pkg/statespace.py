"""
State-space machinery for ARMA(p', q') processes.

Representation (Harvey form), r = max(p', q' + 1):

    alpha_{t+1} = T alpha_t + R eps_t,   y_t = alpha_t[0]

T carries the AR coefficients in its first column and ones on the
superdiagonal, R = (1, b_1, ..., b_{r-1}). The filter starts from the
stationary covariance (solution of P = T P T' + sigma2 R R').

AR coefficients use the "minus" convention (1 - a_1 B - ...), MA coefficients
the "plus" convention (1 + b_1 B + ...).
"""
from __future__ import annotations
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.linalg import solve_discrete_lyapunov

from errors import DomainError

# Once the predicted covariance stops moving by more than this (relative to
# sigma2) the gain is frozen for the rest of the sample.
STEADY_STATE_TOL = 1e-11


@dataclass(frozen=True)
class FilterOutput:
    innovations: np.ndarray     # (n, k) one-step prediction errors
    variances: np.ndarray       # (n,) innovation variances F_t
    state: np.ndarray           # (r, k) predicted state for t = n + 1
    state_cov: np.ndarray       # (r, r) its covariance


# ==========================================
# Polynomials & constraints
# ==========================================

def ar_polynomial(ar: np.ndarray) -> np.ndarray:
    return np.concatenate([[1.0], -np.asarray(ar, dtype=float)])


def ma_polynomial(ma: np.ndarray) -> np.ndarray:
    return np.concatenate([[1.0], np.asarray(ma, dtype=float)])


def roots_outside_unit_circle(poly: np.ndarray) -> bool:
    poly = np.trim_zeros(np.asarray(poly, dtype=float), "b")
    if len(poly) <= 1:
        return True
    roots = npoly.polyroots(poly)
    return bool(np.all(np.abs(roots) > 1.0))


def constrain(unconstrained: np.ndarray) -> np.ndarray:
    """Map R^k onto the stationary region via partial autocorrelations.

    Returns AR coefficients a with 1 - a_1 B - ... - a_k B^k stationary.
    """
    partial = np.tanh(np.asarray(unconstrained, dtype=float))
    coeffs = np.zeros(0)
    for r in partial:
        coeffs = np.concatenate([coeffs - r * coeffs[::-1], [r]])
    return coeffs


def unconstrain(coeffs: np.ndarray, clip: float = 0.99) -> np.ndarray:
    """Inverse of ``constrain`` (step-down recursion); partials clipped to ±clip."""
    a = np.asarray(coeffs, dtype=float).copy()
    k = len(a)
    partial = np.zeros(k)
    for j in range(k - 1, -1, -1):
        r = a[j]
        partial[j] = r
        if j == 0:
            break
        denom = 1.0 - r * r
        if abs(denom) < 1e-12:
            denom = 1e-12
        a = (a[:j] + r * a[:j][::-1]) / denom
    return np.arctanh(np.clip(partial, -clip, clip))


# ==========================================
# Representation
# ==========================================

def companion(ar: np.ndarray, ma: np.ndarray) -> Tuple[np.ndarray, np.ndarray, int]:
    ar = np.asarray(ar, dtype=float)
    ma = np.asarray(ma, dtype=float)
    r = max(len(ar), len(ma) + 1, 1)
    T = np.zeros((r, r))
    T[:len(ar), 0] = ar
    T[np.arange(r - 1), np.arange(1, r)] = 1.0
    R = np.zeros(r)
    R[0] = 1.0
    R[1:len(ma) + 1] = ma
    return T, R, r


def _apply_T(first_col: np.ndarray, M: np.ndarray) -> np.ndarray:
    """T @ M for the companion matrix without forming the product."""
    out = np.outer(first_col, M[0])
    out[:-1] += M[1:]
    return out


def stationary_covariance(ar: np.ndarray, ma: np.ndarray, sigma2: float = 1.0) -> np.ndarray:
    T, R, _ = companion(ar, ma)
    P0 = solve_discrete_lyapunov(T, sigma2 * np.outer(R, R))
    return (P0 + P0.T) / 2.0


def kalman_filter(y: np.ndarray, ar: np.ndarray, ma: np.ndarray, sigma2: float = 1.0) -> FilterOutput:
    """Run the exact-initialized filter on one or several columns at once.

    All columns share the same covariance recursion, so filtering the response
    together with the regressors whitens the whole regression in one pass.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    n, k = y.shape
    T, R, r = companion(ar, ma)
    first_col = T[:, 0].copy()
    Q = sigma2 * np.outer(R, R)
    P = stationary_covariance(ar, ma, sigma2)

    a = np.zeros((r, k))
    innovations = np.empty((n, k))
    variances = np.empty(n)
    steady = False
    K = None
    F = 0.0
    for t in range(n):
        if not steady:
            F = P[0, 0]
            if not np.isfinite(F) or F <= 0:
                raise DomainError(f"innovation variance became non-positive at t={t}")
            K = P[:, 0] / F
        v = y[t] - a[0]
        innovations[t] = v
        variances[t] = F
        a = _apply_T(first_col, a + np.outer(K, v))
        if not steady:
            updated = P - np.outer(P[:, 0], P[0, :]) / F
            TP = _apply_T(first_col, updated)
            P_next = _apply_T(first_col, TP.T) + Q
            if np.max(np.abs(P_next - P)) < STEADY_STATE_TOL * sigma2:
                steady = True
            P = P_next
    return FilterOutput(innovations=innovations, variances=variances, state=a, state_cov=P)


def gaussian_loglik(innovations: np.ndarray, variances: np.ndarray) -> float:
    v = np.asarray(innovations, dtype=float).ravel()
    return float(-0.5 * np.sum(np.log(2.0 * np.pi) + np.log(variances) + v * v / variances))


def propagate(state: np.ndarray, ar: np.ndarray, ma: np.ndarray, steps: int) -> np.ndarray:
    """Observation-row predictions Z T^j a for j = 0..steps-1 (noise set to zero)."""
    T, _, _ = companion(ar, ma)
    first_col = T[:, 0].copy()
    a = np.asarray(state, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    out = np.empty((steps, a.shape[1]))
    for j in range(steps):
        out[j] = a[0]
        a = _apply_T(first_col, a)
    return out
