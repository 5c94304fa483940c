"""
Forecast accuracy (MAE, MAPE, improvement) and residual diagnostics, plus the
comparison tables printed by the evaluate and reproduce commands.
"""
from __future__ import annotations
from typing import Dict, List, Mapping, Sequence, Tuple
import json
import logging
import math

import numpy as np
import pandas as pd
from scipy.special import ndtri

from errors import ArityError, DivisionDomainError, LengthError, RangeError
from models import AccuracyReport, ResidualDiagnostics, TimeSeries
from series import acf_array

logger = logging.getLogger(__name__)


def _pair(forecast: Sequence[float], actual: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    f = np.asarray(forecast, dtype=float)
    x = np.asarray(actual, dtype=float)
    if len(f) != len(x):
        raise ArityError(f"forecast has {len(f)} values but actual has {len(x)}")
    if len(f) == 0:
        raise ArityError("no forecast/actual pairs to evaluate")
    return f, x


def mae(forecast: Sequence[float], actual: Sequence[float]) -> float:
    f, x = _pair(forecast, actual)
    return float(np.mean(np.abs(f - x)))


def mape(forecast: Sequence[float], actual: Sequence[float]) -> float:
    f, x = _pair(forecast, actual)
    if np.any(x == 0):
        raise DivisionDomainError("MAPE undefined: an actual value is zero")
    return float(np.mean(np.abs((f - x) / x)) * 100.0)


def accuracy(forecast: Sequence[float], actual: Sequence[float]) -> AccuracyReport:
    return AccuracyReport(mae=mae(forecast, actual), mape=mape(forecast, actual), h=len(forecast))


def improvement_pct(crude: float, hybrid: float) -> float:
    if crude <= 0:
        raise DivisionDomainError(f"improvement undefined for crude error {crude}")
    return (crude - hybrid) / crude * 100.0


def residual_diagnostics(residuals: TimeSeries, max_lag: int, z: float = 1.96) -> ResidualDiagnostics:
    """ACF against a ±z/sqrt(n) band and normal QQ pairs at (i - 0.5)/n."""
    x = residuals.array()
    n = len(x)
    if max_lag >= n:
        raise RangeError(f"max_lag {max_lag} must be below the residual length {n}")
    rho = acf_array(x, max_lag)[1:]
    band = z / math.sqrt(n)
    outside = tuple(int(lag) for lag in np.flatnonzero(np.abs(rho) > band) + 1)
    theoretical = ndtri((np.arange(1, n + 1) - 0.5) / n)
    sample = np.sort(x)
    return ResidualDiagnostics(
        acf_values=tuple(float(r) for r in rho),
        band=band,
        lags_outside_band=outside,
        qq_points=tuple(zip(theoretical.tolist(), sample.tolist())),
    )


# ==========================================
# Comparison tables
# ==========================================

def comparison_rows(crude: Mapping[str, AccuracyReport],
                    hybrid: Mapping[str, AccuracyReport]) -> List[Dict[str, float]]:
    """One row per label present in both mappings, in ``crude`` order."""
    rows = []
    for label, c in crude.items():
        if label not in hybrid:
            continue
        h = hybrid[label]
        rows.append({
            "label": label,
            "crude_mae": c.mae,
            "hybrid_mae": h.mae,
            "mae_improvement": improvement_pct(c.mae, h.mae),
            "crude_mape": c.mape,
            "hybrid_mape": h.mape,
            "mape_improvement": improvement_pct(c.mape, h.mape),
        })
    return rows


def average_mape(values: Sequence[float]) -> float:
    if not values:
        raise LengthError(1, 0, what="MAPE list")
    return float(np.mean(values))


def format_comparison(rows: List[Dict[str, float]], mode: str) -> str:
    """MAE and MAPE tables with improvement percentages, then the hybrid MAPE average."""
    lines = [f"# aggregation mode: {mode}", "", "MAE (MW)",
             f"{'':<8}{'crude':>10}{'hybrid':>10}{'improvement (%)':>18}"]
    for r in rows:
        lines.append(f"{r['label']:<8}{r['crude_mae']:>10.0f}{r['hybrid_mae']:>10.0f}{r['mae_improvement']:>18.1f}")
    lines += ["", "MAPE (%)", f"{'':<8}{'crude':>10}{'hybrid':>10}{'improvement (%)':>18}"]
    for r in rows:
        lines.append(f"{r['label']:<8}{r['crude_mape']:>10.2f}{r['hybrid_mape']:>10.2f}{r['mape_improvement']:>18.1f}")
    if rows:
        lines += ["", f"average hybrid MAPE: {format_average(average_mape([r['hybrid_mape'] for r in rows]))}"]
    return "\n".join(lines) + "\n"


def format_average(value: float) -> str:
    return f"{value:.2f}"


def comparison_json(rows: List[Dict[str, float]], mode: str) -> str:
    doc = {"aggregation_mode": mode, "rows": rows}
    if rows:
        doc["average_hybrid_mape"] = average_mape([r["hybrid_mape"] for r in rows])
    return json.dumps(doc, indent=2) + "\n"


# ==========================================
# Plot-ready tables
# ==========================================

def residual_acf_frame(diag: ResidualDiagnostics) -> pd.DataFrame:
    lags = np.arange(1, len(diag.acf_values) + 1)
    return pd.DataFrame({"lag": lags, "acf": diag.acf_values, "band": diag.band})


def residual_qq_frame(diag: ResidualDiagnostics) -> pd.DataFrame:
    return pd.DataFrame(diag.qq_points, columns=["theoretical", "sample"])
