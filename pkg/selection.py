"""
Model selection by AICc: SARIMA orders under an order-sum cap, then
environmental term combinations for the chosen orders (or both jointly).
"""
from __future__ import annotations
from typing import List, Optional, Sequence, Tuple
import json
import logging
import math

import numpy as np
from joblib import Parallel, delayed

from errors import ForecastError, OversaturatedModelError, SelectionFailureError
from exog import build_design, enumerate_specs
from models import Candidate, DesignMatrix, DifferencingOrders, ExogSpec, FittedModel, SarimaSpec, SearchReport, TimeSeries

logger = logging.getLogger(__name__)

TIE_TOL = 1e-6


def aicc(loglik: float, k: int, n: int) -> float:
    """-2 loglik + 2k + 2k(k+1)/(n-k-1); k counts ARMA terms, delta, beta and sigma2."""
    if n <= k + 1:
        raise OversaturatedModelError(k, n)
    return -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1) / (n - k - 1)


def enumerate_orders(max_sum: int, d: int, D: int, S: int,
                     include_intercept: Optional[bool] = None) -> List[SarimaSpec]:
    """Every (p, q, P, Q) with p+q+P+Q <= max_sum, lexicographic; P = Q = 0 when S = 1."""
    orders = DifferencingOrders(d=d, D=D, S=S)
    seasonal = range(max_sum + 1) if S > 1 else range(1)
    specs = []
    for p in range(max_sum + 1):
        for q in range(max_sum + 1 - p):
            for P in seasonal:
                for Q in seasonal:
                    if p + q + P + Q <= max_sum:
                        specs.append(SarimaSpec(p=p, q=q, P=P, Q=Q, orders=orders,
                                                include_intercept=include_intercept))
    return specs


# ==========================================
# Candidate fitting
# ==========================================

def _fit_candidate(job: Tuple[TimeSeries, SarimaSpec, Optional[DesignMatrix], ExogSpec]
                   ) -> Tuple[Candidate, Optional[FittedModel]]:
    from sarima import fit  # sarima imports aicc from here

    series, spec, design, exog_spec = job
    k = spec.order_sum + int(spec.include_intercept) + exog_spec.n_columns + 1
    try:
        model = fit(series, spec, design if exog_spec.n_columns else None, exog_spec=exog_spec)
    except (ForecastError, np.linalg.LinAlgError, ValueError) as e:
        detail = e.detail if isinstance(e, ForecastError) else str(e)
        return Candidate(spec=spec, exog_spec=exog_spec, k=k, error=detail), None
    candidate = Candidate(spec=spec, exog_spec=exog_spec, k=model.n_params, loglik=model.loglik,
                          aicc=model.aicc, converged=model.converged)
    return candidate, model


def _run_jobs(jobs: list, workers: int) -> List[Tuple[Candidate, Optional[FittedModel]]]:
    if workers > 1 and len(jobs) > 1:
        # results come back in enumeration order whatever the completion order
        return Parallel(n_jobs=min(workers, len(jobs)))(delayed(_fit_candidate)(job) for job in jobs)
    return [_fit_candidate(job) for job in jobs]


def _rank(stage: str, results: List[Tuple[Candidate, Optional[FittedModel]]],
          tie_key) -> Tuple[FittedModel, SearchReport]:
    candidates = [c for c, _ in results]
    usable = [i for i, c in enumerate(candidates)
              if c.converged and c.aicc is not None and math.isfinite(c.aicc)]
    failed = len(candidates) - len(usable)
    if failed:
        logger.warning(f"⚠️ {failed} of {len(candidates)} {stage} candidates failed or did not converge")
    if not usable:
        diagnostics = [
            f"{c.spec.label} [{c.exog_spec.label}]: {c.error or 'did not converge'}" for c in candidates
        ]
        raise SelectionFailureError(f"no {stage} candidate produced a converged fit", diagnostics)

    lowest = min(candidates[i].aicc for i in usable)
    ties = [i for i in usable if candidates[i].aicc <= lowest + TIE_TOL]
    best = min(ties, key=lambda i: tie_key(candidates[i], i))
    winner = candidates[best]
    logger.info(f"🏆 {stage} winner: {winner.spec.label} [{winner.exog_spec.label}] AICc={winner.aicc:.3f}")
    report = SearchReport(stage=stage, candidates=tuple(candidates), best=best,
                          ties=tuple(i for i in ties if i != best))
    return results[best][1], report


def _order_key(c: Candidate, _: int):
    return (c.spec.order_sum, (c.spec.p, c.spec.q, c.spec.P, c.spec.Q))


def _exog_key(c: Candidate, i: int):
    return (c.exog_spec.n_columns, i)


def _joint_key(c: Candidate, i: int):
    return (c.spec.order_sum, c.exog_spec.n_columns, i)


# ==========================================
# Searches
# ==========================================

def select_sarima(series: TimeSeries, orders: DifferencingOrders, max_sum: int, workers: int = 1,
                  include_intercept: Optional[bool] = None) -> Tuple[FittedModel, SearchReport]:
    specs = enumerate_orders(max_sum, orders.d, orders.D, orders.S, include_intercept)
    logger.info(f"Fitting {len(specs)} order candidates (d={orders.d}, D={orders.D}, S={orders.S})")
    jobs = [(series, spec, None, ExogSpec()) for spec in specs]
    return _rank("orders", _run_jobs(jobs, workers), _order_key)


def _designs(env: Sequence[TimeSeries]) -> List[Tuple[ExogSpec, DesignMatrix]]:
    max_t, min_t, sol_t = env
    return [(spec, build_design(spec, max_t, min_t, sol_t)) for spec in enumerate_specs()]


def select_exog(series: TimeSeries, orders: DifferencingOrders, spec: SarimaSpec,
                env: Sequence[TimeSeries], workers: int = 1) -> Tuple[FittedModel, SearchReport]:
    """Fit ``spec`` under each of the 27 environmental combinations."""
    if spec.orders != orders:
        spec = spec.with_orders(orders)
    jobs = [(series, spec, design, exog_spec) for exog_spec, design in _designs(env)]
    logger.info(f"Fitting {len(jobs)} regression combinations on {spec.label}")
    return _rank("exog", _run_jobs(jobs, workers), _exog_key)


def select_joint(series: TimeSeries, orders: DifferencingOrders, max_sum: int,
                 env: Sequence[TimeSeries], workers: int = 1,
                 include_intercept: Optional[bool] = None) -> Tuple[FittedModel, SearchReport]:
    """Orders and regression terms ranked together in one AICc table."""
    designs = _designs(env)
    jobs = [
        (series, spec, design, exog_spec)
        for spec in enumerate_orders(max_sum, orders.d, orders.D, orders.S, include_intercept)
        for exog_spec, design in designs
    ]
    logger.info(f"Fitting {len(jobs)} joint candidates")
    return _rank("joint", _run_jobs(jobs, workers), _joint_key)


# ==========================================
# Report output
# ==========================================

def ranked_indices(report: SearchReport) -> List[int]:
    def key(i):
        c = report.candidates[i]
        ok = c.converged and c.aicc is not None and math.isfinite(c.aicc)
        return (0 if i == report.best else 1, 0 if ok else 1, c.aicc if ok else 0.0, i)
    return sorted(range(len(report.candidates)), key=key)


def format_report(report: SearchReport) -> str:
    header = f"{'rank':>4}  {'orders':<22} {'exog':<32} {'k':>3} {'loglik':>14} {'AICc':>14}  converged"
    lines = [f"# {report.stage} search: {len(report.candidates)} candidates", header]
    for rank, i in enumerate(ranked_indices(report), start=1):
        c = report.candidates[i]
        loglik = f"{c.loglik:.4f}" if c.loglik is not None else "-"
        value = f"{c.aicc:.4f}" if c.aicc is not None else "-"
        status = "yes" if c.converged else ("error: " + c.error if c.error else "no")
        mark = "*" if i == report.best else ("=" if i in report.ties else " ")
        lines.append(f"{rank:>4}{mark} {c.spec.label:<22} {c.exog_spec.label:<32} {c.k:>3} "
                     f"{loglik:>14} {value:>14}  {status}")
    return "\n".join(lines) + "\n"


def report_to_json(report: SearchReport) -> str:
    return json.dumps(report.model_dump(mode="json"), indent=2) + "\n"
