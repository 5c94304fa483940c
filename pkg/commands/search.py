from typing import Dict, List, Optional, Tuple
import json
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from config import RunConfig
from dependencies import out_path, require_dataset, write_frame, write_text
from middleware import run_stage
from models import AlignedDataset, DifferencingOrders, FittedModel, KpssResult, SearchReport, TimeSeries
from sarima import save_model
from selection import format_report, report_to_json, select_exog, select_joint, select_sarima
from series import acf_array, difference_array, durbin_levinson
from stationarity import differencing_table, suggest_differencing

logger = logging.getLogger(__name__)


class RegionSearch(BaseModel):
    model_config = ConfigDict(frozen=True)

    region: str
    orders: DifferencingOrders
    kpss: Tuple[Tuple[str, KpssResult], ...]
    crude: FittedModel
    crude_report: SearchReport
    hybrid: Optional[FittedModel] = None
    exog_report: Optional[SearchReport] = None


def register(subparsers, common):
    parser = subparsers.add_parser("search", parents=[common],
                                   help="choose differencing, SARIMA orders and regression terms by AICc")
    parser.add_argument("--dataset", dest="dataset_path",
                        help="aligned dataset; '{region}' is replaced (default: <out-dir>/dataset_<REGION>.csv)")
    parser.set_defaults(handler=handle)


def _with_period(series: TimeSeries, period: int) -> TimeSeries:
    return TimeSeries(values=series.values, start=series.start, period=period)


def choose_orders(train: TimeSeries, config: RunConfig) -> DifferencingOrders:
    S = config.seasonal_period
    if config.d is not None and (config.D is not None or S == 1):
        return DifferencingOrders(d=config.d, D=config.D or 0, S=S)
    suggested = suggest_differencing(train, S, config.kpss_seasonal_threshold, config.kpss_lags)
    return DifferencingOrders(
        d=suggested.d if config.d is None else config.d,
        D=suggested.D if config.D is None else config.D,
        S=S,
    )


def search_region(dataset: AlignedDataset, config: RunConfig, region: Optional[str] = None) -> RegionSearch:
    region = region or dataset.region
    train = _with_period(dataset.train(dataset.wpd), config.seasonal_period)

    with run_stage(f"stationarity: {region}"):
        orders = choose_orders(train, config)
        kpss = differencing_table(train, orders, config.kpss_lags)
        logger.info(f"{region}: d={orders.d}, D={orders.D}, S={orders.S}")

    with run_stage(f"orders: {region}"):
        crude, crude_report = select_sarima(train, orders, config.max_order_sum, config.workers,
                                            config.include_intercept)

    hybrid = exog_report = None
    if dataset.has_env:
        env = [_with_period(dataset.train(s), config.seasonal_period)
               for s in (dataset.max_t, dataset.min_t, dataset.sol_t)]
        with run_stage(f"regression: {region}"):
            if config.joint_search:
                hybrid, exog_report = select_joint(train, orders, config.max_order_sum, env, config.workers,
                                                   config.include_intercept)
            else:
                hybrid, exog_report = select_exog(train, orders, crude.spec, env, config.workers)
    else:
        logger.warning(f"⚠️ {region}: dataset has no environmental series; skipping regression search")

    return RegionSearch(region=region, orders=orders, kpss=tuple(kpss), crude=crude,
                        crude_report=crude_report, hybrid=hybrid, exog_report=exog_report)


# ==========================================
# Tables
# ==========================================

def identification_frame(result: RegionSearch) -> pd.DataFrame:
    """ACF and PACF of the training series before and after differencing."""
    x = result.crude.series.array()
    frames = []
    for label, values in (("original", x), ("differenced", difference_array(x, result.orders))):
        max_lag = min(2 * result.orders.S, len(values) - 1)
        if max_lag < 1 or np.ptp(values) == 0:
            continue
        rho = acf_array(values, max_lag)
        frames.append(pd.DataFrame({
            "region": result.region,
            "series": label,
            "lag": np.arange(1, max_lag + 1),
            "acf": rho[1:],
            "pacf": durbin_levinson(rho),
            "band": 1.96 / np.sqrt(len(values)),
        }))
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame()


def format_kpss_table(results: List[RegionSearch]) -> str:
    lines = ["KPSS level-stationarity test",
             f"{'region':<8}{'before':>10}{'p':>8}{'after':>10}{'p':>8}{'d':>4}{'D':>4}{'S':>5}"]
    for r in results:
        before, after = dict(r.kpss)["before"], dict(r.kpss)["after"]
        lines.append(f"{r.region:<8}{before.statistic:>10.4f}{before.p_value_band:>8.2f}"
                     f"{after.statistic:>10.4f}{after.p_value_band:>8.2f}"
                     f"{r.orders.d:>4}{r.orders.D:>4}{r.orders.S:>5}")
    return "\n".join(lines) + "\n"


def format_orders_table(results: List[RegionSearch]) -> str:
    lines = ["Selected SARIMA orders", f"{'region':<8}{'model':<26}{'AICc':>14}"]
    for r in results:
        lines.append(f"{r.region:<8}{r.crude.spec.label:<26}{r.crude.aicc:>14.3f}")
    return "\n".join(lines) + "\n"


def format_exog_table(results: List[RegionSearch]) -> str:
    lines = ["Selected regression terms", f"{'region':<8}{'terms':<36}{'AICc':>14}"]
    for r in results:
        if r.hybrid is None:
            lines.append(f"{r.region:<8}{'(no environmental data)':<36}{'-':>14}")
        else:
            lines.append(f"{r.region:<8}{r.hybrid.exog_spec.label:<36}{r.hybrid.aicc:>14.3f}")
    return "\n".join(lines) + "\n"


def summary_document(results: List[RegionSearch]) -> Dict:
    doc = {}
    for r in results:
        doc[r.region] = {
            "orders": r.orders.model_dump(),
            "kpss": {label: k.model_dump() for label, k in r.kpss},
            "crude": {"model": r.crude.spec.label, "loglik": r.crude.loglik, "aicc": r.crude.aicc},
            "hybrid": None if r.hybrid is None else {
                "model": r.hybrid.spec.label,
                "terms": r.hybrid.exog_spec.label,
                "loglik": r.hybrid.loglik,
                "aicc": r.hybrid.aicc,
            },
        }
    return doc


def write_search_outputs(config: RunConfig, results: List[RegionSearch]) -> None:
    for r in results:
        save_model(r.crude, out_path(config, r.region, "model_crude.json"))
        write_text(out_path(config, r.region, "search_orders.txt"), format_report(r.crude_report))
        write_text(out_path(config, r.region, "search_orders.json"), report_to_json(r.crude_report))
        if r.hybrid is not None:
            save_model(r.hybrid, out_path(config, r.region, "model_hybrid.json"))
            write_text(out_path(config, r.region, "search_exog.txt"), format_report(r.exog_report))
            write_text(out_path(config, r.region, "search_exog.json"), report_to_json(r.exog_report))
    frames = [identification_frame(r) for r in results]
    frames = [f for f in frames if not f.empty]
    if frames:
        write_frame(pd.concat(frames, ignore_index=True), out_path(config, "plots", "identification_acf.csv"))
    tables = format_kpss_table(results) + "\n" + format_orders_table(results) + "\n" + format_exog_table(results)
    write_text(out_path(config, "search_summary.txt"), tables)
    write_text(out_path(config, "search_summary.json"), json.dumps(summary_document(results), indent=2) + "\n")


def handle(args, config: RunConfig):
    results = [search_region(require_dataset(config, region), config, region) for region in config.regions]
    write_search_outputs(config, results)
    for r in results:
        hybrid = f", hybrid terms {r.hybrid.exog_spec.label}" if r.hybrid is not None else ""
        print(f"{r.region}: {r.crude.spec.label} ({len(r.crude_report.candidates)} order candidates){hybrid}")
