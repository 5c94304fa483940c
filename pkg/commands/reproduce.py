"""
One-shot pipeline: ingest, stationarity, order and regression searches,
crude and hybrid forecasts over the test span, and the accuracy tables.
"""
from typing import Dict, List
import json
import logging

import pandas as pd

from commands.forecast import forecast_model
from commands.ingest import ingest_regions, write_datasets
from commands.search import (
    RegionSearch, format_exog_table, format_kpss_table, format_orders_table, search_region,
    summary_document, write_search_outputs,
)
from config import RunConfig
from dependencies import out_path, write_forecast, write_frame, write_text
from evaluation import (
    accuracy, comparison_json, comparison_rows, format_comparison, residual_acf_frame, residual_diagnostics,
    residual_qq_frame,
)
from middleware import run_stage
from models import AccuracyReport, AlignedDataset, FittedModel

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser("reproduce", parents=[common],
                                   help="run the whole pipeline and print the comparison tables")
    parser.add_argument("--demand", dest="demand_path", help="demand file (timestamp,region,demand_mw)")
    parser.add_argument("--env", dest="env_path",
                        help="environment file; '{region}' is replaced by the region code")
    parser.set_defaults(handler=handle)


def _diagnostic_frames(region: str, label: str, model: FittedModel, config: RunConfig):
    lags = min(config.diagnostic_lags, model.residuals.n - 1)
    diag = residual_diagnostics(model.residuals, lags, config.acf_band_z)
    if not diag.passes():
        logger.warning(f"⚠️ {region} {label}: {len(diag.lags_outside_band)} of {lags} residual "
                       f"autocorrelations fall outside the band")
    acf = residual_acf_frame(diag)
    qq = residual_qq_frame(diag)
    for frame in (acf, qq):
        frame.insert(0, "model", label)
        frame.insert(0, "region", region)
    return acf, qq


def evaluate_region(result: RegionSearch, dataset: AlignedDataset, config: RunConfig
                    ) -> Dict[str, object]:
    region = result.region
    actual = dataset.test(dataset.wpd)
    h = dataset.test_len
    out = {"scores": {}, "forecasts": [], "acf": [], "qq": []}
    models = [("crude", result.crude)] + ([("hybrid", result.hybrid)] if result.hybrid is not None else [])
    with run_stage(f"forecast: {region}"):
        for label, model in models:
            fc = forecast_model(model, config, dataset, h)
            write_forecast(fc, str(out_path(config, region, f"forecast_{label}.csv")))
            out["scores"][label] = accuracy(fc.point, actual.values)
            out["forecasts"].append(pd.DataFrame({
                "region": region, "model": label, "iso_week": fc.weeks(), "actual": actual.values,
                "point": fc.point, "lower": fc.lower, "upper": fc.upper,
            }))
            acf, qq = _diagnostic_frames(region, label, model, config)
            out["acf"].append(acf)
            out["qq"].append(qq)
    return out


def handle(args, config: RunConfig):
    datasets = ingest_regions(config)
    write_datasets(config, datasets)

    results: List[RegionSearch] = [search_region(ds, config, region) for region, ds in datasets.items()]
    write_search_outputs(config, results)

    crude: Dict[str, AccuracyReport] = {}
    hybrid: Dict[str, AccuracyReport] = {}
    forecasts, acf_frames, qq_frames = [], [], []
    for r in results:
        evaluated = evaluate_region(r, datasets[r.region], config)
        crude[r.region] = evaluated["scores"]["crude"]
        if "hybrid" in evaluated["scores"]:
            hybrid[r.region] = evaluated["scores"]["hybrid"]
        forecasts += evaluated["forecasts"]
        acf_frames += evaluated["acf"]
        qq_frames += evaluated["qq"]

    write_frame(pd.concat(forecasts, ignore_index=True), out_path(config, "plots", "forecast_comparison.csv"))
    write_frame(pd.concat(acf_frames, ignore_index=True), out_path(config, "plots", "residual_acf.csv"))
    write_frame(pd.concat(qq_frames, ignore_index=True), out_path(config, "plots", "residual_qq.csv"))

    rows = comparison_rows(crude, hybrid)
    report = "\n".join([
        format_kpss_table(results),
        format_orders_table(results),
        format_exog_table(results),
        format_comparison(rows, config.aggregation_mode),
    ])
    doc = {
        "search": summary_document(results),
        "accuracy": {
            "crude": {k: v.model_dump() for k, v in crude.items()},
            "hybrid": {k: v.model_dump() for k, v in hybrid.items()},
        },
        "comparison": json.loads(comparison_json(rows, config.aggregation_mode)),
    }
    write_text(out_path(config, "report.txt"), report)
    write_text(out_path(config, "report.json"), json.dumps(doc, indent=2) + "\n")
    print(report, end="")
