from typing import Dict, List
import json
import logging

import pandas as pd

from config import RunConfig
from dependencies import load_actuals, load_forecast_file, out_path, parse_labelled, write_text
from errors import AlignmentError, ConfigError, SpanError
from evaluation import accuracy, improvement_pct
from middleware import run_stage
from models import AccuracyReport

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser("evaluate", parents=[common], help="MAE and MAPE of forecasts against actuals")
    parser.add_argument("--forecast", dest="forecasts", action="append", metavar="LABEL=PATH",
                        help="forecast file to score; repeat for several models (e.g. crude=... hybrid=...)")
    parser.add_argument("--actuals", dest="actuals_path", required=True,
                        help="aligned dataset (test rows are used) or an iso_week,actual file")
    parser.set_defaults(handler=handle)


def score(frame: pd.DataFrame, actuals: Dict[str, float], label: str) -> AccuracyReport:
    weeks = list(frame["iso_week"])
    missing = [w for w in weeks if w not in actuals]
    if len(missing) == len(weeks):
        raise SpanError(f"forecast '{label}' shares no weeks with the actuals", missing)
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise AlignmentError(label, f"{len(missing)} forecast week(s) have no actual value: {shown}")
    return accuracy(frame["point"].to_numpy(dtype=float), [actuals[w] for w in weeks])


def format_scores(reports: Dict[str, AccuracyReport]) -> str:
    lines = [f"{'model':<12}{'h':>5}{'MAE (MW)':>12}{'MAPE (%)':>10}"]
    for label, r in reports.items():
        lines.append(f"{label:<12}{r.h:>5}{r.mae:>12.0f}{r.mape:>10.2f}")
    if "crude" in reports and "hybrid" in reports:
        c, h = reports["crude"], reports["hybrid"]
        lines += ["", f"MAE improvement (%):  {improvement_pct(c.mae, h.mae):.1f}",
                  f"MAPE improvement (%): {improvement_pct(c.mape, h.mape):.1f}"]
    return "\n".join(lines) + "\n"


def scores_json(reports: Dict[str, AccuracyReport]) -> str:
    doc = {"models": {label: r.model_dump() for label, r in reports.items()}}
    if "crude" in reports and "hybrid" in reports:
        c, h = reports["crude"], reports["hybrid"]
        doc["improvement"] = {"mae": improvement_pct(c.mae, h.mae), "mape": improvement_pct(c.mape, h.mape)}
    return json.dumps(doc, indent=2) + "\n"


def handle(args, config: RunConfig):
    pairs = parse_labelled(args.forecasts, "--forecast")
    if not pairs:
        raise ConfigError("give at least one --forecast LABEL=PATH")
    labels: List[str] = [label for label, _ in pairs]
    if len(set(labels)) != len(labels):
        raise ConfigError("--forecast labels must be unique")
    with run_stage("evaluate"):
        actuals = load_actuals(args.actuals_path)
        reports = {label: score(load_forecast_file(path), actuals, label) for label, path in pairs}
    text = format_scores(reports)
    write_text(out_path(config, "evaluation.txt"), text)
    write_text(out_path(config, "evaluation.json"), scores_json(reports))
    print(text, end="")
