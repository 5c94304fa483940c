from typing import Optional
import logging

from config import RunConfig
from dependencies import future_design, out_path, require_dataset, require_model, write_forecast
from errors import ConfigError
from middleware import run_stage
from models import AlignedDataset, FittedModel, Forecast
from sarima import forecast

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser("forecast", parents=[common],
                                   help="point forecasts and intervals from a saved model")
    parser.add_argument("--model", dest="model_path", required=True, help="model document written by search")
    parser.add_argument("--dataset", dest="dataset_path",
                        help="aligned dataset supplying future regressors for hybrid models")
    parser.add_argument("--region", help="region whose default dataset to read")
    parser.add_argument("--out", dest="forecast_out", help="output file (default: <out-dir>/forecast.csv)")
    parser.set_defaults(handler=handle)


def forecast_model(model: FittedModel, config: RunConfig, dataset: Optional[AlignedDataset] = None,
                   h: Optional[int] = None) -> Forecast:
    h = h or config.horizon
    design = future_design(model, h, config.future_exog, dataset)
    return forecast(model, h, design, config.confidence_level)


def handle(args, config: RunConfig):
    model = require_model(args.model_path)
    dataset = None
    if model.is_hybrid:
        if not (config.dataset_path or args.region):
            raise ConfigError("hybrid model needs --dataset (or --region) for future regressors")
        dataset = require_dataset(config, args.region)
    with run_stage("forecast"):
        result = forecast_model(model, config, dataset)
    path = args.forecast_out or out_path(config, "forecast.csv")
    write_forecast(result, str(path))
    print(f"{model.spec.label} [{model.exog_spec.label if model.exog_spec else 'none'}]: "
          f"{result.h} weeks from {result.start} at level {result.level} -> {path}")
