"""
Shared loaders used by the command handlers: configuration from parsed
arguments, dataset/model/forecast files and the future-regressor policy.
"""
from argparse import Namespace
from pathlib import Path
from typing import Dict, Optional, Tuple
import logging

import pandas as pd

from config import FIELD_NAMES, RunConfig, load_config
from errors import ArityError, ConfigError, InputFileError, ParseError
from exog import build_design, climatology
from models import AlignedDataset, DesignMatrix, FittedModel, Forecast, shift_week, week_ordinal
from pipeline import load_dataset
from sarima import load_model

logger = logging.getLogger(__name__)

FORECAST_COLUMNS = ["iso_week", "point", "lower", "upper"]


def get_config(args: Namespace) -> RunConfig:
    """Flags present on the namespace override the config file and environment."""
    flags = {name: getattr(args, name) for name in FIELD_NAMES if getattr(args, name, None) is not None}
    return load_config(flags, getattr(args, "config", None))


def region_path(template: Optional[str], region: str, what: str) -> str:
    if not template:
        raise ConfigError(f"no {what} path configured")
    return template.replace("{region}", region)


def require_dataset(config: RunConfig, region: Optional[str] = None) -> AlignedDataset:
    if config.dataset_path:
        path = region_path(config.dataset_path, region or "", "dataset")
    else:
        path = str(Path(config.out_dir) / f"dataset_{region}.csv")
    return load_dataset(path)


def require_model(path: Optional[str]) -> FittedModel:
    if not path:
        raise ConfigError("no model file given (--model)")
    return load_model(path)


def future_design(model: FittedModel, h: int, policy: str,
                  dataset: Optional[AlignedDataset] = None) -> Optional[DesignMatrix]:
    """Regressor rows for the h weeks after the model's training data.

    ``observed`` reads them from the dataset's environmental series;
    ``climatology`` uses same-week training means.
    """
    if not model.is_hybrid:
        return None
    spec = model.exog_spec
    centering = model.exog.centering if model.exog is not None else None
    first = week_ordinal(model.series.end) + 1
    if dataset is None or not dataset.has_env:
        raise ArityError(f"model has regression terms; future regressors need a dataset with "
                         f"environmental series (--future-exog {policy})")

    if policy == "climatology":
        train = [dataset.train(s) for s in (dataset.max_t, dataset.min_t, dataset.sol_t)]
        env = [climatology(s, h, start=shift_week(model.series.end, 1)) for s in train]
    else:
        offset = first - week_ordinal(dataset.wpd.start)
        available = dataset.wpd.n - offset
        if available < h:
            raise ArityError(f"--future-exog observed needs {h} weeks of environmental data after "
                             f"{model.series.end}, dataset has {max(available, 0)}; "
                             f"use --future-exog climatology or a shorter --horizon")
        env = [s.slice(offset, offset + h) for s in (dataset.max_t, dataset.min_t, dataset.sol_t)]
    return build_design(spec, *env, centering=centering)


def write_forecast(forecast: Forecast, path: str) -> None:
    frame = pd.DataFrame({
        "iso_week": forecast.weeks(),
        "point": forecast.point,
        "lower": forecast.lower,
        "upper": forecast.upper,
    })
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")


def load_forecast_file(path: str) -> pd.DataFrame:
    if not Path(path).exists():
        raise InputFileError(path, "forecast file not found")
    try:
        frame = pd.read_csv(path, dtype={"iso_week": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"malformed forecast file ({e})", path=path)
    if list(frame.columns) != FORECAST_COLUMNS:
        raise ParseError(f"expected header {','.join(FORECAST_COLUMNS)}", line=1, path=path)
    return frame


def load_actuals(path: str) -> Dict[str, float]:
    """Actual weekly values by ISO week, from an aligned dataset (test rows) or an iso_week,actual file."""
    if not Path(path).exists():
        raise InputFileError(path, "actuals file not found")
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    if first.startswith("#"):
        dataset = load_dataset(path)
        test = dataset.test(dataset.wpd)
        return dict(zip(test.weeks(), test.values))
    try:
        frame = pd.read_csv(path, dtype={"iso_week": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"malformed actuals file ({e})", path=path)
    if list(frame.columns) != ["iso_week", "actual"]:
        raise ParseError("expected header iso_week,actual", line=1, path=path)
    return dict(zip(frame["iso_week"], frame["actual"].astype(float)))


def parse_labelled(values, flag: str) -> Tuple[Tuple[str, str], ...]:
    """``label=path`` pairs from a repeated flag."""
    pairs = []
    for item in values or ():
        if "=" not in item:
            raise ConfigError(f"{flag} expects label=path, got '{item}'")
        label, path = item.split("=", 1)
        pairs.append((label.strip(), path.strip()))
    return tuple(pairs)


def out_path(config: RunConfig, *parts: str) -> Path:
    path = Path(config.out_dir).joinpath(*parts)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_text(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def write_frame(frame: pd.DataFrame, path: Path) -> None:
    frame.to_csv(path, index=False, lineterminator="\n", float_format="%.17g")
