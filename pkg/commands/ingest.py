from typing import Dict
import logging

import pandas as pd

from config import RunConfig
from dependencies import out_path, region_path, write_frame
from errors import ConfigError
from middleware import run_stage
from models import AlignedDataset
from pipeline import align_and_split, env_series, load_env, read_demand_frame, save_dataset, weekly_peak_demand

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser("ingest", parents=[common],
                                   help="aggregate raw demand to weekly peaks and align with environment data")
    parser.add_argument("--demand", dest="demand_path", help="demand file (timestamp,region,demand_mw)")
    parser.add_argument("--env", dest="env_path",
                        help="environment file; '{region}' is replaced by the region code")
    parser.set_defaults(handler=handle)


def ingest_regions(config: RunConfig) -> Dict[str, AlignedDataset]:
    if not config.demand_path:
        raise ConfigError("no demand file given (--demand)")
    with run_stage("ingest: demand"):
        frame = read_demand_frame(config.demand_path)
        logger.info(f"Read {len(frame)} demand rows from {config.demand_path}")

    datasets = {}
    for region in config.regions:
        with run_stage(f"ingest: {region}"):
            wpd = weekly_peak_demand(frame, config.aggregation_mode, region)
            env, filled = None, {}
            if config.env_path:
                records = load_env(region_path(config.env_path, region, "environment"))
                max_t, min_t, sol_t, filled = env_series(records, config.train_end)
                env = (max_t, min_t, sol_t)
            datasets[region] = align_and_split(wpd, env, config.train_end, config.test_len,
                                               region=region, mode=config.aggregation_mode, filled=filled)
    return datasets


def plot_tables(datasets: Dict[str, AlignedDataset]) -> Dict[str, pd.DataFrame]:
    """Tidy tables for the demand, environment and demand-vs-environment figures."""
    wpd_rows, env_rows, scatter_rows = [], [], []
    for region, ds in datasets.items():
        weeks = ds.wpd.weeks()
        split = ["train"] * ds.train_len + ["test"] * ds.test_len
        wpd_rows.append(pd.DataFrame({"region": region, "iso_week": weeks, "split": split, "wpd": ds.wpd.values}))
        if ds.has_env:
            env_rows.append(pd.DataFrame({"region": region, "iso_week": weeks, "max": ds.max_t.values,
                                          "min": ds.min_t.values, "sol": ds.sol_t.values}))
            for name, s in ds.env_items():
                scatter_rows.append(pd.DataFrame({"region": region, "iso_week": weeks, "variable": name,
                                                  "value": s.values, "wpd": ds.wpd.values}))
    tables = {"wpd_series": pd.concat(wpd_rows, ignore_index=True)}
    if env_rows:
        tables["env_series"] = pd.concat(env_rows, ignore_index=True)
        tables["scatter"] = pd.concat(scatter_rows, ignore_index=True)
    return tables


def write_datasets(config: RunConfig, datasets: Dict[str, AlignedDataset]) -> Dict[str, str]:
    paths = {}
    for region, ds in datasets.items():
        path = out_path(config, f"dataset_{region}.csv")
        save_dataset(ds, path)
        paths[region] = str(path)
    for name, frame in plot_tables(datasets).items():
        write_frame(frame, out_path(config, "plots", f"{name}.csv"))
    return paths


def handle(args, config: RunConfig):
    datasets = ingest_regions(config)
    paths = write_datasets(config, datasets)
    for region, ds in datasets.items():
        first, last = ds.train_span
        filled = sum(len(v) for v in ds.filled.values())
        note = f", {filled} filled environment values" if filled else ""
        print(f"{region}: {ds.train_len} training weeks ({first}..{last}), "
              f"{ds.test_len} test weeks{note} -> {paths[region]}")
