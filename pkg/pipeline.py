"""
Data pipeline: raw 15-minute demand and weekly environment files in, aligned
weekly dataset out.

Demand file:       timestamp,region,demand_mw      (timestamp YYYY-MM-DDTHH:MM)
Environment file:  iso_week,max_temp_c,min_temp_c,solar_mj_m2
Aligned dataset:   iso_week,split,wpd[,max,max_missing_flag,min,min_missing_flag,sol,sol_missing_flag]
                   preceded by a "# region=... mode=..." line
"""
from __future__ import annotations
from datetime import date
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
import logging
import re

import numpy as np
import pandas as pd
from pydantic import ValidationError

from errors import (
    AlignmentError, DuplicateTimestampError, GapError, InputFileError, LengthError, ParseError,
    RangeError, SpanError,
)
from models import (
    REGIONS, WEEKS_PER_YEAR, AlignedDataset, DemandRecord, TimeSeries, WeeklyEnvRecord,
    parse_week, week_label, week_ordinal,
)

logger = logging.getLogger(__name__)

DEMAND_COLUMNS = ["timestamp", "region", "demand_mw"]
ENV_COLUMNS = ["iso_week", "max_temp_c", "min_temp_c", "solar_mj_m2"]
TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M"
ENV_NAMES = (("max", "max_t"), ("min", "min_t"), ("sol", "sol_t"))


# ==========================================
# Reading
# ==========================================

def _read_table(path: Union[str, Path], columns: List[str]) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise InputFileError(str(path), "input file not found")
    if path.stat().st_size == 0:
        return pd.DataFrame(columns=columns)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=columns)
    except pd.errors.ParserError as e:
        found = re.search(r"line (\d+)", str(e))
        raise ParseError(f"malformed row ({e})", line=int(found.group(1)) if found else None, path=str(path))
    header = [c.strip() for c in frame.columns]
    if header != columns:
        raise ParseError(f"expected header {','.join(columns)}, got {','.join(header)}", line=1, path=str(path))
    frame.columns = columns
    return frame


def _line(index) -> int:
    # header is line 1
    return int(index) + 2


def read_demand_frame(path: Union[str, Path]) -> pd.DataFrame:
    """Validated demand rows as a frame (timestamp, region, demand), sorted by timestamp."""
    frame = _read_table(path, DEMAND_COLUMNS)
    if frame.empty:
        return pd.DataFrame({"timestamp": pd.Series([], dtype="datetime64[ns]"),
                             "region": pd.Series([], dtype=str), "demand": pd.Series([], dtype=float)})

    timestamps = pd.to_datetime(frame["timestamp"].str.strip(), format=TIMESTAMP_FORMAT, errors="coerce")
    demand = pd.to_numeric(frame["demand_mw"], errors="coerce")
    region = frame["region"].str.strip().str.upper()

    bad = timestamps.isna()
    if bad.any():
        i = bad.idxmax()
        raise ParseError(f"unparseable timestamp '{frame.at[i, 'timestamp']}'", line=_line(i), path=str(path))
    bad = demand.isna() | ~np.isfinite(demand)
    if bad.any():
        i = bad.idxmax()
        raise ParseError(f"unparseable demand '{frame.at[i, 'demand_mw']}'", line=_line(i), path=str(path))
    bad = demand <= 0
    if bad.any():
        i = bad.idxmax()
        raise ParseError(f"non-positive demand {demand[i]}", line=_line(i), path=str(path))
    bad = ~region.isin(REGIONS)
    if bad.any():
        i = bad.idxmax()
        raise ParseError(f"unknown region '{region[i]}'", line=_line(i), path=str(path))
    bad = timestamps.dt.minute % 15 != 0
    if bad.any():
        i = bad.idxmax()
        raise ParseError(f"timestamp {frame.at[i, 'timestamp']} is not on a 15-minute boundary",
                         line=_line(i), path=str(path))

    out = pd.DataFrame({"timestamp": timestamps, "region": region, "demand": demand.astype(float)})
    dup = out.duplicated(["timestamp", "region"])
    if dup.any():
        i = dup.idxmax()
        raise DuplicateTimestampError(out.at[i, "timestamp"].strftime(TIMESTAMP_FORMAT), out.at[i, "region"])
    return out.sort_values(["timestamp", "region"], kind="stable").reset_index(drop=True)


def load_demand(path: Union[str, Path]) -> List[DemandRecord]:
    frame = read_demand_frame(path)
    # rows were validated column-wise above
    return [
        DemandRecord.model_construct(timestamp=ts.to_pydatetime(), demand=float(d), region=r)
        for ts, r, d in zip(frame["timestamp"], frame["region"], frame["demand"])
    ]


def load_env(path: Union[str, Path]) -> List[WeeklyEnvRecord]:
    frame = _read_table(path, ENV_COLUMNS)
    records, seen = [], set()
    for i, row in frame.iterrows():
        try:
            record = WeeklyEnvRecord(
                week=row["iso_week"].strip(),
                max_temp=float(row["max_temp_c"]),
                min_temp=float(row["min_temp_c"]),
                solar=float(row["solar_mj_m2"]),
            )
        except (ValueError, ValidationError) as e:
            msg = e.errors()[0]["msg"] if isinstance(e, ValidationError) else str(e)
            raise ParseError(msg, line=_line(i), path=str(path))
        if record.week in seen:
            raise DuplicateTimestampError(record.week, "environment")
        seen.add(record.week)
        records.append(record)
    return sorted(records, key=lambda r: parse_week(r.week, allow_53=True))


# ==========================================
# Aggregation
# ==========================================

def _demand_frame(records: Union[Sequence[DemandRecord], pd.DataFrame]) -> pd.DataFrame:
    if isinstance(records, pd.DataFrame):
        return records
    return pd.DataFrame({
        "timestamp": pd.to_datetime([r.timestamp for r in records]),
        "region": [r.region for r in records],
        "demand": [r.demand for r in records],
    })


def _merge_week_53(values: pd.Series, how: str) -> pd.Series:
    """Fold ISO week 53 into week 52 of the same year ("mean" or "max")."""
    if not (values.index.get_level_values("week") == 53).any():
        return values
    keys = [(y, min(w, WEEKS_PER_YEAR)) for y, w in values.index]
    index = pd.MultiIndex.from_tuples(keys, names=["year", "week"])
    return pd.Series(values.to_numpy(), index=index).groupby(level=["year", "week"]).agg(how)


def _to_series(values: pd.Series, period: int = WEEKS_PER_YEAR) -> TimeSeries:
    ordinals = [y * WEEKS_PER_YEAR + w - 1 for y, w in values.index]
    if np.any(np.diff(ordinals) != 1):
        raise GapError(week_label(ordinals[int(np.flatnonzero(np.diff(ordinals) != 1)[0])] + 1),
                       "weekly series is not contiguous")
    return TimeSeries.from_array(values.to_numpy(), start=week_label(ordinals[0]), period=period)


def weekly_peak_demand(records: Union[Sequence[DemandRecord], pd.DataFrame], mode: str = "sum",
                       region: Optional[str] = None) -> TimeSeries:
    """Daily maxima combined per ISO week by ``mode`` (sum or max).

    Incomplete first/last weeks are dropped; a missing day inside a retained
    week is an error.
    """
    if mode not in ("sum", "max"):
        raise RangeError(f"aggregation mode must be 'sum' or 'max', got '{mode}'")
    frame = _demand_frame(records)
    if region is not None:
        frame = frame[frame["region"] == region.upper()]
    elif frame["region"].nunique() > 1:
        raise RangeError("records cover several regions; choose one")
    if frame.empty:
        raise LengthError(1, 0, what="demand records")

    daily = frame.groupby(frame["timestamp"].dt.normalize())["demand"].max().sort_index()
    iso = daily.index.isocalendar()
    keys = list(zip(iso["year"].astype(int), iso["week"].astype(int)))
    daily.index = pd.MultiIndex.from_arrays(
        [iso["year"].astype(int).to_numpy(), iso["week"].astype(int).to_numpy(), daily.index],
        names=["year", "week", "day"])
    counts = daily.groupby(level=["year", "week"]).size()

    retained = list(counts.index)
    dropped = []
    if counts.iloc[0] < 7:
        dropped.append(retained.pop(0))
    if retained and counts.loc[retained[-1]] < 7:
        dropped.append(retained.pop())
    if dropped:
        logger.warning(f"⚠️ Dropped {len(dropped)} partial boundary week(s): "
                       f"{', '.join(f'{y}-W{w:02d}' for y, w in dropped)}")
    if not retained:
        raise LengthError(1, 0, what="complete weeks")

    first_day = pd.Timestamp(date.fromisocalendar(int(retained[0][0]), int(retained[0][1]), 1))
    last_day = pd.Timestamp(date.fromisocalendar(int(retained[-1][0]), int(retained[-1][1]), 7))
    retained_set = set(retained)
    keep = [k in retained_set for k in keys]
    daily = daily[keep]
    expected = pd.date_range(first_day, last_day, freq="D")
    missing = expected.difference(daily.index.get_level_values("day"))
    if len(missing):
        raise GapError(missing[0].strftime("%Y-%m-%d"))

    weekly = daily.groupby(level=["year", "week"]).agg(mode)
    weekly = _merge_week_53(weekly, "mean" if mode == "sum" else "max")
    return _to_series(weekly)


def env_series(records: Sequence[WeeklyEnvRecord], train_end: Optional[str] = None
               ) -> Tuple[TimeSeries, TimeSeries, TimeSeries, Dict[str, Tuple[str, ...]]]:
    """Weekly max/min/sol series; interior gaps are filled with the same-week
    mean over the training weeks (all weeks if none precede ``train_end``)."""
    if not records:
        raise LengthError(1, 0, what="environment records")
    index = pd.MultiIndex.from_tuples([parse_week(r.week, allow_53=True) for r in records], names=["year", "week"])
    frame = pd.DataFrame({
        "max": [r.max_temp for r in records],
        "min": [r.min_temp for r in records],
        "sol": [r.solar for r in records],
    }, index=index)
    frame = pd.DataFrame({c: _merge_week_53(frame[c], "mean") for c in frame.columns})

    ordinals = np.array([y * WEEKS_PER_YEAR + w - 1 for y, w in frame.index])
    frame.index = ordinals
    full = pd.RangeIndex(ordinals.min(), ordinals.max() + 1)
    frame = frame.reindex(full)
    gaps = frame["max"].isna()
    filled: Dict[str, Tuple[str, ...]] = {}
    if gaps.any():
        slot = full.to_numpy() % WEEKS_PER_YEAR
        limit = week_ordinal(train_end) if train_end else full.max()
        history = frame[(full <= limit) & ~gaps.to_numpy()]
        if history.empty:
            history = frame[~gaps]
        climate = history.groupby(history.index.to_numpy() % WEEKS_PER_YEAR).mean()
        labels = tuple(week_label(o) for o in full[gaps.to_numpy()])
        for column in frame.columns:
            fallback = history[column].mean()
            values = [climate[column].get(s, fallback) for s in slot[gaps.to_numpy()]]
            frame.loc[gaps, column] = values
            filled[column] = labels
        logger.warning(f"⚠️ Filled {len(labels)} missing environment week(s) with climatology: {', '.join(labels)}")

    start = week_label(int(full.min()))
    return (
        TimeSeries.from_array(frame["max"].to_numpy(), start=start),
        TimeSeries.from_array(frame["min"].to_numpy(), start=start),
        TimeSeries.from_array(frame["sol"].to_numpy(), start=start),
        filled,
    )


# ==========================================
# Alignment
# ==========================================

def _missing(series: TimeSeries, first: int, last: int) -> List[str]:
    have_first = week_ordinal(series.start)
    have_last = have_first + series.n - 1
    return [week_label(o) for o in range(first, last + 1) if o < have_first or o > have_last]


def align_and_split(wpd: TimeSeries, env: Optional[Sequence[TimeSeries]], train_end: str, test_len: int,
                    region: str = "", mode: str = "sum",
                    filled: Optional[Dict[str, Tuple[str, ...]]] = None) -> AlignedDataset:
    """Trim to the common span and split at ``train_end``; the next ``test_len`` weeks are the test span."""
    if test_len < 1:
        raise RangeError(f"test_len must be positive, got {test_len}")
    named = [("wpd", wpd)]
    if env is not None:
        if len(env) != 3:
            raise AlignmentError("env", f"expected max, min and sol series, got {len(env)}")
        named += [(prefix, s) for (prefix, _), s in zip(ENV_NAMES, env)]

    start = max(week_ordinal(s.start) for _, s in named)
    split = week_ordinal(train_end)
    stop = split + test_len  # last test week, inclusive
    if start > split:
        raise SpanError(f"no training weeks: common data starts at {week_label(start)}, after {train_end}")

    problems, missing_all = [], []
    for name, s in named:
        missing = _missing(s, start, stop)
        if missing:
            problems.append(f"{name} lacks {len(missing)} week(s) ({missing[0]} .. {missing[-1]})")
            missing_all.extend(missing)
    if problems:
        raise SpanError("insufficient coverage: " + "; ".join(problems), sorted(set(missing_all)))

    def trim(s: TimeSeries) -> TimeSeries:
        offset = start - week_ordinal(s.start)
        return s.slice(offset, offset + stop - start + 1)

    trimmed = {name: trim(s) for name, s in named}
    kept_filled = {}
    first_label, last_label = week_label(start), week_label(stop)
    for prefix, weeks in (filled or {}).items():
        inside = tuple(w for w in weeks if week_ordinal(first_label) <= week_ordinal(w) <= week_ordinal(last_label))
        if inside:
            kept_filled[prefix] = inside
    dataset = AlignedDataset(
        region=region,
        aggregation_mode=mode,
        wpd=trimmed["wpd"],
        max_t=trimmed.get("max"),
        min_t=trimmed.get("min"),
        sol_t=trimmed.get("sol"),
        train_len=split - start + 1,
        test_len=test_len,
        filled=kept_filled,
    )
    logger.info(f"📦 {region or 'dataset'}: train {dataset.train_span[0]}..{dataset.train_span[1]} "
                f"({dataset.train_len} weeks), test {dataset.test_span[0]}..{dataset.test_span[1]} ({test_len} weeks)")
    return dataset


# ==========================================
# Aligned dataset files
# ==========================================

def dataset_frame(dataset: AlignedDataset) -> pd.DataFrame:
    frame = pd.DataFrame({
        "iso_week": dataset.wpd.weeks(),
        "split": ["train"] * dataset.train_len + ["test"] * dataset.test_len,
        "wpd": dataset.wpd.values,
    })
    for prefix, s in dataset.env_items():
        flagged = set(dataset.filled.get(prefix, ()))
        frame[prefix] = s.values
        frame[f"{prefix}_missing_flag"] = [int(w in flagged) for w in frame["iso_week"]]
    return frame


def save_dataset(dataset: AlignedDataset, path: Union[str, Path]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# region={dataset.region} mode={dataset.aggregation_mode}\n")
        dataset_frame(dataset).to_csv(f, index=False, lineterminator="\n", float_format="%.17g")


def load_dataset(path: Union[str, Path]) -> AlignedDataset:
    path = Path(path)
    if not path.exists():
        raise InputFileError(str(path), "dataset file not found")
    meta = {}
    with open(path, encoding="utf-8") as f:
        first = f.readline()
    if first.startswith("#"):
        meta = dict(part.split("=", 1) for part in first[1:].split() if "=" in part)
    try:
        frame = pd.read_csv(path, comment="#", dtype={"iso_week": str, "split": str})
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"malformed dataset ({e})", path=str(path))
    for column in ("iso_week", "split", "wpd"):
        if column not in frame.columns:
            raise ParseError(f"dataset lacks column '{column}'", line=1, path=str(path))
    if frame.empty:
        raise LengthError(1, 0, what="dataset")

    start = frame["iso_week"].iloc[0]
    try:
        ordinals = [week_ordinal(w) for w in frame["iso_week"]]
    except ValueError as e:
        raise ParseError(str(e), path=str(path))
    if np.any(np.diff(ordinals) != 1):
        raise ParseError("dataset weeks are not contiguous", path=str(path))
    split = frame["split"].tolist()
    train_len = split.count("train")
    if split != ["train"] * train_len + ["test"] * (len(split) - train_len):
        raise ParseError("train rows must precede test rows", path=str(path))

    def series(column: str) -> Optional[TimeSeries]:
        if column not in frame.columns:
            return None
        return TimeSeries.from_array(frame[column].to_numpy(dtype=float), start=start)

    filled = {}
    for prefix, _ in ENV_NAMES:
        flag = f"{prefix}_missing_flag"
        if flag in frame.columns and frame[flag].astype(int).any():
            filled[prefix] = tuple(frame.loc[frame[flag].astype(int) == 1, "iso_week"])
    return AlignedDataset(
        region=meta.get("region", ""),
        aggregation_mode=meta.get("mode", "sum"),
        wpd=series("wpd"),
        max_t=series("max"),
        min_t=series("min"),
        sol_t=series("sol"),
        train_len=train_len,
        test_len=len(split) - train_len,
        filled=filled,
    )
