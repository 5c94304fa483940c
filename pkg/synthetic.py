"""
Synthetic three-region fixtures: weekly environment with an annual cycle and
interval demand whose weekly level responds quadratically to max and min
temperature (solar has no effect).
"""
from __future__ import annotations
from datetime import date, timedelta
from pathlib import Path
from typing import Dict, Iterable, Tuple
import logging

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict

from errors import RangeError
from models import REGIONS, WEEKS_PER_YEAR, TimeSeries, parse_week

logger = logging.getLogger(__name__)


class RegionProfile(BaseModel):
    model_config = ConfigDict(frozen=True)

    base: float          # MW at comfortable temperatures
    max_mean: float      # °C
    min_mean: float      # °C
    quad_max: float      # MW per °C² of max-temperature departure
    quad_min: float      # MW per °C² of min-temperature departure
    noise_sd: float      # MW, weekly AR(1) disturbance
    comfort_max: float = 25.0
    comfort_min: float = 14.0


PROFILES: Dict[str, RegionProfile] = {
    "NSW": RegionProfile(base=10000, max_mean=24, min_mean=13, quad_max=40, quad_min=30, noise_sd=120),
    "VIC": RegionProfile(base=7000, max_mean=21, min_mean=10, quad_max=30, quad_min=25, noise_sd=90),
    "SA": RegionProfile(base=2000, max_mean=23, min_mean=12, quad_max=10, quad_min=8, noise_sd=30),
}

NOISE_AR = 0.5
PEAK_HOUR = 18.0


def _rng(seed: int, region: str, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, REGIONS.index(region), stream])


def weekly_environment(region: str, start: str, n: int, seed: int) -> Tuple[TimeSeries, TimeSeries, TimeSeries]:
    """max/min temperature and solar exposure over n weeks from ``start``."""
    if n < 1:
        raise RangeError(f"n must be positive, got {n}")
    profile = PROFILES[region]
    rng = _rng(seed, region, 0)
    slot = (np.arange(n) + parse_week(start)[1] - 1) % WEEKS_PER_YEAR
    # southern hemisphere: warmest around week 3
    season = np.cos(2 * np.pi * (slot - 2) / WEEKS_PER_YEAR)
    max_t = profile.max_mean + 6.0 * season + rng.normal(0, 2.0, n)
    spread = 9.0 + 1.5 * season + np.abs(rng.normal(0, 1.0, n))
    min_t = max_t - spread
    sol = np.clip(18.0 + 8.0 * season + rng.normal(0, 2.0, n), 0.0, None)
    return (TimeSeries.from_array(max_t, start=start),
            TimeSeries.from_array(min_t, start=start),
            TimeSeries.from_array(sol, start=start))


def weekly_levels(region: str, env: Tuple[TimeSeries, TimeSeries, TimeSeries], seed: int) -> np.ndarray:
    """Daily-peak level for each week: base + quadratic temperature response + AR(1) noise."""
    profile = PROFILES[region]
    max_t, min_t, _ = (s.array() for s in env)
    rng = _rng(seed, region, 1)
    shocks = rng.normal(0, profile.noise_sd, len(max_t))
    noise = np.zeros(len(max_t))
    for t in range(len(max_t)):
        noise[t] = NOISE_AR * (noise[t - 1] if t else 0.0) + shocks[t]
    return (profile.base
            + profile.quad_max * (max_t - profile.comfort_max) ** 2
            + profile.quad_min * (min_t - profile.comfort_min) ** 2
            + noise)


def weekly_scenario(region: str, n: int, seed: int, start: str = "2011-W01"
                    ) -> Tuple[TimeSeries, Tuple[TimeSeries, TimeSeries, TimeSeries]]:
    """Weekly peak demand (sum of seven equal daily peaks) with its environment."""
    env = weekly_environment(region, start, n, seed)
    levels = weekly_levels(region, env, seed)
    return TimeSeries.from_array(7.0 * levels, start=start), env


def _daily_shape(intervals_per_day: int) -> np.ndarray:
    hours = np.arange(intervals_per_day) * 24.0 / intervals_per_day
    return 0.75 + 0.25 * np.exp(-((hours - PEAK_HOUR) / 3.0) ** 2)


def demand_frame(region: str, start_year: int, years: int, seed: int,
                 intervals_per_day: int = 96) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Interval demand and weekly environment rows for whole ISO years.

    ISO week 53 repeats week 52's environment.
    """
    if intervals_per_day < 1 or 1440 % intervals_per_day or (1440 // intervals_per_day) % 15:
        raise RangeError(f"intervals_per_day must split the day into multiples of 15 minutes, got {intervals_per_day}")
    weeks = []
    for year in range(start_year, start_year + years):
        last = date(year, 12, 28).isocalendar()[1]
        weeks.extend((year, w) for w in range(1, last + 1))
    n52 = years * WEEKS_PER_YEAR
    env = weekly_environment(region, f"{start_year:04d}-W01", n52, seed)
    levels = weekly_levels(region, env, seed)
    rng = _rng(seed, region, 2)

    shape = _daily_shape(intervals_per_day)
    offsets = pd.to_timedelta(np.arange(intervals_per_day) * (1440 // intervals_per_day), unit="min")
    stamps, values, env_rows = [], [], []
    for year, week in weeks:
        i = (year - start_year) * WEEKS_PER_YEAR + min(week, WEEKS_PER_YEAR) - 1
        env_rows.append((f"{year:04d}-W{week:02d}", env[0].values[i], env[1].values[i], env[2].values[i]))
        monday = date.fromisocalendar(year, week, 1)
        for day in range(7):
            peak = levels[i] * (1.0 + 0.01 * rng.standard_normal())
            midnight = pd.Timestamp(monday + timedelta(days=day))
            stamps.append(midnight + offsets)
            values.append(peak * shape)

    demand = pd.DataFrame({
        "timestamp": pd.DatetimeIndex(np.concatenate(stamps)).strftime("%Y-%m-%dT%H:%M"),
        "region": region,
        "demand_mw": np.round(np.concatenate(values), 3),
    })
    environment = pd.DataFrame(env_rows, columns=["iso_week", "max_temp_c", "min_temp_c", "solar_mj_m2"])
    environment[["max_temp_c", "min_temp_c", "solar_mj_m2"]] = environment[
        ["max_temp_c", "min_temp_c", "solar_mj_m2"]].round(3)
    return demand, environment


def write_fixtures(out_dir: str, start_year: int = 2011, years: int = 7, seed: int = 0,
                   intervals_per_day: int = 96, regions: Iterable[str] = REGIONS) -> Dict[str, str]:
    """Write demand.csv and env_<REGION>.csv; returns the paths by key."""
    regions = tuple(regions)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: Dict[str, str] = {}
    frames = []
    for region in regions:
        demand, environment = demand_frame(region, start_year, years, seed, intervals_per_day)
        frames.append(demand)
        env_path = out / f"env_{region}.csv"
        environment.to_csv(env_path, index=False, lineterminator="\n")
        paths[f"env_{region}"] = str(env_path)
    demand_path = out / "demand.csv"
    pd.concat(frames, ignore_index=True).to_csv(demand_path, index=False, lineterminator="\n")
    paths["demand"] = str(demand_path)
    paths["env"] = str(out / "env_{region}.csv")
    logger.info(f"🧪 Wrote synthetic fixtures for {', '.join(regions)} ({years} years) to {out}")
    return paths
