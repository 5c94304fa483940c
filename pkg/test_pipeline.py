from datetime import date, timedelta

import numpy as np
import pytest

from errors import (
    DuplicateTimestampError, GapError, InputFileError, LengthError, ParseError, RangeError, SpanError,
)
from models import TimeSeries
from pipeline import (
    align_and_split, env_series, load_dataset, load_demand, load_env, read_demand_frame, save_dataset, weekly_peak_demand,
)


def _rows(first_day, days, peak, region="NSW", per_day=4):
    """Readings every 24/per_day hours; the last reading of each day is the daily peak."""
    rows = []
    for k in range(days):
        day = first_day + timedelta(days=k)
        for j in range(per_day):
            value = peak(day) * (1.0 if j == per_day - 1 else 0.8)
            rows.append(f"{day:%Y-%m-%d}T{j * 24 // per_day:02d}:00,{region},{value}")
    return rows


def _env_text(weeks, skip=()):
    lines = ["iso_week,max_temp_c,min_temp_c,solar_mj_m2"]
    for year, week in weeks:
        label = f"{year}-W{week:02d}"
        if label in skip:
            continue
        high = 20 + 2 * (year - 2013) + 0.1 * week
        lines.append(f"{label},{high:.1f},{high - 10:.1f},15")
    return "\n".join(lines) + "\n"


TWO_YEARS = [(y, w) for y in (2013, 2014) for w in range(1, 53)]


# ==========================================
# Demand
# ==========================================

def test_weekly_sum_and_max_of_daily_peaks(write_demand):
    path = write_demand(_rows(date(2015, 1, 5), 14, lambda d: 1000 + d.day))
    frame = read_demand_frame(path)
    assert list(frame.columns) == ["timestamp", "region", "demand"]
    summed = weekly_peak_demand(frame, "sum")
    assert summed.start == "2015-W02"
    assert summed.values == (sum(1000 + d for d in range(5, 12)), sum(1000 + d for d in range(12, 19)))
    peaked = weekly_peak_demand(frame, "max")
    assert peaked.values == (1011.0, 1018.0)


def test_week_53_is_merged_into_week_52(write_demand):
    path = write_demand(_rows(date(2015, 12, 21), 14, lambda d: 100.0 if d.year == 2015 and d.day < 28 else 200.0))
    frame = read_demand_frame(path)
    assert weekly_peak_demand(frame, "sum").values == (1050.0,)
    assert weekly_peak_demand(frame, "max").values == (200.0,)
    assert weekly_peak_demand(frame, "sum").start == "2015-W52"


def test_partial_boundary_weeks_are_dropped(write_demand, caplog):
    path = write_demand(_rows(date(2015, 1, 7), 19, lambda d: 500.0))
    wpd = weekly_peak_demand(read_demand_frame(path))
    assert wpd.start == "2015-W03"
    assert wpd.values == (3500.0, 3500.0)
    assert "partial boundary week" in caplog.text


def test_missing_day_inside_a_week(write_demand):
    rows = [r for r in _rows(date(2015, 1, 5), 21, lambda d: 500.0) if not r.startswith("2015-01-14")]
    with pytest.raises(GapError) as info:
        weekly_peak_demand(read_demand_frame(write_demand(rows)))
    assert info.value.date == "2015-01-14"


def test_regions_are_separated(write_demand):
    rows = _rows(date(2015, 1, 5), 7, lambda d: 900.0) + _rows(date(2015, 1, 5), 7, lambda d: 300.0, region="SA")
    frame = read_demand_frame(write_demand(rows))
    assert weekly_peak_demand(frame, region="SA").values == (2100.0,)
    with pytest.raises(RangeError):
        weekly_peak_demand(frame)
    with pytest.raises(RangeError):
        weekly_peak_demand(frame, "mean", region="SA")


@pytest.mark.parametrize("bad_row, message", [
    ("2015-01-05T06:00,NSW,abc", "unparseable demand"),
    ("2015-01-05T06:00,NSW,-4", "non-positive demand"),
    ("2015-01-05T06:00,QLD,100", "unknown region"),
    ("2015-01-05T06:10,NSW,100", "15-minute"),
    ("05/01/2015 06:00,NSW,100", "unparseable timestamp"),
])
def test_bad_rows_report_their_line(write_demand, bad_row, message):
    path = write_demand(["2015-01-05T00:00,NSW,100", bad_row])
    with pytest.raises(ParseError) as info:
        read_demand_frame(path)
    assert info.value.line == 3
    assert message in info.value.detail


def test_load_demand_records(write_demand):
    records = load_demand(write_demand(["2015-01-05T06:00,SA,250.5", "2015-01-05T00:00,SA,200"]))
    assert [r.demand for r in records] == [200.0, 250.5]
    assert records[0].timestamp.hour == 0 and records[0].region == "SA"


def test_file_level_problems(write_demand, tmp_path):
    with pytest.raises(InputFileError):
        read_demand_frame(tmp_path / "nope.csv")
    with pytest.raises(ParseError) as info:
        read_demand_frame(write_demand(["2015-01-05T00:00,NSW,100"], header="time,region,mw"))
    assert info.value.line == 1
    with pytest.raises(DuplicateTimestampError):
        read_demand_frame(write_demand(["2015-01-05T00:00,NSW,100", "2015-01-05T00:00,NSW,120"]))

    empty = tmp_path / "empty.csv"
    empty.write_text("")
    frame = read_demand_frame(empty)
    assert frame.empty
    with pytest.raises(LengthError):
        weekly_peak_demand(frame)


# ==========================================
# Environment
# ==========================================

def test_environment_gaps_filled_from_same_week(tmp_path):
    path = tmp_path / "env.csv"
    path.write_text(_env_text(TWO_YEARS, skip={"2014-W10"}))
    max_t, min_t, sol_t, filled = env_series(load_env(path), train_end="2014-W52")
    assert max_t.n == 104 and max_t.start == "2013-W01"
    assert filled["max"] == ("2014-W10",)
    assert max_t.values[52 + 9] == pytest.approx(21.0)
    assert min_t.values[52 + 9] == pytest.approx(11.0)


def test_environment_week_53_is_averaged(tmp_path):
    path = tmp_path / "env.csv"
    path.write_text("iso_week,max_temp_c,min_temp_c,solar_mj_m2\n2015-W52,30,20,10\n2015-W53,20,10,20\n")
    max_t, _, sol_t, _ = env_series(load_env(path))
    assert max_t.values == (25.0,)
    assert sol_t.values == (15.0,)


def test_bad_environment_rows(tmp_path):
    path = tmp_path / "env.csv"
    path.write_text("iso_week,max_temp_c,min_temp_c,solar_mj_m2\n2015-W01,30,20,10\n2015-W02,10,20,10\n")
    with pytest.raises(ParseError) as info:
        load_env(path)
    assert info.value.line == 3
    path.write_text("iso_week,max_temp_c,min_temp_c,solar_mj_m2\n2015-W01,30,20,10\n2015-W01,30,20,10\n")
    with pytest.raises(DuplicateTimestampError):
        load_env(path)


# ==========================================
# Alignment and dataset files
# ==========================================

def _aligned(tmp_path, train_end="2013-W52", test_len=52):
    path = tmp_path / "env.csv"
    path.write_text(_env_text(TWO_YEARS, skip={"2013-W30"}))
    max_t, min_t, sol_t, filled = env_series(load_env(path), train_end=train_end)
    wpd = TimeSeries.from_array(7000 + np.arange(110.0), start="2012-W50")
    return align_and_split(wpd, (max_t, min_t, sol_t), train_end, test_len, region="VIC", filled=filled)


def test_alignment_trims_to_common_span(tmp_path):
    ds = _aligned(tmp_path)
    assert ds.train_span == ("2013-W01", "2013-W52")
    assert ds.test_span == ("2014-W01", "2014-W52")
    assert ds.wpd.values[0] == 7003.0
    assert ds.filled["max"] == ("2013-W30",)


def test_alignment_errors(tmp_path):
    with pytest.raises(SpanError) as info:
        _aligned(tmp_path, test_len=53)
    assert info.value.missing_weeks == ["2015-W01"]
    with pytest.raises(RangeError):
        _aligned(tmp_path, test_len=0)
    with pytest.raises(SpanError):
        _aligned(tmp_path, train_end="2012-W40")


def test_dataset_file_round_trip(tmp_path):
    ds = _aligned(tmp_path)
    path = tmp_path / "out" / "dataset_VIC.csv"
    save_dataset(ds, path)
    assert path.read_text().startswith("# region=VIC mode=sum\niso_week,split,wpd,max,max_missing_flag")
    assert load_dataset(path).model_dump() == ds.model_dump()
