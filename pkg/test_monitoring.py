import logging

import pytest

from errors import RangeError
from main import MonitorHandler
from middleware import run_stage
from monitoring import monitor


def test_stage_timings_and_summary():
    with run_stage("ingest"):
        pass
    with run_stage("ingest"):
        pass
    assert monitor.total_stages == 2
    assert monitor.stage_outcomes == {"ok": 2, "failed": 0}
    assert set(monitor.stage_durations) == {"ingest"}
    summary = monitor.summary()
    assert summary.startswith("2 stages (0 failed)")
    assert "slowest ingest" in summary
    assert "last failure" not in summary


def test_forecast_errors_carry_the_stage():
    with pytest.raises(RangeError) as info:
        with run_stage("search"):
            raise RangeError("horizon must be positive")
    assert info.value.detail == "[search] horizon must be positive"
    assert monitor.stage_outcomes["failed"] == 1
    assert "last failure in search: RangeError" in monitor.summary()


def test_unexpected_errors_pass_through_unchanged(capsys):
    with pytest.raises(ZeroDivisionError):
        with run_stage("forecast"):
            1 / 0
    assert "Traceback" not in capsys.readouterr().err
    assert monitor.recent_crashes[0][:2] == ("forecast", "ZeroDivisionError")


def test_slow_stages_are_listed():
    monitor.init_monitor(slow_stage_seconds=0.0)
    with run_stage("reproduce"):
        pass
    assert monitor.slow_stages[0][0] == "reproduce"
    assert "over threshold: reproduce" in monitor.summary()


def test_log_handler_counts_warnings():
    log = logging.getLogger("wpd.test")
    handler = MonitorHandler()
    log.addHandler(handler)
    log.propagate = False
    try:
        log.warning("partial week dropped")
        log.error("fit failed")
        log.info("fine")
    finally:
        log.removeHandler(handler)
        log.propagate = True
    assert monitor.warnings_seen() == 2
    assert "2 warnings" in monitor.summary()
