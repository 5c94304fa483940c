"""
Error types for the forecasting toolkit.

Every error carries an ``exit_code`` and a human readable ``detail``, the way
an HTTP error carries a status code and a detail string. The CLI maps them
straight to process exit codes:

    2  input / parse error
    3  numerical or selection failure
    4  misconfiguration
"""
from __future__ import annotations
from typing import Any, List, Optional

EXIT_INPUT = 2
EXIT_NUMERICAL = 3
EXIT_CONFIG = 4


class ForecastError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail

    def with_stage(self, stage: str) -> "ForecastError":
        # Same type, same payload, message prefixed by the failing stage
        self.detail = f"[{stage}] {self.detail}"
        self.args = (self.detail,)
        return self


# ==========================================
# Input errors (exit 2)
# ==========================================

class InputError(ForecastError):
    exit_code = EXIT_INPUT


class InputFileError(InputError):
    def __init__(self, path: str, reason: str = "file not found"):
        super().__init__(f"{reason}: {path}")
        self.path = path


class ParseError(InputError):
    def __init__(self, detail: str, line: Optional[int] = None, path: Optional[str] = None):
        where = ""
        if path:
            where += f"{path}"
        if line is not None:
            where += f" line {line}"
        super().__init__(f"{where.strip()}: {detail}" if where else detail)
        self.line = line
        self.path = path


class DuplicateTimestampError(InputError):
    def __init__(self, timestamp: str, region: str):
        super().__init__(f"duplicate record for region {region} at {timestamp}")
        self.timestamp = timestamp
        self.region = region


class GapError(InputError):
    def __init__(self, date: str, detail: str = "missing day inside a retained week"):
        super().__init__(f"{detail}: {date}")
        self.date = date


class AlignmentError(InputError):
    def __init__(self, series_name: str, detail: str):
        super().__init__(f"series '{series_name}' is not aligned: {detail}")
        self.series_name = series_name


class SpanError(InputError):
    def __init__(self, detail: str, missing_weeks: Optional[List[str]] = None):
        super().__init__(detail)
        self.missing_weeks = missing_weeks or []


class LengthError(InputError):
    def __init__(self, required: int, actual: int, what: str = "series"):
        super().__init__(f"{what} too short: need at least {required} observations, got {actual}")
        self.required = required
        self.actual = actual


class ArityError(InputError):
    pass


class RangeError(InputError):
    pass


class DivisionDomainError(InputError):
    pass


# ==========================================
# Numerical / selection errors (exit 3)
# ==========================================

class NumericalError(ForecastError):
    exit_code = EXIT_NUMERICAL


class DegenerateInputError(NumericalError):
    pass


class DomainError(NumericalError):
    pass


class OversaturatedModelError(NumericalError):
    def __init__(self, k: int, n: int):
        super().__init__(f"model with {k} parameters is oversaturated for {n} observations (need n > k + 1)")
        self.k = k
        self.n = n


class CollinearityError(NumericalError):
    def __init__(self, columns: List[str]):
        super().__init__(f"design matrix is rank deficient; offending columns: {', '.join(columns)}")
        self.columns = columns


class NonStationarizableError(NumericalError):
    def __init__(self, detail: str, result: Any):
        super().__init__(detail)
        self.result = result


class SelectionFailureError(NumericalError):
    def __init__(self, detail: str, diagnostics: List[str]):
        lines = "\n".join(f"  - {d}" for d in diagnostics)
        super().__init__(f"{detail}\n{lines}" if diagnostics else detail)
        self.diagnostics = diagnostics


# ==========================================
# Misconfiguration (exit 4)
# ==========================================

class ConfigError(ForecastError):
    exit_code = EXIT_CONFIG
