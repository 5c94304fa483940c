"""
wpd: weekly peak demand forecasting with SARIMA and environmental regressors.

    python main.py synthesize --out-dir data
    python main.py reproduce --demand data/demand.csv --env 'data/env_{region}.csv' --out-dir out
"""
import argparse
import logging
import sys
from typing import List, Optional

from commands import evaluate, forecast, ingest, reproduce, search, simulate, synthesize
from dependencies import get_config
from errors import ForecastError
from monitoring import monitor

COMMANDS = (ingest, search, forecast, evaluate, simulate, reproduce, synthesize)


# Custom Log Handler
class MonitorHandler(logging.Handler):
    def emit(self, record):
        monitor.log_message(record.levelname)


def configure_logging(verbose: bool = False) -> None:
    # stderr only, so output files and stdout tables stay reproducible
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    root = logging.getLogger()
    if not any(isinstance(h, MonitorHandler) for h in root.handlers):
        root.addHandler(MonitorHandler())


logger = logging.getLogger("wpd")


def common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--config", help="flat KEY=VALUE config file")
    common.add_argument("--period", dest="seasonal_period", type=int, help="seasonal period S (default 52)")
    common.add_argument("--max-order-sum", dest="max_order_sum", type=int, help="cap on p+q+P+Q (default 5)")
    common.add_argument("--level", dest="confidence_level", type=float, help="interval level (default 0.99)")
    common.add_argument("--agg-mode", dest="aggregation_mode", choices=["sum", "max"],
                        help="combine daily peaks per week by sum (default) or max")
    common.add_argument("--seed", type=int)
    common.add_argument("--train-end", dest="train_end", help="last training week, YYYY-Www (default 2016-W52)")
    common.add_argument("--test-len", dest="test_len", type=int, help="test weeks after --train-end (default 52)")
    common.add_argument("--horizon", type=int, help="forecast weeks (default 52)")
    common.add_argument("--future-exog", dest="future_exog", choices=["observed", "climatology"],
                        help="future regressor values for hybrid forecasts")
    common.add_argument("--out-dir", dest="out_dir")
    common.add_argument("--regions", help="comma-separated region codes (default NSW,VIC,SA)")
    common.add_argument("--d", dest="d", type=int, help="regular differencing order (default: automatic)")
    common.add_argument("--D", dest="D", type=int, help="seasonal differencing order (default: automatic)")
    common.add_argument("--intercept", dest="include_intercept", action=argparse.BooleanOptionalAction,
                        default=None, help="force the intercept on or off (default: only when undifferenced)")
    common.add_argument("--joint-search", dest="joint_search", action="store_const", const=True,
                        help="rank orders and regression terms together")
    common.add_argument("--workers", type=int, help="processes for candidate fitting (default 1)")
    common.add_argument("--kpss-lags", dest="kpss_lags", type=int, help="KPSS Bartlett truncation lag")
    common.add_argument("--diagnostic-lags", dest="diagnostic_lags", type=int, help="residual ACF lags (default 52)")
    common.add_argument("-v", "--verbose", action="store_true", default=False)
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wpd", description="Weekly peak demand forecasting", allow_abbrev=False)
    subparsers = parser.add_subparsers(dest="command", required=True)
    common = common_flags()
    for command in COMMANDS:
        command.register(subparsers, common)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    code = 0
    try:
        config = get_config(args)
        monitor.init_monitor(config.slow_stage_seconds)
        args.handler(args, config)
    except ForecastError as e:
        print(f"error: {e.detail}", file=sys.stderr)
        code = e.exit_code
    except Exception as e:
        logger.exception(f"unexpected failure: {e}")
        code = 1
    logger.info(f"Run summary: {monitor.summary()}")
    return code


if __name__ == "__main__":
    sys.exit(main())
