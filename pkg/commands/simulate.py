from typing import Tuple
import logging

from config import RunConfig
from dependencies import out_path
from errors import ConfigError
from middleware import run_stage
from models import AlignedDataset, DifferencingOrders, SarimaParams, SarimaSpec
from pipeline import save_dataset
from sarima import simulate

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser("simulate", parents=[common],
                                   help="draw a series from a given SARIMA model (written as a dataset file)")
    parser.add_argument("--p", type=int, default=0)
    parser.add_argument("--q", type=int, default=0)
    parser.add_argument("--P", type=int, default=0)
    parser.add_argument("--Q", type=int, default=0)
    parser.add_argument("--phi", default="", help="comma-separated AR coefficients")
    parser.add_argument("--theta", default="", help="comma-separated MA coefficients")
    parser.add_argument("--Phi", default="", help="comma-separated seasonal AR coefficients")
    parser.add_argument("--Theta", default="", help="comma-separated seasonal MA coefficients")
    parser.add_argument("--delta", type=float, default=0.0)
    parser.add_argument("--sigma2", type=float, default=1.0)
    parser.add_argument("--n", type=int, required=True, help="number of weeks")
    parser.add_argument("--start", default="2000-W01", help="first ISO week")
    parser.add_argument("--out", dest="series_out", help="output file (default: <out-dir>/simulated.csv)")
    parser.set_defaults(handler=handle)


def _coefficients(text: str, flag: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ConfigError(f"{flag} expects comma-separated numbers, got '{text}'")


def model_from_args(args, config: RunConfig) -> Tuple[SarimaSpec, SarimaParams]:
    orders = DifferencingOrders(d=config.d or 0, D=config.D or 0, S=config.seasonal_period)
    try:
        spec = SarimaSpec(p=args.p, q=args.q, P=args.P, Q=args.Q, orders=orders,
                          include_intercept=config.include_intercept)
        params = SarimaParams(
            phi=_coefficients(args.phi, "--phi"),
            theta=_coefficients(args.theta, "--theta"),
            Phi=_coefficients(args.Phi, "--Phi"),
            Theta=_coefficients(args.Theta, "--Theta"),
            delta=args.delta,
            sigma2=args.sigma2,
        )
    except ValueError as e:
        # pydantic ValidationError is a ValueError
        raise ConfigError(f"invalid model: {e}")
    return spec, params


def handle(args, config: RunConfig):
    spec, params = model_from_args(args, config)
    with run_stage("simulate"):
        series = simulate(spec, params, args.n, config.seed, start=args.start)
    dataset = AlignedDataset(region="SIM", aggregation_mode=config.aggregation_mode,
                             wpd=series, train_len=series.n, test_len=0)
    path = args.series_out or out_path(config, "simulated.csv")
    save_dataset(dataset, path)
    print(f"{spec.label}: {series.n} weeks from {series.start} (seed {config.seed}) -> {path}")
