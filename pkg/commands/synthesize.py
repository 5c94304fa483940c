import logging

from config import RunConfig
from middleware import run_stage
from synthetic import write_fixtures

logger = logging.getLogger(__name__)


def register(subparsers, common):
    parser = subparsers.add_parser("synthesize", parents=[common],
                                   help="write synthetic demand and environment fixtures for every region")
    parser.add_argument("--start-year", type=int, default=2011)
    parser.add_argument("--years", type=int, default=7)
    parser.add_argument("--intervals-per-day", type=int, default=96,
                        help="demand readings per day (96 = every 15 minutes)")
    parser.set_defaults(handler=handle)


def handle(args, config: RunConfig):
    with run_stage("synthesize"):
        paths = write_fixtures(config.out_dir, start_year=args.start_year, years=args.years, seed=config.seed,
                               intervals_per_day=args.intervals_per_day, regions=config.regions)
    print(f"demand: {paths['demand']}")
    print(f"environment: {paths['env']}")
