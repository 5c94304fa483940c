import numpy as np
import pytest

from monitoring import monitor
from synthetic import write_fixtures


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(autouse=True)
def fresh_monitor():
    monitor.init_monitor()
    yield


@pytest.fixture
def write_demand(tmp_path):
    """Write raw demand rows (header included) and return the path."""
    def _write(rows, name="demand.csv", header="timestamp,region,demand_mw"):
        path = tmp_path / name
        path.write_text("\n".join([header] + list(rows)) + "\n", encoding="utf-8")
        return path
    return _write


@pytest.fixture(scope="session")
def small_fixtures(tmp_path_factory):
    """Three synthetic years (2011-2013) at four readings per day for NSW and SA."""
    out = tmp_path_factory.mktemp("fixtures")
    return write_fixtures(str(out), start_year=2011, years=3, seed=7, intervals_per_day=4, regions=("NSW", "SA"))
