from contextlib import contextmanager
import logging
import time

from errors import ForecastError
from monitoring import monitor

logger = logging.getLogger(__name__)


@contextmanager
def run_stage(name: str):
    """Time a pipeline stage and record failures; errors leave with the stage name attached."""
    start_time = time.time()
    logger.info(f"▶️ {name}")
    try:
        yield
    except ForecastError as e:
        monitor.log_stage(name, time.time() - start_time, ok=False)
        monitor.log_crash(name, e)
        raise e.with_stage(name)
    except Exception as e:
        monitor.log_stage(name, time.time() - start_time, ok=False)
        monitor.log_crash(name, e)
        raise
    else:
        duration = time.time() - start_time
        monitor.log_stage(name, duration)
        logger.info(f"✅ {name} ({duration:.2f}s)")
