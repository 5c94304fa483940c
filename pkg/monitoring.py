import time
import psutil
import os
from collections import Counter, deque


class RunMonitor:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super(RunMonitor, cls).__new__(cls)
            cls._instance.init_monitor()
        return cls._instance

    def init_monitor(self, slow_stage_seconds: float = 30.0):
        self.start_time = time.time()
        self.slow_stage_seconds = slow_stage_seconds
        self.total_stages = 0
        self.stage_outcomes = {"ok": 0, "failed": 0}
        # stage name -> cumulative seconds
        self.stage_durations = {}
        # Keep last 10 crashes
        self.recent_crashes = deque(maxlen=10)
        # Keep last 10 slow stages
        self.slow_stages = deque(maxlen=10)
        # level name -> records seen
        self.log_levels = Counter()

    def log_message(self, level):
        self.log_levels[level] += 1

    def get_uptime(self):
        uptime_seconds = time.time() - self.start_time
        minutes = int(uptime_seconds // 60)
        seconds = uptime_seconds % 60
        return f"{minutes}m {seconds:.1f}s"

    def get_ram_usage(self):
        process = psutil.Process(os.getpid())
        mem_info = process.memory_info()
        return f"{mem_info.rss / 1024 / 1024:.2f}"

    def log_stage(self, stage, duration_s, ok=True):
        self.total_stages += 1
        self.stage_outcomes["ok" if ok else "failed"] += 1
        self.stage_durations[stage] = self.stage_durations.get(stage, 0.0) + duration_s
        if duration_s > self.slow_stage_seconds:
            self.slow_stages.appendleft((stage, duration_s))

    def log_crash(self, stage, error):
        self.recent_crashes.appendleft((stage, type(error).__name__, str(error)))

    def warnings_seen(self):
        return sum(self.log_levels[level] for level in ("WARNING", "ERROR", "CRITICAL"))

    def summary(self):
        parts = [
            f"{self.total_stages} stages ({self.stage_outcomes['failed']} failed) in {self.get_uptime()}",
            f"RSS {self.get_ram_usage()} MB",
            f"{self.warnings_seen()} warnings",
        ]
        if self.stage_durations:
            slowest = max(self.stage_durations, key=self.stage_durations.get)
            parts.append(f"slowest {slowest} {self.stage_durations[slowest]:.2f}s")
        if self.slow_stages:
            parts.append("over threshold: " + ", ".join(f"{s} ({d:.2f}s)" for s, d in self.slow_stages))
        if self.recent_crashes:
            stage, kind, message = self.recent_crashes[0]
            parts.append(f"last failure in {stage}: {kind}: {message}")
        return ", ".join(parts)


monitor = RunMonitor()
