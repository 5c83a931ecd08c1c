"""Time sources for campaigns and the emulator.

Collectors stamp samples with both a monotonic instant (metrics) and a
wall-clock time (export). A campaign can run against the real clock or a
simulated one; under the simulated clock the scheduler advances time
explicitly, so a 30 s campaign finishes in milliseconds and produces the
exact same timestamp grid on every run.
"""

from __future__ import annotations

import threading
import time


class SystemClock:
    """Real time: monotonic for scheduling, wall clock for export."""

    simulated = False

    def now(self) -> float:
        return time.monotonic()

    def wall(self) -> float:
        return time.time()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)


class SimulatedClock:
    """A settable clock shared by the emulator and the campaign scheduler.

    Wall time is derived as ``epoch + now()`` from a fixed epoch, so runs
    with equal seeds export byte-identical timestamps. ``sleep`` jumps the
    clock forward immediately; it must only be used from a single driving
    thread (the campaign event loop).
    """

    simulated = True

    def __init__(self, start: float = 0.0, epoch: float = 0.0):
        self._now = start
        self.epoch = epoch
        self._lock = threading.Lock()

    def now(self) -> float:
        with self._lock:
            return self._now

    def wall(self) -> float:
        return self.epoch + self.now()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            self.advance(seconds)

    def advance(self, seconds: float) -> None:
        with self._lock:
            self._now += seconds

    def advance_to(self, instant: float) -> None:
        with self._lock:
            if instant > self._now:
                self._now = instant
