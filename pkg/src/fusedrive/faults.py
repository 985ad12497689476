"""Sensor outage injection between the controller and the transport.

Two models: a periodic outage (every period seconds the sensor goes dark for
a fixed duration) and a probabilistic one (each fixed interval draws an
integer 1..100 and goes dark for that interval iff draw < threshold — strict,
so a nominal threshold of 40 really fires 39% of the time).  While an outage
is active the sensor keeps observing and updating its controller but
transmits zero-reports.
"""

import math
from dataclasses import dataclass

from .wire import SteeringCommand


@dataclass(frozen=True)
class PeriodicOutage:
    period: float = 3.0
    duration: float = 0.0

    def __post_init__(self):
        if self.period <= 0.0:
            raise ValueError("period must be positive")
        if not 0.0 <= self.duration <= self.period:
            raise ValueError("duration must be in [0, period]")


@dataclass(frozen=True)
class ProbabilisticOutage:
    interval: float = 0.4
    threshold: int = 0

    def __post_init__(self):
        if self.interval <= 0.0:
            raise ValueError("interval must be positive")
        if not 0 <= self.threshold <= 100:
            raise ValueError("threshold must be in [0, 100]")


class OutageSchedule:
    """Stateful evaluation of one sensor's outage model.

    now must be non-decreasing across active() calls; the probabilistic
    model draws exactly one random number per interval regardless of how
    often it is queried.
    """

    def __init__(self, model, phase: float = 0.0, rng=None):
        self.model = model
        self.phase = phase
        self._rng = rng
        self._interval_index = None
        self._interval_active = False
        self._windows = []
        self._open_start = None

    def active(self, now: float) -> bool:
        m = self.model
        if m is None:
            return False
        if isinstance(m, PeriodicOutage):
            local = math.fmod(now - self.phase, m.period)
            if local < 0.0:
                local += m.period
            return local < m.duration
        k = math.floor((now - self.phase) / m.interval)
        if self._interval_index is None or k > self._interval_index:
            start = self._interval_index + 1 if self._interval_index is not None else k
            for j in range(start, k + 1):
                draw = self._rng.randint(1, 100)
                self._record(j, draw < m.threshold)
            self._interval_index = k
        return self._interval_active

    def _record(self, j: int, active: bool):
        m = self.model
        t0 = self.phase + j * m.interval
        if active and self._open_start is None:
            self._open_start = t0
        elif not active and self._open_start is not None:
            self._windows.append((self._open_start, t0))
            self._open_start = None
        self._interval_active = active

    def windows(self, end_time: float):
        """Outage windows (start, end) intersecting [0, end_time].

        For the periodic model the windows exist analytically, including
        zero-length ones at each period mark when duration is 0, so
        post-outage sampling stays meaningful across a duration sweep.
        Probabilistic windows merge adjacent dark intervals.
        """
        m = self.model
        if m is None:
            return []
        if isinstance(m, PeriodicOutage):
            out = []
            k = 0
            while True:
                start = self.phase + k * m.period
                if start > end_time:
                    break
                out.append((start, min(start + m.duration, end_time)))
                k += 1
            return out
        out = list(self._windows)
        if self._open_start is not None:
            out.append((self._open_start, end_time))
        return [(s, min(e, end_time)) for s, e in out if s <= end_time]


def gate(cmd: SteeringCommand, active: bool) -> SteeringCommand:
    """Substitute a zero-report while an outage is active."""
    return SteeringCommand.zero() if active else cmd
