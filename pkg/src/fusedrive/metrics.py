"""Driving-quality measurement: series, summaries, windows, crash detection.

Summaries follow the reporting convention of averaging absolute values:
mean of |x|, population standard deviation of |x|, and the standard error
of that mean.
"""

import math
from dataclasses import dataclass

import numpy as np


class SampleSeries:
    """Timestamped values of one metric; timestamps strictly increase."""

    def __init__(self, name: str = ""):
        self.name = name
        self.times = []
        self.values = []

    def append(self, t: float, value: float):
        if self.times and t <= self.times[-1]:
            raise ValueError(f"non-increasing timestamp {t} in series {self.name!r}")
        self.times.append(t)
        self.values.append(value)

    def __len__(self):
        return len(self.values)

    def as_arrays(self):
        return np.asarray(self.times, dtype=float), np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class RunSummary:
    mean_abs: float
    std_abs: float
    sem_abs: float
    count: int
    crash_time: float = None

    def as_dict(self):
        return {
            "mean_abs": self.mean_abs,
            "std_abs": self.std_abs,
            "sem_abs": self.sem_abs,
            "count": self.count,
            "crash_time": self.crash_time,
        }


def correction_metric(left_applied: float, right_applied: float) -> float:
    """Signed applied steering correction, in power units."""
    return (right_applied - left_applied) / 2.0


def summarize(series, crash_time: float = None) -> RunSummary:
    """Mean and population std of |x|, plus the standard error of the mean."""
    values = np.abs(np.asarray(getattr(series, "values", series), dtype=float))
    if values.size == 0:
        raise ValueError("cannot summarize an empty series")
    mean = float(np.mean(values))
    std = float(np.std(values))
    return RunSummary(mean, std, std / math.sqrt(values.size), int(values.size), crash_time)


def post_outage_window(series: SampleSeries, outage_end_times, k: int = 5):
    """Values of the first k samples strictly after each outage end."""
    if k < 1:
        raise ValueError("k must be >= 1")
    times, values = series.as_arrays()
    picked = []
    for end in outage_end_times:
        start = int(np.searchsorted(times, end, side="right"))
        picked.append(values[start:start + k])
    if not picked:
        return np.empty(0)
    return np.concatenate(picked)


class CrashDetector:
    """Flags the first time |deviation| exceeds a threshold for a hold time."""

    def __init__(self, threshold_m: float = 0.25, hold_s: float = 0.5):
        self.threshold_m = threshold_m
        self.hold_s = hold_s
        self._over_since = None

    def update(self, t: float, deviation: float):
        """Feed one sample; returns the crash time once the hold is met."""
        if abs(deviation) > self.threshold_m:
            if self._over_since is None:
                self._over_since = t
            if t - self._over_since >= self.hold_s:
                return self._over_since + self.hold_s
        else:
            self._over_since = None
        return None


def detect_crash(deviation_series: SampleSeries, threshold_m: float = 0.25,
                 hold_s: float = 0.5):
    """First time |deviation| > threshold_m continuously for hold_s, or None."""
    detector = CrashDetector(threshold_m, hold_s)
    for t, v in zip(deviation_series.times, deviation_series.values):
        crash = detector.update(t, v)
        if crash is not None:
            return crash
    return None
