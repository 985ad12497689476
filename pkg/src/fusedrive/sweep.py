"""Parameter sweeps over repeated seeded runs, with gnuplot-ready output.

A sweep varies one axis (a PID gain or an outage parameter), runs the
scenario a few times per value with seeds derived from (seed, value, rep),
and aggregates the per-run summaries into one table row per value.
"""

import copy
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .faults import PeriodicOutage, ProbabilisticOutage
from .runner import run
from .scenario import Scenario, derive_seed
from .world import ConfigError

AXES = ("kp", "ki", "kd", "outage_duration", "outage_threshold")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    reps: int = 3

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        for v in self.values:
            if not math.isfinite(v):
                raise ConfigError("sweep values must be finite")
        if self.reps < 1:
            raise ConfigError("repetitions must be >= 1")


@dataclass
class SweepTable:
    axis: str
    values: list
    metrics: dict            # metric name -> list of (mean, std) per value
    crash_rate: list
    runs: list = field(default_factory=list)  # list (per value) of RunResult lists


def apply_axis(scenario: Scenario, axis: str, value) -> Scenario:
    """A copy of the scenario with one swept parameter replaced."""
    out = copy.deepcopy(scenario)
    if axis in ("kp", "ki", "kd"):
        for sensor in out.sensors:
            sensor.gains = replace(sensor.gains, **{axis: float(value)})
        return out
    if axis == "outage_duration":
        hit = False
        for sensor in out.sensors:
            if isinstance(sensor.outage, PeriodicOutage):
                sensor.outage = replace(sensor.outage, duration=float(value))
                hit = True
        if not hit:
            raise ConfigError("outage_duration sweep needs a periodic outage model")
        return out
    if axis == "outage_threshold":
        hit = False
        for sensor in out.sensors:
            if isinstance(sensor.outage, ProbabilisticOutage):
                sensor.outage = replace(sensor.outage, threshold=int(value))
                hit = True
        if not hit:
            raise ConfigError("outage_threshold sweep needs a probabilistic outage model")
        return out
    raise ConfigError(f"unknown sweep axis {axis!r}")


def sweep(scenario: Scenario, spec: SweepSpec, out_dir=None) -> SweepTable:
    """Run the scenario per (value, repetition) and aggregate summaries."""
    values = list(spec.values)
    metric_rows = {}
    crash_rate = []
    all_runs = []
    for vi, value in enumerate(values):
        variant = apply_axis(scenario, spec.axis, value)
        results = []
        for rep in range(spec.reps):
            rep_scenario = copy.deepcopy(variant)
            rep_scenario.seed = derive_seed(scenario.seed, spec.axis, value, rep)
            rep_dir = None
            if out_dir is not None:
                rep_dir = os.path.join(out_dir, f"{spec.axis}_{value:g}_rep{rep}")
            results.append(run(rep_scenario, rep_dir))
        all_runs.append(results)
        crash_rate.append(sum(1 for r in results if not r.completed) / len(results))
        for name in sorted({m for r in results for m in r.summaries}):
            means = [r.summaries[name]["mean_abs"] for r in results
                     if r.summaries[name].get("count")]
            stds = [r.summaries[name]["std_abs"] for r in results
                    if r.summaries[name].get("count")]
            cell = ((float(np.mean(means)), float(np.mean(stds))) if means
                    else (math.nan, math.nan))
            metric_rows.setdefault(name, [(math.nan, math.nan)] * len(values))
            metric_rows[name][vi] = cell
    table = SweepTable(spec.axis, values, metric_rows, crash_rate, all_runs)
    if out_dir is not None:
        emit_plot_data(table, out_dir)
    return table


def emit_plot_data(table: SweepTable, out_dir) -> list:
    """One whitespace-column .dat file per metric: value, mean, std, crash_rate."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, cells in sorted(table.metrics.items()):
        path = os.path.join(out_dir, f"{table.axis}_{name}.dat")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {table.axis} mean_abs std_abs crash_rate\n")
            for value, (mean, std), rate in zip(table.values, cells, table.crash_rate):
                fh.write(f"{value:.10g} {mean:.10g} {std:.10g} {rate:.10g}\n")
        paths.append(path)
    return paths


def read_plot_data(path):
    """Parse an emitted .dat file back into (column names, data array)."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().lstrip("#").split()
        rows = [[float(v) for v in line.split()] for line in fh if line.strip()]
    data = np.asarray(rows, dtype=float) if rows else np.empty((0, len(header)))
    return header, data
