"""Deterministic fixed-timestep experiment runner.

Each tick: sensors due this tick observe the world, run their PID, pass the
command through their outage gate, and send it into their channel; the
vehicle node polls all channels and re-fuses per received datagram; metrics
record; the vehicle steps.  Everything derives from the scenario seed, so a
run is a pure function of (scenario, seed) and its artifacts are
byte-identical across repeats.
"""

import itertools
import json
import os
import random
from dataclasses import dataclass, field

from .control import PidState, sensor_tick
from .faults import OutageSchedule, PeriodicOutage, gate
from .fusion import DRIVE_LOG_HEADER, VehicleNode
from .metrics import (
    CrashDetector,
    SampleSeries,
    correction_metric,
    post_outage_window,
    summarize,
)
from .perception import INFRASTRUCTURE, ONBOARD, observe
from .scenario import Scenario, derive_seed
from .wire import ChannelModel, SimulatedChannel, encode_command, merge_deliveries
from .world import Pose, lateral_deviation, step_vehicle


@dataclass
class RunResult:
    scenario_name: str
    seed: int
    fusion: str
    duration: float
    completed: bool
    crash_time: float
    run_end: float
    header: str
    rows: list
    series: dict
    summaries: dict
    outage_ends: list
    out_dir: str = None
    files: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 0 if self.completed else 2


class _SensorRuntime:
    def __init__(self, scenario: Scenario, config, seq):
        self.config = config
        self.sensor_id = config.sensor_id
        self.period_ticks = scenario.sensor_period_ticks(config)
        self.pid_state = PidState()
        self.noise_rng = random.Random(derive_seed(scenario.seed, config.sensor_id, "noise"))
        self.channel = SimulatedChannel(
            ChannelModel(config.channel_loss, config.channel_delay,
                         derive_seed(scenario.seed, config.sensor_id, "channel")),
            seq,
        )
        phase = 0.0
        if config.outage is not None:
            span = (config.outage.period if isinstance(config.outage, PeriodicOutage)
                    else config.outage.interval)
            phase_rng = random.Random(derive_seed(scenario.seed, config.sensor_id, "phase"))
            phase = phase_rng.uniform(0.0, span)
        self.outage = OutageSchedule(
            config.outage, phase,
            random.Random(derive_seed(scenario.seed, config.sensor_id, "outage")),
        )


def _slot_ids(sensors):
    onboard = [s.sensor_id for s in sensors if s.kind == ONBOARD]
    infra = [s.sensor_id for s in sensors if s.kind == INFRASTRUCTURE]
    return (
        onboard[0] if onboard else None,
        infra[0] if len(infra) > 0 else None,
        infra[1] if len(infra) > 1 else None,
    )


def run(scenario: Scenario, out_dir=None) -> RunResult:
    """Execute one scenario on the simulated channel; returns the RunResult.

    When out_dir is given the drive log, metric series, and summary are
    written there as well.
    """
    seq = itertools.count().__next__
    sensors = [_SensorRuntime(scenario, s, seq) for s in scenario.sensors]
    node = VehicleNode([s.sensor_id for s in scenario.sensors], scenario.fusion,
                       _slot_ids(scenario.sensors))
    x, y, tangent = scenario.track.point_at(scenario.start_arclength)
    pose = Pose(x, y, tangent)

    correction = SampleSeries("correction")
    deviation = SampleSeries("deviation")
    errors = {s.sensor_id: SampleSeries(f"error_{s.sensor_id}") for s in sensors}
    detector = CrashDetector(scenario.crash_threshold, scenario.crash_hold)
    crash_time = None

    ts = scenario.timestep
    n_ticks = scenario.n_ticks()
    channels = [s.channel for s in sensors]
    for i in range(n_ticks):
        now = i * ts
        for s in sensors:
            if i % s.period_ticks:
                continue
            obs = observe(s.config.camera, scenario.track, pose,
                          scenario.markers, s.noise_rng)
            s.pid_state, cmd = sensor_tick(s.config.kind, s.config.gains,
                                           s.pid_state, obs)
            dark = s.outage.active(now)
            if not dark and not cmd.is_zero_report():
                errors[s.sensor_id].append(now, cmd.p)
            s.channel.send(s.sensor_id, encode_command(gate(cmd, dark)), now)
        delivered = merge_deliveries(channels, now)
        for source_id, datagram in delivered:
            node.handle_datagram(source_id, datagram, now)
        dev = lateral_deviation(scenario.track, pose)
        if delivered:
            correction.append(now, correction_metric(*node.applied))
            deviation.append(now, dev)
        crash_time = detector.update(now, dev)
        if crash_time is not None:
            break
        pose = step_vehicle(pose, node.applied[0], node.applied[1], ts, scenario.vehicle)

    result = assemble_result(scenario, node, sensors, correction, deviation,
                             errors, crash_time)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result


def assemble_result(scenario, node, sensors, correction, deviation, errors,
                    crash_time) -> RunResult:
    """Fold the raw run state into summaries and a RunResult."""
    completed = crash_time is None
    run_end = scenario.duration if completed else crash_time
    outage_ends = sorted(
        end for s in sensors for _, end in s.outage.windows(run_end)
    )

    summaries = {}
    series = {"correction": correction, "deviation": deviation}
    series.update({ser.name: ser for ser in errors.values()})
    for name, ser in series.items():
        summaries[name] = (summarize(ser, crash_time).as_dict() if len(ser)
                           else {"count": 0})
    if any(s.config.outage is not None for s in sensors):
        for name in ("correction", "deviation"):
            window = post_outage_window(series[name], outage_ends, scenario.post_outage_k)
            summaries[f"post_outage_{name}"] = (
                summarize(window, crash_time).as_dict() if window.size
                else {"count": 0}
            )

    return RunResult(
        scenario_name=scenario.name,
        seed=scenario.seed,
        fusion=scenario.fusion,
        duration=scenario.duration,
        completed=completed,
        crash_time=crash_time,
        run_end=run_end,
        header=DRIVE_LOG_HEADER,
        rows=node.rows,
        series=series,
        summaries=summaries,
        outage_ends=outage_ends,
    )


def write_outputs(result: RunResult, out_dir):
    """Write drive log, metric series, and the JSON summary to out_dir."""
    os.makedirs(out_dir, exist_ok=True)
    files = {}

    path = os.path.join(out_dir, "drive_log.csv")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(result.header + "\n")
        for row in result.rows:
            fh.write(row + "\n")
    files["drive_log"] = path

    for name, ser in result.series.items():
        path = os.path.join(out_dir, f"{name}.csv")
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"time,{name}\n")
            for t, v in zip(ser.times, ser.values):
                fh.write(f"{t:.6f},{v!r}\n")
        files[name] = path

    summary = {
        "scenario": result.scenario_name,
        "seed": result.seed,
        "fusion": result.fusion,
        "duration": result.duration,
        "completed": result.completed,
        "crash_time": result.crash_time,
        "metrics": result.summaries,
    }
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    files["summary"] = path
    result.out_dir = out_dir
    result.files = files
