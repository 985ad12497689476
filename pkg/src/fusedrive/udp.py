"""Real-UDP transport: sensors and the vehicle node talk over loopback sockets.

Each sensor runs in its own thread, paced against the wall clock, and sends
its datagrams from its own bound socket; the vehicle node thread receives on
its port and identifies sources by sender address.  Timing is therefore not
deterministic; this mode exists to show the wire format and the vehicle node
work over a real network, and it tracks the simulated channel statistically,
not bit for bit.
"""

import random
import socket
import threading
import time

from .control import PidState, sensor_tick
from .faults import OutageSchedule, PeriodicOutage, gate
from .fusion import VehicleNode
from .metrics import CrashDetector, SampleSeries, correction_metric
from .perception import observe
from .runner import RunResult, assemble_result, write_outputs, _slot_ids
from .scenario import Scenario, derive_seed
from .wire import encode_command
from .world import Pose, lateral_deviation, step_vehicle

_RECV_BYTES = 1500
_SOCKET_TIMEOUT = 0.05


class _UdpSensor:
    def __init__(self, scenario, config, host, port):
        self.config = config
        self.sensor_id = config.sensor_id
        self.period = scenario.sensor_period_ticks(config) * scenario.timestep
        self.pid_state = PidState()
        self.noise_rng = random.Random(derive_seed(scenario.seed, config.sensor_id, "noise"))
        phase = 0.0
        if config.outage is not None:
            span = (config.outage.period if isinstance(config.outage, PeriodicOutage)
                    else config.outage.interval)
            phase = random.Random(
                derive_seed(scenario.seed, config.sensor_id, "phase")).uniform(0.0, span)
        self.outage = OutageSchedule(
            config.outage, phase,
            random.Random(derive_seed(scenario.seed, config.sensor_id, "outage")),
        )
        self.errors = SampleSeries(f"error_{config.sensor_id}")
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        self.sock.bind((host, port))
        self.addr = self.sock.getsockname()


def run_udp(scenario: Scenario, out_dir=None, pace: float = 1.0) -> RunResult:
    """Execute one scenario over loopback UDP, paced to wall clock / pace.

    pace > 1 runs faster than real time at the cost of extra scheduling
    jitter.  Ports come from the scenario's udp section; port 0 picks free
    ephemeral ports, which keeps parallel test runs from colliding.
    """
    host = scenario.udp.host
    vehicle_sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    vehicle_sock.bind((host, scenario.udp.vehicle_port))
    vehicle_sock.settimeout(_SOCKET_TIMEOUT)
    vehicle_addr = vehicle_sock.getsockname()

    sensors = []
    for idx, cfg in enumerate(scenario.sensors):
        port = scenario.udp.sensor_port_base
        if port:
            port += idx
        sensors.append(_UdpSensor(scenario, cfg, host, port))
    addr_map = {s.addr: s.sensor_id for s in sensors}

    node = VehicleNode([s.sensor_id for s in scenario.sensors], scenario.fusion,
                       _slot_ids(scenario.sensors))
    lock = threading.Lock()
    stop = threading.Event()
    x, y, tangent = scenario.track.point_at(scenario.start_arclength)
    shared = {"pose": Pose(x, y, tangent), "sim_now": 0.0}

    def vehicle_loop():
        while not stop.is_set():
            try:
                data, addr = vehicle_sock.recvfrom(_RECV_BYTES)
            except socket.timeout:
                continue
            except OSError:
                break
            source_id = addr_map.get(addr)
            if source_id is None:
                continue
            with lock:
                node.handle_datagram(source_id, data, shared["sim_now"])

    def sensor_loop(s: _UdpSensor, t0: float):
        k = 0
        while not stop.is_set():
            sim_t = k * s.period
            if sim_t >= scenario.duration:
                break
            target = t0 + sim_t / pace
            delay = target - time.monotonic()
            if delay > 0:
                if stop.wait(delay):
                    break
            with lock:
                pose = shared["pose"]
            obs = observe(s.config.camera, scenario.track, pose,
                          scenario.markers, s.noise_rng)
            s.pid_state, cmd = sensor_tick(s.config.kind, s.config.gains,
                                           s.pid_state, obs)
            dark = s.outage.active(sim_t)
            if not dark and not cmd.is_zero_report():
                s.errors.append(sim_t, cmd.p)
            payload = encode_command(gate(cmd, dark)).encode("utf-8")
            try:
                s.sock.sendto(payload, vehicle_addr)
            except OSError:
                break
            k += 1

    correction = SampleSeries("correction")
    deviation = SampleSeries("deviation")
    detector = CrashDetector(scenario.crash_threshold, scenario.crash_hold)
    crash_time = None

    vehicle_thread = threading.Thread(target=vehicle_loop, daemon=True)
    vehicle_thread.start()
    t0 = time.monotonic()
    sensor_threads = [
        threading.Thread(target=sensor_loop, args=(s, t0), daemon=True)
        for s in sensors
    ]
    for th in sensor_threads:
        th.start()

    ts = scenario.timestep
    n_ticks = scenario.n_ticks()
    rows_seen = 0
    try:
        for i in range(n_ticks):
            now = i * ts
            target = t0 + now / pace
            delay = target - time.monotonic()
            if delay > 0:
                time.sleep(delay)
            with lock:
                pose = shared["pose"]
                applied = node.applied
                n_rows = len(node.rows)
            dev = lateral_deviation(scenario.track, pose)
            if n_rows > rows_seen:
                rows_seen = n_rows
                correction.append(now, correction_metric(*applied))
                deviation.append(now, dev)
            crash_time = detector.update(now, dev)
            if crash_time is not None:
                break
            new_pose = step_vehicle(pose, applied[0], applied[1], ts, scenario.vehicle)
            with lock:
                shared["pose"] = new_pose
                shared["sim_now"] = (i + 1) * ts
    finally:
        stop.set()
        for th in sensor_threads:
            th.join(timeout=2.0)
        vehicle_thread.join(timeout=2.0)
        vehicle_sock.close()
        for s in sensors:
            s.sock.close()

    errors = {s.sensor_id: s.errors for s in sensors}
    result = assemble_result(scenario, node, sensors, correction, deviation,
                             errors, crash_time)
    if out_dir is not None:
        write_outputs(result, out_dir)
    return result
