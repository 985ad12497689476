"""Loopback-UDP transport: wire format and vehicle node over real sockets.

These runs are paced against the wall clock and therefore not deterministic;
assertions stay qualitative (it drives, it logs, sources resolve by address).
"""

import pytest

from fusedrive.runner import run
from fusedrive.scenario import scenario_from_dict
from fusedrive.udp import run_udp


def udp_cfg(sensors, duration=5.0):
    return {
        "seed": 3,
        "duration": duration,
        "track": {"kind": "rounded_rectangle", "center": [1.0, 1.0],
                  "straight": 1.0, "corner_radius": 0.3},
        "fusion": "confidence_weighted",
        "sensors": sensors,
        # port 0 = ephemeral, so parallel test runs never collide
        "udp": {"vehicle_port": 0, "sensor_port_base": 0},
    }


ONBOARD = [{"id": "pi", "kind": "onboard", "camera": {"pixels_per_meter": 1300}}]
PAIR = ONBOARD + [
    {"id": "cam0", "kind": "infrastructure",
     "camera": {"coverage": [0, 0, 2, 2], "pixels_per_meter": 300,
                "crop_size": 36}},
]


class TestUdpTransport:
    def test_onboard_drives_over_udp(self):
        sc = scenario_from_dict(udp_cfg(ONBOARD))
        res = run_udp(sc, pace=10.0)
        assert res.completed
        assert len(res.rows) > 20
        dev = res.series["deviation"]
        assert max(abs(v) for v in dev.values) < 0.05

    def test_sources_resolved_by_sender_address(self):
        sc = scenario_from_dict(udp_cfg(PAIR))
        res = run_udp(sc, pace=10.0)
        assert res.completed
        # both column groups carry data at some point
        pi_seen = any(row.split(",")[3] != "0" for row in res.rows)
        cam_seen = any(row.split(",")[9] != "0" for row in res.rows)
        assert pi_seen and cam_seen

    def test_tracks_simulated_transport_loosely(self):
        cfg = udp_cfg(ONBOARD, duration=8.0)
        sim = run(scenario_from_dict(cfg))
        real = run_udp(scenario_from_dict(cfg), pace=10.0)
        assert real.completed and sim.completed
        sim_dev = sim.summaries["deviation"]["mean_abs"]
        real_dev = real.summaries["deviation"]["mean_abs"]
        # same controller, same track; wall pacing only adds jitter
        assert real_dev == pytest.approx(sim_dev, abs=0.01)

    def test_outputs_written(self, tmp_path):
        sc = scenario_from_dict(udp_cfg(ONBOARD, duration=3.0))
        res = run_udp(sc, tmp_path / "udp", pace=10.0)
        assert (tmp_path / "udp" / "drive_log.csv").exists()
        assert res.files
