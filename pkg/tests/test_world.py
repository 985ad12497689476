"""Geometry and kinematics tests against closed-form oracles."""

import math
import random

import pytest

from fusedrive.world import (
    Arc,
    ConfigError,
    Pose,
    Straight,
    Track,
    VehicleParams,
    lateral_deviation,
    normalize_heading,
    rounded_rectangle_segments,
    step_vehicle,
    track_from_config,
)


def square_loop_track(side=1.0, radius=0.2):
    """Four straights joined by quarter arcs, centered on the board."""
    return Track(rounded_rectangle_segments((1.0, 1.0), side, radius))


class TestTrackConstruction:
    def test_square_loop_length(self):
        # 4 straights of 1 m plus a full circle of radius 0.2 worth of arcs.
        track = square_loop_track(1.0, 0.2)
        expected = 4.0 + 2.0 * math.pi * 0.2
        assert track.total_length == pytest.approx(expected, abs=1e-12)

    def test_circle_track_length(self):
        track = track_from_config({"kind": "circle", "center": [1.0, 1.0], "radius": 0.5})
        assert track.total_length == pytest.approx(math.pi, abs=1e-12)

    def test_point_at_wraps(self):
        track = square_loop_track()
        x0, y0, t0 = track.point_at(0.0)
        x1, y1, t1 = track.point_at(track.total_length)
        assert (x0, y0, t0) == pytest.approx((x1, y1, t1), abs=1e-9)

    def test_non_closing_loop_rejected(self):
        segs = [
            Straight(0.5, 0.5, 1.5, 0.5),
            Straight(1.5, 0.6, 0.5, 0.6),  # gap of 0.1 at the joint
        ]
        with pytest.raises(ConfigError, match="segment 0"):
            Track(segs)

    def test_off_board_track_rejected(self):
        with pytest.raises(ConfigError, match="leaves the board"):
            track_from_config({"kind": "circle", "center": [1.0, 1.0], "radius": 1.5})

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError, match="unknown track kind"):
            track_from_config({"kind": "triangle"})

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError, match="unknown key"):
            track_from_config({"kind": "circle", "radius": 0.5, "colour": "black"})

    def test_explicit_segments(self):
        track = track_from_config({
            "kind": "segments",
            "segments": [
                {"type": "straight", "start": [0.5, 0.7], "end": [1.5, 0.7]},
                {"type": "arc", "center": [1.5, 1.0], "radius": 0.3,
                 "start_deg": 270.0, "sweep_deg": 180.0},
                {"type": "straight", "start": [1.5, 1.3], "end": [0.5, 1.3]},
                {"type": "arc", "center": [0.5, 1.0], "radius": 0.3,
                 "start_deg": 90.0, "sweep_deg": 180.0},
            ],
        })
        assert track.total_length == pytest.approx(2.0 + 2.0 * math.pi * 0.3)


class TestLateralDeviation:
    def test_center_of_circle(self):
        track = track_from_config({"kind": "circle", "center": [1.0, 1.0], "radius": 0.5})
        assert abs(lateral_deviation(track, Pose(1.0, 1.0, 0.0))) == pytest.approx(0.5)

    def test_sign_left_positive(self):
        track = square_loop_track()
        # Bottom straight runs +x at y = 0.3; above it is the track's left.
        assert lateral_deviation(track, Pose(1.0, 0.35, 0.0)) > 0
        assert lateral_deviation(track, Pose(1.0, 0.25, 0.0)) < 0

    def test_on_line_zero(self):
        track = square_loop_track()
        x, y, _ = track.point_at(0.37)
        assert lateral_deviation(track, Pose(x, y, 0.0)) == pytest.approx(0.0, abs=1e-12)

    def test_circle_offsets(self):
        track = track_from_config({"kind": "circle", "center": [1.0, 1.0], "radius": 0.5})
        # Outside the ccw circle is to the right of travel: negative.
        assert lateral_deviation(track, Pose(1.7, 1.0, 0.0)) == pytest.approx(-0.2)
        assert lateral_deviation(track, Pose(1.4, 1.0, 0.0)) == pytest.approx(0.1)

    def test_continuity_along_path(self):
        track = square_loop_track()
        rng = random.Random(7)
        # A wobbly path near the line: consecutive deviations stay close.
        s = 0.0
        prev = None
        for _ in range(400):
            s += 0.01
            x, y, _ = track.point_at(s)
            x += rng.uniform(-0.01, 0.01)
            y += rng.uniform(-0.01, 0.01)
            d = lateral_deviation(track, Pose(x, y, 0.0))
            if prev is not None:
                assert abs(d - prev) < 0.04
            prev = d


class TestStepVehicle:
    def test_straight_displacement(self):
        p = VehicleParams()
        pose = step_vehicle(Pose(1.0, 1.0, 0.0), p.nominal_power, p.nominal_power, 1.0, p)
        assert pose.x == pytest.approx(1.25, abs=1e-12)
        assert pose.y == pytest.approx(1.0, abs=1e-12)
        assert pose.heading == 0.0

    def test_nominal_speed_default(self):
        p = VehicleParams()
        assert p.nominal_speed == pytest.approx(0.25, abs=1e-12)

    def test_equal_powers_keep_heading(self):
        p = VehicleParams()
        rng = random.Random(1)
        for _ in range(200):
            pose = Pose(rng.uniform(0.2, 1.8), rng.uniform(0.2, 1.8), rng.uniform(0, 360))
            power = rng.uniform(0, 255)
            after = step_vehicle(pose, power, power, 0.05, p)
            assert after.heading == pytest.approx(pose.heading, abs=1e-9)

    def test_turn_rate(self):
        p = VehicleParams()
        # omega = power_to_speed * (r - l) / separation, here 0.0075*40/0.12 = 2.5 rad/s.
        pose = step_vehicle(Pose(1.0, 1.0, 0.0), 80, 120, 0.1, p)
        assert pose.heading == pytest.approx(math.degrees(0.25), abs=1e-9)

    def test_time_additivity(self):
        p = VehicleParams()
        rng = random.Random(42)
        for _ in range(300):
            pose = Pose(rng.uniform(0.2, 1.8), rng.uniform(0.2, 1.8), rng.uniform(0, 360))
            left, right = rng.uniform(0, 255), rng.uniform(0, 255)
            dt = rng.uniform(0.001, 0.2)
            whole = step_vehicle(pose, left, right, dt, p)
            half = step_vehicle(step_vehicle(pose, left, right, dt / 2, p),
                                left, right, dt / 2, p)
            assert whole.x == pytest.approx(half.x, abs=1e-9)
            assert whole.y == pytest.approx(half.y, abs=1e-9)
            assert math.cos(math.radians(whole.heading)) == pytest.approx(
                math.cos(math.radians(half.heading)), abs=1e-9)
            assert math.sin(math.radians(whole.heading)) == pytest.approx(
                math.sin(math.radians(half.heading)), abs=1e-9)

    def test_mirror_symmetry(self):
        p = VehicleParams()
        rng = random.Random(3)
        for _ in range(200):
            left, right = rng.uniform(0, 255), rng.uniform(0, 255)
            dt = rng.uniform(0.01, 0.2)
            a = step_vehicle(Pose(1.0, 1.0, 90.0), left, right, dt, p)
            b = step_vehicle(Pose(1.0, 1.0, 90.0), right, left, dt, p)
            # Swapping wheels mirrors the motion about the heading axis.
            assert a.y == pytest.approx(b.y, abs=1e-9)
            assert a.x == pytest.approx(2.0 - b.x, abs=1e-9)

    def test_powers_clamped(self):
        p = VehicleParams()
        a = step_vehicle(Pose(1.0, 1.0, 0.0), -50.0, 300.0, 0.1, p)
        b = step_vehicle(Pose(1.0, 1.0, 0.0), 0.0, 255.0, 0.1, p)
        assert (a.x, a.y, a.heading) == (b.x, b.y, b.heading)

    def test_spin_in_place(self):
        p = VehicleParams()
        pose = step_vehicle(Pose(1.0, 1.0, 0.0), 0.0, 0.0, 1.0, p)
        assert (pose.x, pose.y) == (1.0, 1.0)

    def test_exact_quarter_turn_arc(self):
        # Construct powers that give v = r*omega with r = 0.5 m, then check
        # the quarter-circle endpoint analytically.
        p = VehicleParams()
        omega = 0.5  # rad/s
        v = 0.25
        diff = omega * p.wheel_separation / p.power_to_speed  # right - left
        total = 2.0 * v / p.power_to_speed  # left + right
        left, right = (total - diff) / 2.0, (total + diff) / 2.0
        dt = (math.pi / 2.0) / omega
        pose = step_vehicle(Pose(1.0, 1.0, 0.0), left, right, dt, p)
        assert pose.x == pytest.approx(1.5, abs=1e-9)
        assert pose.y == pytest.approx(1.5, abs=1e-9)
        assert pose.heading == pytest.approx(90.0, abs=1e-9)


class TestNormalizeHeading:
    def test_wraps(self):
        assert normalize_heading(370.0) == pytest.approx(10.0)
        assert normalize_heading(-10.0) == pytest.approx(350.0)
        assert normalize_heading(360.0) == 0.0
        assert normalize_heading(0.0) == 0.0
