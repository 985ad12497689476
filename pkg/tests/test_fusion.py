"""Registry scaling, fusion policies, and drive-log formatting."""

import random

import pytest

from fusedrive.fusion import (
    CONFIDENCE_WEIGHTED,
    DRIVE_LOG_HEADER,
    MAXIMUM_CONFIDENCE,
    POLICIES,
    SIMPLE_AVERAGE,
    SourceRegistry,
    VehicleNode,
    drive_tick,
    fuse_max,
    fuse_simple_avg,
    fuse_weighted,
    max_confidence_source,
)
from fusedrive.wire import SteeringCommand

from oracles import oracle_fuse

_FUSE_FNS = {
    MAXIMUM_CONFIDENCE: fuse_max,
    SIMPLE_AVERAGE: fuse_simple_avg,
    CONFIDENCE_WEIGHTED: fuse_weighted,
}


def random_registry(rng):
    n = rng.randint(1, 3)
    reg = SourceRegistry([f"s{i}" for i in range(n)])
    for sid in reg.order:
        if rng.random() < 0.2:
            cmd = SteeringCommand.zero()
        else:
            conf = 0.0 if rng.random() < 0.25 else rng.uniform(0.0, 120.0)
            cmd = SteeringCommand(rng.uniform(-30.0, 300.0),
                                  rng.uniform(-30.0, 300.0),
                                  conf, 0.0, 0.0, 0.0)
        reg.ingest(sid, cmd)
    return reg


class TestIngest:
    def test_third_scaling(self):
        reg = SourceRegistry(["pi"])
        reg.ingest("pi", SteeringCommand(100, 100, 100, 5, 2, 1))
        stored = reg.slots["pi"].command
        assert stored.left == pytest.approx(100 / 3.0, abs=1e-12)
        assert stored.right == pytest.approx(100 / 3.0, abs=1e-12)
        assert stored.confidence == pytest.approx(100 / 3.0, abs=1e-12)
        # controller terms ride through unscaled
        assert (stored.p, stored.i, stored.d) == (5, 2, 1)

    def test_scaling_example(self):
        reg = SourceRegistry(["pi"])
        reg.ingest("pi", SteeringCommand(90, 110, 60))
        stored = reg.slots["pi"].command
        assert stored.left == pytest.approx(30.0)
        assert stored.right == pytest.approx(110 / 3.0)
        assert stored.confidence == pytest.approx(20.0)

    def test_zero_report_parks_source(self):
        reg = SourceRegistry(["pi"])
        reg.ingest("pi", SteeringCommand(90, 110, 60))
        assert reg.slots["pi"].active
        reg.ingest("pi", SteeringCommand.zero())
        assert not reg.slots["pi"].active
        assert reg.slots["pi"].command.is_zero_report()

    def test_negative_powers_park_source(self):
        reg = SourceRegistry(["pi"])
        reg.ingest("pi", SteeringCommand(-30, -30, 60))
        assert not reg.slots["pi"].active
        assert reg.slots["pi"].command.is_zero_report()
        # but the verbatim (scaled) report is kept for the log
        assert reg.slots["pi"].report.left == pytest.approx(-10.0)

    def test_unknown_source_ignored(self):
        reg = SourceRegistry(["pi"])
        reg.ingest("ghost", SteeringCommand(90, 110, 60))
        assert not reg.slots["pi"].active

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError):
            SourceRegistry(["pi", "pi"])


class TestPolicies:
    def test_against_oracle(self):
        rng = random.Random(2024)
        for _ in range(10000):
            reg = random_registry(rng)
            stored = [(c.left, c.right, c.confidence) for c in reg.commands()]
            for policy in POLICIES:
                got = _FUSE_FNS[policy](reg)
                want = oracle_fuse(stored, policy)
                if want is None:
                    assert got is None, (policy, stored)
                else:
                    assert got == pytest.approx(want, abs=1e-9), (policy, stored)

    def test_max_later_source_wins_ties(self):
        reg = SourceRegistry(["a", "b"])
        reg.ingest("a", SteeringCommand(90, 30, 60))
        reg.ingest("b", SteeringCommand(30, 90, 60))
        assert max_confidence_source(reg) == 1
        assert fuse_max(reg) == pytest.approx((10.0, 30.0))

    def test_max_returns_a_stored_command(self):
        rng = random.Random(5)
        for _ in range(2000):
            reg = random_registry(rng)
            fused = fuse_max(reg)
            if fused is None:
                continue
            stored = [(c.left, c.right) for c in reg.commands()]
            assert fused in stored

    def test_weighted_stays_in_hull(self):
        rng = random.Random(6)
        for _ in range(2000):
            reg = random_registry(rng)
            fused = fuse_weighted(reg)
            if fused is None:
                continue
            weighted = [c for c in reg.commands() if c.confidence > 0]
            lo = min(c.left for c in weighted)
            hi = max(c.left for c in weighted)
            assert lo - 1e-9 <= fused[0] <= hi + 1e-9

    def test_weighted_confidence_scale_invariant(self):
        reg = SourceRegistry(["a", "b"])
        reg.ingest("a", SteeringCommand(90, 30, 60))
        reg.ingest("b", SteeringCommand(30, 90, 30))
        base = fuse_weighted(reg)
        reg2 = SourceRegistry(["a", "b"])
        reg2.ingest("a", SteeringCommand(90, 30, 6))
        reg2.ingest("b", SteeringCommand(30, 90, 3))
        assert fuse_weighted(reg2) == pytest.approx(base, abs=1e-9)

    def test_simple_average_spreads_confident_free_power(self):
        # one confident source plus one that commands power at zero
        # confidence: the sum spreads over the single confident source
        reg = SourceRegistry(["a", "b"])
        reg.ingest("a", SteeringCommand(90, 90, 30))
        reg.ingest("b", SteeringCommand(180, 0, 0))
        assert fuse_simple_avg(reg) == pytest.approx((90.0, 30.0))

    def test_all_zero_confidence_is_degenerate(self):
        reg = SourceRegistry(["a"])
        reg.ingest("a", SteeringCommand(90, 90, 0))
        assert fuse_max(reg) is None
        assert fuse_weighted(reg) is None
        # simple average still counts zero-conf sources out
        assert fuse_simple_avg(reg) is None


class TestDriveTick:
    def test_truncates_and_clamps(self):
        reg = SourceRegistry(["a"])
        reg.ingest("a", SteeringCommand(90, 110, 60))
        powers, degenerate = drive_tick(reg, MAXIMUM_CONFIDENCE, (0, 0))
        assert powers == (30, 36) and not degenerate

        reg.ingest("a", SteeringCommand(3000, 3000, 60))
        powers, _ = drive_tick(reg, MAXIMUM_CONFIDENCE, (0, 0))
        assert powers == (255, 255)

        reg.ingest("a", SteeringCommand(-15, 30, 9))
        powers, _ = drive_tick(reg, MAXIMUM_CONFIDENCE, (0, 0))
        assert powers == (0, 10)

    def test_degenerate_holds_previous(self):
        reg = SourceRegistry(["a"])
        reg.ingest("a", SteeringCommand(90, 90, 0))
        powers, degenerate = drive_tick(reg, CONFIDENCE_WEIGHTED, (77, 33))
        assert degenerate and powers == (77, 33)


class TestVehicleNode:
    def test_header_columns(self):
        assert DRIVE_LOG_HEADER.split(",") == [
            "time", "left", "right",
            "piLeft", "piRight", "piConf", "piP", "piI", "piD",
            "cam0Left", "cam0Right", "cam0Conf", "cam0P", "cam0I", "cam0D",
            "cam1Left", "cam1Right", "cam1Conf", "cam1P", "cam1I", "cam1D",
        ]

    def test_starts_stopped(self):
        node = VehicleNode(["pi"], MAXIMUM_CONFIDENCE)
        assert node.applied == (0, 0)

    def test_row_format(self):
        node = VehicleNode(["pi"], MAXIMUM_CONFIDENCE,
                           slot_ids=("pi", None, None))
        node.handle_datagram("pi", "90;110;60;10;3.5;-2", 0.005)
        assert node.rows == [
            "0.005000,30,36,30," + repr(110 / 3.0) + ",20,10,3.5,-2"
            + ",0,0,0,0,0,0,0,0,0,0,0,0"
        ]

    def test_degenerate_row_marked(self):
        node = VehicleNode(["pi"], CONFIDENCE_WEIGHTED)
        node.handle_datagram("pi", "0;0;0;0;0;0", 0.1)
        assert node.applied == (0, 0)
        assert node.rows[-1].endswith(",-1")

    def test_degenerate_keeps_powers(self):
        node = VehicleNode(["pi"], CONFIDENCE_WEIGHTED)
        node.handle_datagram("pi", "90;110;60;0;0;0", 0.1)
        assert node.applied == (30, 36)
        node.handle_datagram("pi", "0;0;0;0;0;0", 0.2)
        assert node.applied == (30, 36)
        assert node.rows[-1].endswith(",-1")

    def test_malformed_datagram_degenerate_row(self):
        node = VehicleNode(["pi"], MAXIMUM_CONFIDENCE)
        node.handle_datagram("pi", "90;110;60;0;0;0", 0.1)
        node.handle_datagram("pi", "not;a;datagram", 0.2)
        assert node.applied == (30, 36)
        assert node.rows[-1].endswith(",-1")
        # the stored report is untouched by the malformed datagram
        assert node.registry.slots["pi"].report.left == pytest.approx(30.0)

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError):
            VehicleNode(["pi"], "median")
