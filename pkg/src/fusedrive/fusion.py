"""Vehicle-control node: command registry, fusion policies, and the drive log.

The node keeps the latest scaled command per source and re-fuses on every
datagram it receives.  Raw powers divide by 3.0 on ingest so full commanded
power maps to about a third of the motor range.  When fusion degenerates
(nobody confident, nobody active) the node holds the last applied powers and
marks the log row with a trailing -1, instead of stopping the vehicle.
"""

import logging
from dataclasses import dataclass, field

from .wire import MalformedDatagram, SteeringCommand, decode_command

log = logging.getLogger(__name__)

MAXIMUM_CONFIDENCE = "maximum_confidence"
SIMPLE_AVERAGE = "simple_average"
CONFIDENCE_WEIGHTED = "confidence_weighted"
POLICIES = (MAXIMUM_CONFIDENCE, SIMPLE_AVERAGE, CONFIDENCE_WEIGHTED)

DRIVE_LOG_HEADER = (
    "time,left,right,"
    "piLeft,piRight,piConf,piP,piI,piD,"
    "cam0Left,cam0Right,cam0Conf,cam0P,cam0I,cam0D,"
    "cam1Left,cam1Right,cam1Conf,cam1P,cam1I,cam1D"
)


@dataclass
class SourceSlot:
    """Latest state for one source: fusion view and verbatim log view."""

    command: SteeringCommand = field(default_factory=SteeringCommand.zero)
    report: SteeringCommand = field(default_factory=SteeringCommand.zero)
    active: bool = False


class SourceRegistry:
    """Ordered per-source command store; order fixes the max tie-break."""

    def __init__(self, source_ids):
        self.order = list(source_ids)
        if len(set(self.order)) != len(self.order):
            raise ValueError("duplicate source ids")
        self.slots = {sid: SourceSlot() for sid in self.order}

    def ingest(self, source_id, cmd: SteeringCommand):
        """Store a decoded command, scaling powers and confidence by 1/3.

        A source is active only while it commands positive power; anything
        else (zero-reports included) parks it inactive on the zero command.
        Unknown sources are logged and ignored.
        """
        slot = self.slots.get(source_id)
        if slot is None:
            log.warning("ignoring datagram from unknown source %r", source_id)
            return
        scaled = SteeringCommand(cmd.left / 3.0, cmd.right / 3.0,
                                 cmd.confidence / 3.0, cmd.p, cmd.i, cmd.d)
        slot.report = scaled
        if scaled.left > 0 or scaled.right > 0:
            slot.command = scaled
            slot.active = True
        else:
            slot.command = SteeringCommand.zero()
            slot.active = False

    def commands(self):
        return [self.slots[sid].command for sid in self.order]

    def any_active(self) -> bool:
        return any(self.slots[sid].active for sid in self.order)


def max_confidence_source(registry: SourceRegistry):
    """Index of the highest-confidence source; later sources win ties."""
    best = None
    best_conf = None
    for idx, cmd in enumerate(registry.commands()):
        if best_conf is None or cmd.confidence >= best_conf:
            best, best_conf = idx, cmd.confidence
    return best


def fuse_max(registry: SourceRegistry):
    """Adopt the command of the most confident source outright.

    Returns None when every stored confidence is zero (nothing to trust).
    """
    cmds = registry.commands()
    if not cmds or all(c.confidence == 0 for c in cmds):
        return None
    chosen = cmds[max_confidence_source(registry)]
    return chosen.left, chosen.right


def fuse_simple_avg(registry: SourceRegistry):
    """Average the stored commands over the sources that report confidence.

    The numerator sums every stored command (inactive ones are zero) while
    the denominator counts only sources with nonzero confidence, so a
    confident-free source inflates nothing but a zero-confidence positive
    command is spread over the others.  Returns None when no source reports
    confidence.
    """
    cmds = registry.commands()
    count = sum(1 for c in cmds if c.confidence != 0)
    if count == 0:
        return None
    left = sum(c.left for c in cmds) / count
    right = sum(c.right for c in cmds) / count
    return left, right


def fuse_weighted(registry: SourceRegistry):
    """Confidence-weighted average of the stored commands.

    Returns None when the confidences sum to zero.
    """
    cmds = registry.commands()
    total = sum(c.confidence for c in cmds)
    if total == 0:
        return None
    left = sum(c.confidence * c.left for c in cmds) / total
    right = sum(c.confidence * c.right for c in cmds) / total
    return left, right


_POLICY_FNS = {
    MAXIMUM_CONFIDENCE: fuse_max,
    SIMPLE_AVERAGE: fuse_simple_avg,
    CONFIDENCE_WEIGHTED: fuse_weighted,
}


def drive_tick(registry: SourceRegistry, policy: str, previous):
    """Fuse the registry into applied motor powers.

    Returns ((left, right), degenerate).  Fused powers truncate to integers
    and clamp to the motor range [0, 255]; a degenerate fusion holds the
    previous powers.
    """
    fused = _POLICY_FNS[policy](registry)
    if fused is None:
        return previous, True
    left = min(255, max(0, int(fused[0])))
    right = min(255, max(0, int(fused[1])))
    return (left, right), False


def _fmt(value) -> str:
    if isinstance(value, int):
        return str(value)
    if value == int(value):
        return str(int(value))
    return repr(float(value))


class VehicleNode:
    """Receives datagrams, fuses them, and keeps the drive log.

    slot_ids maps the three log column groups (pi, cam0, cam1) to source
    ids; missing slots stay all-zero in the log.
    """

    def __init__(self, source_ids, policy: str, slot_ids=None):
        if policy not in _POLICY_FNS:
            raise ValueError(f"unknown fusion policy {policy!r}")
        self.registry = SourceRegistry(source_ids)
        self.policy = policy
        self.applied = (0, 0)
        self.rows = []
        if slot_ids is None:
            slot_ids = (list(source_ids) + [None, None, None])[:3]
        self.slot_ids = slot_ids

    def handle_datagram(self, source_id, datagram, now: float):
        """Ingest one datagram and apply fused powers; logs one row.

        Malformed datagrams keep the previous powers and log a degenerate
        row, mirroring a catch-all receive loop that never stops the motors.
        """
        try:
            cmd = decode_command(datagram)
        except MalformedDatagram as exc:
            log.warning("dropping malformed datagram from %r: %s", source_id, exc)
            self._log_row(now, degenerate=True)
            return self.applied
        self.registry.ingest(source_id, cmd)
        self.applied, degenerate = drive_tick(self.registry, self.policy, self.applied)
        self._log_row(now, degenerate)
        return self.applied

    def _log_row(self, now: float, degenerate: bool):
        parts = [f"{now:.6f}", str(self.applied[0]), str(self.applied[1])]
        for sid in self.slot_ids:
            if sid is None or sid not in self.registry.slots:
                parts.extend(["0"] * 6)
                continue
            r = self.registry.slots[sid].report
            parts.extend(_fmt(v) for v in (r.left, r.right, r.confidence, r.p, r.i, r.d))
        row = ",".join(parts)
        if degenerate:
            row += ",-1"
        self.rows.append(row)
