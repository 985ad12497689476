"""Datagram codec and the deterministic lossy channel between sensors and vehicle.

The wire format is six semicolon-separated decimal fields,
"left;right;confidence;P;I;D", in UTF-8 text.  The third field rides under
the name "error" on the sensor side but the receiver treats it as the
confidence; it is one quantity.
"""

import heapq
import itertools
import math
import random
from dataclasses import dataclass


class MalformedDatagram(ValueError):
    """Datagram text that does not parse into six numeric fields."""


@dataclass(frozen=True)
class SteeringCommand:
    """One sensor's steering vote plus its controller terms."""

    left: float
    right: float
    confidence: float
    p: float = 0.0
    i: float = 0.0
    d: float = 0.0

    @classmethod
    def zero(cls):
        return cls(0, 0, 0, 0, 0, 0)

    def is_zero_report(self) -> bool:
        return (self.left == 0 and self.right == 0 and self.confidence == 0
                and self.p == 0 and self.i == 0 and self.d == 0)


def _format_field(value) -> str:
    # Integers drop the decimal point; floats keep shortest round-trip form.
    if isinstance(value, int):
        return str(value)
    if math.isfinite(value) and value == int(value):
        return str(int(value))
    return repr(float(value))


def encode_command(cmd: SteeringCommand) -> str:
    """Render a command as datagram text, fields in wire order."""
    fields = (cmd.left, cmd.right, cmd.confidence, cmd.p, cmd.i, cmd.d)
    for f in fields:
        if not math.isfinite(f):
            raise ValueError("command fields must be finite")
    return ";".join(_format_field(f) for f in fields)


def decode_command(text) -> SteeringCommand:
    """Parse datagram text; raises MalformedDatagram on anything unparseable."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDatagram(str(exc)) from None
    parts = text.split(";")
    if len(parts) != 6:
        raise MalformedDatagram(f"expected 6 fields, got {len(parts)}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise MalformedDatagram(f"non-numeric field in {text!r}") from None
    return SteeringCommand(*values)


@dataclass(frozen=True)
class ChannelModel:
    """Loss and delay parameters for one sensor's path to the vehicle.

    delay is either a fixed value in seconds or a (low, high) uniform range.
    """

    loss_probability: float = 0.0
    delay: object = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ValueError("loss_probability must be in [0, 1]")
        lo, hi = self.delay_range()
        if lo < 0.0 or hi < lo:
            raise ValueError("delay must be non-negative")

    def delay_range(self):
        if isinstance(self.delay, (tuple, list)):
            lo, hi = self.delay
            return float(lo), float(hi)
        return float(self.delay), float(self.delay)


class SimulatedChannel:
    """Deterministic datagram queue with seeded loss and delay.

    A shared sequence counter may be passed in so that deliveries from
    several channels interleave in a stable global send order when delivery
    times tie.
    """

    def __init__(self, model: ChannelModel, seq=None):
        self.model = model
        self._rng = random.Random(model.seed)
        self._heap = []
        self._seq = seq if seq is not None else itertools.count().__next__

    def send(self, source_id, datagram: str, now: float):
        if self._rng.random() < self.model.loss_probability:
            return
        lo, hi = self.model.delay_range()
        delay = lo if lo == hi else self._rng.uniform(lo, hi)
        heapq.heappush(self._heap, (now + delay, self._seq(), source_id, datagram))

    def poll(self, now: float):
        """Datagrams whose delivery time has arrived, in delivery order."""
        out = []
        while self._heap and self._heap[0][0] <= now + 1e-12:
            _, _, source_id, datagram = heapq.heappop(self._heap)
            out.append((source_id, datagram))
        return out

    def pending(self) -> int:
        return len(self._heap)


def merge_deliveries(channels, now: float):
    """Poll several channels and interleave their deliveries.

    Channels must share a sequence counter; the merge re-sorts by the
    (delivery time, sequence) key each channel's heap was ordered by.
    """
    tagged = []
    for ch in channels:
        while ch._heap and ch._heap[0][0] <= now + 1e-12:
            tagged.append(heapq.heappop(ch._heap))
    tagged.sort()
    return [(src, datagram) for _, _, src, datagram in tagged]
