"""Board geometry, track centerline, and differential-drive kinematics.

The board is a square with the origin in the lower-left corner, x to the
right, y up, headings in degrees counterclockwise from +x.  A track is a
closed loop of straight and arc segments; the vehicle follows its centerline.
"""

import math
from dataclasses import dataclass, field

import numpy as np


class ConfigError(ValueError):
    """A scenario or track description that cannot be built."""


def normalize_heading(deg: float) -> float:
    """Wrap an angle in degrees into [0, 360)."""
    h = math.fmod(deg, 360.0)
    if h < 0.0:
        h += 360.0
    return 0.0 if h == 360.0 else h


@dataclass
class Pose:
    """Vehicle position (m) and heading (deg, ccw from +x, wrapped to [0, 360))."""

    x: float
    y: float
    heading: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("pose coordinates must be finite")
        self.heading = normalize_heading(self.heading)


@dataclass(frozen=True)
class Straight:
    """Directed line segment of a track loop."""

    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def length(self) -> float:
        return math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def start(self):
        return (self.x0, self.y0)

    @property
    def end(self):
        return (self.x1, self.y1)

    def point_at(self, s: float):
        t = s / self.length
        return (self.x0 + t * (self.x1 - self.x0), self.y0 + t * (self.y1 - self.y0))

    def tangent_at(self, s: float) -> float:
        return normalize_heading(math.degrees(math.atan2(self.y1 - self.y0, self.x1 - self.x0)))

    def closest(self, px: float, py: float):
        """Distance to the segment plus the foot point and tangent there."""
        dx, dy = self.x1 - self.x0, self.y1 - self.y0
        ll = dx * dx + dy * dy
        t = ((px - self.x0) * dx + (py - self.y0) * dy) / ll
        t = min(1.0, max(0.0, t))
        cx, cy = self.x0 + t * dx, self.y0 + t * dy
        return math.hypot(px - cx, py - cy), cx, cy, self.tangent_at(0.0)


@dataclass(frozen=True)
class Arc:
    """Circular arc; sweep_deg > 0 runs counterclockwise."""

    cx: float
    cy: float
    radius: float
    start_deg: float
    sweep_deg: float

    @property
    def length(self) -> float:
        return abs(math.radians(self.sweep_deg)) * self.radius

    def _point_at_angle(self, a_deg: float):
        a = math.radians(a_deg)
        return (self.cx + self.radius * math.cos(a), self.cy + self.radius * math.sin(a))

    @property
    def start(self):
        return self._point_at_angle(self.start_deg)

    @property
    def end(self):
        return self._point_at_angle(self.start_deg + self.sweep_deg)

    def _tangent_at_angle(self, a_deg: float) -> float:
        return normalize_heading(a_deg + math.copysign(90.0, self.sweep_deg))

    def point_at(self, s: float):
        a = self.start_deg + self.sweep_deg * (s / self.length)
        return self._point_at_angle(a)

    def tangent_at(self, s: float) -> float:
        a = self.start_deg + self.sweep_deg * (s / self.length)
        return self._tangent_at_angle(a)

    def closest(self, px: float, py: float):
        vx, vy = px - self.cx, py - self.cy
        r = math.hypot(vx, vy)
        if r < 1e-12:
            # Center of the arc: every point is equidistant, use the midpoint.
            mid = self.start_deg + 0.5 * self.sweep_deg
            cx, cy = self._point_at_angle(mid)
            return self.radius, cx, cy, self._tangent_at_angle(mid)
        phi = math.degrees(math.atan2(vy, vx))
        if self.sweep_deg >= 0.0:
            delta = normalize_heading(phi - self.start_deg)
            inside = delta <= self.sweep_deg
        else:
            delta = normalize_heading(self.start_deg - phi)
            inside = delta <= -self.sweep_deg
        if inside:
            cx, cy = self._point_at_angle(phi)
            return abs(r - self.radius), cx, cy, self._tangent_at_angle(phi)
        d0 = math.hypot(px - self.start[0], py - self.start[1])
        d1 = math.hypot(px - self.end[0], py - self.end[1])
        if d0 <= d1:
            return d0, self.start[0], self.start[1], self._tangent_at_angle(self.start_deg)
        end_a = self.start_deg + self.sweep_deg
        return d1, self.end[0], self.end[1], self._tangent_at_angle(end_a)


_SAMPLE_STEP = 0.002  # m between cached centerline samples


@dataclass
class Track:
    """Closed loop of segments on the board, with a cached dense sampling."""

    segments: list
    board_size: float = 2.0
    line_width: float = 0.02
    _samples: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.segments:
            raise ConfigError("track has no segments")
        for i, seg in enumerate(self.segments):
            if seg.length <= 0.0:
                raise ConfigError(f"segment {i} has non-positive length")
            nxt = self.segments[(i + 1) % len(self.segments)]
            gap = math.hypot(seg.end[0] - nxt.start[0], seg.end[1] - nxt.start[1])
            if gap > 1e-9:
                raise ConfigError(
                    f"loop does not close: segment {i} ends {gap:.3g} m away from "
                    f"segment {(i + 1) % len(self.segments)}"
                )
        for i, seg in enumerate(self.segments):
            for px, py in _segment_extremes(seg):
                if not (0.0 <= px <= self.board_size and 0.0 <= py <= self.board_size):
                    raise ConfigError(
                        f"segment {i} leaves the board at ({px:.3f}, {py:.3f})"
                    )
        self._lengths = [seg.length for seg in self.segments]
        self._cum = np.concatenate([[0.0], np.cumsum(self._lengths)])
        self.total_length = float(self._cum[-1])

    def point_at(self, s: float):
        """Centerline point and tangent (deg) at arclength s, wrapped."""
        s = math.fmod(s, self.total_length)
        if s < 0.0:
            s += self.total_length
        i = int(np.searchsorted(self._cum, s, side="right")) - 1
        i = min(i, len(self.segments) - 1)
        local = float(s - self._cum[i])
        seg = self.segments[i]
        x, y = seg.point_at(local)
        return float(x), float(y), seg.tangent_at(local)

    def closest(self, px: float, py: float):
        """Signed lateral deviation plus foot point and tangent there.

        Positive deviation means the point lies to the left of the track
        direction.  Ties between segments go to the lower index.
        """
        best = None
        for seg in self.segments:
            d, cx, cy, tan = seg.closest(px, py)
            if best is None or d < best[0] - 1e-15:
                best = (d, cx, cy, tan)
        d, cx, cy, tan = best
        t = math.radians(tan)
        cross = math.cos(t) * (py - cy) - math.sin(t) * (px - cx)
        return math.copysign(d, cross) if d > 0.0 else 0.0, cx, cy, tan

    def samples(self):
        """Dense centerline sampling: points (N,2), tangents (N,), step (m)."""
        if self._samples is None:
            n = max(8, int(round(self.total_length / _SAMPLE_STEP)))
            step = self.total_length / n
            pts = np.empty((n, 2))
            tans = np.empty(n)
            for k in range(n):
                x, y, t = self.point_at(k * step)
                pts[k, 0], pts[k, 1], tans[k] = x, y, t
            self._samples = (pts, tans, step)
        return self._samples


def _segment_extremes(seg):
    """Points where a segment can touch its bounding box."""
    pts = [seg.start, seg.end]
    if isinstance(seg, Arc):
        for axis_deg in (0.0, 90.0, 180.0, 270.0):
            if seg.sweep_deg >= 0.0:
                inside = normalize_heading(axis_deg - seg.start_deg) <= seg.sweep_deg
            else:
                inside = normalize_heading(seg.start_deg - axis_deg) <= -seg.sweep_deg
            if inside:
                a = math.radians(axis_deg)
                pts.append((seg.cx + seg.radius * math.cos(a), seg.cy + seg.radius * math.sin(a)))
    return pts


def lateral_deviation(track: Track, pose: Pose) -> float:
    """Signed distance from the pose to the track centerline (+ is left)."""
    return track.closest(pose.x, pose.y)[0]


def rounded_rectangle_segments(center, straight: float, corner_radius: float):
    """Counterclockwise loop of four straights joined by quarter arcs."""
    cx, cy = center
    a = straight / 2.0
    r = corner_radius
    return [
        Straight(cx - a, cy - a - r, cx + a, cy - a - r),
        Arc(cx + a, cy - a, r, 270.0, 90.0),
        Straight(cx + a + r, cy - a, cx + a + r, cy + a),
        Arc(cx + a, cy + a, r, 0.0, 90.0),
        Straight(cx + a, cy + a + r, cx - a, cy + a + r),
        Arc(cx - a, cy + a, r, 90.0, 90.0),
        Straight(cx - a - r, cy + a, cx - a - r, cy - a),
        Arc(cx - a, cy - a, r, 180.0, 90.0),
    ]


def track_from_config(cfg: dict) -> Track:
    """Build a Track from a plain-dict description.

    Supported kinds: "rounded_rectangle" (center, straight, corner_radius),
    "circle" (center, radius), and "segments" (explicit list of straight and
    arc items).  Raises ConfigError on unknown kinds or geometry that does
    not close or leaves the board.
    """
    if not isinstance(cfg, dict):
        raise ConfigError("track must be a mapping")
    cfg = dict(cfg)
    kind = cfg.pop("kind", None)
    board = float(cfg.pop("board_size", 2.0))
    width = float(cfg.pop("line_width", 0.02))
    if kind == "rounded_rectangle":
        center = tuple(cfg.pop("center", (board / 2.0, board / 2.0)))
        straight = float(cfg.pop("straight", 1.0))
        radius = float(cfg.pop("corner_radius", 0.3))
        _reject_unknown(cfg, "track")
        if straight <= 0.0 or radius <= 0.0:
            raise ConfigError("rounded_rectangle needs positive straight and corner_radius")
        segs = rounded_rectangle_segments(center, straight, radius)
    elif kind == "circle":
        center = tuple(cfg.pop("center", (board / 2.0, board / 2.0)))
        radius = float(cfg.pop("radius", 0.5))
        _reject_unknown(cfg, "track")
        if radius <= 0.0:
            raise ConfigError("circle needs a positive radius")
        segs = [Arc(center[0], center[1], radius, 0.0, 360.0)]
    elif kind == "segments":
        items = cfg.pop("segments", None)
        _reject_unknown(cfg, "track")
        if not items:
            raise ConfigError("segments track needs a non-empty segments list")
        segs = []
        for i, item in enumerate(items):
            item = dict(item)
            stype = item.pop("type", None)
            if stype == "straight":
                x0, y0 = item.pop("start")
                x1, y1 = item.pop("end")
                segs.append(Straight(float(x0), float(y0), float(x1), float(y1)))
            elif stype == "arc":
                ax, ay = item.pop("center")
                segs.append(
                    Arc(
                        float(ax),
                        float(ay),
                        float(item.pop("radius")),
                        float(item.pop("start_deg")),
                        float(item.pop("sweep_deg")),
                    )
                )
            else:
                raise ConfigError(f"segment {i} has unknown type {stype!r}")
            _reject_unknown(item, f"track.segments[{i}]")
    elif kind is None:
        raise ConfigError("track needs a kind")
    else:
        raise ConfigError(f"unknown track kind {kind!r}")
    return Track(segs, board_size=board, line_width=width)


def _reject_unknown(leftover: dict, where: str):
    if leftover:
        key = sorted(leftover)[0]
        raise ConfigError(f"unknown key in {where}: {key}")


@dataclass(frozen=True)
class VehicleParams:
    """Differential-drive parameters.

    power_to_speed converts one wheel's power value to track speed in m/s, so
    the defaults give 0.25 m/s at the nominal straight-line power of 100/3.
    """

    wheel_separation: float = 0.12
    power_to_speed: float = 0.0075
    max_power: float = 255.0
    nominal_power: float = 100.0 / 3.0

    @property
    def nominal_speed(self) -> float:
        return self.power_to_speed * self.nominal_power


def step_vehicle(pose: Pose, left: float, right: float, dt: float, params: VehicleParams) -> Pose:
    """Advance the vehicle by dt seconds under constant wheel powers.

    Powers clamp to [0, max_power].  The step integrates the exact circular
    arc, so splitting dt into sub-steps changes nothing.
    """
    left = min(params.max_power, max(0.0, left))
    right = min(params.max_power, max(0.0, right))
    v = params.power_to_speed * (left + right) / 2.0
    omega = params.power_to_speed * (right - left) / params.wheel_separation
    theta0 = math.radians(pose.heading)
    if abs(omega) < 1e-12:
        x = pose.x + v * dt * math.cos(theta0)
        y = pose.y + v * dt * math.sin(theta0)
        return Pose(x, y, pose.heading)
    theta1 = theta0 + omega * dt
    radius = v / omega
    x = pose.x + radius * (math.sin(theta1) - math.sin(theta0))
    y = pose.y + radius * (math.cos(theta0) - math.cos(theta1))
    return Pose(x, y, math.degrees(theta1))
