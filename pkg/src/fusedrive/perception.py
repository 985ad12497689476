"""Virtual camera observations and the angle math that turns them into errors.

Two camera kinds exist.  The on-vehicle camera sees a short strip of board
directly ahead and reports only how far the line center sits from the image
center column.  Overhead infrastructure cameras look straight down at part of
the board, find the two coloured heading markers on the vehicle roof plus a
square look-ahead window of line around the point in front of the vehicle,
and derive the vehicle angle, the line angle, and the angular offset to the
line from pixel coordinates alone.

Image coordinates are y-down, so projecting from the y-up board flips y.
"""

import math
from dataclasses import dataclass

import numpy as np

ONBOARD = "onboard"
INFRASTRUCTURE = "infrastructure"

# Pixels kept clear between the coverage area and the image border so that
# jittered centers still land inside the frame.
_EDGE_MARGIN_PX = 5.0


@dataclass(frozen=True)
class MarkerLayout:
    """Roof marker geometry: green marker at the rear, orange at the front."""

    separation: float = 0.10  # green center to orange center (m)
    body_radius: float = 0.06  # line hidden under the chassis (m)


@dataclass(frozen=True)
class CameraModel:
    """One camera's imaging geometry.

    For an infrastructure camera, coverage is the board rectangle
    (x0, y0, x1, y1) it can see and crop_size is the half-size in pixels of
    the look-ahead window.  For the on-vehicle camera, coverage is unused,
    look_ahead is the board distance from vehicle center to the near edge of
    the imaged strip, and crop_size is the strip depth in pixel rows.
    """

    kind: str
    pixels_per_meter: float
    image_width: int = 320
    image_height: int = 240
    crop_size: int = 80
    coverage: tuple = None
    look_ahead: float = 0.06
    noise_px: float = 2.0

    def __post_init__(self):
        if self.kind not in (ONBOARD, INFRASTRUCTURE):
            raise ValueError(f"unknown camera kind {self.kind!r}")
        if self.crop_size * 2 >= min(self.image_width, self.image_height):
            raise ValueError("crop window must fit inside the image")
        if self.kind == INFRASTRUCTURE:
            if self.coverage is None:
                raise ValueError("infrastructure camera needs a coverage rectangle")
            x0, y0, x1, y1 = self.coverage
            if not (x0 < x1 and y0 < y1):
                raise ValueError("coverage rectangle is empty")
            # The whole coverage area must project inside the frame.
            w_px = (x1 - x0) * self.pixels_per_meter
            h_px = (y1 - y0) * self.pixels_per_meter
            if w_px > self.image_width - 2 * _EDGE_MARGIN_PX or h_px > self.image_height - 2 * _EDGE_MARGIN_PX:
                raise ValueError("coverage rectangle does not fit in the image")

    def covers(self, x: float, y: float) -> bool:
        if self.coverage is None:
            return True
        x0, y0, x1, y1 = self.coverage
        return x0 <= x <= x1 and y0 <= y <= y1

    def to_pixel(self, x: float, y: float):
        """Project a board point to image pixels (y-down)."""
        x0, y0, x1, y1 = self.coverage
        mx, my = (x0 + x1) / 2.0, (y0 + y1) / 2.0
        px = self.image_width / 2.0 + (x - mx) * self.pixels_per_meter
        py = self.image_height / 2.0 - (y - my) * self.pixels_per_meter
        return px, py

    def window_half_m(self) -> float:
        return self.crop_size / self.pixels_per_meter


def onboard_camera(pixels_per_meter=2000.0, image_width=320, image_height=240,
                   crop_size=80, look_ahead=0.06, noise_px=2.0) -> CameraModel:
    return CameraModel(ONBOARD, pixels_per_meter, image_width, image_height,
                       crop_size, None, look_ahead, noise_px)


def infrastructure_camera(coverage, pixels_per_meter=300.0, image_width=1280,
                          image_height=720, crop_size=75, noise_px=2.0) -> CameraModel:
    return CameraModel(INFRASTRUCTURE, pixels_per_meter, image_width, image_height,
                       crop_size, tuple(coverage), 0.0, noise_px)


@dataclass(frozen=True)
class MarkerObservation:
    """Detected roof marker centers in image pixels."""

    green: tuple
    orange: tuple
    visible: bool


@dataclass(frozen=True)
class LineBoxObservation:
    """Bounding box of the detected line chunk, minAreaRect style.

    raw_angle is in [-90, 0]; together with width/height it encodes the line
    direction modulo 180 degrees.  visible_fraction compares the chunk length
    against a full view for confidence scaling.
    """

    center: tuple
    width: float
    height: float
    raw_angle: float
    visible_fraction: float

    @property
    def visible(self) -> bool:
        return self.visible_fraction > 0.0


_NO_MARKERS = MarkerObservation((0.0, 0.0), (0.0, 0.0), False)
_NO_LINE = LineBoxObservation((0.0, 0.0), 0.0, 0.0, 0.0, 0.0)


def fold_line_angle(direction_deg: float, long_px: float, short_px: float):
    """Fold a line direction into the box (width, height, raw_angle) encoding.

    direction_deg is the line direction modulo 180.  Directions at or below
    90 map to a landscape box with raw_angle = -direction; steeper ones to a
    portrait box with raw_angle = 90 - direction.
    """
    psi = math.fmod(direction_deg, 180.0)
    if psi < 0.0:
        psi += 180.0
    if psi <= 90.0:
        return long_px, short_px, -psi
    return short_px, long_px, 90.0 - psi


def _jitter(rng, noise_px):
    if rng is None or noise_px <= 0.0:
        return 0.0
    return rng.uniform(-noise_px, noise_px)


def _clamp(v, lo, hi):
    return min(hi, max(lo, v))


def _longest_run(mask: np.ndarray):
    """Longest circular run of True entries; returns index array or None."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return None
    if idx.size == mask.size:
        return idx
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[0], breaks + 1])
    ends = np.concatenate([breaks, [idx.size - 1]])
    runs = [idx[s:e + 1] for s, e in zip(starts, ends)]
    # The sampling is circular: a run touching the tail joins one at the head.
    if len(runs) > 1 and idx[0] == 0 and idx[-1] == mask.size - 1:
        runs[0] = np.concatenate([runs[-1], runs[0]])
        runs.pop()
    return max(runs, key=len)


def observe(camera: CameraModel, track, pose, layout: MarkerLayout = MarkerLayout(), rng=None):
    """Render one virtual frame: marker centers plus the line chunk box.

    The line chunk is the longest contiguous piece of centerline that falls
    inside the camera's look-ahead window, inside its coverage, and outside
    the vehicle footprint, mirroring a largest-black-region search.  Returns
    (MarkerObservation, LineBoxObservation); both come back invisible when
    the vehicle or the line is out of view.
    """
    pts, tans, step = track.samples()
    if camera.kind == ONBOARD:
        return _observe_onboard(camera, pts, tans, step, track.line_width, pose, layout, rng)
    return _observe_infrastructure(camera, pts, tans, step, track.line_width, pose, layout, rng)


def _observe_onboard(camera, pts, tans, step, line_width, pose, layout, rng):
    theta = math.radians(pose.heading)
    c, s = math.cos(theta), math.sin(theta)
    dx = pts[:, 0] - pose.x
    dy = pts[:, 1] - pose.y
    u = dx * c + dy * s  # forward (m)
    v = -dx * s + dy * c  # left (m)
    depth = camera.crop_size / camera.pixels_per_meter
    half_w = camera.image_width / (2.0 * camera.pixels_per_meter)
    mask = (
        (u >= camera.look_ahead)
        & (u <= camera.look_ahead + depth)
        & (np.abs(v) <= half_w)
        & (u * u + v * v > layout.body_radius ** 2)
    )
    run = _longest_run(mask)
    if run is None:
        return _NO_MARKERS, _NO_LINE
    length = run.size * step
    v_c = float(np.mean(v[run]))
    x_px = camera.image_width / 2.0 - v_c * camera.pixels_per_meter + _jitter(rng, camera.noise_px)
    x_px = _clamp(x_px, 0.0, float(camera.image_width))
    y_px = camera.crop_size / 2.0
    direction = tans[run[run.size // 2]] - pose.heading + 90.0
    w, h, raw = fold_line_angle(direction, length * camera.pixels_per_meter,
                                line_width * camera.pixels_per_meter)
    fraction = min(1.0, length / depth)
    return _NO_MARKERS, LineBoxObservation((x_px, y_px), w, h, raw, fraction)


def _observe_infrastructure(camera, pts, tans, step, line_width, pose, layout, rng):
    theta = math.radians(pose.heading)
    hx, hy = math.cos(theta), math.sin(theta)
    half = layout.separation / 2.0
    green_b = (pose.x - half * hx, pose.y - half * hy)
    orange_b = (pose.x + half * hx, pose.y + half * hy)
    if not (camera.covers(*green_b) and camera.covers(*orange_b)):
        return _NO_MARKERS, _NO_LINE
    gx, gy = camera.to_pixel(*green_b)
    ox, oy = camera.to_pixel(*orange_b)
    gx = _clamp(gx + _jitter(rng, camera.noise_px), 0.0, float(camera.image_width))
    gy = _clamp(gy + _jitter(rng, camera.noise_px), 0.0, float(camera.image_height))
    ox = _clamp(ox + _jitter(rng, camera.noise_px), 0.0, float(camera.image_width))
    oy = _clamp(oy + _jitter(rng, camera.noise_px), 0.0, float(camera.image_height))
    markers = MarkerObservation((gx, gy), (ox, oy), True)

    # Look-ahead window around the point one marker gap ahead of the nose,
    # derived from the jittered pixels exactly as the fix computations do.
    fx_px = ox + (ox - gx) / 2.0
    fy_px = oy + (oy - gy) / 2.0
    half_m = camera.window_half_m()
    x0c, y0c, x1c, y1c = camera.coverage
    mx, my = (x0c + x1c) / 2.0, (y0c + y1c) / 2.0
    fx_b = mx + (fx_px - camera.image_width / 2.0) / camera.pixels_per_meter
    fy_b = my - (fy_px - camera.image_height / 2.0) / camera.pixels_per_meter
    wx0, wx1 = max(fx_b - half_m, x0c), min(fx_b + half_m, x1c)
    wy0, wy1 = max(fy_b - half_m, y0c), min(fy_b + half_m, y1c)
    if wx0 >= wx1 or wy0 >= wy1:
        return markers, _NO_LINE
    dx = pts[:, 0] - pose.x
    dy = pts[:, 1] - pose.y
    mask = (
        (pts[:, 0] >= wx0)
        & (pts[:, 0] <= wx1)
        & (pts[:, 1] >= wy0)
        & (pts[:, 1] <= wy1)
        & (dx * dx + dy * dy > layout.body_radius ** 2)
    )
    run = _longest_run(mask)
    if run is None:
        return markers, _NO_LINE
    length = run.size * step
    cx_b = float(np.mean(pts[run, 0]))
    cy_b = float(np.mean(pts[run, 1]))
    cx, cy = camera.to_pixel(cx_b, cy_b)
    cx = _clamp(cx + _jitter(rng, camera.noise_px), 0.0, float(camera.image_width))
    cy = _clamp(cy + _jitter(rng, camera.noise_px), 0.0, float(camera.image_height))
    direction = tans[run[run.size // 2]]
    w, h, raw = fold_line_angle(direction, length * camera.pixels_per_meter,
                                line_width * camera.pixels_per_meter)
    fraction = min(1.0, length / half_m)
    return markers, LineBoxObservation((cx, cy), w, h, raw, fraction)


def front_point(markers: MarkerObservation):
    """Pixel point half a marker gap beyond the orange (front) marker."""
    gx, gy = markers.green
    ox, oy = markers.orange
    return (ox + (ox - gx) / 2.0, oy + (oy - gy) / 2.0)


def compute_robot_angle(green, orange) -> float:
    """Vehicle heading in degrees from the two marker centers.

    Pixel coordinates are y-down, so the final reflection converts back to
    the counterclockwise board convention.  Output is in [0, 360).
    """
    gx, gy = green
    ox, oy = orange
    if gx == ox:
        if gy == oy:
            raise ValueError("degenerate marker pair")
        return 90.0 if gy > oy else 270.0
    # atan * 180 / pi, in this operation order, for bit-stable results.
    ang = math.atan((oy - gy) / (ox - gx)) * 180.0 / math.pi
    if gx > ox:
        ang = 180.0 + ang
    elif ang < 0.0:
        ang = 360.0 + ang
    ang = 360.0 - ang
    return 0.0 if ang == 360.0 else ang


def disambiguate_line_angle(width: float, height: float, raw_angle: float,
                            vehicle_angle: float) -> float:
    """Expand a box angle (known modulo 180) to the direction of travel.

    The vehicle's own heading picks between the two candidates, assuming it
    drives roughly along the line.
    """
    if width > height:
        if vehicle_angle > 135.0:
            return 180.0 - raw_angle
        return -raw_angle
    if vehicle_angle > 270.0 or vehicle_angle < 45.0:
        return 270.0 - raw_angle
    return 90.0 - raw_angle


def direction_fix(line_angle: float, vehicle_angle: float) -> float:
    """Signed angle from vehicle heading to line direction, short way round."""
    d = line_angle - vehicle_angle
    if d < -300.0:
        d += 360.0
    elif d > 300.0:
        d -= 360.0
    if d < -90.0:
        d += 180.0
    elif d > 90.0:
        d -= 180.0
    return d


def position_fix(front, line_center, vehicle_angle: float) -> float:
    """Signed bearing from the look-ahead point to the line chunk center.

    Works on y-down pixel coordinates; positive means the line lies to the
    vehicle's left.  The result is folded into [-90, 90] so that overshooting
    the line flips the sign rather than growing past a quarter turn.
    """
    fx, fy = front
    lx, ly = line_center
    ang = vehicle_angle
    if lx == fx and ly == fy:
        return 0.0
    if lx == fx:
        offset = 90.0 - ang if ang < 180.0 else 270.0 - ang
    else:
        temp = math.atan((fy - ly) / (lx - fx)) * 180.0 / math.pi
        if temp < 0.0:
            temp = 360.0 + temp if ang > 225.0 else 180.0 + temp
        elif 135.0 < ang < 315.0:
            temp = 180.0 + temp
        offset = temp - ang
    if offset > 180.0:
        offset -= 360.0
    elif offset < -180.0:
        offset += 360.0
    if offset < -90.0:
        offset += 180.0
    elif offset > 90.0:
        offset -= 180.0
    return offset


def onboard_offset(x_min: float, center: float = 160.0, scale: float = 0.333) -> float:
    """Steering error from the line center column of the on-vehicle camera."""
    return scale * (center - x_min)


def confidence_from_visibility(fraction: float, kind: str) -> int:
    """Confidence in [0, 100] from the visible fraction of a full view."""
    del kind  # both camera kinds normalize upstream
    return int(round(100.0 * fraction))
