"""Per-sensor PID steering with a decayed integral, plus command synthesis.

Each sensor runs its own controller.  The integral term is a decayed sum
(new = error + decay * old, updated before use) rather than a plain sum, so
it cannot wind up past error_bound / (1 - decay).  Infrastructure sensors
supply the line-to-vehicle angle as an external derivative; the on-vehicle
sensor falls back to consecutive error differences.
"""

import math
from dataclasses import dataclass

from .perception import (
    INFRASTRUCTURE,
    ONBOARD,
    compute_robot_angle,
    confidence_from_visibility,
    direction_fix,
    disambiguate_line_angle,
    front_point,
    onboard_offset,
    position_fix,
)
from .wire import SteeringCommand

ONBOARD_GAINS = (1.5, 0.15, 4.5)
INFRASTRUCTURE_GAINS = (1.0, 0.02, 0.5)


@dataclass(frozen=True)
class PidGains:
    kp: float
    ki: float
    kd: float

    def __post_init__(self):
        for g in (self.kp, self.ki, self.kd):
            if not math.isfinite(g) or g < 0.0:
                raise ValueError("gains must be finite and non-negative")


@dataclass(frozen=True)
class PidState:
    """Controller memory: decayed error sum and the previous error."""

    integral: float = 0.0
    last_error: float = 0.0
    decay: float = 0.9


def pid_update(gains: PidGains, state: PidState, error: float,
               external_derivative: float = None):
    """One controller step; returns (new_state, correction).

    The integral decays before it is read, and the external derivative (when
    a sensor can measure the error rate directly) replaces the finite
    difference of errors.
    """
    integral = error + state.decay * state.integral
    if external_derivative is not None:
        derivative = external_derivative
    else:
        derivative = error - state.last_error
    correction = gains.kp * error + gains.ki * integral + gains.kd * derivative
    return PidState(integral, error, state.decay), correction


def commands_from_correction(correction: float):
    """Split a correction into wheel powers around the 100 midpoint.

    int() truncates toward zero, matching the integer cast on the sensors.
    """
    return int(100.0 - correction), int(100.0 + correction)


def sensor_tick(kind: str, gains: PidGains, state: PidState, observation):
    """Turn one camera frame into a steering command.

    observation is the (markers, line_box) pair from perception.observe.
    An empty frame yields a zero-report and leaves the controller state
    untouched, so a sensor resumes from its pre-outage integral.
    """
    markers, line_box = observation
    if kind == ONBOARD:
        visible = line_box.visible
    else:
        visible = markers.visible and line_box.visible
    if not visible:
        return state, SteeringCommand.zero()
    if kind == ONBOARD:
        error = onboard_offset(line_box.center[0])
        external = None
    else:
        vehicle_angle = compute_robot_angle(markers.green, markers.orange)
        line_angle = disambiguate_line_angle(
            line_box.width, line_box.height, line_box.raw_angle, vehicle_angle
        )
        external = direction_fix(line_angle, vehicle_angle)
        error = position_fix(front_point(markers), line_box.center, vehicle_angle)
    new_state, correction = pid_update(gains, state, error, external)
    derivative = external if external is not None else error - state.last_error
    left, right = commands_from_correction(correction)
    confidence = confidence_from_visibility(line_box.visible_fraction, kind)
    return new_state, SteeringCommand(left, right, confidence, error,
                                      new_state.integral, derivative)


def default_gains(kind: str) -> PidGains:
    if kind == ONBOARD:
        return PidGains(*ONBOARD_GAINS)
    if kind == INFRASTRUCTURE:
        return PidGains(*INFRASTRUCTURE_GAINS)
    raise ValueError(f"unknown sensor kind {kind!r}")
