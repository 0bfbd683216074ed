"""Point-mass longitudinal vehicle model.

Vehicles track their lane centerline exactly (lateral offset x is carried
but not dynamically modeled). Acceleration commands are clamped to actuator
limits; speed is clamped to [0, v_max] and never goes negative mid-step.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Limits:
    a_min: float = -4.0  # m/s^2
    a_max: float = 3.0   # m/s^2
    v_max: float = 15.0  # m/s


@dataclass(frozen=True)
class VehicleState:
    id: int
    path_id: str
    r: float      # longitudinal position along the current path, m
    x: float      # lateral offset from centerline, m
    v: float      # speed, m/s
    a: float      # applied acceleration last step, m/s^2
    length: float = 4.5
    width: float = 1.8
    kind: str = "cav"  # cav | human | scripted


@dataclass(frozen=True)
class DriveCommand:
    """Exactly one of target_accel / target_speed is set."""

    target_accel: float = None
    target_speed: float = None
    source: str = "script"

    def __post_init__(self):
        if (self.target_accel is None) == (self.target_speed is None):
            raise ValueError("DriveCommand needs exactly one of target_accel/target_speed")


def resolve_accel(state: VehicleState, cmd: DriveCommand, dt: float, limits: Limits) -> float:
    """Acceleration to apply this step, clamped to actuator limits.

    A target_speed command is converted to the acceleration that would reach
    it within one step, then clamped; a non-finite command coasts (a = 0)
    and logs a fault rather than corrupting the state.
    """
    if cmd.target_accel is not None:
        a = cmd.target_accel
    else:
        a = (cmd.target_speed - state.v) / dt
    if not math.isfinite(a):
        logger.warning("vehicle %s: non-finite command from %s, coasting", state.id, cmd.source)
        return 0.0
    return min(max(a, limits.a_min), limits.a_max)


def step_vehicle(state: VehicleState, cmd: DriveCommand, dt: float,
                 limits: Limits = Limits()) -> VehicleState:
    """Advance one step of dt seconds.

    Position integrates the exact area under the clamped velocity profile,
    so r never moves backward and never counts speed above v_max.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    a = resolve_accel(state, cmd, dt, limits)
    v0 = state.v
    v1 = v0 + a * dt
    dr = v0 * dt + 0.5 * a * dt * dt
    if v1 < 0.0:
        t_stop = v0 / -a if a < 0 else 0.0
        dr = 0.5 * v0 * t_stop
        v1 = 0.0
    elif v1 > limits.v_max:
        t_cap = (limits.v_max - v0) / a if a > 0 else 0.0
        dr = v0 * t_cap + 0.5 * a * t_cap * t_cap + limits.v_max * (dt - t_cap)
        v1 = limits.v_max
    return replace(state, r=state.r + dr, v=v1, a=a)


def human_input_adapter(throttle: float, brake: float, limits: Limits = Limits()) -> DriveCommand:
    """Map pedal positions in [0, 1] to an acceleration command.

    Out-of-range inputs are clamped and logged, not rejected: a sticky pedal
    should not kill the session.
    """
    if not (0.0 <= throttle <= 1.0) or not (0.0 <= brake <= 1.0):
        logger.warning("pedal input out of range (throttle=%s, brake=%s), clamping", throttle, brake)
    throttle = min(max(throttle if math.isfinite(throttle) else 0.0, 0.0), 1.0)
    brake = min(max(brake if math.isfinite(brake) else 0.0, 0.0), 1.0)
    accel = throttle * limits.a_max - brake * abs(limits.a_min)
    return DriveCommand(target_accel=accel, source="human")
