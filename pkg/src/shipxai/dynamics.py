"""Ship motion under Nomoto's first-order steering model.

Coordinates: x east, y north, both in km. Heading psi is measured clockwise
from the +y axis in degrees, kept in [-180, 180). Speeds are in km/s, turn
rates in deg/s. Rudder angle is limited to +-5 deg.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

RUDDER_MAX_DEG = 5.0

# Fixed-step RK4 substep length [s]; removes integrator error as a factor in
# the constant-rudder analytic comparison.
INTEGRATION_SUBSTEP_S = 1.0


def wrap_angle(theta: float) -> float:
    """Wrap an angle in degrees to [-180, 180)."""
    if not math.isfinite(theta):
        raise ValueError(f"cannot wrap non-finite angle: {theta!r}")
    wrapped = (theta + 180.0) % 360.0 - 180.0
    # float % can round up to the modulus itself for tiny negative inputs
    return -180.0 if wrapped >= 180.0 else wrapped


@dataclass(frozen=True)
class NomotoParams:
    """First-order steering response T*rdot + r = K*delta."""

    gain_k: float = 0.05  # [1/s]
    time_const_t: float = 30.0  # [s]

    def __post_init__(self) -> None:
        if self.gain_k <= 0.0 or self.time_const_t <= 0.0:
            raise ValueError("gain_k and time_const_t must be positive")


@dataclass(frozen=True)
class OwnShipState:
    x: float  # east [km]
    y: float  # north [km]
    psi: float  # heading [deg], clockwise from +y
    r: float = 0.0  # rate of turn [deg/s]
    delta: float = 0.0  # current rudder angle [deg]
    speed_u: float = 0.005  # speed over ground [km/s]

    def __post_init__(self) -> None:
        if not -180.0 <= self.psi < 180.0:
            raise ValueError(f"psi must lie in [-180, 180): {self.psi}")
        if abs(self.delta) > RUDDER_MAX_DEG:
            raise ValueError(f"|delta| exceeds {RUDDER_MAX_DEG} deg: {self.delta}")
        if self.speed_u <= 0.0:
            raise ValueError(f"speed_u must be positive: {self.speed_u}")


@dataclass(frozen=True)
class TargetShipState:
    """Other ship sailing a straight course at constant speed."""

    x: float  # [km]
    y: float  # [km]
    course: float  # [deg], clockwise from +y
    speed: float  # [km/s]

    def __post_init__(self) -> None:
        if not -180.0 <= self.course < 180.0:
            raise ValueError(f"course must lie in [-180, 180): {self.course}")
        if self.speed <= 0.0:
            raise ValueError(f"speed must be positive: {self.speed}")

    def velocity(self) -> tuple[float, float]:
        rad = math.radians(self.course)
        return self.speed * math.sin(rad), self.speed * math.cos(rad)


def rate_of_turn_derivative(state: OwnShipState, delta_cmd: float, params: NomotoParams) -> float:
    """Turn acceleration (K*delta - r)/T in deg/s^2 for a commanded rudder angle."""
    return (params.gain_k * delta_cmd - state.r) / params.time_const_t


def _derivatives(
    psi: float, r: float, speed_u: float, delta_cmd: float, params: NomotoParams
) -> tuple[float, float, float, float]:
    rad = math.radians(psi)
    return (
        speed_u * math.sin(rad),
        speed_u * math.cos(rad),
        r,
        (params.gain_k * delta_cmd - r) / params.time_const_t,
    )


def step_own_ship(
    state: OwnShipState, delta_cmd: float, dt: float, params: NomotoParams
) -> OwnShipState:
    """Advance the own ship by dt seconds with the rudder held at delta_cmd.

    Classical 4th-order integration with fixed substeps of at most
    INTEGRATION_SUBSTEP_S. Rudder actuation is instantaneous: the returned
    state's delta equals delta_cmd. Speed over ground is conserved.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive: {dt}")
    if abs(delta_cmd) > RUDDER_MAX_DEG:
        raise ValueError(f"|delta_cmd| exceeds {RUDDER_MAX_DEG} deg: {delta_cmd}")

    n_sub = max(1, math.ceil(dt / INTEGRATION_SUBSTEP_S))
    h = dt / n_sub
    x, y, psi, r = state.x, state.y, state.psi, state.r
    u = state.speed_u
    for _ in range(n_sub):
        k1 = _derivatives(psi, r, u, delta_cmd, params)
        k2 = _derivatives(psi + 0.5 * h * k1[2], r + 0.5 * h * k1[3], u, delta_cmd, params)
        k3 = _derivatives(psi + 0.5 * h * k2[2], r + 0.5 * h * k2[3], u, delta_cmd, params)
        k4 = _derivatives(psi + h * k3[2], r + h * k3[3], u, delta_cmd, params)
        x += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        y += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        psi += h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        r += h / 6.0 * (k1[3] + 2.0 * k2[3] + 2.0 * k3[3] + k4[3])
    return replace(state, x=x, y=y, psi=wrap_angle(psi), r=r, delta=delta_cmd)


def step_target_ship(state: TargetShipState, dt: float) -> TargetShipState:
    """Advance a straight-sailing target ship by dt seconds."""
    if dt <= 0.0:
        raise ValueError(f"dt must be positive: {dt}")
    vx, vy = state.velocity()
    return replace(state, x=state.x + vx * dt, y=state.y + vy * dt)
