"""Waypoint and other-ship observations, CPA geometry, 5-frame stacking.

All relative positions and velocities are expressed in the own-ship body
frame: body y points along the heading, body x to starboard. Relative
bearings are wrapped to [-180, 180). Observations fed to the networks are
normalized with fixed scales (ObsScales).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import OwnShipState, TargetShipState, wrap_angle

STACK_FRAMES = 5
WP_FEATURES = 3
OTH_FEATURES = 10
WP_FLAT = STACK_FRAMES * WP_FEATURES
OTH_FLAT = STACK_FRAMES * OTH_FEATURES

# Relative speed below this is treated as "no closure" for CPA purposes.
CPA_SPEED_EPS = 1e-9  # [km/s]


def rotate_world_to_body(dx_world: float, dy_world: float, psi: float) -> tuple[float, float]:
    """Rotate a world-frame offset into the body frame of a ship heading psi."""
    rad = math.radians(psi)
    c, s = math.cos(rad), math.sin(rad)
    return dx_world * c - dy_world * s, dx_world * s + dy_world * c


@dataclass(frozen=True)
class WaypointObs:
    dx: float  # waypoint offset, body frame [km]
    dy: float  # [km]
    dtheta: float  # relative bearing to the waypoint [deg]

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dtheta], dtype=np.float64)


@dataclass(frozen=True)
class TargetObs:
    dx: float  # relative position, body frame [km]
    dy: float
    dtheta: float  # relative bearing [deg]
    relv_x: float  # relative velocity, body frame [km/s]
    relv_y: float
    dist: float  # range [km]
    dx_cpa: float  # CPA relative position, body frame [km]
    dy_cpa: float
    dcpa: float  # [km]
    tcpa: float  # [s]; negative when the CPA lies in the past

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.dx,
                self.dy,
                self.dtheta,
                self.relv_x,
                self.relv_y,
                self.dist,
                self.dx_cpa,
                self.dy_cpa,
                self.dcpa,
                self.tcpa,
            ],
            dtype=np.float64,
        )


@dataclass(frozen=True)
class ObsScales:
    """Fixed normalization constants, recorded in every checkpoint."""

    dist_km: float = 10.0
    speed_kms: float = 0.01
    angle_deg: float = 180.0
    time_s: float = 1000.0

    def wp_vector(self) -> np.ndarray:
        return np.array([self.dist_km, self.dist_km, self.angle_deg], dtype=np.float64)

    def oth_vector(self) -> np.ndarray:
        d, v, a, t = self.dist_km, self.speed_kms, self.angle_deg, self.time_s
        return np.array([d, d, a, v, v, d, d, d, d, t], dtype=np.float64)

    def as_dict(self) -> dict:
        return {
            "dist_km": self.dist_km,
            "speed_kms": self.speed_kms,
            "angle_deg": self.angle_deg,
            "time_s": self.time_s,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ObsScales":
        return cls(
            dist_km=float(doc["dist_km"]),
            speed_kms=float(doc["speed_kms"]),
            angle_deg=float(doc["angle_deg"]),
            time_s=float(doc["time_s"]),
        )


def waypoint_observation(own: OwnShipState, waypoint: tuple[float, float]) -> WaypointObs:
    """Waypoint offset in the own-ship body frame plus relative bearing."""
    dx_w = waypoint[0] - own.x
    dy_w = waypoint[1] - own.y
    dx_b, dy_b = rotate_world_to_body(dx_w, dy_w, own.psi)
    if dx_b == 0.0 and dy_b == 0.0:
        # own ship exactly at the waypoint; bearing defined as dead ahead
        return WaypointObs(0.0, 0.0, 0.0)
    dtheta = wrap_angle(math.degrees(math.atan2(dx_b, dy_b)))
    return WaypointObs(dx_b, dy_b, dtheta)


def compute_cpa(own: OwnShipState, target: TargetShipState) -> tuple[float, float, float, float]:
    """Closest point of approach under the straight-line assumption.

    Returns (dx_cpa, dy_cpa, dcpa, tcpa) with the CPA offset in the own-ship
    body frame. tcpa is not clamped: a negative value means the ships are
    already diverging. When the relative speed is below CPA_SPEED_EPS the
    geometry is frozen and tcpa is defined as 0 with dcpa = current range.
    """
    px = target.x - own.x
    py = target.y - own.y
    own_rad = math.radians(own.psi)
    vx_t, vy_t = target.velocity()
    vx = vx_t - own.speed_u * math.sin(own_rad)
    vy = vy_t - own.speed_u * math.cos(own_rad)
    v_sq = vx * vx + vy * vy
    if v_sq > CPA_SPEED_EPS * CPA_SPEED_EPS:
        tcpa = -(px * vx + py * vy) / v_sq
    else:
        tcpa = 0.0
    cx = px + vx * tcpa
    cy = py + vy * tcpa
    dcpa = math.hypot(cx, cy)
    dx_cpa, dy_cpa = rotate_world_to_body(cx, cy, own.psi)
    return dx_cpa, dy_cpa, dcpa, tcpa


def target_observation(own: OwnShipState, target: TargetShipState) -> TargetObs:
    """All per-ship observation features for one target."""
    px = target.x - own.x
    py = target.y - own.y
    dx_b, dy_b = rotate_world_to_body(px, py, own.psi)
    dist = math.hypot(px, py)
    if dx_b == 0.0 and dy_b == 0.0:
        dtheta = 0.0
    else:
        dtheta = wrap_angle(math.degrees(math.atan2(dx_b, dy_b)))
    own_rad = math.radians(own.psi)
    vx_t, vy_t = target.velocity()
    relv_x, relv_y = rotate_world_to_body(
        vx_t - own.speed_u * math.sin(own_rad),
        vy_t - own.speed_u * math.cos(own_rad),
        own.psi,
    )
    dx_cpa, dy_cpa, dcpa, tcpa = compute_cpa(own, target)
    return TargetObs(dx_b, dy_b, dtheta, relv_x, relv_y, dist, dx_cpa, dy_cpa, dcpa, tcpa)


def normalize_wp(frame: np.ndarray, scales: ObsScales) -> np.ndarray:
    return frame / scales.wp_vector()


def denormalize_wp(frame: np.ndarray, scales: ObsScales) -> np.ndarray:
    return frame * scales.wp_vector()


def normalize_oth(frame: np.ndarray, scales: ObsScales) -> np.ndarray:
    return frame / scales.oth_vector()


def denormalize_oth(frame: np.ndarray, scales: ObsScales) -> np.ndarray:
    return frame * scales.oth_vector()


@dataclass(frozen=True, eq=False)
class StackedObservation:
    """Normalized 5-frame history, oldest frame first.

    wp has shape (5, 3); oth has shape (n_ships, 5, 10). ship_order carries
    the stable within-episode identity of each row of oth.
    """

    wp: np.ndarray
    oth: np.ndarray
    ship_order: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.wp.shape != (STACK_FRAMES, WP_FEATURES):
            raise ValueError(f"wp block must be (5, 3), got {self.wp.shape}")
        if self.oth.ndim != 3 or self.oth.shape[1:] != (STACK_FRAMES, OTH_FEATURES):
            raise ValueError(f"oth block must be (n, 5, 10), got {self.oth.shape}")
        if len(self.ship_order) != self.oth.shape[0]:
            raise ValueError("ship_order length must match the number of ships")

    @property
    def n_ships(self) -> int:
        return self.oth.shape[0]

    def flat_wp(self) -> np.ndarray:
        return self.wp.reshape(WP_FLAT)

    def flat_oth(self) -> np.ndarray:
        return self.oth.reshape(self.n_ships, OTH_FLAT)


class FrameHistory:
    """Rolling 5-frame buffer of normalized observation frames.

    Reset fills all five slots with the initial frame so that early stacks
    stay physically meaningful; ship count is fixed for the episode.
    """

    def __init__(self, wp_frame: np.ndarray, oth_frame: np.ndarray):
        n = oth_frame.shape[0]
        if wp_frame.shape != (WP_FEATURES,) or oth_frame.shape != (n, OTH_FEATURES):
            raise ValueError("bad frame shapes for history")
        self._n = n
        self._wp = np.tile(wp_frame, (STACK_FRAMES, 1))
        self._oth = np.tile(oth_frame, (STACK_FRAMES, 1, 1))

    @property
    def n_ships(self) -> int:
        return self._n

    def push(self, wp_frame: np.ndarray, oth_frame: np.ndarray) -> None:
        if oth_frame.shape[0] != self._n:
            raise ValueError("ship count changed mid-episode")
        self._wp[:-1] = self._wp[1:]
        self._wp[-1] = wp_frame
        self._oth[:-1] = self._oth[1:]
        self._oth[-1] = oth_frame

    def stacked(self, ship_order: tuple[int, ...] | None = None) -> StackedObservation:
        if ship_order is None:
            ship_order = tuple(range(self._n))
        wp = self._wp.copy()
        oth = np.ascontiguousarray(self._oth.transpose(1, 0, 2))
        wp.flags.writeable = False
        oth.flags.writeable = False
        return StackedObservation(wp=wp, oth=oth, ship_order=ship_order)
