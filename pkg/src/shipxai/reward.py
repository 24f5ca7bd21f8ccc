"""Ship-domain danger index and per-step reward terms.

The exclusive area around the own ship is a piecewise ellipse in the body
frame: longer ahead and to starboard, short astern and to port. Danger cr
is 1 at the own-ship position, falls linearly in normalized radius and is
clamped to 0 on and outside the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SHIP_LOA_KM = 0.34

# Semi-axis multipliers of the exclusive area (body frame).
AHEAD_FACTOR = 6.4
ASTERN_FACTOR = 1.6
STARBOARD_FACTOR = 3.2
PORT_FACTOR = 1.6

WP_REWARD_GAIN = 0.20
WP_PROGRESS_GAIN = 0.050
WP_PROGRESS_CAP_DEG = 10.0


@dataclass(frozen=True)
class ShipDomain:
    loa: float = SHIP_LOA_KM  # overall length [km]

    def __post_init__(self) -> None:
        if self.loa <= 0.0:
            raise ValueError(f"loa must be positive: {self.loa}")


def domain_axes(dx_body: float, dy_body: float, loa: float = SHIP_LOA_KM) -> tuple[float, float]:
    """Semi-axis lengths (ax_x, ax_y) of the domain quadrant containing (dx, dy)."""
    ax_x = (STARBOARD_FACTOR if dx_body >= 0.0 else PORT_FACTOR) * loa
    ax_y = (AHEAD_FACTOR if dy_body >= 0.0 else ASTERN_FACTOR) * loa
    return ax_x, ax_y


def danger_level(dx_body: float, dy_body: float, loa: float = SHIP_LOA_KM) -> float:
    """Collision danger cr in [0, 1]; 0 on and outside the domain boundary."""
    ax_x, ax_y = domain_axes(dx_body, dy_body, loa)
    cr = 1.0 - math.sqrt((dx_body / ax_x) ** 2 + (dy_body / ax_y) ** 2)
    return cr if cr > 0.0 else 0.0


def collision_reward(cr_t: float, cr_prev: float) -> float:
    """Penalty for one other ship; harsher while the danger is still rising."""
    if cr_t == 0.0:
        return 0.0
    if cr_t <= cr_prev:
        return -0.5 * cr_t - 0.1
    return -1.0 * cr_t - 0.5


def waypoint_reward(dtheta_wp: float) -> float:
    """Reward for pointing at the waypoint; maximal (0.20) when dead ahead."""
    gauss = 0.9 * math.exp(-((dtheta_wp / 60.0) ** 2) / 2.0)
    linear = 0.1 * (1.0 - abs(dtheta_wp) / 180.0)
    return WP_REWARD_GAIN * (gauss + linear)


def waypoint_progress_reward(dtheta_prev: float, dtheta_t: float, sum_cr: float) -> float:
    """Bonus for reducing the bearing error, granted only when no ship is dangerous."""
    if sum_cr > 0.0:
        return 0.0
    prev_abs = abs(dtheta_prev)
    if prev_abs == 0.0:
        # no progress is possible from perfect alignment
        return 0.0
    ratio = (prev_abs - abs(dtheta_t)) / min(WP_PROGRESS_CAP_DEG, prev_abs)
    return WP_PROGRESS_GAIN * min(1.0, max(0.0, ratio))


@dataclass(frozen=True)
class RewardBreakdown:
    r_oth: tuple[float, ...]  # per-ship collision terms, all <= 0
    r_wp: float
    r_dwp: float
    total: float
    cr: tuple[float, ...]  # per-ship danger levels at this step

    def __post_init__(self) -> None:
        if len(self.r_oth) != len(self.cr):
            raise ValueError("r_oth and cr must have one entry per ship")


def total_reward(
    body_offsets: list[tuple[float, float]],
    cr_prev: list[float],
    dtheta_prev: float,
    dtheta_t: float,
    loa: float = SHIP_LOA_KM,
) -> RewardBreakdown:
    """Combine collision, waypoint and progress terms for one step.

    body_offsets are the targets' (dx, dy) positions in the own-ship body
    frame; cr_prev holds the previous step's danger levels in the same ship
    order. total = r_wp + r_dwp + sum(r_oth), summed left to right.
    """
    if len(body_offsets) != len(cr_prev):
        raise ValueError("cr_prev must have one entry per ship")
    cr_t = tuple(danger_level(dx, dy, loa) for dx, dy in body_offsets)
    r_oth = tuple(collision_reward(c, p) for c, p in zip(cr_t, cr_prev))
    r_wp = waypoint_reward(dtheta_t)
    r_dwp = waypoint_progress_reward(dtheta_prev, dtheta_t, sum(cr_t))
    total = r_wp + r_dwp + sum(r_oth)
    return RewardBreakdown(r_oth=r_oth, r_wp=r_wp, r_dwp=r_dwp, total=total, cr=cr_t)
