"""Randomized multi-ship encounter generation.

Each target ship is constructed to meet the own ship at a sampled future
time if both held course, then jittered in position and course. Scenarios
record their seed and serialize to a small JSON document.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import OwnShipState, TargetShipState, wrap_angle


@dataclass(frozen=True)
class ScenarioConfig:
    target_speed_range: tuple[float, float] = (0.0041, 0.0062)  # [km/s]
    course_col_range: tuple[float, float] = (-150.0, 150.0)  # [deg]
    t_col_range: tuple[float, float] = (600.0, 1800.0)  # [s]
    pos_noise_range: tuple[float, float] = (-1.0, 1.0)  # [km] per axis
    course_noise_range: tuple[float, float] = (-30.0, 30.0)  # [deg]
    n_ships_range: tuple[int, int] = (0, 6)
    waypoint: tuple[float, float] = (0.0, 46.3)  # [km]
    own_init: tuple[float, float, float] = (0.0, 0.0, 0.0)  # x, y, psi
    own_speed: float | None = None  # [km/s]; None samples from target_speed_range
    dt: float = 5.0  # [s]
    episode_steps: int = 240

    def __post_init__(self) -> None:
        for name in (
            "target_speed_range",
            "course_col_range",
            "t_col_range",
            "pos_noise_range",
            "course_noise_range",
            "n_ships_range",
        ):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty: {lo} > {hi}")
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.episode_steps <= 0:
            raise ValueError("episode_steps must be positive")
        if self.own_speed is not None and self.own_speed <= 0.0:
            raise ValueError("own_speed must be positive")


@dataclass(frozen=True)
class Scenario:
    own: OwnShipState
    targets: tuple[TargetShipState, ...]
    waypoint: tuple[float, float]
    rng_seed: int | None = None

    @property
    def n_ships(self) -> int:
        return len(self.targets)


def sample_target_ship(
    rng: np.random.Generator, own: OwnShipState, cfg: ScenarioConfig
) -> TargetShipState:
    """Draw one target ship on a randomized collision course with the own ship.

    Draw order is fixed (speed, collision course, time-to-collision, position
    noise x/y, course noise) so that a seeded generator reproduces ships
    exactly.
    """
    speed = rng.uniform(*cfg.target_speed_range)
    course_col = rng.uniform(*cfg.course_col_range)
    t_col = rng.uniform(*cfg.t_col_range)
    dx = rng.uniform(*cfg.pos_noise_range)
    dy = rng.uniform(*cfg.pos_noise_range)
    dcourse = rng.uniform(*cfg.course_noise_range)

    own_rad = math.radians(own.psi)
    col_rad = math.radians(course_col)
    x_col = own.x + t_col * (own.speed_u * math.sin(own_rad) - speed * math.sin(col_rad))
    y_col = own.y + t_col * (own.speed_u * math.cos(own_rad) - speed * math.cos(col_rad))
    return TargetShipState(
        x=x_col + dx,
        y=y_col + dy,
        course=wrap_angle(course_col + dcourse),
        speed=speed,
    )


def generate_scenario(
    cfg: ScenarioConfig, seed: int, n_ships: int | None = None
) -> Scenario:
    """Generate a full scenario from a recorded seed.

    Draw order: own speed (when not pinned by the config), ship count, then
    each ship. n_ships forces the count without consuming the count draw's
    position in the stream differently (the count draw is skipped entirely).
    """
    rng = np.random.default_rng(seed)
    own_speed = cfg.own_speed
    if own_speed is None:
        own_speed = float(rng.uniform(*cfg.target_speed_range))
    own = OwnShipState(
        x=cfg.own_init[0],
        y=cfg.own_init[1],
        psi=cfg.own_init[2],
        r=0.0,
        delta=0.0,
        speed_u=own_speed,
    )
    if n_ships is None:
        lo, hi = cfg.n_ships_range
        n = int(rng.integers(lo, hi + 1))
    else:
        if n_ships < 0:
            raise ValueError("n_ships must be non-negative")
        n = n_ships
    targets = tuple(sample_target_ship(rng, own, cfg) for _ in range(n))
    return Scenario(own=own, targets=targets, waypoint=cfg.waypoint, rng_seed=seed)


def scenario_to_doc(scenario: Scenario) -> dict:
    return {
        "seed": scenario.rng_seed,
        "own": {
            "x": scenario.own.x,
            "y": scenario.own.y,
            "psi": scenario.own.psi,
            "speed": scenario.own.speed_u,
        },
        "waypoint": [scenario.waypoint[0], scenario.waypoint[1]],
        "targets": [
            {"x": t.x, "y": t.y, "course": t.course, "speed": t.speed}
            for t in scenario.targets
        ],
    }


def scenario_from_doc(doc: dict) -> Scenario:
    own = doc["own"]
    return Scenario(
        own=OwnShipState(
            x=float(own["x"]),
            y=float(own["y"]),
            psi=float(own["psi"]),
            r=0.0,
            delta=0.0,
            speed_u=float(own["speed"]),
        ),
        targets=tuple(
            TargetShipState(
                x=float(t["x"]),
                y=float(t["y"]),
                course=float(t["course"]),
                speed=float(t["speed"]),
            )
            for t in doc["targets"]
        ),
        waypoint=(float(doc["waypoint"][0]), float(doc["waypoint"][1])),
        rng_seed=None if doc.get("seed") is None else int(doc["seed"]),
    )


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_doc(scenario), indent=2) + "\n")


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_doc(json.loads(Path(path).read_text()))
