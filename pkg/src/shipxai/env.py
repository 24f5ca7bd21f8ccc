"""Episode loop: reset/step orchestration of dynamics, observation and reward."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import (
    RUDDER_MAX_DEG,
    NomotoParams,
    OwnShipState,
    TargetShipState,
    step_own_ship,
    step_target_ship,
)
from .observation import (
    FrameHistory,
    ObsScales,
    StackedObservation,
    normalize_oth,
    normalize_wp,
    target_observation,
    waypoint_observation,
)
from .reward import SHIP_LOA_KM, RewardBreakdown, danger_level, total_reward
from .scenario import Scenario, ScenarioConfig, generate_scenario


class EpisodeFinished(Exception):
    """Raised when stepping an episode that already hit its step limit."""


@dataclass
class EpisodeState:
    scenario: Scenario
    own: OwnShipState
    targets: list[TargetShipState]
    step_index: int
    cr_prev: list[float]  # danger levels at the current (pre-step) geometry
    dtheta_prev_abs: float
    history: FrameHistory
    done: bool = False
    time_limit: bool = False
    invasion_events: int = 0  # per-ship domain entries (cr rising from 0)
    invaded: bool = False
    max_cr: float = 0.0

    @property
    def n_ships(self) -> int:
        return len(self.targets)


class Environment:
    """Deterministic episodic simulator; one EpisodeState per rollout."""

    def __init__(
        self,
        scenario_cfg: ScenarioConfig | None = None,
        nomoto: NomotoParams | None = None,
        scales: ObsScales | None = None,
        loa: float = SHIP_LOA_KM,
    ):
        self.cfg = scenario_cfg if scenario_cfg is not None else ScenarioConfig()
        self.nomoto = nomoto if nomoto is not None else NomotoParams()
        self.scales = scales if scales is not None else ObsScales()
        self.loa = loa

    def _frames(
        self, own: OwnShipState, targets: list[TargetShipState]
    ) -> tuple[np.ndarray, np.ndarray, float, list[tuple[float, float]]]:
        """Normalized wp/oth frames plus the raw quantities the reward needs."""
        wp_raw = waypoint_observation(own, self.cfg.waypoint)
        oth_raw = [target_observation(own, t) for t in targets]
        wp_frame = normalize_wp(wp_raw.as_array(), self.scales)
        if targets:
            oth_frame = normalize_oth(
                np.stack([o.as_array() for o in oth_raw]), self.scales
            )
        else:
            oth_frame = np.zeros((0, 10), dtype=np.float64)
        offsets = [(o.dx, o.dy) for o in oth_raw]
        return wp_frame, oth_frame, wp_raw.dtheta, offsets

    def reset(
        self,
        seed: int | None = None,
        scenario: Scenario | None = None,
        n_ships: int | None = None,
    ) -> tuple[EpisodeState, StackedObservation]:
        """Start an episode from a stored scenario or a freshly generated one."""
        if scenario is None:
            if seed is None:
                raise ValueError("reset needs either a seed or a scenario")
            scenario = generate_scenario(self.cfg, seed, n_ships=n_ships)
        own = scenario.own
        targets = list(scenario.targets)
        wp_frame, oth_frame, dtheta, offsets = self._frames(own, targets)
        cr0 = [danger_level(dx, dy, self.loa) for dx, dy in offsets]
        state = EpisodeState(
            scenario=scenario,
            own=own,
            targets=targets,
            step_index=0,
            cr_prev=cr0,
            dtheta_prev_abs=abs(dtheta),
            history=FrameHistory(wp_frame, oth_frame),
            invaded=any(c > 0.0 for c in cr0),
            max_cr=max(cr0, default=0.0),
        )
        return state, state.history.stacked()

    def step(
        self, state: EpisodeState, rudder_cmd: float
    ) -> tuple[EpisodeState, StackedObservation, RewardBreakdown, bool]:
        """Advance one control interval (dt) under the commanded rudder angle."""
        if state.done:
            raise EpisodeFinished(f"episode already finished at step {state.step_index}")
        if abs(rudder_cmd) > RUDDER_MAX_DEG:
            raise ValueError(f"|rudder_cmd| exceeds {RUDDER_MAX_DEG} deg: {rudder_cmd}")

        dt = self.cfg.dt
        state.own = step_own_ship(state.own, rudder_cmd, dt, self.nomoto)
        state.targets = [step_target_ship(t, dt) for t in state.targets]
        state.step_index += 1

        wp_frame, oth_frame, dtheta, offsets = self._frames(state.own, state.targets)
        breakdown = total_reward(
            offsets, state.cr_prev, state.dtheta_prev_abs, dtheta, self.loa
        )
        for prev, now in zip(state.cr_prev, breakdown.cr):
            if prev == 0.0 and now > 0.0:
                state.invasion_events += 1
        if any(c > 0.0 for c in breakdown.cr):
            state.invaded = True
        state.max_cr = max(state.max_cr, max(breakdown.cr, default=0.0))
        state.cr_prev = list(breakdown.cr)
        state.dtheta_prev_abs = abs(dtheta)

        state.history.push(wp_frame, oth_frame)
        obs = state.history.stacked()

        done = state.step_index >= self.cfg.episode_steps
        if done:
            state.done = True
            state.time_limit = True
        return state, obs, breakdown, done
