"""Uniform-sampling transition buffer backed by per-episode frame arrays.

Successive stacked observations share four of their five frames, so the
buffer stores each frame once per episode and rebuilds the stacks when
sampling (including the episode-start replication warm-up). Eviction drops
whole episodes, oldest first, once the transition count exceeds capacity.
"""

from __future__ import annotations

import numpy as np

from ..observation import OTH_FEATURES, STACK_FRAMES, StackedObservation, WP_FEATURES
from .losses import TransitionBatch
from .networks import make_obs_batch


class _Episode:
    __slots__ = ("n_ships", "wp", "oth", "actions", "rewards", "time_limit", "steps")

    def __init__(self, wp0: np.ndarray, oth0: np.ndarray, capacity_hint: int):
        self.n_ships = oth0.shape[0]
        cap = max(2, capacity_hint + 1)
        self.wp = np.empty((cap, WP_FEATURES))
        self.oth = np.empty((cap, self.n_ships, OTH_FEATURES))
        self.wp[0] = wp0
        self.oth[0] = oth0
        self.actions = np.empty(cap - 1)
        self.rewards = np.empty(cap - 1)
        self.time_limit = np.zeros(cap - 1, dtype=bool)
        self.steps = 0

    def _grow(self) -> None:
        def enlarge(arr: np.ndarray, rows: int) -> np.ndarray:
            new = np.empty((rows,) + arr.shape[1:], dtype=arr.dtype)
            new[: arr.shape[0]] = arr
            return new

        new_cap = self.wp.shape[0] * 2
        self.wp = enlarge(self.wp, new_cap)
        self.oth = enlarge(self.oth, new_cap)
        self.actions = enlarge(self.actions, new_cap - 1)
        self.rewards = enlarge(self.rewards, new_cap - 1)
        self.time_limit = enlarge(self.time_limit, new_cap - 1)

    def append(
        self,
        action: float,
        reward: float,
        wp_frame: np.ndarray,
        oth_frame: np.ndarray,
        time_limit: bool,
    ) -> None:
        if self.steps + 1 >= self.wp.shape[0]:
            self._grow()
        t = self.steps
        self.actions[t] = action
        self.rewards[t] = reward
        self.time_limit[t] = time_limit
        self.wp[t + 1] = wp_frame
        self.oth[t + 1] = oth_frame
        self.steps = t + 1

    def stacked(self, frame: int) -> StackedObservation:
        idx = np.clip(np.arange(frame - STACK_FRAMES + 1, frame + 1), 0, None)
        return StackedObservation(
            wp=self.wp[idx],
            oth=self.oth[idx].transpose(1, 0, 2),
            ship_order=tuple(range(self.n_ships)),
        )


class ReplayBuffer:
    """Ring buffer of transitions with a uniform with-replacement sampler."""

    def __init__(self, capacity: int = 1_000_000, episode_length_hint: int = 240):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._hint = episode_length_hint
        self._episodes: list[_Episode] = []
        self._index: list[tuple[_Episode, int]] = []
        self._current: _Episode | None = None

    def __len__(self) -> int:
        return len(self._index)

    def start_episode(self, obs0: StackedObservation) -> None:
        """Open a new episode from the reset observation (its newest frame)."""
        self._current = _Episode(obs0.wp[-1], obs0.oth[:, -1, :], self._hint)
        self._episodes.append(self._current)

    def add_step(
        self,
        action: float,
        reward: float,
        next_obs: StackedObservation,
        time_limit: bool,
    ) -> None:
        if self._current is None:
            raise RuntimeError("start_episode must be called before add_step")
        ep = self._current
        ep.append(action, reward, next_obs.wp[-1], next_obs.oth[:, -1, :], time_limit)
        self._index.append((ep, ep.steps - 1))
        self._evict()

    def _evict(self) -> None:
        while len(self._index) > self.capacity and len(self._episodes) > 1:
            oldest = self._episodes.pop(0)
            self._index = self._index[oldest.steps :]

    def sample(self, rng: np.random.Generator, batch_size: int) -> TransitionBatch:
        if not self._index:
            raise ValueError("cannot sample from an empty buffer")
        picks = rng.integers(0, len(self._index), size=batch_size)
        obs_list, next_list = [], []
        actions = np.empty(batch_size)
        rewards = np.empty(batch_size)
        time_limit = np.zeros(batch_size, dtype=bool)
        for row, pick in enumerate(picks):
            ep, t = self._index[pick]
            obs_list.append(ep.stacked(t))
            next_list.append(ep.stacked(t + 1))
            actions[row] = ep.actions[t]
            rewards[row] = ep.rewards[t]
            time_limit[row] = ep.time_limit[t]
        return TransitionBatch(
            obs=make_obs_batch(obs_list),
            actions=actions,
            rewards=rewards,
            next_obs=make_obs_batch(next_list),
            time_limit=time_limit,
        )
