"""Deterministic policy rollouts and evaluation summaries."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dynamics import RUDDER_MAX_DEG
from ..env import Environment, EpisodeState
from ..scenario import Scenario
from .networks import ActorParams, policy_action


@dataclass(frozen=True)
class EvalEpisode:
    episode: int
    seed: int | None
    episode_return: float
    invaded: bool
    invasion_events: int
    max_cr: float


@dataclass(frozen=True)
class EvalSummary:
    episodes: int
    mean_return: float
    min_return: float
    invasion_episode_rate: float
    mean_max_cr: float


def rollout_episode(
    env: Environment,
    actor: ActorParams,
    variant: str,
    feature_softsign: bool = True,
    *,
    seed: int | None = None,
    scenario: Scenario | None = None,
    n_ships: int | None = None,
) -> tuple[float, EpisodeState]:
    """Run one noise-free episode; returns the reward sum and episode stats."""
    state, obs = env.reset(seed=seed, scenario=scenario, n_ships=n_ships)
    total = 0.0
    done = False
    while not done:
        action = policy_action(actor, obs, variant, feature_softsign)
        state, obs, breakdown, done = env.step(state, RUDDER_MAX_DEG * action)
        total += breakdown.total
    return total, state


def evaluate_policy(
    env: Environment,
    actor: ActorParams,
    variant: str,
    feature_softsign: bool,
    episodes: int,
    seed: int,
    n_ships: int | None = None,
) -> tuple[EvalSummary, list[EvalEpisode]]:
    """Fixed-seed evaluation sweep; per-episode seeds derive from `seed`."""
    if episodes < 0:
        raise ValueError("episodes must be non-negative")
    rows: list[EvalEpisode] = []
    if episodes > 0:
        episode_seeds = np.random.default_rng(seed).integers(0, 2**63, size=episodes)
        for i, ep_seed in enumerate(episode_seeds):
            ep_seed = int(ep_seed)
            total, state = rollout_episode(
                env, actor, variant, feature_softsign, seed=ep_seed, n_ships=n_ships
            )
            rows.append(
                EvalEpisode(
                    episode=i,
                    seed=ep_seed,
                    episode_return=total,
                    invaded=state.invaded,
                    invasion_events=state.invasion_events,
                    max_cr=state.max_cr,
                )
            )
    if rows:
        summary = EvalSummary(
            episodes=len(rows),
            mean_return=float(np.mean([r.episode_return for r in rows])),
            min_return=float(min(r.episode_return for r in rows)),
            invasion_episode_rate=float(np.mean([r.invaded for r in rows])),
            mean_max_cr=float(np.mean([r.max_cr for r in rows])),
        )
    else:
        summary = EvalSummary(
            episodes=0,
            mean_return=0.0,
            min_return=0.0,
            invasion_episode_rate=0.0,
            mean_max_cr=0.0,
        )
    return summary, rows
