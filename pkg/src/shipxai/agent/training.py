"""Single-threaded, fully deterministic DDPG training loop.

Exploration is uniform random during warm-up, then Gaussian noise on the
deterministic action with a linearly annealed sigma. Every train_interval
environment steps past warm-up the trainer performs critic, actor and
target soft updates. All randomness derives from one master seed through
named SeedSequence children, so identical configs produce byte-identical
metrics files.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..checkpoint import Checkpoint, save_checkpoint
from ..dynamics import RUDDER_MAX_DEG, NomotoParams
from ..env import Environment
from ..neural import AdamState, NonFiniteError, adam_update, soft_update
from ..observation import ObsScales
from ..reward import SHIP_LOA_KM
from ..scenario import ScenarioConfig
from .losses import (
    ActorLossGains,
    actor_loss_and_grads,
    critic_loss_and_grads,
    perturb_obs_batch,
)
from .networks import (
    VARIANT_ATTENTION,
    VARIANTS,
    ActorParams,
    CriticParams,
    actor_networks_dict,
    critic_networks_dict,
    init_actor,
    init_critic,
    policy_action,
)
from .replay import ReplayBuffer

METRICS_COLUMNS = (
    "env_step",
    "episode",
    "episode_return",
    "critic_loss",
    "actor_loss",
    "invasion_events",
    "epsilon_sigma",
)


class TrainingDiverged(RuntimeError):
    """Raised when a loss or gradient becomes non-finite; training aborts."""


@dataclass(frozen=True)
class TrainConfig:
    learning_steps: int = 10_000_000
    train_interval: int = 100
    learning_rate: float = 0.001
    target_update_rate: float = 0.001
    batch_size: int = 1024
    gamma: float = 0.98
    lambda_reg: float = 0.001
    lambda_s: float = 0.005
    lambda_a: float = 0.0001
    buffer_capacity: int = 1_000_000
    warmup_steps: int = 10_000
    updates_per_trigger: int = 1
    sigma_start: float = 0.3
    sigma_end: float = 0.05
    sigma_anneal_frac: float = 0.5
    smoothing_noise_sigma: float = 0.01
    checkpoint_interval: int = 100_000
    feature_softsign: bool = True
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self) -> None:
        positive = (
            "learning_steps",
            "train_interval",
            "learning_rate",
            "target_update_rate",
            "batch_size",
            "buffer_capacity",
            "updates_per_trigger",
            "checkpoint_interval",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")
        if self.warmup_steps < 0:
            raise ValueError("warmup_steps must be non-negative")

    def sigma_at(self, step: int, total_steps: int) -> float:
        anneal = max(1.0, self.sigma_anneal_frac * total_steps)
        frac = min(1.0, step / anneal)
        return self.sigma_start + (self.sigma_end - self.sigma_start) * frac


@dataclass
class TrainResult:
    out_dir: Path
    init_checkpoint: Path
    final_checkpoint: Path
    metrics_path: Path
    checkpoints: list[Path]
    env_steps: int
    episodes: int
    wall_seconds: float


def build_checkpoint(
    critic: CriticParams,
    actor: ActorParams,
    target_critic: CriticParams,
    target_actor: ActorParams,
    *,
    hyperparams: dict,
    scales: ObsScales,
    seed: int,
    actor_variant: str,
    env_steps: int,
    episodes: int,
    config_hash: str,
    tag: str,
) -> Checkpoint:
    networks = {}
    networks.update(critic_networks_dict(critic))
    networks.update(actor_networks_dict(actor))
    networks.update({f"target_{k}": v for k, v in critic_networks_dict(target_critic).items()})
    networks.update({f"target_{k}": v for k, v in actor_networks_dict(target_actor).items()})
    return Checkpoint(
        hyperparams=hyperparams,
        obs_normalization=scales.as_dict(),
        rng_seed=seed,
        networks=networks,
        meta={
            "actor_variant": actor_variant,
            "env_steps": env_steps,
            "episodes": episodes,
            "config_hash": config_hash,
            "tag": tag,
        },
    )


class Trainer:
    def __init__(
        self,
        *,
        scenario_cfg: ScenarioConfig,
        nomoto: NomotoParams,
        scales: ObsScales,
        train_cfg: TrainConfig,
        actor_variant: str,
        seed: int,
        out_dir: str | Path,
        resolved_config: dict | None = None,
        config_hash: str = "",
        steps_override: int | None = None,
        loa: float = SHIP_LOA_KM,
    ):
        if actor_variant not in VARIANTS:
            raise ValueError(f"unknown actor variant: {actor_variant!r}")
        self.scenario_cfg = scenario_cfg
        self.train_cfg = train_cfg
        self.actor_variant = actor_variant
        self.seed = seed
        self.out_dir = Path(out_dir)
        self.resolved_config = resolved_config or {}
        self.config_hash = config_hash
        self.total_steps = (
            steps_override if steps_override is not None else train_cfg.learning_steps
        )
        if self.total_steps <= 0:
            raise ValueError("total step count must be positive")
        self.env = Environment(scenario_cfg, nomoto, scales, loa=loa)
        self.scales = scales

        master = np.random.SeedSequence(seed)
        init_ss, episode_ss, explore_ss, sample_ss, smooth_ss = master.spawn(5)
        init_rng = np.random.default_rng(init_ss)
        self.episode_rng = np.random.default_rng(episode_ss)
        self.explore_rng = np.random.default_rng(explore_ss)
        self.sample_rng = np.random.default_rng(sample_ss)
        self.smooth_rng = np.random.default_rng(smooth_ss)

        self.critic = init_critic(init_rng)
        self.actor = init_actor(init_rng, attention=actor_variant == VARIANT_ATTENTION)
        self.target_critic = self.critic
        self.target_actor = self.actor

        beta = dict(beta1=train_cfg.adam_beta1, beta2=train_cfg.adam_beta2, eps=train_cfg.adam_eps)
        self.adam: dict[str, AdamState] = {
            name: AdamState.for_params(params, **beta)
            for name, params in {
                **critic_networks_dict(self.critic),
                **actor_networks_dict(self.actor),
            }.items()
        }
        self.buffer = ReplayBuffer(
            capacity=train_cfg.buffer_capacity,
            episode_length_hint=scenario_cfg.episode_steps,
        )
        self.gains = ActorLossGains(
            lambda_reg=train_cfg.lambda_reg,
            lambda_s=train_cfg.lambda_s,
            lambda_a=train_cfg.lambda_a,
        )

    # -- policy ------------------------------------------------------------

    def _explore_action(self, obs, step: int) -> float:
        cfg = self.train_cfg
        if step <= cfg.warmup_steps:
            noise = self.explore_rng.uniform(-1.0, 1.0)
            return float(noise)
        sigma = cfg.sigma_at(step - 1, self.total_steps)
        noise = self.explore_rng.normal(0.0, sigma)
        action = policy_action(self.actor, obs, self.actor_variant, cfg.feature_softsign)
        return float(np.clip(action + noise, -1.0, 1.0))

    # -- updates -----------------------------------------------------------

    def _update_once(self) -> tuple[float, float]:
        cfg = self.train_cfg
        batch = self.buffer.sample(self.sample_rng, cfg.batch_size)
        critic_loss, critic_grads = critic_loss_and_grads(
            self.critic,
            self.target_critic,
            self.target_actor,
            batch,
            cfg.gamma,
            self.actor_variant,
            cfg.feature_softsign,
        )
        self.critic = CriticParams(
            q_wp=adam_update(self.critic.q_wp, critic_grads["q_wp"], self.adam["q_wp"], cfg.learning_rate),
            q_ca=adam_update(self.critic.q_ca, critic_grads["q_ca"], self.adam["q_ca"], cfg.learning_rate),
        )

        perturbed = perturb_obs_batch(batch.obs, self.smooth_rng, cfg.smoothing_noise_sigma)
        actor_loss, actor_grads = actor_loss_and_grads(
            self.actor,
            self.critic,
            batch,
            perturbed,
            self.gains,
            self.actor_variant,
            cfg.feature_softsign,
        )
        self.actor = ActorParams(
            e_wp=adam_update(self.actor.e_wp, actor_grads["e_wp"], self.adam["e_wp"], cfg.learning_rate),
            e_oth=adam_update(self.actor.e_oth, actor_grads["e_oth"], self.adam["e_oth"], cfg.learning_rate),
            head_a=adam_update(self.actor.head_a, actor_grads["head_a"], self.adam["head_a"], cfg.learning_rate),
            attention=adam_update(
                self.actor.attention, actor_grads["attention"], self.adam["attention"], cfg.learning_rate
            )
            if self.actor.attention is not None
            else None,
        )

        rate = cfg.target_update_rate
        self.target_critic = CriticParams(
            q_wp=soft_update(self.target_critic.q_wp, self.critic.q_wp, rate),
            q_ca=soft_update(self.target_critic.q_ca, self.critic.q_ca, rate),
        )
        self.target_actor = ActorParams(
            e_wp=soft_update(self.target_actor.e_wp, self.actor.e_wp, rate),
            e_oth=soft_update(self.target_actor.e_oth, self.actor.e_oth, rate),
            head_a=soft_update(self.target_actor.head_a, self.actor.head_a, rate),
            attention=soft_update(self.target_actor.attention, self.actor.attention, rate)
            if self.actor.attention is not None
            else None,
        )
        return critic_loss, actor_loss

    # -- checkpoints ---------------------------------------------------------

    def _write_checkpoint(self, tag: str, env_steps: int, episodes: int) -> Path:
        cp = build_checkpoint(
            self.critic,
            self.actor,
            self.target_critic,
            self.target_actor,
            hyperparams=self.resolved_config,
            scales=self.scales,
            seed=self.seed,
            actor_variant=self.actor_variant,
            env_steps=env_steps,
            episodes=episodes,
            config_hash=self.config_hash,
            tag=tag,
        )
        path = self.out_dir / f"checkpoint_{tag}.json"
        save_checkpoint(cp, path)
        return path

    # -- main loop -----------------------------------------------------------

    def run(self, progress=None) -> TrainResult:
        cfg = self.train_cfg
        self.out_dir.mkdir(parents=True, exist_ok=True)
        metrics_path = self.out_dir / "metrics.csv"
        started = time.perf_counter()

        init_path = self._write_checkpoint("init", 0, 0)
        checkpoints = [init_path]

        episode = 0
        episode_return = 0.0
        last_critic_loss: float | None = None
        last_actor_loss: float | None = None

        with metrics_path.open("w", newline="") as fh:
            fh.write(f"# config_hash={self.config_hash} seed={self.seed}\n")
            writer = csv.writer(fh)
            writer.writerow(METRICS_COLUMNS)

            state, obs = self.env.reset(seed=self._next_episode_seed())
            self.buffer.start_episode(obs)

            for step in range(1, self.total_steps + 1):
                try:
                    action = self._explore_action(obs, step)
                except NonFiniteError as exc:
                    raise TrainingDiverged(
                        f"non-finite actor output at env step {step}: {exc}"
                    ) from exc
                state, next_obs, breakdown, done = self.env.step(
                    state, RUDDER_MAX_DEG * action
                )
                self.buffer.add_step(action, breakdown.total, next_obs, state.time_limit)
                episode_return += breakdown.total
                obs = next_obs

                if (
                    step > cfg.warmup_steps
                    and (step - cfg.warmup_steps) % cfg.train_interval == 0
                    and len(self.buffer) >= cfg.batch_size
                ):
                    for _ in range(cfg.updates_per_trigger):
                        try:
                            last_critic_loss, last_actor_loss = self._update_once()
                        except NonFiniteError as exc:
                            raise TrainingDiverged(
                                f"non-finite value during update at env step {step}: {exc}"
                            ) from exc

                if done:
                    episode += 1
                    writer.writerow(
                        [
                            step,
                            episode,
                            repr(episode_return),
                            "" if last_critic_loss is None else repr(last_critic_loss),
                            "" if last_actor_loss is None else repr(last_actor_loss),
                            state.invasion_events,
                            repr(cfg.sigma_at(step, self.total_steps)),
                        ]
                    )
                    if progress is not None:
                        progress(step, episode, episode_return)
                    episode_return = 0.0
                    if step < self.total_steps:
                        state, obs = self.env.reset(seed=self._next_episode_seed())
                        self.buffer.start_episode(obs)

                if step % cfg.checkpoint_interval == 0 and step < self.total_steps:
                    checkpoints.append(
                        self._write_checkpoint(f"step_{step:09d}", step, episode)
                    )

        final_path = self._write_checkpoint("final", self.total_steps, episode)
        checkpoints.append(final_path)
        return TrainResult(
            out_dir=self.out_dir,
            init_checkpoint=init_path,
            final_checkpoint=final_path,
            metrics_path=metrics_path,
            checkpoints=checkpoints,
            env_steps=self.total_steps,
            episodes=episode,
            wall_seconds=time.perf_counter() - started,
        )

    def _next_episode_seed(self) -> int:
        return int(self.episode_rng.integers(0, 2**63))
