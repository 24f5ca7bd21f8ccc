"""Rebuild a runnable agent (networks + environment) from a checkpoint."""

from __future__ import annotations

from dataclasses import dataclass

from .agent.networks import ActorParams, CriticParams, actor_from_networks, critic_from_networks
from .checkpoint import Checkpoint, CheckpointError
from .config import RunConfig
from .env import Environment
from .observation import ObsScales


@dataclass
class RestoredAgent:
    run_config: RunConfig
    critic: CriticParams
    actor: ActorParams
    variant: str
    feature_softsign: bool
    scales: ObsScales
    env: Environment


def restore_from_checkpoint(cp: Checkpoint) -> RestoredAgent:
    run_config = RunConfig.from_dict(cp.hyperparams) if cp.hyperparams else RunConfig()
    scales = ObsScales.from_dict(cp.obs_normalization)
    try:
        critic = critic_from_networks(cp.networks)
        actor = actor_from_networks(cp.networks)
    except KeyError as exc:
        raise CheckpointError(f"checkpoint is missing network {exc}") from exc
    variant = cp.actor_variant
    if variant == "attention" and actor.attention is None:
        raise CheckpointError("attention-variant checkpoint lacks the attention network")
    env = Environment(
        scenario_cfg=run_config.scenario.to_core(),
        nomoto=run_config.dynamics.to_core(),
        scales=scales,
        loa=run_config.ship_loa_km,
    )
    return RestoredAgent(
        run_config=run_config,
        critic=critic,
        actor=actor,
        variant=variant,
        feature_softsign=run_config.train.feature_softsign,
        scales=scales,
        env=env,
    )
