"""DDPG objectives over transition batches.

Critic: mean squared TD error against targets built from the target actor
and target critic; episode-end transitions are time-limit truncations, so
the target always bootstraps. Actor: negative mean Q plus L2 parameter
regularization, an action-smoothing term against perturbed and successor
states, and an action-magnitude term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..neural import MlpGrads, NonFiniteError
from .networks import (
    ActorParams,
    BatchGroup,
    CriticParams,
    ObsBatch,
    actor_apply,
    actor_apply_backward,
    actor_networks_dict,
    critic_apply,
    critic_apply_backward,
)


@dataclass
class TransitionBatch:
    obs: ObsBatch
    actions: np.ndarray  # (B,), normalized to [-1, 1]
    rewards: np.ndarray  # (B,)
    next_obs: ObsBatch
    time_limit: np.ndarray  # (B,) bool; informational (bootstrapping is unconditional)

    @property
    def size(self) -> int:
        return self.obs.size


@dataclass(frozen=True)
class ActorLossGains:
    lambda_reg: float = 0.001
    lambda_s: float = 0.005
    lambda_a: float = 0.0001


def perturb_obs_batch(
    obs: ObsBatch, rng: np.random.Generator, sigma: float
) -> ObsBatch:
    """Gaussian feature noise in normalized units; grouping kept as-is."""
    wp = obs.wp + rng.normal(0.0, sigma, size=obs.wp.shape)
    groups = [
        BatchGroup(
            n_ships=g.n_ships,
            indices=g.indices,
            oth=g.oth + rng.normal(0.0, sigma, size=g.oth.shape),
        )
        for g in obs.groups
    ]
    return ObsBatch(size=obs.size, wp=wp, groups=groups, orders=obs.orders)


def critic_loss_and_grads(
    critic: CriticParams,
    target_critic: CriticParams,
    target_actor: ActorParams,
    batch: TransitionBatch,
    gamma: float,
    variant: str,
    feature_softsign: bool = True,
) -> tuple[float, dict[str, MlpGrads]]:
    """Mean squared TD error and gradients for the online critic only."""
    next_actions, _ = actor_apply(target_actor, batch.next_obs, variant, feature_softsign)
    q_next, _ = critic_apply(target_critic, batch.next_obs, next_actions)
    targets = batch.rewards + gamma * q_next
    q, tape = critic_apply(critic, batch.obs, batch.actions)
    err = q - targets
    loss = float(np.mean(np.square(err)))
    if not math.isfinite(loss):
        raise NonFiniteError("critic loss is non-finite")
    d_q = (2.0 / batch.size) * err
    grads, _ = critic_apply_backward(tape, d_q)
    return loss, grads


def actor_loss_and_grads(
    actor: ActorParams,
    critic: CriticParams,
    batch: TransitionBatch,
    perturbed_obs: ObsBatch | None,
    gains: ActorLossGains,
    variant: str,
    feature_softsign: bool = True,
) -> tuple[float, dict[str, MlpGrads]]:
    """Full actor objective and gradients; the critic stays frozen.

    perturbed_obs must be a noise-perturbated copy of batch.obs (required
    whenever gains.lambda_s > 0); passing it explicitly keeps the loss a
    deterministic function of its arguments.
    """
    size = batch.size
    actions, tape_s = actor_apply(actor, batch.obs, variant, feature_softsign)
    q, critic_tape = critic_apply(critic, batch.obs, actions)
    loss = -float(np.mean(q))
    d_actions = np.zeros(size)

    # value term: d(-mean q)/d a via the critic's action-input gradient
    _, d_q_actions = critic_apply_backward(critic_tape, np.full(size, -1.0 / size))
    d_actions += d_q_actions

    # L2 regularization over every actor parameter
    reg = 0.0
    reg_nets = actor_networks_dict(actor)
    for params in reg_nets.values():
        for w, b in zip(params.weights, params.biases):
            reg += float(np.sum(np.square(w))) + float(np.sum(np.square(b)))
    loss += gains.lambda_reg * reg

    # smoothing term against perturbed and successor observations
    smooth_tapes = []
    if gains.lambda_s > 0.0:
        if perturbed_obs is None:
            raise ValueError("perturbed_obs is required when lambda_s > 0")
        a_hat, tape_hat = actor_apply(actor, perturbed_obs, variant, feature_softsign)
        a_next, tape_next = actor_apply(actor, batch.next_obs, variant, feature_softsign)
        diff_hat = actions - a_hat
        diff_next = actions - a_next
        mean_sq = float(np.mean(np.square(diff_hat) + np.square(diff_next)))
        if mean_sq > 0.0:
            root = math.sqrt(mean_sq)
            loss += gains.lambda_s * root
            scale = gains.lambda_s / (root * size)
            d_actions += scale * (diff_hat + diff_next)
            smooth_tapes.append((tape_hat, -scale * diff_hat))
            smooth_tapes.append((tape_next, -scale * diff_next))

    # action-scale term
    loss += gains.lambda_a * float(np.mean(np.abs(actions)))
    d_actions += gains.lambda_a * np.sign(actions) / size

    if not math.isfinite(loss):
        raise NonFiniteError("actor loss is non-finite")

    grads = actor_apply_backward(tape_s, d_actions)
    for tape, d_a in smooth_tapes:
        extra = actor_apply_backward(tape, d_a)
        for name, g in extra.items():
            grads[name].add_(g)
    for name, params in reg_nets.items():
        g = grads[name]
        for i, (w, b) in enumerate(zip(params.weights, params.biases)):
            g.weights[i] += 2.0 * gains.lambda_reg * w
            g.biases[i] += 2.0 * gains.lambda_reg * b
    return loss, grads
