"""Actor and critic network structures over stacked observations.

The critic is a sum of sub-task heads: one waypoint Q-network plus one
collision-avoidance Q-network shared across ships. The actor encodes the
waypoint block and each ship block to 128-wide features, pools the ship
features (plain sum or attention-weighted average), squashes the pooled sum
and maps it to a rudder action in (-1, 1).

Ship-set reductions always run in a canonical content order, so permuting
the input ship list changes no output bit. Batched paths group transitions
by ship count; a single observation is a batch of one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..neural import LayerSpec, MlpGrads, MlpParams, MlpTape, init_params, mlp_backward, mlp_forward
from ..observation import OTH_FLAT, StackedObservation, WP_FLAT

VARIANT_PLAIN = "plain"
VARIANT_ATTENTION = "attention"
VARIANTS = (VARIANT_PLAIN, VARIANT_ATTENTION)

ENCODED_WIDTH = 128
ACTION_WIDTH = 1

Q_WP_INPUT = WP_FLAT + ACTION_WIDTH
Q_CA_INPUT = OTH_FLAT + ACTION_WIDTH
ATTENTION_INPUT = 2 * OTH_FLAT


def critic_layer_specs() -> tuple[LayerSpec, ...]:
    return (
        LayerSpec(256, "relu"),
        LayerSpec(256, "relu"),
        LayerSpec(128, "relu"),
        LayerSpec(1, "identity"),
    )


def encoder_layer_specs() -> tuple[LayerSpec, ...]:
    return (
        LayerSpec(256, "leaky_relu"),
        LayerSpec(256, "leaky_relu"),
        LayerSpec(ENCODED_WIDTH, "identity"),
    )


def action_head_layer_specs() -> tuple[LayerSpec, ...]:
    return (
        LayerSpec(256, "leaky_relu"),
        LayerSpec(256, "leaky_relu"),
        LayerSpec(128, "leaky_relu"),
        LayerSpec(1, "softsign"),
    )


def attention_layer_specs() -> tuple[LayerSpec, ...]:
    return (
        LayerSpec(256, "leaky_relu"),
        LayerSpec(256, "leaky_relu"),
        LayerSpec(1, "identity"),
    )


@dataclass(frozen=True)
class CriticParams:
    q_wp: MlpParams  # waypoint block + action -> scalar
    q_ca: MlpParams  # one ship block + action -> scalar, shared across ships


@dataclass(frozen=True)
class ActorParams:
    e_wp: MlpParams
    e_oth: MlpParams  # shared across ships
    head_a: MlpParams
    attention: MlpParams | None = None  # pairwise scorer, attention variant only


def init_critic(rng: np.random.Generator) -> CriticParams:
    return CriticParams(
        q_wp=init_params(Q_WP_INPUT, critic_layer_specs(), rng),
        q_ca=init_params(Q_CA_INPUT, critic_layer_specs(), rng),
    )


def init_actor(rng: np.random.Generator, attention: bool) -> ActorParams:
    return ActorParams(
        e_wp=init_params(WP_FLAT, encoder_layer_specs(), rng),
        e_oth=init_params(OTH_FLAT, encoder_layer_specs(), rng),
        head_a=init_params(ENCODED_WIDTH, action_head_layer_specs(), rng),
        attention=init_params(ATTENTION_INPUT, attention_layer_specs(), rng)
        if attention
        else None,
    )


def critic_networks_dict(critic: CriticParams) -> dict[str, MlpParams]:
    return {"q_wp": critic.q_wp, "q_ca": critic.q_ca}


def actor_networks_dict(actor: ActorParams) -> dict[str, MlpParams]:
    nets = {"e_wp": actor.e_wp, "e_oth": actor.e_oth, "head_a": actor.head_a}
    if actor.attention is not None:
        nets["attention"] = actor.attention
    return nets


def critic_from_networks(nets: dict[str, MlpParams], prefix: str = "") -> CriticParams:
    return CriticParams(q_wp=nets[prefix + "q_wp"], q_ca=nets[prefix + "q_ca"])


def actor_from_networks(nets: dict[str, MlpParams], prefix: str = "") -> ActorParams:
    return ActorParams(
        e_wp=nets[prefix + "e_wp"],
        e_oth=nets[prefix + "e_oth"],
        head_a=nets[prefix + "head_a"],
        attention=nets.get(prefix + "attention"),
    )


def canonical_ship_order(flat_oth: np.ndarray) -> np.ndarray:
    """Content-based total order over ship blocks (any permutation of the
    same set sorts to identical array contents)."""
    n = flat_oth.shape[0]
    order = sorted(range(n), key=lambda i: flat_oth[i].tobytes())
    return np.asarray(order, dtype=np.int64)


@dataclass
class BatchGroup:
    n_ships: int
    indices: np.ndarray  # (g,) positions within the batch
    oth: np.ndarray  # (g, n, OTH_FLAT), ships in canonical order


@dataclass
class ObsBatch:
    size: int
    wp: np.ndarray  # (B, WP_FLAT)
    groups: list[BatchGroup]  # ship-count groups with n >= 1, ascending n
    orders: list[np.ndarray]  # canonical order per observation


def make_obs_batch(obs_list: list[StackedObservation]) -> ObsBatch:
    size = len(obs_list)
    if size == 0:
        raise ValueError("observation batch must not be empty")
    wp = np.stack([o.flat_wp() for o in obs_list])
    buckets: dict[int, tuple[list[int], list[np.ndarray]]] = {}
    orders: list[np.ndarray] = []
    for i, obs in enumerate(obs_list):
        flat = obs.flat_oth()
        order = canonical_ship_order(flat)
        orders.append(order)
        n = obs.n_ships
        if n == 0:
            continue
        idxs, rows = buckets.setdefault(n, ([], []))
        idxs.append(i)
        rows.append(flat[order])
    groups = [
        BatchGroup(
            n_ships=n,
            indices=np.asarray(idxs, dtype=np.int64),
            oth=np.stack(rows),
        )
        for n, (idxs, rows) in sorted(buckets.items())
    ]
    return ObsBatch(size=size, wp=wp, groups=groups, orders=orders)


def _fold_columns(matrix: np.ndarray) -> np.ndarray:
    """Left-fold sum over axis 1 starting from zero (fixed summation order)."""
    acc = np.zeros(matrix.shape[0], dtype=np.float64)
    for j in range(matrix.shape[1]):
        acc = acc + matrix[:, j]
    return acc


# ---------------------------------------------------------------------------
# Critic
# ---------------------------------------------------------------------------


@dataclass
class CriticGroupTape:
    group: BatchGroup
    tape: MlpTape
    q_ca: np.ndarray  # (g, n)


@dataclass
class CriticTape:
    critic: CriticParams
    size: int
    q_wp_tape: MlpTape
    q_wp: np.ndarray  # (B,)
    group_tapes: list[CriticGroupTape]


def critic_apply(
    critic: CriticParams, obs: ObsBatch, actions: np.ndarray
) -> tuple[np.ndarray, CriticTape]:
    """Batched sub-task critic: q_total = q_wp + left-fold(q_ca per ship)."""
    actions = np.asarray(actions, dtype=np.float64)
    if actions.shape != (obs.size,):
        raise ValueError(f"actions shape {actions.shape} != ({obs.size},)")
    x_wp = np.concatenate([obs.wp, actions[:, None]], axis=1)
    out_wp, q_wp_tape = mlp_forward(critic.q_wp, x_wp)
    q_wp = out_wp[:, 0]
    q_total = q_wp.copy()
    group_tapes: list[CriticGroupTape] = []
    for group in obs.groups:
        g, n = group.oth.shape[:2]
        acts = np.repeat(actions[group.indices], n)
        x_ca = np.concatenate([group.oth.reshape(g * n, OTH_FLAT), acts[:, None]], axis=1)
        out_ca, tape = mlp_forward(critic.q_ca, x_ca)
        q_ca = out_ca[:, 0].reshape(g, n)
        q_total[group.indices] = q_wp[group.indices] + _fold_columns(q_ca)
        group_tapes.append(CriticGroupTape(group=group, tape=tape, q_ca=q_ca))
    return q_total, CriticTape(
        critic=critic, size=obs.size, q_wp_tape=q_wp_tape, q_wp=q_wp, group_tapes=group_tapes
    )


def critic_apply_backward(
    tape: CriticTape, d_q_total: np.ndarray
) -> tuple[dict[str, MlpGrads], np.ndarray]:
    """Gradients of sum(d_q_total * q_total) w.r.t. critic params and actions."""
    d_q = np.asarray(d_q_total, dtype=np.float64)
    if d_q.shape != (tape.size,):
        raise ValueError(f"d_q_total shape {d_q.shape} != ({tape.size},)")
    grads_wp, d_x_wp = mlp_backward(tape.q_wp_tape, d_q[:, None])
    d_actions = d_x_wp[:, -1].copy()
    grads_ca = MlpGrads.zeros_like(tape.critic.q_ca)
    for gt in tape.group_tapes:
        g, n = gt.q_ca.shape
        d_out = np.repeat(d_q[gt.group.indices], n)[:, None]
        grads_i, d_x_ca = mlp_backward(gt.tape, d_out)
        grads_ca.add_(grads_i)
        d_actions[gt.group.indices] += _fold_columns(d_x_ca[:, -1].reshape(g, n))
    return {"q_wp": grads_wp, "q_ca": grads_ca}, d_actions


@dataclass(frozen=True)
class CriticEvaluation:
    q_total: float
    q_wp: float
    q_ca: tuple[float, ...]  # per ship, input order
    summation_order: tuple[int, ...]  # canonical order used for the fold

    def fold_q_ca(self) -> float:
        """Recompute the ship sum exactly as critic_apply folded it."""
        acc = 0.0
        for i in self.summation_order:
            acc = acc + self.q_ca[i]
        return acc


def critic_forward(
    critic: CriticParams, obs: StackedObservation, action: float
) -> CriticEvaluation:
    """Single-observation critic evaluation with per-ship Q components."""
    batch = make_obs_batch([obs])
    q_total, tape = critic_apply(critic, batch, np.array([float(action)]))
    order = batch.orders[0]
    q_ca = np.zeros(obs.n_ships)
    if obs.n_ships > 0:
        q_ca[order] = tape.group_tapes[0].q_ca[0]
    return CriticEvaluation(
        q_total=float(q_total[0]),
        q_wp=float(tape.q_wp[0]),
        q_ca=tuple(float(v) for v in q_ca),
        summation_order=tuple(int(i) for i in order),
    )


# ---------------------------------------------------------------------------
# Actor
# ---------------------------------------------------------------------------


@dataclass
class ActorGroupTape:
    group: BatchGroup
    e_oth_tape: MlpTape
    u: np.ndarray  # (g, n, ENCODED_WIDTH)
    attention_tape: MlpTape | None = None
    alpha: np.ndarray | None = None  # (g, n)


@dataclass
class ActorTape:
    actor: ActorParams
    variant: str
    feature_softsign: bool
    size: int
    e_wp_tape: MlpTape
    pooled_sum: np.ndarray  # (B, ENCODED_WIDTH) before the softsign squash
    head_tape: MlpTape
    group_tapes: list[ActorGroupTape]


def actor_apply(
    actor: ActorParams,
    obs: ObsBatch,
    variant: str = VARIANT_PLAIN,
    feature_softsign: bool = True,
) -> tuple[np.ndarray, ActorTape]:
    """Batched actor: encode, pool over ships, squash, action head."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown actor variant: {variant!r}")
    if variant == VARIANT_ATTENTION and actor.attention is None:
        raise ValueError("attention variant requires attention scorer parameters")
    e_wp_out, e_wp_tape = mlp_forward(actor.e_wp, obs.wp)
    pooled_sum = e_wp_out.copy()
    group_tapes: list[ActorGroupTape] = []
    for group in obs.groups:
        g, n = group.oth.shape[:2]
        u_flat, e_oth_tape = mlp_forward(actor.e_oth, group.oth.reshape(g * n, OTH_FLAT))
        u = u_flat.reshape(g, n, ENCODED_WIDTH)
        if variant == VARIANT_PLAIN:
            pooled = np.zeros((g, ENCODED_WIDTH))
            for j in range(n):
                pooled = pooled + u[:, j, :]
            group_tapes.append(ActorGroupTape(group=group, e_oth_tape=e_oth_tape, u=u))
        else:
            pairs = np.empty((g, n, n, ATTENTION_INPUT))
            pairs[..., :OTH_FLAT] = group.oth[:, :, None, :]
            pairs[..., OTH_FLAT:] = group.oth[:, None, :, :]
            pair_out, attention_tape = mlp_forward(
                actor.attention, pairs.reshape(g * n * n, ATTENTION_INPUT)
            )
            scores = _fold_pair_scores(pair_out[:, 0].reshape(g, n, n))
            alpha = _softmax_rows(scores)
            pooled = np.zeros((g, ENCODED_WIDTH))
            for j in range(n):
                pooled = pooled + alpha[:, j : j + 1] * u[:, j, :]
            group_tapes.append(
                ActorGroupTape(
                    group=group,
                    e_oth_tape=e_oth_tape,
                    u=u,
                    attention_tape=attention_tape,
                    alpha=alpha,
                )
            )
        pooled_sum[group.indices] += pooled
    features = _softsign(pooled_sum) if feature_softsign else pooled_sum
    head_out, head_tape = mlp_forward(actor.head_a, features)
    actions = head_out[:, 0]
    return actions, ActorTape(
        actor=actor,
        variant=variant,
        feature_softsign=feature_softsign,
        size=obs.size,
        e_wp_tape=e_wp_tape,
        pooled_sum=pooled_sum,
        head_tape=head_tape,
        group_tapes=group_tapes,
    )


def _fold_pair_scores(pair_scores: np.ndarray) -> np.ndarray:
    """scores[b, i] = left-fold over j of pair_scores[b, i, j]."""
    g, n, _ = pair_scores.shape
    acc = np.zeros((g, n))
    for j in range(n):
        acc = acc + pair_scores[:, :, j]
    return acc


def _softmax_rows(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax with a left-fold normalizer (canonical order)."""
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    z = np.zeros(scores.shape[0])
    for j in range(scores.shape[1]):
        z = z + e[:, j]
    return e / z[:, None]


def _softsign(x: np.ndarray) -> np.ndarray:
    return x / (1.0 + np.abs(x))


def actor_apply_backward(tape: ActorTape, d_actions: np.ndarray) -> dict[str, MlpGrads]:
    """Gradients of sum(d_actions * actions) w.r.t. actor parameters."""
    d_a = np.asarray(d_actions, dtype=np.float64)
    if d_a.shape != (tape.size,):
        raise ValueError(f"d_actions shape {d_a.shape} != ({tape.size},)")
    grads_head, d_features = mlp_backward(tape.head_tape, d_a[:, None])
    if tape.feature_softsign:
        d_sum = d_features / np.square(1.0 + np.abs(tape.pooled_sum))
    else:
        d_sum = d_features
    grads_e_wp, _ = mlp_backward(tape.e_wp_tape, d_sum)
    grads = {
        "e_wp": grads_e_wp,
        "e_oth": MlpGrads.zeros_like(tape.actor.e_oth),
        "head_a": grads_head,
    }
    if tape.actor.attention is not None:
        grads["attention"] = MlpGrads.zeros_like(tape.actor.attention)
    for gt in tape.group_tapes:
        g, n = gt.u.shape[:2]
        d_pooled = d_sum[gt.group.indices]
        if tape.variant == VARIANT_PLAIN:
            d_u = np.repeat(d_pooled, n, axis=0)
            grads_oth, _ = mlp_backward(gt.e_oth_tape, d_u)
            grads["e_oth"].add_(grads_oth)
        else:
            alpha = gt.alpha
            d_u = (alpha[:, :, None] * d_pooled[:, None, :]).reshape(g * n, ENCODED_WIDTH)
            grads_oth, _ = mlp_backward(gt.e_oth_tape, d_u)
            grads["e_oth"].add_(grads_oth)
            d_alpha = np.einsum("gnk,gk->gn", gt.u, d_pooled)
            weighted = np.zeros(g)
            for j in range(n):
                weighted = weighted + alpha[:, j] * d_alpha[:, j]
            d_scores = alpha * (d_alpha - weighted[:, None])
            d_pairs = np.repeat(d_scores.reshape(g * n), n)[:, None]
            grads_attn, _ = mlp_backward(gt.attention_tape, d_pairs)
            grads["attention"].add_(grads_attn)
    return grads


def actor_forward(
    actor: ActorParams, obs: StackedObservation, feature_softsign: bool = True
) -> float:
    """Deterministic plain-variant action in (-1, 1) for one observation."""
    batch = make_obs_batch([obs])
    actions, _ = actor_apply(actor, batch, VARIANT_PLAIN, feature_softsign)
    return float(actions[0])


def attention_values(actor: ActorParams, obs: StackedObservation) -> np.ndarray:
    """Per-ship attention weights in input order; empty for zero ships."""
    _, alpha = actor_forward_attention(actor, obs)
    return alpha


def actor_forward_attention(
    actor: ActorParams, obs: StackedObservation, feature_softsign: bool = True
) -> tuple[float, np.ndarray]:
    """Attention-variant action plus per-ship attention values (input order)."""
    if actor.attention is None:
        raise ValueError("actor has no attention scorer parameters")
    batch = make_obs_batch([obs])
    actions, tape = actor_apply(actor, batch, VARIANT_ATTENTION, feature_softsign)
    alpha = np.zeros(obs.n_ships)
    if obs.n_ships > 0:
        alpha[batch.orders[0]] = tape.group_tapes[0].alpha[0]
    return float(actions[0]), alpha


def policy_action(
    actor: ActorParams,
    obs: StackedObservation,
    variant: str,
    feature_softsign: bool = True,
) -> float:
    """Variant-dispatching deterministic action for rollouts."""
    if variant == VARIANT_ATTENTION:
        action, _ = actor_forward_attention(actor, obs, feature_softsign)
        return action
    return actor_forward(actor, obs, feature_softsign)
