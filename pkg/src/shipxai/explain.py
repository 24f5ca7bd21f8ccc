"""Per-step explanation of a trained policy on one scenario.

Sub-task priorities are the Q-value increments of the chosen action over
sailing straight (action 0). For the attention actor, per-ship attention
values are extracted and the intention index is the product of a ship's
collision-avoidance Q-value and its attention weight. A trace is a pure
function of (checkpoint, scenario): replays are bit-identical.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

from .agent.networks import (
    VARIANT_ATTENTION,
    CriticEvaluation,
    CriticParams,
    actor_forward,
    actor_forward_attention,
    critic_forward,
)
from .checkpoint import Checkpoint
from .dynamics import RUDDER_MAX_DEG
from .observation import StackedObservation, waypoint_observation
from .restore import restore_from_checkpoint
from .scenario import Scenario, scenario_from_doc, scenario_to_doc

TRACE_FORMAT_VERSION = 1


class TraceExportError(RuntimeError):
    """Trace file could not be written or read."""


@dataclass(frozen=True)
class Priorities:
    p_wp: float
    p_oth: tuple[float, ...]  # per ship, input order
    p_oth_total: float  # left-fold over the canonical order
    summation_order: tuple[int, ...]


def priorities_from_evaluations(
    at_action: CriticEvaluation, at_zero: CriticEvaluation
) -> Priorities:
    p_wp = at_action.q_wp - at_zero.q_wp
    p_oth = tuple(a - z for a, z in zip(at_action.q_ca, at_zero.q_ca))
    total = 0.0
    for i in at_action.summation_order:
        total = total + p_oth[i]
    return Priorities(
        p_wp=p_wp,
        p_oth=p_oth,
        p_oth_total=total,
        summation_order=at_action.summation_order,
    )


def priorities(
    critic: CriticParams, obs: StackedObservation, action: float
) -> Priorities:
    """Q-value increments of `action` over sailing straight, per sub-task."""
    at_action = critic_forward(critic, obs, float(action))
    at_zero = critic_forward(critic, obs, 0.0)
    return priorities_from_evaluations(at_action, at_zero)


def intention(q_ca_i: float, alpha_i: float) -> float:
    """Contribution of one ship to the behavioural intention."""
    return q_ca_i * alpha_i


@dataclass(frozen=True)
class ShipExplanation:
    x: float
    y: float
    course: float
    speed: float
    cr: float
    q_ca: float
    p_oth: float
    alpha: float | None = None  # attention actor only
    intention: float | None = None


@dataclass(frozen=True)
class ExplanationRecord:
    t: float  # [s] at decision time
    own_x: float
    own_y: float
    own_psi: float
    own_r: float
    own_delta: float
    wp_dtheta: float
    action: float
    q_wp: float
    p_wp: float
    p_oth_total: float
    reward_total: float
    reward_r_wp: float
    reward_r_dwp: float
    reward_r_oth: tuple[float, ...]
    ships: tuple[ShipExplanation, ...]


@dataclass(frozen=True)
class ExplanationTrace:
    scenario: dict
    checkpoint: dict
    actor_variant: str
    intention_at_taken_action: bool
    notes: tuple[str, ...]
    records: tuple[ExplanationRecord, ...]

    @property
    def n_ships(self) -> int:
        return len(self.records[0].ships) if self.records else 0

    @property
    def has_attention(self) -> bool:
        return self.actor_variant == VARIANT_ATTENTION


def explain_episode(
    cp: Checkpoint,
    scenario: Scenario,
    intention_at_taken_action: bool = True,
) -> ExplanationTrace:
    """Roll the checkpoint's deterministic policy through one scenario."""
    restored = restore_from_checkpoint(cp)
    env = restored.env
    attention = restored.variant == VARIANT_ATTENTION

    notes: list[str] = []
    max_trained = restored.run_config.scenario.n_ships_range[1]
    if scenario.n_ships > max_trained:
        notes.append(
            f"scenario has {scenario.n_ships} ships, above the training range "
            f"maximum of {max_trained}"
        )
    if not attention:
        notes.append("plain actor checkpoint: alpha and intention are unavailable")

    state, obs = env.reset(scenario=scenario)
    records: list[ExplanationRecord] = []
    for step in range(env.cfg.episode_steps):
        t = step * env.cfg.dt
        own = state.own
        targets = list(state.targets)
        cr_now = list(state.cr_prev)
        wp_dtheta = waypoint_observation(own, env.cfg.waypoint).dtheta

        if attention:
            action, alpha = actor_forward_attention(
                restored.actor, obs, restored.feature_softsign
            )
        else:
            action = actor_forward(restored.actor, obs, restored.feature_softsign)
            alpha = None
        at_action = critic_forward(restored.critic, obs, action)
        at_zero = critic_forward(restored.critic, obs, 0.0)
        prio = priorities_from_evaluations(at_action, at_zero)
        q_for_intention = at_action.q_ca if intention_at_taken_action else at_zero.q_ca

        state, obs, breakdown, _ = env.step(state, RUDDER_MAX_DEG * action)

        ships = tuple(
            ShipExplanation(
                x=tg.x,
                y=tg.y,
                course=tg.course,
                speed=tg.speed,
                cr=cr_now[i],
                q_ca=at_action.q_ca[i],
                p_oth=prio.p_oth[i],
                alpha=float(alpha[i]) if alpha is not None else None,
                intention=intention(q_for_intention[i], float(alpha[i]))
                if alpha is not None
                else None,
            )
            for i, tg in enumerate(targets)
        )
        records.append(
            ExplanationRecord(
                t=t,
                own_x=own.x,
                own_y=own.y,
                own_psi=own.psi,
                own_r=own.r,
                own_delta=own.delta,
                wp_dtheta=wp_dtheta,
                action=action,
                q_wp=at_action.q_wp,
                p_wp=prio.p_wp,
                p_oth_total=prio.p_oth_total,
                reward_total=breakdown.total,
                reward_r_wp=breakdown.r_wp,
                reward_r_dwp=breakdown.r_dwp,
                reward_r_oth=breakdown.r_oth,
                ships=ships,
            )
        )
    return ExplanationTrace(
        scenario=scenario_to_doc(scenario),
        checkpoint={
            "config_hash": cp.meta.get("config_hash", ""),
            "rng_seed": cp.rng_seed,
            "tag": cp.meta.get("tag", ""),
            "env_steps": cp.meta.get("env_steps", 0),
            "actor_variant": cp.actor_variant,
        },
        actor_variant=restored.variant,
        intention_at_taken_action=intention_at_taken_action,
        notes=tuple(notes),
        records=tuple(records),
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def trace_header_doc(trace: ExplanationTrace) -> dict:
    return {
        "type": "trace_header",
        "format_version": TRACE_FORMAT_VERSION,
        "actor_variant": trace.actor_variant,
        "intention_at_taken_action": trace.intention_at_taken_action,
        "notes": list(trace.notes),
        "scenario": trace.scenario,
        "checkpoint": trace.checkpoint,
    }


def record_to_doc(rec: ExplanationRecord, with_attention: bool) -> dict:
    ships = []
    for ship in rec.ships:
        doc = {
            "x": ship.x,
            "y": ship.y,
            "course": ship.course,
            "speed": ship.speed,
            "cr": ship.cr,
            "q_ca": ship.q_ca,
            "p_oth": ship.p_oth,
        }
        if with_attention:
            doc["alpha"] = ship.alpha
            doc["intention"] = ship.intention
        ships.append(doc)
    return {
        "t": rec.t,
        "own": {
            "x": rec.own_x,
            "y": rec.own_y,
            "psi": rec.own_psi,
            "r": rec.own_r,
            "delta": rec.own_delta,
        },
        "wp": {"dtheta": rec.wp_dtheta},
        "q_wp": rec.q_wp,
        "p_wp": rec.p_wp,
        "p_oth_total": rec.p_oth_total,
        "action": rec.action,
        "reward": {
            "total": rec.reward_total,
            "r_wp": rec.reward_r_wp,
            "r_dwp": rec.reward_r_dwp,
            "r_oth": list(rec.reward_r_oth),
        },
        "ships": ships,
    }


def record_from_doc(doc: dict, with_attention: bool) -> ExplanationRecord:
    ships = tuple(
        ShipExplanation(
            x=s["x"],
            y=s["y"],
            course=s["course"],
            speed=s["speed"],
            cr=s["cr"],
            q_ca=s["q_ca"],
            p_oth=s["p_oth"],
            alpha=s.get("alpha") if with_attention else None,
            intention=s.get("intention") if with_attention else None,
        )
        for s in doc["ships"]
    )
    own = doc["own"]
    return ExplanationRecord(
        t=doc["t"],
        own_x=own["x"],
        own_y=own["y"],
        own_psi=own["psi"],
        own_r=own["r"],
        own_delta=own["delta"],
        wp_dtheta=doc["wp"]["dtheta"],
        action=doc["action"],
        q_wp=doc["q_wp"],
        p_wp=doc["p_wp"],
        p_oth_total=doc["p_oth_total"],
        reward_total=doc["reward"]["total"],
        reward_r_wp=doc["reward"]["r_wp"],
        reward_r_dwp=doc["reward"]["r_dwp"],
        reward_r_oth=tuple(doc["reward"]["r_oth"]),
        ships=ships,
    )


def trace_to_documents(trace: ExplanationTrace) -> tuple[dict, list[dict]]:
    _check_intentions(trace)
    records = [record_to_doc(r, trace.has_attention) for r in trace.records]
    return trace_header_doc(trace), records


def trace_from_documents(header: dict, records: list[dict]) -> ExplanationTrace:
    if header.get("type") != "trace_header":
        raise TraceExportError("first document is not a trace header")
    with_attention = header["actor_variant"] == VARIANT_ATTENTION
    return ExplanationTrace(
        scenario=header["scenario"],
        checkpoint=header["checkpoint"],
        actor_variant=header["actor_variant"],
        intention_at_taken_action=header["intention_at_taken_action"],
        notes=tuple(header["notes"]),
        records=tuple(record_from_doc(d, with_attention) for d in records),
    )


def _check_intentions(trace: ExplanationTrace) -> None:
    """Definitional recheck on export: intention must be the stored product."""
    if not (trace.has_attention and trace.intention_at_taken_action):
        return
    for rec in trace.records:
        for ship in rec.ships:
            if ship.intention != intention(ship.q_ca, ship.alpha):
                raise TraceExportError(
                    f"intention mismatch at t={rec.t}: "
                    f"{ship.intention} != {ship.q_ca} * {ship.alpha}"
                )


def write_trace_jsonl(trace: ExplanationTrace, path: str | Path) -> None:
    header, records = trace_to_documents(trace)
    try:
        with Path(path).open("w") as fh:
            fh.write(json.dumps(header) + "\n")
            for doc in records:
                fh.write(json.dumps(doc) + "\n")
    except OSError as exc:
        raise TraceExportError(f"failed to write trace to {path}: {exc}") from exc


def read_trace_jsonl(path: str | Path) -> ExplanationTrace:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise TraceExportError(f"failed to read trace from {path}: {exc}") from exc
    if not lines:
        raise TraceExportError(f"trace file {path} is empty")
    header = json.loads(lines[0])
    records = [json.loads(line) for line in lines[1:] if line.strip()]
    return trace_from_documents(header, records)


def trace_csv_columns(n_ships: int, with_attention: bool) -> list[str]:
    cols = [
        "t",
        "own_x",
        "own_y",
        "own_psi",
        "own_r",
        "own_delta",
        "wp_dtheta",
        "action",
        "q_wp",
        "p_wp",
        "p_oth_total",
        "reward_total",
        "reward_r_wp",
        "reward_r_dwp",
    ]
    for i in range(n_ships):
        cols.append(f"reward_r_oth{i}")
        for name in ("x", "y", "course", "speed", "cr", "q_ca", "p_oth"):
            cols.append(f"ship{i}_{name}")
        if with_attention:
            cols.append(f"ship{i}_alpha")
            cols.append(f"ship{i}_intention")
    return cols


def write_trace_csv(trace: ExplanationTrace, path: str | Path) -> None:
    _check_intentions(trace)
    n = trace.n_ships
    with_attention = trace.has_attention
    try:
        with Path(path).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(trace_csv_columns(n, with_attention))
            for rec in trace.records:
                row = [
                    repr(rec.t),
                    repr(rec.own_x),
                    repr(rec.own_y),
                    repr(rec.own_psi),
                    repr(rec.own_r),
                    repr(rec.own_delta),
                    repr(rec.wp_dtheta),
                    repr(rec.action),
                    repr(rec.q_wp),
                    repr(rec.p_wp),
                    repr(rec.p_oth_total),
                    repr(rec.reward_total),
                    repr(rec.reward_r_wp),
                    repr(rec.reward_r_dwp),
                ]
                for i, ship in enumerate(rec.ships):
                    row.append(repr(rec.reward_r_oth[i]))
                    row.extend(
                        [
                            repr(ship.x),
                            repr(ship.y),
                            repr(ship.course),
                            repr(ship.speed),
                            repr(ship.cr),
                            repr(ship.q_ca),
                            repr(ship.p_oth),
                        ]
                    )
                    if with_attention:
                        row.append(repr(ship.alpha))
                        row.append(repr(ship.intention))
                writer.writerow(row)
    except OSError as exc:
        raise TraceExportError(f"failed to write trace to {path}: {exc}") from exc


def export_trace(trace: ExplanationTrace, path: str | Path, fmt: str = "jsonl") -> None:
    """Write a trace as JSONL (lossless) or wide CSV."""
    if fmt == "jsonl":
        write_trace_jsonl(trace, path)
    elif fmt == "csv":
        write_trace_csv(trace, path)
    else:
        raise ValueError(f"unknown trace format: {fmt!r}")
