"""Validated run configuration: one JSON document that pins every knob of a
training, evaluation or explanation run. Defaults reproduce the reference
hyperparameters; the resolved document and its hash are embedded in every
artifact a run writes."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .agent.training import TrainConfig
from .dynamics import NomotoParams
from .observation import ObsScales
from .scenario import ScenarioConfig

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid run configuration; message lists field-level problems."""


class DynamicsModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    gain_k: float = Field(default=0.05, gt=0)
    time_const_t: float = Field(default=30.0, gt=0)

    def to_core(self) -> NomotoParams:
        return NomotoParams(gain_k=self.gain_k, time_const_t=self.time_const_t)


class ScenarioModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    target_speed_range: Tuple[float, float] = (0.0041, 0.0062)
    course_col_range: Tuple[float, float] = (-150.0, 150.0)
    t_col_range: Tuple[float, float] = (600.0, 1800.0)
    pos_noise_range: Tuple[float, float] = (-1.0, 1.0)
    course_noise_range: Tuple[float, float] = (-30.0, 30.0)
    n_ships_range: Tuple[int, int] = (0, 6)
    waypoint: Tuple[float, float] = (0.0, 46.3)
    own_init: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    own_speed: Optional[float] = Field(default=None, gt=0)
    dt: float = Field(default=5.0, gt=0)
    episode_steps: int = Field(default=240, gt=0)

    def to_core(self) -> ScenarioConfig:
        return ScenarioConfig(
            target_speed_range=self.target_speed_range,
            course_col_range=self.course_col_range,
            t_col_range=self.t_col_range,
            pos_noise_range=self.pos_noise_range,
            course_noise_range=self.course_noise_range,
            n_ships_range=self.n_ships_range,
            waypoint=self.waypoint,
            own_init=self.own_init,
            own_speed=self.own_speed,
            dt=self.dt,
            episode_steps=self.episode_steps,
        )


class NormalizationModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    dist_km: float = Field(default=10.0, gt=0)
    speed_kms: float = Field(default=0.01, gt=0)
    angle_deg: float = Field(default=180.0, gt=0)
    time_s: float = Field(default=1000.0, gt=0)

    def to_core(self) -> ObsScales:
        return ObsScales(
            dist_km=self.dist_km,
            speed_kms=self.speed_kms,
            angle_deg=self.angle_deg,
            time_s=self.time_s,
        )


class TrainModel(BaseModel):
    model_config = ConfigDict(extra="forbid")
    learning_steps: int = Field(default=10_000_000, gt=0)
    train_interval: int = Field(default=100, gt=0)
    learning_rate: float = Field(default=0.001, gt=0)
    target_update_rate: float = Field(default=0.001, gt=0)
    batch_size: int = Field(default=1024, gt=0)
    gamma: float = Field(default=0.98, gt=0, lt=1)
    lambda_reg: float = Field(default=0.001, ge=0)
    lambda_s: float = Field(default=0.005, ge=0)
    lambda_a: float = Field(default=0.0001, ge=0)
    buffer_capacity: int = Field(default=1_000_000, gt=0)
    warmup_steps: int = Field(default=10_000, ge=0)
    updates_per_trigger: int = Field(default=1, gt=0)
    sigma_start: float = Field(default=0.3, ge=0)
    sigma_end: float = Field(default=0.05, ge=0)
    sigma_anneal_frac: float = Field(default=0.5, gt=0, le=1)
    smoothing_noise_sigma: float = Field(default=0.01, ge=0)
    checkpoint_interval: int = Field(default=100_000, gt=0)
    feature_softsign: bool = True
    adam_beta1: float = Field(default=0.9, gt=0, lt=1)
    adam_beta2: float = Field(default=0.999, gt=0, lt=1)
    adam_eps: float = Field(default=1e-8, gt=0)

    def to_core(self) -> TrainConfig:
        return TrainConfig(**self.model_dump())


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")
    schema_version: Literal[1] = SCHEMA_VERSION
    seed: int = 0
    actor_variant: Literal["plain", "attention"] = "plain"
    ship_loa_km: float = Field(default=0.34, gt=0)
    dynamics: DynamicsModel = Field(default_factory=DynamicsModel)
    scenario: ScenarioModel = Field(default_factory=ScenarioModel)
    normalization: NormalizationModel = Field(default_factory=NormalizationModel)
    train: TrainModel = Field(default_factory=TrainModel)

    def resolved(self) -> dict:
        return self.model_dump(mode="json")

    def config_hash(self) -> str:
        doc = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(doc.encode()).hexdigest()

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        try:
            return cls.model_validate(doc)
        except ValidationError as exc:
            raise ConfigError(_format_validation_error(exc)) from exc

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)


def _format_validation_error(exc: ValidationError) -> str:
    lines = ["invalid run configuration:"]
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"  {loc}: {err['msg']}")
    return "\n".join(lines)
