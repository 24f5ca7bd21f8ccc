"""Checkpoint files: JSON documents holding hyperparameters, normalization
scales, the seed and every network's weights.

Floats are serialized as shortest round-tripping decimals (Python's default
JSON float formatting), which reconstructs the exact 64-bit values on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .neural import LayerSpec, MlpParams, _freeze

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Unreadable or incompatible checkpoint file."""


@dataclass
class Checkpoint:
    hyperparams: dict
    obs_normalization: dict
    rng_seed: int
    networks: dict[str, MlpParams]
    meta: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    @property
    def actor_variant(self) -> str:
        return self.meta.get("actor_variant", "plain")


def params_to_doc(params: MlpParams) -> dict:
    return {
        "input_width": params.input_width,
        "spec": [
            {"width": s.width, "activation": s.activation} for s in params.specs
        ],
        "layers": [
            {"w": w.tolist(), "b": b.tolist()}
            for w, b in zip(params.weights, params.biases)
        ],
    }


def params_from_doc(doc: dict) -> MlpParams:
    specs = tuple(
        LayerSpec(width=int(s["width"]), activation=str(s["activation"]))
        for s in doc["spec"]
    )
    weights = tuple(_freeze(np.array(layer["w"], dtype=np.float64)) for layer in doc["layers"])
    biases = tuple(_freeze(np.array(layer["b"], dtype=np.float64)) for layer in doc["layers"])
    return MlpParams(int(doc["input_width"]), specs, weights, biases)


def checkpoint_to_doc(cp: Checkpoint) -> dict:
    return {
        "format_version": cp.format_version,
        "hyperparams": cp.hyperparams,
        "obs_normalization": cp.obs_normalization,
        "rng_seed": cp.rng_seed,
        "meta": cp.meta,
        "networks": {name: params_to_doc(p) for name, p in cp.networks.items()},
    }


def checkpoint_from_doc(doc: dict) -> Checkpoint:
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise CheckpointError(
            f"unsupported checkpoint format_version {version!r}, expected {FORMAT_VERSION}"
        )
    return Checkpoint(
        format_version=FORMAT_VERSION,
        hyperparams=doc["hyperparams"],
        obs_normalization=doc["obs_normalization"],
        rng_seed=int(doc["rng_seed"]),
        meta=doc.get("meta", {}),
        networks={name: params_from_doc(p) for name, p in doc["networks"].items()},
    )


def save_checkpoint(cp: Checkpoint, path: str | Path) -> None:
    path = Path(path)
    with path.open("w") as fh:
        json.dump(checkpoint_to_doc(cp), fh, allow_nan=False)
        fh.write("\n")


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"checkpoint file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"checkpoint {path} is not valid JSON: {exc}") from exc
    return checkpoint_from_doc(doc)
