"""Minimal dense network engine: forward with tape, exact reverse-mode
gradients, fan-in uniform initialization and Adam.

Everything runs in 64-bit floats. Parameters are immutable (arrays are
marked read-only); updates return fresh parameter sets, so a tape recorded
by a forward pass can never silently go stale. Inputs may be single vectors
(in,) or batches (B, in); gradients mirror the input shape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ACTIVATIONS = ("relu", "leaky_relu", "softsign", "identity")
LEAKY_SLOPE = 0.1


class NonFiniteError(ValueError):
    """A forward pass, gradient or loss produced NaN/inf."""


@dataclass(frozen=True)
class LayerSpec:
    width: int
    activation: str = "identity"

    def __post_init__(self) -> None:
        if self.width <= 0:
            raise ValueError(f"layer width must be positive: {self.width}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation: {self.activation!r}")


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MlpParams:
    input_width: int
    specs: tuple[LayerSpec, ...]
    weights: tuple[np.ndarray, ...]  # each (out, in)
    biases: tuple[np.ndarray, ...]  # each (out,)

    def __post_init__(self) -> None:
        prev = self.input_width
        if len(self.weights) != len(self.specs) or len(self.biases) != len(self.specs):
            raise ValueError("one weight matrix and bias vector per layer required")
        for spec, w, b in zip(self.specs, self.weights, self.biases):
            if w.shape != (spec.width, prev):
                raise ValueError(f"weight shape {w.shape} != ({spec.width}, {prev})")
            if b.shape != (spec.width,):
                raise ValueError(f"bias shape {b.shape} != ({spec.width},)")
            prev = spec.width

    @property
    def output_width(self) -> int:
        return self.specs[-1].width

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.reshape(-1))
            parts.append(b)
        return np.concatenate(parts) if parts else np.zeros(0)

    def with_flat(self, flat: np.ndarray) -> "MlpParams":
        """Rebuild a parameter set from a flat vector (same layout as flatten)."""
        if flat.shape != (self.n_params,):
            raise ValueError("flat vector has the wrong length")
        weights, biases, i = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(_freeze(flat[i : i + w.size].reshape(w.shape)))
            i += w.size
            biases.append(_freeze(flat[i : i + b.size]))
            i += b.size
        return MlpParams(self.input_width, self.specs, tuple(weights), tuple(biases))


def init_params(
    input_width: int, specs: tuple[LayerSpec, ...], rng: np.random.Generator
) -> MlpParams:
    """Fan-in uniform initialization: W ~ U(+-sqrt(1/fan_in)), biases zero."""
    weights, biases = [], []
    prev = input_width
    for spec in specs:
        bound = np.sqrt(1.0 / prev)
        weights.append(_freeze(rng.uniform(-bound, bound, size=(spec.width, prev))))
        biases.append(_freeze(np.zeros(spec.width)))
        prev = spec.width
    return MlpParams(input_width, tuple(specs), tuple(weights), tuple(biases))


def _activate(a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(a, 0.0)
    if kind == "leaky_relu":
        return np.where(a >= 0.0, a, LEAKY_SLOPE * a)
    if kind == "softsign":
        return a / (1.0 + np.abs(a))
    return a


def _activation_grad(a: np.ndarray, kind: str) -> np.ndarray:
    # relu/leaky_relu take the positive-side slope at exactly 0
    if kind == "relu":
        return np.where(a >= 0.0, 1.0, 0.0)
    if kind == "leaky_relu":
        return np.where(a >= 0.0, 1.0, LEAKY_SLOPE)
    if kind == "softsign":
        return 1.0 / np.square(1.0 + np.abs(a))
    return np.ones_like(a)


@dataclass
class MlpTape:
    params: MlpParams
    pre: list[np.ndarray]  # pre-activations per layer, batch-shaped
    inputs: list[np.ndarray]  # layer inputs (post-activation of previous layer)
    single: bool  # True when the forward input was a 1-D vector


def mlp_forward(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, MlpTape]:
    """Run the network; returns the output and a tape for the backward pass."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.input_width:
        raise ValueError(f"input width {x.shape} incompatible with {params.input_width}")
    h = x
    pre: list[np.ndarray] = []
    inputs: list[np.ndarray] = []
    for spec, w, b in zip(params.specs, params.weights, params.biases):
        inputs.append(h)
        a = h @ w.T + b
        pre.append(a)
        h = _activate(a, spec.activation)
    if not np.all(np.isfinite(h)):
        raise NonFiniteError("forward pass produced non-finite output")
    out = h[0] if single else h
    return out, MlpTape(params=params, pre=pre, inputs=inputs, single=single)


@dataclass
class MlpGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @classmethod
    def zeros_like(cls, params: MlpParams) -> "MlpGrads":
        return cls(
            weights=[np.zeros_like(w) for w in params.weights],
            biases=[np.zeros_like(b) for b in params.biases],
        )

    def add_(self, other: "MlpGrads") -> "MlpGrads":
        for mine, theirs in zip(self.weights, other.weights):
            mine += theirs
        for mine, theirs in zip(self.biases, other.biases):
            mine += theirs
        return self

    def scale_(self, factor: float) -> "MlpGrads":
        for w in self.weights:
            w *= factor
        for b in self.biases:
            b *= factor
        return self

    def flatten(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.reshape(-1))
            parts.append(b)
        return np.concatenate(parts)


def mlp_backward(tape: MlpTape, grad_out: np.ndarray) -> tuple[MlpGrads, np.ndarray]:
    """Exact reverse-mode gradients for a recorded forward pass.

    grad_out must match the forward output's shape; returns parameter
    gradients and the gradient with respect to the network input.
    """
    params = tape.params
    g = np.asarray(grad_out, dtype=np.float64)
    if tape.single:
        if g.shape != (params.output_width,):
            raise ValueError(f"grad_out shape {g.shape} does not match output")
        g = g[None, :]
    else:
        expected = (tape.pre[-1].shape[0], params.output_width)
        if g.shape != expected:
            raise ValueError(f"grad_out shape {g.shape} != {expected}")
    grads = MlpGrads(
        weights=[np.empty(0)] * len(params.specs),
        biases=[np.empty(0)] * len(params.specs),
    )
    for i in range(len(params.specs) - 1, -1, -1):
        g = g * _activation_grad(tape.pre[i], params.specs[i].activation)
        grads.weights[i] = g.T @ tape.inputs[i]
        grads.biases[i] = g.sum(axis=0)
        g = g @ params.weights[i]
    return grads, (g[0] if tape.single else g)


@dataclass
class AdamState:
    """Per-network Adam accumulators; mutated in place by adam_update."""

    beta1: float
    beta2: float
    eps: float
    step: int
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]

    @classmethod
    def for_params(
        cls, params: MlpParams, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
    ) -> "AdamState":
        return cls(
            beta1=beta1,
            beta2=beta2,
            eps=eps,
            step=0,
            m_w=[np.zeros_like(w) for w in params.weights],
            v_w=[np.zeros_like(w) for w in params.weights],
            m_b=[np.zeros_like(b) for b in params.biases],
            v_b=[np.zeros_like(b) for b in params.biases],
        )

    def copy(self) -> "AdamState":
        return AdamState(
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            step=self.step,
            m_w=[a.copy() for a in self.m_w],
            v_w=[a.copy() for a in self.v_w],
            m_b=[a.copy() for a in self.m_b],
            v_b=[a.copy() for a in self.v_b],
        )


def adam_update(
    params: MlpParams, grads: MlpGrads, state: AdamState, lr: float
) -> MlpParams:
    """One bias-corrected Adam step; returns new params, mutates state."""
    for i, (gw, gb) in enumerate(zip(grads.weights, grads.biases)):
        if not (np.all(np.isfinite(gw)) and np.all(np.isfinite(gb))):
            raise NonFiniteError(f"non-finite gradient in layer {i}")
        if gw.shape != params.weights[i].shape or gb.shape != params.biases[i].shape:
            raise ValueError(f"gradient shape mismatch in layer {i}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.step
    c2 = 1.0 - b2**state.step
    new_w, new_b = [], []
    for i in range(len(params.specs)):
        state.m_w[i] = b1 * state.m_w[i] + (1.0 - b1) * grads.weights[i]
        state.v_w[i] = b2 * state.v_w[i] + (1.0 - b2) * np.square(grads.weights[i])
        state.m_b[i] = b1 * state.m_b[i] + (1.0 - b1) * grads.biases[i]
        state.v_b[i] = b2 * state.v_b[i] + (1.0 - b2) * np.square(grads.biases[i])
        new_w.append(
            _freeze(
                params.weights[i]
                - lr * (state.m_w[i] / c1) / (np.sqrt(state.v_w[i] / c2) + state.eps)
            )
        )
        new_b.append(
            _freeze(
                params.biases[i]
                - lr * (state.m_b[i] / c1) / (np.sqrt(state.v_b[i] / c2) + state.eps)
            )
        )
    return MlpParams(params.input_width, params.specs, tuple(new_w), tuple(new_b))


def soft_update(target: MlpParams, online: MlpParams, rate: float) -> MlpParams:
    """Exponential tracking of online parameters: t <- t + rate * (o - t)."""
    if target.specs != online.specs or target.input_width != online.input_width:
        raise ValueError("target and online parameter shapes differ")
    new_w = tuple(
        _freeze(tw + rate * (ow - tw)) for tw, ow in zip(target.weights, online.weights)
    )
    new_b = tuple(
        _freeze(tb + rate * (ob - tb)) for tb, ob in zip(target.biases, online.biases)
    )
    return MlpParams(target.input_width, target.specs, new_w, new_b)
