"""Feedforward rectifier networks with exact reverse-mode gradients and Adam.

Weights are stored as ``(fan_in, fan_out)`` so a batch ``X`` of shape
``(n, fan_in)`` maps through ``X @ W + b``. All arithmetic is float64.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

ACTIVATIONS = ("identity", "tanh")


@dataclass
class Mlp:
    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    output_activation: str = "identity"

    def __post_init__(self) -> None:
        self.layer_dims = tuple(int(d) for d in self.layer_dims)
        if self.output_activation not in ACTIVATIONS:
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        if len(self.weights) != len(self.layer_dims) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("layer count does not match layer_dims")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.shape != (self.layer_dims[i], self.layer_dims[i + 1]):
                raise ValueError(f"layer {i} weight shape {W.shape} incompatible")
            if b.shape != (self.layer_dims[i + 1],):
                raise ValueError(f"layer {i} bias shape {b.shape} incompatible")

    @property
    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    def copy(self) -> Mlp:
        return Mlp(
            self.layer_dims,
            [W.copy() for W in self.weights],
            [b.copy() for b in self.biases],
            self.output_activation,
        )

    def checksum(self) -> str:
        h = hashlib.sha256()
        for p in self.params:
            h.update(np.ascontiguousarray(p).tobytes())
        return h.hexdigest()


@dataclass
class Gradients:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input: np.ndarray | None = None

    @property
    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]


@dataclass
class OptimizerState:
    """Adam moments for one network."""

    learning_rate: float
    m: list[np.ndarray]
    v: list[np.ndarray]
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_mlp(
    layer_dims, rng: np.random.Generator, output_activation: str = "identity"
) -> Mlp:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias."""
    dims = tuple(layer_dims)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return Mlp(dims, weights, biases, output_activation)


def _check_input(net: Mlp, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] != net.in_dim:
        raise ValueError(f"input shape {x.shape} does not match input width {net.in_dim}")
    return x


def _forward_cache(net: Mlp, x: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    acts = [x]
    h = x
    last = len(net.weights) - 1
    for i, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = h @ W + b
        if i < last:
            h = np.maximum(z, 0.0)
            acts.append(h)
        elif net.output_activation == "tanh":
            h = np.tanh(z)
        else:
            h = z
    return acts, h


def preactivation(net: Mlp, x) -> np.ndarray:
    """Output layer before the output nonlinearity."""
    x = _check_input(net, x)
    h = x
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        h = np.maximum(h @ W + b, 0.0)
    return h @ net.weights[-1] + net.biases[-1]


def forward(net: Mlp, x) -> np.ndarray:
    x = _check_input(net, x)
    return _forward_cache(net, x)[1]


def backward(net: Mlp, x, upstream, preact_upstream=None) -> Gradients:
    """Gradients of ``sum(upstream * forward(net, x))`` w.r.t. every parameter and ``x``.

    ``x`` may be a single vector or a batch; batch contributions are summed.
    ``preact_upstream`` adds a gradient taken w.r.t. the output layer's
    pre-activation (before tanh).
    """
    x = _check_input(net, x)
    g = np.asarray(upstream, dtype=float)
    out_shape = x.shape[:-1] + (net.out_dim,)
    if g.shape != out_shape:
        raise ValueError(f"upstream shape {g.shape} does not match output shape {out_shape}")
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
        g = g[None, :]
    acts, out = _forward_cache(net, x)
    if net.output_activation == "tanh":
        g = g * (1.0 - out * out)
    if preact_upstream is not None:
        g = g + np.asarray(preact_upstream, dtype=float).reshape(g.shape)
    n_layers = len(net.weights)
    gW: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    for i in range(n_layers - 1, -1, -1):
        h = acts[i]
        gW[i] = h.T @ g
        gb[i] = g.sum(axis=0)
        g = g @ net.weights[i].T
        if i > 0:
            g = g * (h > 0.0)
    return Gradients(gW, gb, g[0] if squeeze else g)


def adam(net: Mlp, learning_rate: float) -> OptimizerState:
    return OptimizerState(
        learning_rate=learning_rate,
        m=[np.zeros_like(p) for p in net.params],
        v=[np.zeros_like(p) for p in net.params],
    )


def optimize_step(opt: OptimizerState, net: Mlp, grads: Gradients) -> tuple[Mlp, OptimizerState]:
    """One bias-corrected Adam descent step, applied in place."""
    gs = grads.params
    if len(gs) != len(opt.m):
        raise ValueError("gradient list does not match optimizer state")
    for g in gs:
        if not np.all(np.isfinite(g)):
            raise FloatingPointError("non-finite gradient")
    opt.step += 1
    c1 = 1.0 - opt.beta1**opt.step
    c2 = 1.0 - opt.beta2**opt.step
    for p, g, m, v in zip(net.params, gs, opt.m, opt.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        p -= opt.learning_rate * (m / c1) / (np.sqrt(v / c2) + opt.eps)
        if not np.all(np.isfinite(p)):
            raise FloatingPointError("non-finite parameter after update")
    return net, opt


def polyak_blend(target: Mlp, online: Mlp, rho_new: float) -> Mlp:
    """``target <- (1 - rho_new) * target + rho_new * online``, in place."""
    if target.layer_dims != online.layer_dims or target.output_activation != online.output_activation:
        raise ValueError("target and online architectures differ")
    for pt, po in zip(target.params, online.params):
        pt *= 1.0 - rho_new
        pt += rho_new * po
    return target


def to_text(net: Mlp) -> str:
    lines = [
        " ".join(str(d) for d in net.layer_dims),
        net.output_activation,
    ]
    for p in net.params:
        lines.append(" ".join(repr(float(v)) for v in p.ravel()))
    return "\n".join(lines) + "\n"


def from_text(text: str) -> Mlp:
    rows = text.strip("\n").split("\n")
    dims = tuple(int(d) for d in rows[0].split())
    act = rows[1].strip()
    values = rows[2:]
    if len(values) != 2 * (len(dims) - 1):
        raise ValueError("checkpoint has the wrong number of parameter rows")
    weights, biases = [], []
    for i in range(len(dims) - 1):
        W = np.array([float(v) for v in values[2 * i].split()]).reshape(dims[i], dims[i + 1])
        b = np.array([float(v) for v in values[2 * i + 1].split()]).reshape(dims[i + 1])
        weights.append(W)
        biases.append(b)
    return Mlp(dims, weights, biases, act)


def save(net: Mlp, path) -> None:
    Path(path).write_text(to_text(net))


def load(path) -> Mlp:
    return from_text(Path(path).read_text())
