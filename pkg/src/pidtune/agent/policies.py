"""Critics and actors: twin Q networks, a tanh-squashed Gaussian, a deterministic actor."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import nn
from ..nn import Mlp

LOG_2PI = math.log(2.0 * math.pi)
LOG_2 = math.log(2.0)


@dataclass
class TwinCritics:
    q1: Mlp
    q2: Mlp
    q1_target: Mlp
    q2_target: Mlp

    @classmethod
    def create(cls, state_dim: int, action_dim: int, hidden, rng: np.random.Generator) -> TwinCritics:
        dims = (state_dim + action_dim, *hidden, 1)
        q1 = nn.init_mlp(dims, rng)
        q2 = nn.init_mlp(dims, rng)
        return cls(q1, q2, q1.copy(), q2.copy())


def q_value(net: Mlp, s: np.ndarray, a: np.ndarray) -> np.ndarray:
    return nn.forward(net, np.concatenate([s, a], axis=-1))[..., 0]


def q_action_grad(net: Mlp, s: np.ndarray, a: np.ndarray, weight: np.ndarray) -> np.ndarray:
    """``d/da sum(weight * Q(s, a))`` for a batch; critic parameters are untouched."""
    sa = np.concatenate([s, a], axis=-1)
    g = nn.backward(net, sa, weight[:, None])
    return g.input[:, s.shape[-1]:]


@dataclass
class StochasticPolicy:
    net: Mlp
    action_dim: int
    log_std_min: float = -20.0
    log_std_max: float = 2.0

    @classmethod
    def create(cls, state_dim: int, action_dim: int, hidden, rng: np.random.Generator) -> StochasticPolicy:
        return cls(nn.init_mlp((state_dim, *hidden, 2 * action_dim), rng), action_dim)

    def heads(self, s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Mean, clamped log-std and the unclamped log-std for each state."""
        out = nn.forward(self.net, s)
        mean = out[..., : self.action_dim]
        raw = out[..., self.action_dim:]
        return mean, np.clip(raw, self.log_std_min, self.log_std_max), raw


@dataclass
class DeterministicPolicy:
    net: Mlp
    net_target: Mlp

    @classmethod
    def create(cls, state_dim: int, action_dim: int, hidden, rng: np.random.Generator) -> DeterministicPolicy:
        net = nn.init_mlp((state_dim, *hidden, action_dim), rng, output_activation="tanh")
        return cls(net, net.copy())

    def __call__(self, s: np.ndarray) -> np.ndarray:
        return nn.forward(self.net, s)

    def target(self, s: np.ndarray) -> np.ndarray:
        return nn.forward(self.net_target, s)


def log1m_tanh2(z: np.ndarray) -> np.ndarray:
    """``log(1 - tanh(z)**2)`` without cancellation for large ``|z|``."""
    return 2.0 * (LOG_2 - z - np.logaddexp(0.0, -2.0 * z))


@dataclass
class StochasticSample:
    a: np.ndarray
    logp: np.ndarray
    z: np.ndarray
    noise: np.ndarray
    std: np.ndarray
    raw_log_std: np.ndarray


def draw(policy: StochasticPolicy, s: np.ndarray, rng: np.random.Generator | None, noise=None) -> StochasticSample:
    mean, log_std, raw = policy.heads(s)
    if noise is None:
        noise = rng.standard_normal(mean.shape)
    noise = np.broadcast_to(np.asarray(noise, dtype=float), mean.shape)
    std = np.exp(log_std)
    z = mean + std * noise
    logp = np.sum(-0.5 * noise**2 - log_std - 0.5 * LOG_2PI - log1m_tanh2(z), axis=-1)
    return StochasticSample(np.tanh(z), logp, z, noise, std, raw)


def sample_stochastic(policy: StochasticPolicy, s, rng: np.random.Generator | None, noise=None):
    """Reparameterized draw ``a = tanh(mean + std * noise)`` and its log-density.

    ``noise`` overrides the unit-normal draw, which makes the sample a
    deterministic function of the state.
    """
    out = draw(policy, np.asarray(s, dtype=float), rng, noise)
    return out.a, out.logp
