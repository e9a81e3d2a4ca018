"""Second-order-plus-dead-time plant simulated as an exact discrete system.

The delay-free part ``gain / (a2 s^2 + a1 s + a0)`` is realized in controller
canonical form and discretized with a zero-order hold. Dead time is a pure
input delay line of ``dead_time / dt`` samples, so the discrete outputs equal
the continuous response sampled at ``dt`` for piecewise-constant inputs.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

_INT_TOL = 1e-9


@dataclass(frozen=True)
class PlantModel:
    gain: float = 0.3
    a2: float = 25.0
    a1: float = 10.0
    a0: float = 1.0
    dead_time: float = 10.0
    dt: float = 1.0

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (self.a2 > 0 and self.a0 > 0):
            raise ValueError("a2 and a0 must be positive")
        if self.dead_time < 0:
            raise ValueError(f"dead_time must be non-negative, got {self.dead_time}")
        ratio = self.dead_time / self.dt
        if abs(ratio - round(ratio)) > _INT_TOL * max(1.0, ratio):
            raise ValueError(
                f"dead_time {self.dead_time} is not an integer multiple of dt {self.dt}"
            )

    @property
    def delay_steps(self) -> int:
        return int(round(self.dead_time / self.dt))

    def continuous(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Controller-canonical (A, B, C): q'' = (u - a1 q' - a0 q) / a2, y = gain q."""
        A = np.array([[0.0, 1.0], [-self.a0 / self.a2, -self.a1 / self.a2]])
        B = np.array([0.0, 1.0 / self.a2])
        C = np.array([self.gain, 0.0])
        return A, B, C


@dataclass(frozen=True)
class DiscreteSS:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float
    dt: float
    delay_steps: int

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.A))))


@dataclass(frozen=True)
class PlantState:
    x: np.ndarray
    delay_line: tuple[float, ...] = field(default=())


def discretize(model: PlantModel) -> DiscreteSS:
    """Zero-order-hold discretization via the exponential of the augmented system."""
    # PlantModel validates dt and dead_time at construction; re-check in case
    # the caller bypassed it with object.__setattr__ or a subclass.
    if not model.dt > 0:
        raise ValueError(f"dt must be positive, got {model.dt}")
    Ac, Bc, C = model.continuous()
    M = np.zeros((3, 3))
    M[:2, :2] = Ac
    M[:2, 2] = Bc
    E = expm(M * model.dt)
    A = E[:2, :2].copy()
    B = E[:2, 2].copy()
    for arr in (A, B, C):
        arr.setflags(write=False)
    return DiscreteSS(A=A, B=B, C=C, D=0.0, dt=model.dt, delay_steps=model.delay_steps)


def reset(ss: DiscreteSS) -> PlantState:
    x = np.zeros(2)
    x.setflags(write=False)
    return PlantState(x=x, delay_line=(0.0,) * ss.delay_steps)


def step(ss: DiscreteSS, state: PlantState, u: float) -> tuple[PlantState, float]:
    """Advance one sample; returns the next state and the output at the next sample."""
    if ss.delay_steps:
        u_d = state.delay_line[0]
        line = state.delay_line[1:] + (float(u),)
    else:
        u_d = float(u)
        line = ()
    x = ss.A @ state.x + ss.B * u_d
    x.setflags(write=False)
    return PlantState(x=x, delay_line=line), float(ss.C @ x)


def simulate(ss: DiscreteSS, inputs) -> np.ndarray:
    """Outputs y_1..y_n for an input sequence u_0..u_{n-1} from rest."""
    state = reset(ss)
    out = np.empty(len(inputs))
    for k, u in enumerate(inputs):
        state, out[k] = step(ss, state, u)
    return out
