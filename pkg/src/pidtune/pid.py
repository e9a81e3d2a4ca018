"""Positional discrete PID with output saturation and conditional integration."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAU_I_FLOOR = 0.05


@dataclass(frozen=True)
class PidParams:
    kp: float
    tau_i: float
    tau_d: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.kp, self.tau_i, self.tau_d)


@dataclass(frozen=True)
class PidState:
    integral_sum: float = 0.0
    prev_error: float = 0.0


@dataclass(frozen=True)
class Limits:
    u_min: float = -20.0
    u_max: float = 100.0

    def __post_init__(self) -> None:
        if not self.u_min < self.u_max:
            raise ValueError(f"u_min must be below u_max, got {self.u_min}, {self.u_max}")


def pid_reset() -> PidState:
    return PidState()


def pid_step(
    params: PidParams, state: PidState, error: float, dt: float, limits: Limits
) -> tuple[PidState, float]:
    """One controller update.

    The integral sum is accumulated as ``sum(e) * dt``. When the unsaturated
    output lies outside the limits and the current error would drive it
    further out, this step's contribution to the integral is dropped.
    """
    if not math.isfinite(error):
        raise FloatingPointError(f"non-finite tracking error {error!r}")
    candidate = state.integral_sum + error * dt
    u_raw = params.kp * (
        error
        + candidate / params.tau_i
        + params.tau_d * (error - state.prev_error) / dt
    )
    # an integral increment of sign(e) moves u_raw by sign(kp * e)
    push = params.kp * error
    if (u_raw > limits.u_max and push > 0) or (u_raw < limits.u_min and push < 0):
        candidate = state.integral_sum
    u = min(max(u_raw, limits.u_min), limits.u_max)
    return PidState(integral_sum=candidate, prev_error=error), u


def pid_step_batch(
    kp: np.ndarray,
    tau_i: np.ndarray,
    tau_d: np.ndarray,
    integral_sum: np.ndarray,
    prev_error: np.ndarray,
    error: np.ndarray,
    dt: float,
    limits: Limits,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized ``pid_step`` over many independent controllers.

    Returns the new integral sums and the saturated outputs; the caller keeps
    ``error`` as the next ``prev_error``.
    """
    candidate = integral_sum + error * dt
    u_raw = kp * (error + candidate / tau_i + tau_d * (error - prev_error) / dt)
    push = kp * error
    frozen = ((u_raw > limits.u_max) & (push > 0)) | ((u_raw < limits.u_min) & (push < 0))
    new_sum = np.where(frozen, integral_sum, candidate)
    return new_sum, np.clip(u_raw, limits.u_min, limits.u_max)
