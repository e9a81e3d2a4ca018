"""Closed-loop episode runner: one PID simulation per agent interaction."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import plant as plant_mod
from .pid import TAU_I_FLOOR, Limits, PidParams, pid_reset, pid_step, pid_step_batch
from .plant import DiscreteSS

log = logging.getLogger(__name__)

ActionBox = tuple[tuple[float, float], tuple[float, float], tuple[float, float]]

CASE1_BOX: ActionBox = ((0.0, 15.0), (0.0, 15.0), (0.0, 10.0))
CASE2_BOX: ActionBox = ((0.0, 20.0), (0.0, 20.0), (0.0, 20.0))


@dataclass(frozen=True)
class EpisodeConfig:
    horizon: int = 200
    dt: float = 1.0
    setpoint: float = 7.5
    limits: Limits = field(default_factory=Limits)
    action_box: ActionBox = CASE1_BOX
    state_points: int = 10
    tau_i_floor: float = TAU_I_FLOOR
    # None means twice the do-nothing reward
    failure_reward: float | None = None

    def __post_init__(self) -> None:
        if not self.horizon >= self.state_points >= 1:
            raise ValueError("need horizon >= state_points >= 1")
        if self.horizon % self.state_points:
            raise ValueError(
                f"horizon {self.horizon} is not divisible by state_points {self.state_points}"
            )
        if not math.isfinite(self.setpoint):
            raise ValueError("setpoint must be finite")
        for lo, hi in self.action_box:
            if not lo <= hi:
                raise ValueError(f"bad action range ({lo}, {hi})")
        if not self.tau_i_floor > 0:
            raise ValueError("tau_i_floor must be positive")

    @property
    def state_dim(self) -> int:
        return 3 * self.state_points

    @property
    def stride(self) -> int:
        return self.horizon // self.state_points

    @property
    def do_nothing_reward(self) -> float:
        return -self.horizon * self.setpoint**2

    @property
    def failure_floor(self) -> float:
        if self.failure_reward is not None:
            return self.failure_reward
        return 2.0 * self.do_nothing_reward


@dataclass(frozen=True)
class Trajectory:
    y: np.ndarray
    u: np.ndarray
    y_sp: np.ndarray
    diverged: bool = False

    def __post_init__(self) -> None:
        if not len(self.y) == len(self.u) == len(self.y_sp):
            raise ValueError("trajectory channels differ in length")


@dataclass(frozen=True)
class Experience:
    s: np.ndarray
    a: np.ndarray
    r: float
    s_next: np.ndarray


def scale_action(a_norm, box: ActionBox, tau_i_floor: float = TAU_I_FLOOR) -> PidParams:
    """Map a normalized action in [-1, 1]^3 onto PID parameters inside ``box``."""
    a = np.asarray(a_norm, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    if np.any(np.abs(a) > 1.0):
        log.warning("normalized action %s outside [-1, 1]; clipping", a)
        a = np.clip(a, -1.0, 1.0)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    p = lo + (a + 1.0) / 2.0 * (hi - lo)
    return PidParams(kp=float(p[0]), tau_i=max(float(p[1]), tau_i_floor), tau_d=float(p[2]))


def unscale_action(params: PidParams, box: ActionBox) -> np.ndarray:
    """Inverse of ``scale_action`` before flooring; degenerate ranges map to 0."""
    out = np.zeros(3)
    for i, (v, (lo, hi)) in enumerate(zip(params.as_tuple(), box)):
        out[i] = 0.0 if hi == lo else 2.0 * (v - lo) / (hi - lo) - 1.0
    return out


def run_episode(plant: DiscreteSS, params: PidParams, cfg: EpisodeConfig) -> Trajectory:
    """Simulate ``cfg.horizon`` control steps from rest with fresh controller memory."""
    H = cfg.horizon
    y = np.zeros(H)
    u = np.zeros(H)
    y_sp = np.full(H, cfg.setpoint)
    ps = plant_mod.reset(plant)
    cs = pid_reset()
    y_k = 0.0
    for k in range(H):
        if not math.isfinite(y_k):
            # pad the tail so the record stays finite and full length
            y[k:] = y[k - 1]
            u[k:] = u[k - 1]
            return Trajectory(y=y, u=u, y_sp=y_sp, diverged=True)
        y[k] = y_k
        cs, u[k] = pid_step(params, cs, cfg.setpoint - y_k, cfg.dt, cfg.limits)
        ps, y_k = plant_mod.step(plant, ps, u[k])
    return Trajectory(y=y, u=u, y_sp=y_sp)


def make_state(traj: Trajectory, cfg: EpisodeConfig) -> np.ndarray:
    idx = slice(0, cfg.horizon, cfg.stride)
    return np.concatenate([traj.y[idx], traj.u[idx], traj.y_sp[idx]])


def initial_state(cfg: EpisodeConfig) -> np.ndarray:
    return np.zeros(cfg.state_dim)


def reward(traj: Trajectory) -> float:
    e = traj.y_sp - traj.y
    return -float(np.dot(e, e))


def episode_reward(traj: Trajectory, cfg: EpisodeConfig) -> float:
    return cfg.failure_floor if traj.diverged else reward(traj)


def run_episodes(
    plant: DiscreteSS,
    kp: np.ndarray,
    tau_i: np.ndarray,
    tau_d: np.ndarray,
    cfg: EpisodeConfig,
) -> np.ndarray:
    """Rewards for many parameter sets at once (same arithmetic as ``run_episode``).

    ``tau_i`` is used as given; apply the floor beforehand.
    """
    kp, tau_i, tau_d = (np.asarray(v, dtype=float).ravel() for v in (kp, tau_i, tau_d))
    n = kp.size
    L = plant.delay_steps
    H = cfg.horizon
    u_hist = np.zeros((H, n))
    x = np.zeros((n, 2))
    y = np.zeros(n)
    integral = np.zeros(n)
    prev_e = np.zeros(n)
    total = np.zeros(n)
    A_T = np.asarray(plant.A).T
    B = np.asarray(plant.B)
    C = np.asarray(plant.C)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(H):
            e = cfg.setpoint - y
            total += e * e
            integral, u_hist[k] = pid_step_batch(
                kp, tau_i, tau_d, integral, prev_e, e, cfg.dt, cfg.limits
            )
            prev_e = e
            u_d = u_hist[k - L] if k >= L else np.zeros(n)
            x = x @ A_T + np.outer(u_d, B)
            y = x @ C
    r = -total
    return np.where(np.isfinite(r), r, cfg.failure_floor)
