"""Two-stage actor-critic PID tuner and its TD3 baseline.

Stage one (``interaction < warmup``) acts with an entropy-regularized
squashed-Gaussian actor and trains the twin critics on the soft target.
Stage two acts with a deterministic actor plus decaying Gaussian noise and
trains the same critics on the clipped, smoothed twin-min target. The TD3
baseline is this loop with ``warmup = 0`` and no stochastic actor at all.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .. import env as env_mod
from .. import nn
from ..env import EpisodeConfig, Experience
from ..plant import DiscreteSS
from .buffer import Batch, ReplayBuffer
from .policies import (
    DeterministicPolicy,
    StochasticPolicy,
    TwinCritics,
    draw,
    q_action_grad,
    q_value,
)
from .schedules import Schedules, advance_schedules, in_warmup

ACTION_DIM = 3


class NumericalFailure(RuntimeError):
    def __init__(self, interaction: int, detail: str):
        super().__init__(f"numerical failure at interaction {interaction}: {detail}")
        self.interaction = interaction
        self.detail = detail

    def __reduce__(self):
        return type(self), (self.interaction, self.detail)


class TwinMinViolation(AssertionError):
    pass


@dataclass(frozen=True)
class AgentConfig:
    gamma: float = 0.99
    batch_size: int = 40
    actor_lr: float = 0.02
    critic_lr: float = 0.0005
    rho_new: float = 0.006
    buffer_capacity: int = 1000
    hidden: tuple[int, ...] = (64, 64)
    # stored rewards are multiplied by this; None means 1 / |do-nothing reward|
    reward_scale: float | None = None
    # divide y and y_sp by |setpoint| and u by the widest actuator limit
    normalize_state: bool = True
    updates_per_interaction: int = 20
    # L2 pull on the deterministic actor's pre-tanh output
    actor_preact_penalty: float = 0.003

    def __post_init__(self) -> None:
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not 1 <= self.batch_size <= self.buffer_capacity:
            raise ValueError("need 1 <= batch_size <= buffer_capacity")
        if not 0.0 <= self.rho_new <= 1.0:
            raise ValueError("rho_new must lie in [0, 1]")
        if not (self.actor_lr > 0 and self.critic_lr > 0):
            raise ValueError("learning rates must be positive")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ValueError("hidden widths must be positive")
        if self.reward_scale is not None and not self.reward_scale > 0:
            raise ValueError("reward_scale must be positive")
        if self.updates_per_interaction < 1:
            raise ValueError("updates_per_interaction must be at least 1")
        if self.actor_preact_penalty < 0:
            raise ValueError("actor_preact_penalty must be non-negative")


def _check_twin_min(q_min: np.ndarray, q1: np.ndarray, q2: np.ndarray) -> None:
    if not (np.all(q_min <= q1) and np.all(q_min <= q2)):
        raise TwinMinViolation("twin-min target exceeds an individual target critic")


def soft_td_target(
    batch: Batch,
    critics: TwinCritics,
    policy: StochasticPolicy,
    gamma: float,
    beta: float,
    rng: np.random.Generator | None,
    noise=None,
) -> np.ndarray:
    nxt = draw(policy, batch.s_next, rng, noise)
    q1 = q_value(critics.q1_target, batch.s_next, nxt.a)
    q2 = q_value(critics.q2_target, batch.s_next, nxt.a)
    q_min = np.minimum(q1, q2)
    _check_twin_min(q_min, q1, q2)
    return batch.r + gamma * (q_min - beta * nxt.logp)


def td3_td_target(
    batch: Batch,
    critics: TwinCritics,
    policy: DeterministicPolicy,
    gamma: float,
    target_noise_sigma: float,
    clip: float,
    rng: np.random.Generator | None,
) -> np.ndarray:
    mu = policy.target(batch.s_next)
    if target_noise_sigma > 0 and clip > 0:
        eps = np.clip(target_noise_sigma * rng.standard_normal(mu.shape), -clip, clip)
    else:
        eps = 0.0
    a_next = np.clip(mu + eps, -1.0, 1.0)
    q1 = q_value(critics.q1_target, batch.s_next, a_next)
    q2 = q_value(critics.q2_target, batch.s_next, a_next)
    q_min = np.minimum(q1, q2)
    _check_twin_min(q_min, q1, q2)
    return batch.r + gamma * q_min


def critic_loss(net: nn.Mlp, batch: Batch, targets: np.ndarray) -> float:
    err = q_value(net, batch.s, batch.a) - targets
    return float(np.mean(err * err))


def critic_update(
    critics: TwinCritics,
    batch: Batch,
    targets: np.ndarray,
    opts: tuple[nn.OptimizerState, nn.OptimizerState],
) -> tuple[float, float]:
    """One MSE descent step per critic; returns the pre-step losses."""
    sa = np.concatenate([batch.s, batch.a], axis=-1)
    n = len(targets)
    losses = []
    for net, opt in zip((critics.q1, critics.q2), opts):
        err = nn.forward(net, sa)[:, 0] - targets
        loss = float(np.mean(err * err))
        if not math.isfinite(loss):
            raise FloatingPointError(
                f"critic loss {loss!r}; targets range [{targets.min()}, {targets.max()}]"
            )
        grads = nn.backward(net, sa, (2.0 / n * err)[:, None])
        nn.optimize_step(opt, net, grads)
        losses.append(loss)
    return losses[0], losses[1]


def stochastic_objective(
    policy: StochasticPolicy, critics: TwinCritics, s: np.ndarray, beta: float, noise: np.ndarray
) -> float:
    smp = draw(policy, s, None, noise)
    q_min = np.minimum(q_value(critics.q1, s, smp.a), q_value(critics.q2, s, smp.a))
    return float(np.mean(q_min - beta * smp.logp))


def stochastic_actor_update(
    policy: StochasticPolicy,
    critics: TwinCritics,
    batch: Batch,
    beta: float,
    opt: nn.OptimizerState,
    rng: np.random.Generator | None,
    noise=None,
) -> float:
    """Reparameterized ascent on mean(min Q - beta * log pi); returns the pre-step objective."""
    s = batch.s
    n = len(s)
    smp = draw(policy, s, rng, noise)
    a = smp.a
    q1 = q_value(critics.q1, s, a)
    q2 = q_value(critics.q2, s, a)
    q_min = np.minimum(q1, q2)
    objective = float(np.mean(q_min - beta * smp.logp))
    if not math.isfinite(objective):
        raise FloatingPointError(f"stochastic actor objective {objective!r}")
    use1 = (q1 <= q2).astype(float)
    dq_da = q_action_grad(critics.q1, s, a, use1) + q_action_grad(critics.q2, s, a, 1.0 - use1)
    # logp = sum(-noise^2/2 - log_std - log(2 pi)/2 - log(1 - tanh(z)^2)), z = mean + std * noise
    dJ_dz = dq_da * (1.0 - a * a) - beta * 2.0 * a
    dJ_dmean = dJ_dz
    dJ_dlogstd = dJ_dz * smp.std * smp.noise + beta
    inside = (smp.raw_log_std >= policy.log_std_min) & (smp.raw_log_std <= policy.log_std_max)
    upstream = -np.concatenate([dJ_dmean, dJ_dlogstd * inside], axis=-1) / n
    nn.optimize_step(opt, policy.net, nn.backward(policy.net, s, upstream))
    return objective


def deterministic_objective(policy: DeterministicPolicy, critics: TwinCritics, s: np.ndarray) -> float:
    return float(np.mean(q_value(critics.q1, s, policy(s))))


def deterministic_actor_update(
    policy: DeterministicPolicy,
    critics: TwinCritics,
    batch: Batch,
    opt: nn.OptimizerState,
    preact_penalty: float = 0.0,
) -> float:
    """Ascent on mean Q1(s, mu(s)) through the critic's action input."""
    s = batch.s
    a = policy(s)
    objective = float(np.mean(q_value(critics.q1, s, a)))
    if not math.isfinite(objective):
        raise FloatingPointError(f"deterministic actor objective {objective!r}")
    dq_da = q_action_grad(critics.q1, s, a, np.ones(len(s)))
    n = len(s)
    extra = None
    if preact_penalty > 0:
        extra = 2.0 * preact_penalty * nn.preactivation(policy.net, s) / n
    nn.optimize_step(opt, policy.net, nn.backward(policy.net, s, -dq_da / n, extra))
    return objective


def act(
    warmup_stage: bool,
    s: np.ndarray,
    stochastic: StochasticPolicy | None,
    deterministic: DeterministicPolicy,
    sch: Schedules,
    rng: np.random.Generator,
) -> np.ndarray:
    if warmup_stage:
        return draw(stochastic, s, rng).a
    mu = deterministic(s)
    if sch.sigma2 > 0:
        mu = mu + math.sqrt(sch.sigma2) * rng.standard_normal(mu.shape)
    return np.clip(mu, -1.0, 1.0)


@dataclass
class InteractionRecord:
    interaction: int
    kp: float
    tau_i: float
    tau_d: float
    reward: float
    critic_loss_1: float
    critic_loss_2: float
    actor_objective: float
    beta: float
    sigma2: float
    stage: str
    action: np.ndarray = field(repr=False)


class Agent:
    """Owns every network, optimizer, buffer and RNG stream of one training run."""

    def __init__(
        self,
        plant: DiscreteSS,
        episode: EpisodeConfig,
        config: AgentConfig,
        schedules: Schedules,
        seed: int,
        algorithm: str = "emtd3",
    ):
        if algorithm not in ("emtd3", "td3"):
            raise ValueError(f"unknown algorithm {algorithm!r}")
        self.plant = plant
        self.episode = episode
        self.config = config
        self.algorithm = algorithm
        self.schedules = schedules if algorithm == "emtd3" else replace(schedules, warmup=0)
        # separate streams so both algorithms share critic and actor inits per seed
        streams = np.random.SeedSequence(seed).spawn(5)
        critic_rng, det_rng, sto_rng, self.act_rng, self.update_rng = (
            np.random.default_rng(ss) for ss in streams
        )
        n_s = episode.state_dim
        h = config.hidden
        self.critics = TwinCritics.create(n_s, ACTION_DIM, h, critic_rng)
        self.deterministic = DeterministicPolicy.create(n_s, ACTION_DIM, h, det_rng)
        self.stochastic = (
            StochasticPolicy.create(n_s, ACTION_DIM, h, sto_rng) if algorithm == "emtd3" else None
        )
        self.critic_opts = (
            nn.adam(self.critics.q1, config.critic_lr),
            nn.adam(self.critics.q2, config.critic_lr),
        )
        self.det_opt = nn.adam(self.deterministic.net, config.actor_lr)
        self.sto_opt = nn.adam(self.stochastic.net, config.actor_lr) if self.stochastic else None
        self.buffer = ReplayBuffer(config.buffer_capacity)
        self.state = env_mod.initial_state(episode)
        self.obs_scale = np.ones(n_s)
        if config.normalize_state:
            p = episode.state_points
            u_span = max(abs(episode.limits.u_min), abs(episode.limits.u_max))
            y_span = abs(episode.setpoint) or 1.0
            self.obs_scale = np.concatenate(
                [np.full(p, 1.0 / y_span), np.full(p, 1.0 / u_span), np.full(p, 1.0 / y_span)]
            )
        self.reward_scale = config.reward_scale
        if self.reward_scale is None:
            self.reward_scale = 1.0 / (abs(episode.do_nothing_reward) or 1.0)
        self.interaction = 0
        self.twin_min_checks = 0
        self.last_trajectory: env_mod.Trajectory | None = None
        self.last_params = None

    def train_interaction(self) -> InteractionRecord:
        k = self.interaction
        try:
            return self._train_interaction(k)
        except (FloatingPointError, np.linalg.LinAlgError) as exc:
            raise NumericalFailure(k, str(exc)) from exc

    def _train_interaction(self, k: int) -> InteractionRecord:
        cfg, sch = self.config, self.schedules
        warm = in_warmup(sch, k)
        a = act(warm, self.state * self.obs_scale, self.stochastic, self.deterministic, sch, self.act_rng)
        params = env_mod.scale_action(a, self.episode.action_box, self.episode.tau_i_floor)
        traj = env_mod.run_episode(self.plant, params, self.episode)
        r = env_mod.episode_reward(traj, self.episode)
        s_next = env_mod.make_state(traj, self.episode)
        self.buffer.add(Experience(self.state, a, r * self.reward_scale, s_next))
        self.state = s_next
        self.last_trajectory = traj
        self.last_params = params

        loss1 = loss2 = actor_obj = math.nan
        if len(self.buffer) >= cfg.batch_size:
            for j in range(cfg.updates_per_interaction):
                step = k * cfg.updates_per_interaction + j
                loss1, loss2, obj = self._update_round(warm, step)
                if not math.isnan(obj):
                    actor_obj = obj

        record = InteractionRecord(
            interaction=k,
            kp=params.kp,
            tau_i=params.tau_i,
            tau_d=params.tau_d,
            reward=r,
            critic_loss_1=loss1,
            critic_loss_2=loss2,
            actor_objective=actor_obj,
            beta=sch.beta if self.stochastic is not None else math.nan,
            sigma2=sch.sigma2,
            stage="warmup" if warm else "exploit",
            action=a,
        )
        self.schedules = advance_schedules(sch, warm)
        self.interaction += 1
        return record

    def _update_round(self, warm: bool, step: int) -> tuple[float, float, float]:
        cfg, sch = self.config, self.schedules
        batch = self.buffer.sample(cfg.batch_size, self.update_rng)
        batch = batch._replace(s=batch.s * self.obs_scale, s_next=batch.s_next * self.obs_scale)
        if warm:
            y = soft_td_target(batch, self.critics, self.stochastic, cfg.gamma, sch.beta, self.update_rng)
        else:
            y = td3_td_target(
                batch,
                self.critics,
                self.deterministic,
                cfg.gamma,
                sch.target_noise_sigma,
                sch.target_noise_clip,
                self.update_rng,
            )
        self.twin_min_checks += 1
        loss1, loss2 = critic_update(self.critics, batch, y, self.critic_opts)
        actor_obj = math.nan
        if warm:
            actor_obj = stochastic_actor_update(
                self.stochastic, self.critics, batch, sch.beta, self.sto_opt, self.update_rng
            )
            self._blend_critics()
        else:
            if step % sch.policy_delay == 0:
                actor_obj = deterministic_actor_update(
                    self.deterministic, self.critics, batch, self.det_opt, cfg.actor_preact_penalty
                )
                self._blend_critics()
                nn.polyak_blend(self.deterministic.net_target, self.deterministic.net, cfg.rho_new)
        return loss1, loss2, actor_obj

    def _blend_critics(self) -> None:
        c, rho = self.critics, self.config.rho_new
        nn.polyak_blend(c.q1_target, c.q1, rho)
        nn.polyak_blend(c.q2_target, c.q2, rho)

    def greedy_params(self):
        """PID parameters of the noise-free deterministic actor at the current state."""
        return env_mod.scale_action(
            self.deterministic(self.state * self.obs_scale), self.episode.action_box, self.episode.tau_i_floor
        )
