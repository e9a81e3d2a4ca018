"""Seeded training runs and their CSV artifacts."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import nn
from ..agent import Agent, InteractionRecord, NumericalFailure
from ..env import Trajectory, episode_reward, run_episode
from ..pid import PidParams
from ..plant import discretize
from .config import ExperimentConfig, as_dict

CURVE_COLUMNS = (
    "interaction",
    "kp",
    "tau_i",
    "tau_d",
    "reward",
    "critic_loss_1",
    "critic_loss_2",
    "actor_objective",
    "beta",
    "sigma2",
    "stage",
)
ACTION_COLUMNS = ("interaction", "kp", "tau_i", "tau_d", "stage")
TRAJECTORY_COLUMNS = ("t", "y", "u", "y_sp")


@dataclass
class RunArtifacts:
    config: ExperimentConfig
    records: list[InteractionRecord]
    trajectory: Trajectory
    final_params: PidParams
    greedy_params: PidParams
    greedy_reward: float
    wall_clock_s: float
    stopped_on_plateau: bool = False
    failure: NumericalFailure | None = None
    networks: dict[str, nn.Mlp] = field(default_factory=dict)


def fmt(v) -> str:
    """Round-trip text for a CSV cell."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def curve_csv(records: list[InteractionRecord]) -> str:
    return _csv(CURVE_COLUMNS, ([getattr(r, c) for c in CURVE_COLUMNS] for r in records))


def actions_csv(records: list[InteractionRecord]) -> str:
    return _csv(ACTION_COLUMNS, ([getattr(r, c) for c in ACTION_COLUMNS] for r in records))


def trajectory_csv(traj: Trajectory, dt: float) -> str:
    rows = ((k * dt, traj.y[k], traj.u[k], traj.y_sp[k]) for k in range(len(traj.y)))
    return _csv(TRAJECTORY_COLUMNS, rows)


def plateaued(rewards: list[float], window: int, tol: float) -> bool:
    """True when the last two ``window``-long means differ by at most ``tol``."""
    if window <= 0 or len(rewards) < 2 * window:
        return False
    last = float(np.mean(rewards[-window:]))
    prev = float(np.mean(rewards[-2 * window : -window]))
    return abs(last - prev) <= tol


def execute(cfg: ExperimentConfig) -> RunArtifacts:
    """Train one agent for ``cfg.budget`` interactions; no file I/O."""
    start = time.perf_counter()
    plant = discretize(cfg.plant_model())
    episode = cfg.episode_config()
    agent = Agent(plant, episode, cfg.agent_config(), cfg.schedules(), cfg.seed, cfg.algorithm)
    records: list[InteractionRecord] = []
    failure = None
    stopped = False
    for _ in range(cfg.budget):
        try:
            records.append(agent.train_interaction())
        except NumericalFailure as exc:
            failure = exc
            break
        if plateaued([r.reward for r in records], cfg.plateau_window, cfg.plateau_tol):
            stopped = True
            break
    greedy = agent.greedy_params()
    greedy_traj = run_episode(plant, greedy, episode)
    if agent.last_trajectory is None:
        traj, final = greedy_traj, greedy
    else:
        traj, final = agent.last_trajectory, agent.last_params
    networks = {}
    if cfg.save_networks:
        networks = {
            "critic_1": agent.critics.q1,
            "critic_2": agent.critics.q2,
            "critic_1_target": agent.critics.q1_target,
            "critic_2_target": agent.critics.q2_target,
            "actor": agent.deterministic.net,
            "actor_target": agent.deterministic.net_target,
        }
        if agent.stochastic is not None:
            networks["stochastic_actor"] = agent.stochastic.net
    return RunArtifacts(
        config=cfg,
        records=records,
        trajectory=traj,
        final_params=final,
        greedy_params=greedy,
        greedy_reward=episode_reward(greedy_traj, episode),
        wall_clock_s=time.perf_counter() - start,
        stopped_on_plateau=stopped,
        failure=failure,
        networks=networks,
    )


def _params_dict(p: PidParams) -> dict:
    return {"kp": p.kp, "tau_i": p.tau_i, "tau_d": p.tau_d}


def summary_record(art: RunArtifacts) -> dict:
    rewards = [r.reward for r in art.records]
    return {
        "config": as_dict(art.config),
        "interactions": len(art.records),
        "final_params": _params_dict(art.final_params),
        "final_reward": rewards[-1] if rewards else None,
        "final_window_mean": float(np.mean(rewards[-10:])) if rewards else None,
        "greedy_params": _params_dict(art.greedy_params),
        "greedy_reward": art.greedy_reward,
        "stopped_on_plateau": art.stopped_on_plateau,
        "failure": None
        if art.failure is None
        else {"interaction": art.failure.interaction, "detail": art.failure.detail},
        "wall_clock_s": art.wall_clock_s,
    }


def write(art: RunArtifacts, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "learning_curve.csv").write_text(curve_csv(art.records))
    (out / "actions.csv").write_text(actions_csv(art.records))
    (out / "final_trajectory.csv").write_text(trajectory_csv(art.trajectory, art.config.dt))
    summary = summary_record(art)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, allow_nan=False, default=_json_default) + "\n")
    if art.networks:
        net_dir = out / "networks"
        net_dir.mkdir(exist_ok=True)
        for name, net in art.networks.items():
            nn.save(net, net_dir / f"{name}.txt")
    return out


def _json_default(v):
    if isinstance(v, tuple):
        return list(v)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def run(cfg: ExperimentConfig, out_dir=None) -> RunArtifacts:
    """Execute and write artifacts; a numerical failure is written, then raised."""
    art = execute(cfg)
    write(art, out_dir if out_dir is not None else cfg.out)
    if art.failure is not None:
        raise art.failure
    return art


def run_many(configs: list[ExperimentConfig], out_dirs: list, workers: int = 1) -> list[RunArtifacts]:
    """Independent runs on a process pool; this process writes every file."""
    if workers <= 1 or len(configs) <= 1:
        results = [execute(c) for c in configs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(execute, configs))
    for art, d in zip(results, out_dirs):
        write(art, d)
    return results


def final_window_mean(records_or_rewards, window: int = 10) -> float:
    rewards = [getattr(r, "reward", r) for r in records_or_rewards]
    if not rewards:
        return math.nan
    return float(np.mean(rewards[-window:]))
