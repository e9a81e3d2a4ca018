"""Brute-force grid search over the PID action box."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..env import EpisodeConfig, run_episodes
from ..pid import PidParams
from ..plant import DiscreteSS, discretize
from .config import ExperimentConfig
from .runner import _csv

ORACLE_COLUMNS = ("kp", "tau_i", "tau_d", "reward")
CHUNK = 4096
REFINE_FACTOR = 10


@dataclass(frozen=True)
class OracleResult:
    best: PidParams
    best_reward: float
    coarse_best: PidParams
    coarse_reward: float
    cells: np.ndarray  # (n, 4): kp, tau_i, tau_d, reward

    def csv(self) -> str:
        return _csv(ORACLE_COLUMNS, self.cells.tolist())


def axes(box, resolution: int) -> list[np.ndarray]:
    if resolution < 2:
        raise ValueError("resolution must be at least 2 per axis")
    return [np.unique(np.linspace(lo, hi, resolution)) for lo, hi in box]


def grid(axis_values: list[np.ndarray]) -> np.ndarray:
    mesh = np.meshgrid(*axis_values, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _evaluate_chunk(args) -> np.ndarray:
    plant, cfg, pts = args
    return run_episodes(plant, pts[:, 0], pts[:, 1], pts[:, 2], cfg)


def evaluate(plant: DiscreteSS, cfg: EpisodeConfig, points: np.ndarray, workers: int = 1) -> np.ndarray:
    """Rewards for every row of ``points``; tau_i is floored first."""
    pts = np.array(points, dtype=float)
    pts[:, 1] = np.maximum(pts[:, 1], cfg.tau_i_floor)
    chunks = [(plant, cfg, pts[i : i + CHUNK]) for i in range(0, len(pts), CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_evaluate_chunk, chunks))
    else:
        parts = [_evaluate_chunk(c) for c in chunks]
    return np.concatenate(parts) if parts else np.zeros(0)


def argbest(points: np.ndarray, rewards: np.ndarray) -> int:
    """Highest reward; ties go to the lexicographically smallest point, so order never matters."""
    top = rewards == rewards.max()
    idx = np.flatnonzero(top)
    order = np.lexsort(points[idx].T[::-1])
    return int(idx[order[0]])


def refine_axes(box, coarse_axes, best_point) -> list[np.ndarray]:
    out = []
    for (lo, hi), ax, centre in zip(box, coarse_axes, best_point):
        if len(ax) < 2:
            out.append(ax)
            continue
        step = float(ax[1] - ax[0])
        a, b = max(lo, centre - step), min(hi, centre + step)
        n = int(round((b - a) / step * REFINE_FACTOR)) + 1
        out.append(np.unique(np.linspace(a, b, n)))
    return out


def search(plant: DiscreteSS, cfg: EpisodeConfig, resolution: int, workers: int = 1) -> OracleResult:
    coarse_axes = axes(cfg.action_box, resolution)
    coarse = grid(coarse_axes)
    r_coarse = evaluate(plant, cfg, coarse, workers)
    i = argbest(coarse, r_coarse)
    fine = grid(refine_axes(cfg.action_box, coarse_axes, coarse[i]))
    r_fine = evaluate(plant, cfg, fine, workers)
    pts = np.concatenate([coarse, fine])
    rewards = np.concatenate([r_coarse, r_fine])
    pts[:, 1] = np.maximum(pts[:, 1], cfg.tau_i_floor)
    j = argbest(pts, rewards)
    params = lambda p: PidParams(float(p[0]), float(p[1]), float(p[2]))  # noqa: E731
    c = coarse[i].copy()
    c[1] = max(c[1], cfg.tau_i_floor)
    return OracleResult(
        best=params(pts[j]),
        best_reward=float(rewards[j]),
        coarse_best=params(c),
        coarse_reward=float(r_coarse[i]),
        cells=np.column_stack([pts, rewards]),
    )


def run_oracle(cfg: ExperimentConfig, resolution: int, out_dir=None, workers: int = 1) -> OracleResult:
    result = search(discretize(cfg.plant_model()), cfg.episode_config(), resolution, workers)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "oracle.csv").write_text(result.csv())
    return result
