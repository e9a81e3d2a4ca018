"""Side-by-side report on two sets of seeded runs."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..env import unscale_action
from ..pid import PidParams
from .config import ConfigError, ExperimentConfig
from .runner import _csv

CELLS_PER_AXIS = 5
FINAL_WINDOW = 10
SMOOTH_WINDOW = 10
COMPARE_COLUMNS = (
    "seed",
    "final_mean_a",
    "final_mean_b",
    "delta_final",
    "to_threshold_a",
    "to_threshold_b",
    "cells_a",
    "cells_b",
    "cell_fraction_a",
    "cell_fraction_b",
    "delta_cells",
)


@dataclass(frozen=True)
class LoadedRun:
    path: Path
    config: ExperimentConfig
    rewards: np.ndarray
    params: np.ndarray  # (n, 3) kp, tau_i, tau_d


@dataclass(frozen=True)
class SeedRow:
    seed: int
    final_a: float
    final_b: float
    to_threshold_a: int | None
    to_threshold_b: int | None
    cells_a: int
    cells_b: int

    @property
    def values(self) -> tuple:
        total = CELLS_PER_AXIS**3
        blank = lambda v: "" if v is None else v  # noqa: E731
        return (
            self.seed,
            self.final_a,
            self.final_b,
            self.final_a - self.final_b,
            blank(self.to_threshold_a),
            blank(self.to_threshold_b),
            self.cells_a,
            self.cells_b,
            self.cells_a / total,
            self.cells_b / total,
            self.cells_a - self.cells_b,
        )


def load_run(path) -> LoadedRun:
    path = Path(path)
    summary = json.loads((path / "summary.json").read_text())
    raw = summary["config"]
    raw["hidden"] = tuple(raw["hidden"])
    cfg = ExperimentConfig(**raw)
    with open(path / "learning_curve.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    rewards = np.array([float(r["reward"]) for r in rows])
    params = np.array([[float(r["kp"]), float(r["tau_i"]), float(r["tau_d"])] for r in rows]).reshape(-1, 3)
    return LoadedRun(path, cfg, rewards, params)


def discover(path) -> list[LoadedRun]:
    """A run directory, or a directory whose immediate children are run directories."""
    path = Path(path)
    if (path / "summary.json").exists():
        return [load_run(path)]
    runs = [load_run(p) for p in sorted(path.iterdir()) if (p / "summary.json").exists()]
    if not runs:
        raise ConfigError(f"no runs found under {path}")
    return runs


def final_mean(rewards: np.ndarray, window: int = FINAL_WINDOW) -> float:
    return float(np.mean(rewards[-window:])) if len(rewards) else math.nan


def interactions_to_threshold(rewards: np.ndarray, threshold: float) -> int | None:
    """1-based count of interactions up to the first reward at or above ``threshold``."""
    hits = np.flatnonzero(rewards >= threshold)
    return int(hits[0]) + 1 if len(hits) else None


def occupied_cells(params: np.ndarray, box, n: int = CELLS_PER_AXIS) -> int:
    if len(params) == 0:
        return 0
    norm = np.array([unscale_action(PidParams(*p), box) for p in params])
    idx = np.clip(np.floor((norm + 1.0) / 2.0 * n), 0, n - 1).astype(int)
    return len({tuple(i) for i in idx})


def trailing_mean(x: np.ndarray, window: int = SMOOTH_WINDOW) -> np.ndarray:
    c = np.cumsum(np.insert(np.asarray(x, dtype=float), 0, 0.0))
    k = np.arange(1, len(x) + 1)
    lo = np.maximum(k - window, 0)
    return (c[k] - c[lo]) / (k - lo)


def default_threshold(cfg: ExperimentConfig) -> float:
    # an 80% cut of the do-nothing squared error
    return 0.2 * cfg.episode_config().do_nothing_reward


def compare_runs(a_runs: list[LoadedRun], b_runs: list[LoadedRun], threshold: float | None = None):
    key_a = {r.config.preset for r in a_runs}
    key_b = {r.config.preset for r in b_runs}
    if key_a != key_b or len(key_a) != 1:
        raise ConfigError(f"presets differ: {sorted(key_a)} vs {sorted(key_b)}")
    ref = a_runs[0].config
    for r in a_runs + b_runs:
        if r.config.budget != ref.budget or len(r.rewards) != len(a_runs[0].rewards):
            raise ConfigError(f"budgets differ: {r.path}")
        mismatched = [k for k, v in r.config.comparable_key().items() if ref.comparable_key()[k] != v]
        if mismatched:
            raise ConfigError(f"{r.path} differs from {a_runs[0].path} in {', '.join(mismatched)}")
    by_seed_b = {r.config.seed: r for r in b_runs}
    if threshold is None:
        threshold = default_threshold(ref)
    box = ref.episode_config().action_box
    window = ref.warmup
    rows = []
    for ra in sorted(a_runs, key=lambda r: r.config.seed):
        rb = by_seed_b.get(ra.config.seed)
        if rb is None:
            raise ConfigError(f"seed {ra.config.seed} has no counterpart")
        rows.append(
            SeedRow(
                seed=ra.config.seed,
                final_a=final_mean(ra.rewards),
                final_b=final_mean(rb.rewards),
                to_threshold_a=interactions_to_threshold(ra.rewards, threshold),
                to_threshold_b=interactions_to_threshold(rb.rewards, threshold),
                cells_a=occupied_cells(ra.params[:window], box),
                cells_b=occupied_cells(rb.params[:window], box),
            )
        )
    return Report(rows, threshold, a_runs, b_runs)


def _label(runs: list[LoadedRun]) -> str:
    where = runs[0].path if len(runs) == 1 else runs[0].path.parent
    return f"{runs[0].config.algorithm} ({where})"


@dataclass
class Report:
    rows: list[SeedRow]
    threshold: float
    a_runs: list[LoadedRun]
    b_runs: list[LoadedRun]

    def csv(self) -> str:
        return _csv(COMPARE_COLUMNS, (r.values for r in self.rows))

    def text(self) -> str:
        fa = np.array([r.final_a for r in self.rows])
        fb = np.array([r.final_b for r in self.rows])
        ca = np.array([r.cells_a for r in self.rows])
        cb = np.array([r.cells_b for r in self.rows])
        n = len(self.rows)
        lines = [
            f"A = {_label(self.a_runs)}, B = {_label(self.b_runs)}",
            f"preset {self.a_runs[0].config.preset}, {n} seeds, budget {self.a_runs[0].config.budget}",
            "",
            f"final {FINAL_WINDOW}-interaction mean reward, median: A {np.median(fa):.2f}  B {np.median(fb):.2f}",
            f"seeds where A >= B on final reward: {int(np.sum(fa >= fb))}/{n}",
            f"occupied cells of {CELLS_PER_AXIS}^3 in the first {self.a_runs[0].config.warmup} interactions, "
            f"mean: A {ca.mean():.1f}  B {cb.mean():.1f}",
            f"seeds where A explores more cells: {int(np.sum(ca > cb))}/{n}",
            f"threshold {self.threshold:.2f}: reached by A in {sum(r.to_threshold_a is not None for r in self.rows)}/{n}, "
            f"B in {sum(r.to_threshold_b is not None for r in self.rows)}/{n}",
            "",
            f"seed  {'final A':>12} {'final B':>12} {'thr A':>6} {'thr B':>6} {'cells A':>8} {'cells B':>8}",
        ]
        for r in self.rows:
            ta = "-" if r.to_threshold_a is None else r.to_threshold_a
            tb = "-" if r.to_threshold_b is None else r.to_threshold_b
            lines.append(
                f"{r.seed:4d}  {r.final_a:12.2f} {r.final_b:12.2f} {ta!s:>6} {tb!s:>6} {r.cells_a:8d} {r.cells_b:8d}"
            )
        lines += ["", f"median learning curve (trailing {SMOOTH_WINDOW}-interaction mean)", "  interaction        A        B"]
        ca_ = np.median([trailing_mean(r.rewards) for r in self.a_runs], axis=0)
        cb_ = np.median([trailing_mean(r.rewards) for r in self.b_runs], axis=0)
        marks = sorted(set(range(0, len(ca_), max(1, len(ca_) // 10))) | ({len(ca_) - 1} if len(ca_) else set()))
        for k in marks:
            lines.append(f"  {k + 1:11d} {ca_[k]:8.0f} {cb_[k]:8.0f}")
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "compare.csv").write_text(self.csv())
        (out / "compare.txt").write_text(self.text())
        return out

