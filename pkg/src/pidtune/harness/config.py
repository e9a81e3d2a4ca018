"""Flat ``key = value`` experiment configuration with two baked-in presets."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from pathlib import Path

from ..agent import AgentConfig, Schedules
from ..env import EpisodeConfig
from ..pid import Limits
from ..plant import PlantModel


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "") -> None:
        self.line = line
        self.source = source
        where = f"{source or '<config>'}:{line}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "case1"
    algorithm: str = "emtd3"
    seed: int = 0
    budget: int = 200
    out: str = "runs/out"
    # 0 disables the plateau stop
    plateau_window: int = 0
    plateau_tol: float = 0.0
    save_networks: bool = False
    # plant
    plant_gain: float = 0.3
    plant_a2: float = 25.0
    plant_a1: float = 10.0
    plant_a0: float = 1.0
    dead_time: float = 10.0
    # episode
    horizon: int = 200
    dt: float = 1.0
    setpoint: float = 7.5
    u_min: float = -20.0
    u_max: float = 100.0
    kp_min: float = 0.0
    kp_max: float = 15.0
    tau_i_min: float = 0.0
    tau_i_max: float = 15.0
    tau_d_min: float = 0.0
    tau_d_max: float = 10.0
    state_points: int = 10
    tau_i_floor: float = 0.05
    # agent
    gamma: float = 0.99
    batch_size: int = 40
    actor_lr: float = 0.02
    critic_lr: float = 0.0005
    rho_new: float = 0.006
    buffer_capacity: int = 1000
    hidden: tuple[int, ...] = (64, 64)
    # auto: 1 / |do-nothing reward|
    reward_scale: float | None = None
    normalize_state: bool = True
    updates_per_interaction: int = 20
    actor_preact_penalty: float = 0.003
    # schedules
    beta: float = 2.0
    inv_beta_increment: float = 0.005
    sigma2: float = 0.05
    noise_decay: float = 0.005
    noise_decay_mode: str = "multiplicative"
    target_noise_sigma: float = 0.1
    target_noise_clip: float = 0.25
    warmup: int = 70
    policy_delay: int = 2

    def __post_init__(self) -> None:
        if self.preset not in PRESETS:
            raise ConfigError(f"unknown preset {self.preset!r}")
        if self.algorithm not in ("emtd3", "td3"):
            raise ConfigError(f"algorithm must be emtd3 or td3, got {self.algorithm!r}")
        if self.budget < 0:
            raise ConfigError("budget must be non-negative")
        if self.plateau_window < 0:
            raise ConfigError("plateau_window must be non-negative")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        try:
            self.plant_model()
            self.episode_config()
            self.agent_config()
            self.schedules()
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def plant_model(self) -> PlantModel:
        return PlantModel(self.plant_gain, self.plant_a2, self.plant_a1, self.plant_a0, self.dead_time, self.dt)

    def episode_config(self) -> EpisodeConfig:
        return EpisodeConfig(
            horizon=self.horizon,
            dt=self.dt,
            setpoint=self.setpoint,
            limits=Limits(self.u_min, self.u_max),
            action_box=(
                (self.kp_min, self.kp_max),
                (self.tau_i_min, self.tau_i_max),
                (self.tau_d_min, self.tau_d_max),
            ),
            state_points=self.state_points,
            tau_i_floor=self.tau_i_floor,
        )

    def agent_config(self) -> AgentConfig:
        return AgentConfig(**{f.name: getattr(self, f.name) for f in fields(AgentConfig)})

    def schedules(self) -> Schedules:
        return Schedules(**{f.name: getattr(self, f.name) for f in fields(Schedules)})

    def comparable_key(self) -> dict:
        """Everything except the per-run selectors; two runs are comparable iff these match."""
        skip = {"algorithm", "seed", "out", "save_networks"}
        return {k: v for k, v in as_dict(self).items() if k not in skip}


PRESETS: dict[str, dict] = {
    "case1": {},
    "case2": {
        "critic_lr": 0.008,
        "warmup": 100,
        "inv_beta_increment": 0.0001,
        "sigma2": 0.08,
        "noise_decay": 0.0045,
        "kp_max": 20.0,
        "tau_i_max": 20.0,
        "tau_d_max": 20.0,
    },
}

FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def as_dict(cfg: ExperimentConfig) -> dict:
    return dataclasses.asdict(cfg)


def _coerce(key: str, text: str):
    kind = FIELD_TYPES[key]
    text = text.strip()
    if kind == "bool":
        low = text.lower()
        if low in ("true", "yes", "1", "on"):
            return True
        if low in ("false", "no", "0", "off"):
            return False
        raise ValueError(f"expected a boolean, got {text!r}")
    if kind == "int":
        return int(text)
    if kind == "float | None" and text.lower() in ("auto", "none"):
        return None
    if kind in ("float", "float | None"):
        if "/" in text:
            num, den = text.split("/", 1)
            return float(num) / float(den)
        return float(text)
    if kind == "tuple[int, ...]":
        parts = [p for p in text.replace(",", " ").split() if p]
        return tuple(int(p) for p in parts)
    return text


def parse_text(text: str, source: str = "") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}", lineno, source)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno, source)
        try:
            out[key] = (_coerce(key, value), lineno)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", lineno, source) from None
    return out


def build(file_values: dict | None = None, overrides: dict | None = None, source: str = "") -> ExperimentConfig:
    """Preset defaults, then file values, then command-line overrides.

    ``file_values`` maps keys to ``(value, line)`` pairs from ``parse_text``.
    """
    file_values = dict(file_values or {})
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    for key in overrides:
        if key not in FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}")
    preset = overrides.get("preset", file_values.get("preset", ("case1", None))[0])
    if preset not in PRESETS:
        line = file_values.get("preset", (None, None))[1]
        raise ConfigError(f"unknown preset {preset!r}", line, source)
    values = dict(PRESETS[preset])
    values.update({k: v for k, (v, _) in file_values.items()})
    values.update(overrides)
    values["preset"] = preset
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        if exc.line is None:
            line = _blame(values, file_values, overrides, preset)
            if line is not None:
                raise ConfigError(str(exc), line, source) from None
        raise


def _blame(values: dict, file_values: dict, overrides: dict, preset: str) -> int | None:
    # the file line whose removal makes the config valid, if there is one
    for key, (_, line) in sorted(file_values.items(), key=lambda kv: kv[1][1]):
        if key in overrides:
            continue
        trial = dict(values)
        if key in PRESETS[preset]:
            trial[key] = PRESETS[preset][key]
        else:
            trial.pop(key)
        try:
            ExperimentConfig(**trial)
        except ConfigError:
            continue
        return line
    return None


def load(path, overrides: dict | None = None) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return build(parse_text(text, str(p)), overrides, str(p))


def dump(cfg: ExperimentConfig) -> str:
    lines = []
    for key, value in as_dict(cfg).items():
        if value is None:
            value = "auto"
        elif isinstance(value, (tuple, list)):
            value = ", ".join(str(v) for v in value)
        elif isinstance(value, float):
            value = repr(value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
