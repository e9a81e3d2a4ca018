from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Schedules:
    """Temperature, exploration noise and stage timing for one run.

    ``sigma2`` is the variance of the Gaussian added to deterministic actions;
    ``target_noise_sigma`` and ``target_noise_clip`` shape the smoothing noise
    on target actions.
    """

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
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")
        if self.warmup < 0:
            raise ValueError("warmup must be non-negative")
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be at least 1")
        if self.noise_decay_mode not in ("multiplicative", "subtractive"):
            raise ValueError(f"unknown noise_decay_mode {self.noise_decay_mode!r}")


def in_warmup(sch: Schedules, interaction: int) -> bool:
    return interaction < sch.warmup


def advance_schedules(sch: Schedules, warmup_stage: bool) -> Schedules:
    """Raise 1/beta during warm-up; decay the exploration variance afterwards."""
    if warmup_stage:
        return replace(sch, beta=1.0 / (1.0 / sch.beta + sch.inv_beta_increment))
    if sch.noise_decay_mode == "multiplicative":
        sigma2 = sch.sigma2 * (1.0 - sch.noise_decay)
    else:
        sigma2 = max(sch.sigma2 - sch.noise_decay, 0.0)
    return replace(sch, sigma2=sigma2)
