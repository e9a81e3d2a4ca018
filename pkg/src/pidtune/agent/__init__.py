from .buffer import Batch, ReplayBuffer
from .emtd3 import (
    Agent,
    AgentConfig,
    InteractionRecord,
    NumericalFailure,
    TwinMinViolation,
    act,
    critic_update,
    deterministic_actor_update,
    soft_td_target,
    stochastic_actor_update,
    td3_td_target,
)
from .policies import DeterministicPolicy, StochasticPolicy, TwinCritics, sample_stochastic
from .schedules import Schedules, advance_schedules

__all__ = [
    "Agent",
    "AgentConfig",
    "Batch",
    "DeterministicPolicy",
    "InteractionRecord",
    "NumericalFailure",
    "ReplayBuffer",
    "Schedules",
    "StochasticPolicy",
    "TwinCritics",
    "TwinMinViolation",
    "act",
    "advance_schedules",
    "critic_update",
    "deterministic_actor_update",
    "sample_stochastic",
    "soft_td_target",
    "stochastic_actor_update",
    "td3_td_target",
]
