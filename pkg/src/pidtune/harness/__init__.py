"""Experiment driver: configuration, seeded runs, grid oracle and comparison reports."""
from .compare import Report, compare_runs, discover
from .config import ConfigError, ExperimentConfig, PRESETS
from .oracle import OracleResult, run_oracle
from .runner import RunArtifacts, execute, run, run_many

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "OracleResult",
    "PRESETS",
    "Report",
    "RunArtifacts",
    "compare_runs",
    "discover",
    "execute",
    "run_oracle",
    "run",
    "run_many",
]
