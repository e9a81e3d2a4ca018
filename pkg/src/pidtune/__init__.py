"""RL-based PID autotuning for a dead-time process."""
