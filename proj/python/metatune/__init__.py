"""Replay brute-forced auto-tuning search spaces; score and hypertune optimizers."""

from ._metatune import (
    ArgumentError,
    Error,
    IoError,
    SchemaError,
    ScoringError,
    SearchSpace,
    SpecError,
    ValidationError,
    __version__,
    baseline,
    budget,
    expected_min_after_n,
    grid_size,
    load_cache,
    relative_score,
    run_command,
    score,
    simulate_run,
    synth_space,
)

__all__ = [
    "ArgumentError",
    "Error",
    "IoError",
    "SchemaError",
    "ScoringError",
    "SearchSpace",
    "SpecError",
    "ValidationError",
    "__version__",
    "baseline",
    "budget",
    "expected_min_after_n",
    "grid_size",
    "load_cache",
    "relative_score",
    "run_command",
    "score",
    "simulate_run",
    "synth_space",
]
