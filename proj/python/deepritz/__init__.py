"""Deep Ritz solvers for variational problems."""

from ._core import (
    CURVE_HEADER,
    BoundaryWeighting,
    CheckpointParseError,
    ConfigError,
    InitScheme,
    LayoutError,
    NonFiniteLossError,
    NormPenalty,
    RunConfig,
    UnknownProblemError,
    evaluate_checkpoint,
    exact_solution,
    fdm_solve,
    grad_check,
    list_problems,
    load_checkpoint,
    load_config,
)
from ._core import run as _run

__all__ = [
    "CURVE_HEADER",
    "BoundaryWeighting",
    "CheckpointParseError",
    "ConfigError",
    "InitScheme",
    "LayoutError",
    "NonFiniteLossError",
    "NormPenalty",
    "RunConfig",
    "UnknownProblemError",
    "config",
    "evaluate_checkpoint",
    "exact_solution",
    "fdm_solve",
    "grad_check",
    "list_problems",
    "load_checkpoint",
    "load_config",
    "run",
]


def config(problem, **fields):
    """RunConfig for `problem` with the given fields set."""
    cfg = RunConfig(problem)
    for key, value in fields.items():
        if not hasattr(cfg, key):
            raise TypeError(f"unknown RunConfig field {key!r}")
        setattr(cfg, key, value)
    return cfg


def run(problem_or_config, **fields):
    """Train a catalog problem.  Accepts a RunConfig or a problem id plus fields."""
    if isinstance(problem_or_config, RunConfig):
        if fields:
            raise TypeError("pass either a RunConfig or keyword fields, not both")
        cfg = problem_or_config
    else:
        cfg = config(problem_or_config, **fields)
    return _run(cfg)
