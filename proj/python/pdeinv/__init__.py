"""Deterministic and linearized Bayesian inversion for PDE models."""

from ._core import (
    Error,
    Experiment,
    InvalidArgument,
    Posterior,
    RunConfig,
    fnv1a64,
    load_config,
    parse_config,
    run,
    verify,
)

__all__ = [
    "Error",
    "Experiment",
    "InvalidArgument",
    "Posterior",
    "RunConfig",
    "fnv1a64",
    "load_config",
    "parse_config",
    "run",
    "verify",
]
