"""MinDiff fairness regularization: penalties, metrics, training and sweeps."""

from ._core import (
    ConfigError,
    DimensionError,
    IngestionError,
    MetricError,
    NumericError,
    correlation_penalty,
    evaluate,
    gaussian_kernel,
    laplace_kernel,
    load_adult,
    mmd_squared,
    pairwise_simulation,
    pareto_front,
    train,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "IngestionError",
    "MetricError",
    "NumericError",
    "correlation_penalty",
    "evaluate",
    "gaussian_kernel",
    "laplace_kernel",
    "load_adult",
    "mmd_squared",
    "pairwise_simulation",
    "pareto_front",
    "train",
]
