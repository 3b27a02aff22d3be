"""Source-count estimation for linear antenna arrays."""

from ._srcount import (
    CapacityError,
    ConfigError,
    CorruptionError,
    DataError,
    DivergenceError,
    DomainError,
    Error,
    IoError,
    Model,
    ShapeError,
    aic,
    autocorrelation,
    detect_classical,
    eigvalsh,
    evaluate,
    extract_features,
    fbss,
    generate,
    load_dataset,
    mdl,
    run_cli,
    sample_frame,
    steering_vector,
)

__all__ = [
    "CapacityError",
    "ConfigError",
    "CorruptionError",
    "DataError",
    "DivergenceError",
    "DomainError",
    "Error",
    "IoError",
    "Model",
    "ShapeError",
    "aic",
    "autocorrelation",
    "detect_classical",
    "eigvalsh",
    "evaluate",
    "extract_features",
    "fbss",
    "generate",
    "load_dataset",
    "mdl",
    "run_cli",
    "sample_frame",
    "steering_vector",
]
