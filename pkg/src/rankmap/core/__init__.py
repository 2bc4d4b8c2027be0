"""Configuration models and presets for rankmap."""

from .models import (
    BlurSpec,
    ExperimentConfig,
    ExperimentKind,
    FactorStrategy,
    Form,
    IcFamily,
    InitialConditionSpec,
    OptimizerKind,
    Preset,
    SweExperimentSpec,
    SweParams,
    SyntheticImageSpec,
    SyntheticMarketSpec,
    Task,
    TrainConfig,
)

__all__ = [
    "BlurSpec",
    "ExperimentConfig",
    "ExperimentKind",
    "FactorStrategy",
    "Form",
    "IcFamily",
    "InitialConditionSpec",
    "OptimizerKind",
    "Preset",
    "SweExperimentSpec",
    "SweParams",
    "SyntheticImageSpec",
    "SyntheticMarketSpec",
    "Task",
    "TrainConfig",
]
