"""Experiment pipelines behind the ``run`` command."""

from rankmap.core.models import ExperimentConfig, ExperimentKind

from .base import BaseExperiment, ExperimentResult
from .finance import FinanceExperiment
from .imaging import ImagingExperiment
from .sweep import SweepExperiment
from .swe import SweExperiment

EXPERIMENT_MAP: dict[ExperimentKind, type[BaseExperiment]] = {
    ExperimentKind.IMAGING: ImagingExperiment,
    ExperimentKind.SWEEP: SweepExperiment,
    ExperimentKind.FINANCE: FinanceExperiment,
    ExperimentKind.SWE: SweExperiment,
}


def create_experiment(config: ExperimentConfig) -> BaseExperiment:
    """Instantiate the pipeline named by ``config.experiment``."""
    return EXPERIMENT_MAP[config.experiment](config)


__all__ = [
    "BaseExperiment",
    "ExperimentResult",
    "FinanceExperiment",
    "ImagingExperiment",
    "SweepExperiment",
    "SweExperiment",
    "EXPERIMENT_MAP",
    "create_experiment",
]
