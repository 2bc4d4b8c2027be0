"""Base experiment interface and result container."""

from abc import ABC, abstractmethod
from typing import Any

import numpy as np

from rankmap.core.models import ExperimentConfig, TrainConfig
from rankmap.services.empirical import DataSet
from rankmap.utils.paths import map_filename

Row = dict[str, Any]


class ExperimentResult:
    """Tables, matrices and headline numbers produced by one experiment run."""

    def __init__(
        self,
        experiment_name: str,
        tables: dict[str, list[Row]],
        matrices: dict[str, np.ndarray] | None = None,
        summary: dict[str, Any] | None = None,
        notes: list[str] | None = None,
    ):
        """Initialize experiment result.

        Args:
            experiment_name: Name of the experiment
            tables: Result tables keyed by CSV stem, each a list of rows
            matrices: Matrices keyed by path relative to the output directory, without suffix
            summary: Headline numbers for the report
            notes: Clamps, non-uniqueness flags and other caveats met during the run
        """
        self.experiment_name = experiment_name
        self.tables = tables
        self.matrices = matrices or {}
        self.summary = summary or {}
        self.notes = notes or []

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary (matrices by shape only)."""
        return {
            "experiment": self.experiment_name,
            "tables": {name: len(rows) for name, rows in self.tables.items()},
            "matrices": {key: list(M.shape) for key, M in self.matrices.items()},
            "summary": self.summary,
            "notes": self.notes,
        }


class BaseExperiment(ABC):
    """Base class for all experiment pipelines."""

    def __init__(self, config: ExperimentConfig):
        """Initialize experiment.

        Args:
            config: Validated experiment configuration
        """
        self.config = config

    @property
    @abstractmethod
    def name(self) -> str:
        """Get experiment name."""
        pass

    @abstractmethod
    def generate(self, seed: int) -> dict[str, DataSet]:
        """Build the data splits for one seed."""
        pass

    @abstractmethod
    def run(self) -> ExperimentResult:
        """Run the pipeline over every configured seed and rank."""
        pass

    def data_matrices(self, splits: dict[str, DataSet]) -> dict[str, np.ndarray]:
        """Matrices of the data splits keyed ``data/<split>/X`` and ``data/<split>/Y``."""
        matrices = {}
        for split, data in splits.items():
            matrices[f"data/{split}/X"] = data.X
            if data.Y is not None:
                matrices[f"data/{split}/Y"] = data.Y
        return matrices

    def train_config(self, rank: int, seed: int, affine: bool = False) -> TrainConfig | None:
        """Training settings at ``rank`` and ``seed``, or None when training is disabled."""
        if self.config.training is None:
            return None
        return self.config.training.model_copy(
            update={"rank": rank, "seed": seed, "affine": affine or self.config.training.affine}
        )


def map_matrices(model: Any, task: str, form: str, rank: int) -> dict[str, np.ndarray]:
    """``maps/A_...`` (and ``maps/b_...`` for a bias) entries for a fitted map."""
    stem = map_filename("A", task, form, rank).removesuffix(".rkmp")
    matrices = {f"maps/{stem}": model.A}
    if getattr(model, "bias", None) is not None:
        matrices[f"maps/{map_filename('b', task, form, rank).removesuffix('.rkmp')}"] = model.bias
    return matrices
