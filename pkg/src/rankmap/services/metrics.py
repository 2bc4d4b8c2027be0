"""Error metrics and risk-versus-rank sweeps."""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from rankmap.core.models import Task
from rankmap.services import linalg
from rankmap.services.empirical import DataSet, task_pair
from rankmap.services.mappings import FittedMap
from rankmap.utils.errors import (
    ContractViolationError,
    DimensionMismatchError,
    UndefinedMetricError,
)

logger = logging.getLogger(__name__)

MapBuilder = Callable[[DataSet, int], FittedMap]


def _pair(pred: np.ndarray, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pred = linalg.as_matrix(pred, "prediction")
    truth = linalg.as_matrix(truth, "truth")
    if pred.shape != truth.shape:
        raise DimensionMismatchError("metric operands", truth.shape, pred.shape)
    return pred, truth


def mse(pred: np.ndarray, truth: np.ndarray) -> float:
    """(1/J) ||pred - truth||_F^2 with J the column count."""
    pred, truth = _pair(pred, truth)
    if truth.shape[1] == 0:
        raise UndefinedMetricError("MSE", "no samples")
    return float(np.sum((pred - truth) ** 2) / truth.shape[1])


def nrmse(pred: np.ndarray, truth: np.ndarray) -> float:
    """||pred - truth||_F / ||truth||_F."""
    pred, truth = _pair(pred, truth)
    norm = np.linalg.norm(truth)
    if norm == 0:
        raise UndefinedMetricError("NRMSE", "truth has zero norm")
    return float(np.linalg.norm(pred - truth) / norm)


def mae(pred: np.ndarray, truth: np.ndarray, entries_normalized: bool = False) -> float:
    """Elementwise l1 error divided by the column count J.

    With ``entries_normalized`` the divisor is the total number of entries
    instead, the usual mean absolute error.
    """
    pred, truth = _pair(pred, truth)
    divisor = truth.size if entries_normalized else truth.shape[1]
    if divisor == 0:
        raise UndefinedMetricError("MAE", "no samples")
    return float(np.sum(np.abs(pred - truth)) / divisor)


@dataclass(frozen=True)
class ErrorReport:
    """Reconstruction errors of a shallow-water state estimate."""

    total_nrmse: float
    eta_nrmse: float
    u_mae: float
    v_mae: float
    mse: float
    sample_count: int

    def as_row(self) -> dict[str, float | int]:
        return {
            "total_nrmse": self.total_nrmse,
            "eta_nrmse": self.eta_nrmse,
            "u_mae": self.u_mae,
            "v_mae": self.v_mae,
            "mse": self.mse,
            "sample_count": self.sample_count,
        }


def error_report(
    pred: np.ndarray,
    truth: np.ndarray,
    variable_rows: dict[str, tuple[int, int]],
    entries_normalized: bool = False,
) -> ErrorReport:
    """Total NRMSE, eta NRMSE and u/v MAE sliced by the recorded row ranges."""
    pred, truth = _pair(pred, truth)
    missing = {"u", "v", "eta"} - set(variable_rows)
    if missing:
        raise ContractViolationError(
            f"variable_rows lacks {sorted(missing)}",
            suggestion="Build the data set with swe.variable_rows(grid)",
        )

    def rows(name: str) -> slice:
        start, stop = variable_rows[name]
        return slice(start, stop)

    return ErrorReport(
        total_nrmse=nrmse(pred, truth),
        eta_nrmse=nrmse(pred[rows("eta")], truth[rows("eta")]),
        u_mae=mae(pred[rows("u")], truth[rows("u")], entries_normalized),
        v_mae=mae(pred[rows("v")], truth[rows("v")], entries_normalized),
        mse=mse(pred, truth),
        sample_count=int(truth.shape[1]),
    )


@dataclass(frozen=True)
class SweepRow:
    """One rank of a risk sweep; ``learned_risk`` is None without a learner."""

    rank: int
    optimal_risk: float
    learned_risk: float | None = None


def _risk(model: FittedMap, inputs: np.ndarray, targets: np.ndarray) -> float:
    return mse(model.apply(inputs), targets)


def risk_rank_sweep(
    builder: MapBuilder,
    ranks: list[int],
    D: DataSet,
    task: Task,
    learner: MapBuilder | None = None,
    evaluation: DataSet | None = None,
) -> list[SweepRow]:
    """Empirical risk of the optimal (and optionally a learned) map at each rank.

    Risks are measured on ``evaluation`` when given, otherwise on ``D``.
    """
    if not ranks or any(r < 1 for r in ranks) or ranks != sorted(set(ranks)):
        raise ContractViolationError(f"ranks must be positive and ascending, got {ranks}")

    inputs, targets = task_pair(evaluation if evaluation is not None else D, task)
    rows = []
    for r in ranks:
        optimal_risk = _risk(builder(D, r), inputs, targets)
        learned_risk = None if learner is None else _risk(learner(D, r), inputs, targets)
        logger.debug("rank %d: optimal %.6g learned %s", r, optimal_risk, learned_risk)
        rows.append(SweepRow(rank=r, optimal_risk=optimal_risk, learned_risk=learned_risk))
    return rows
