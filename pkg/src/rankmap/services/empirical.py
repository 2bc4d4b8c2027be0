"""Empirical moment estimators and sample-based optimal maps.

Columns of a data matrix are samples. Second moments use 1/J, covariances
1/(J - 1). The least-squares maps minimize (1/J)||A inputs - targets||_F^2
over rank-r maps and coincide with the moment plug-in estimators at ridge 0.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from rankmap.core.models import FactorStrategy, Form, Task
from rankmap.services import linalg
from rankmap.services.mappings import ConstructionTrace, MomentModel, OptimalMap
from rankmap.utils.errors import (
    ContractViolationError,
    DimensionMismatchError,
    InsufficientSamplesError,
)

logger = logging.getLogger(__name__)

DEFAULT_RIDGE_SCALE = 1e-8


@dataclass(frozen=True)
class DataSet:
    """Signals X (n x J) and optional observations Y (m x J).

    ``variable_rows`` names contiguous row ranges of X and Y (for example the
    u, v and eta blocks of a shallow-water state).
    """

    X: np.ndarray
    Y: np.ndarray | None = None
    variable_rows: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        X = linalg.as_matrix(self.X, "X")
        if X.shape[1] < 1:
            raise InsufficientSamplesError(1, X.shape[1])
        object.__setattr__(self, "X", X)
        if self.Y is not None:
            Y = linalg.as_matrix(self.Y, "Y")
            if Y.shape[1] != X.shape[1]:
                raise DimensionMismatchError("sample count of Y", X.shape[1], Y.shape[1])
            object.__setattr__(self, "Y", Y)

    @property
    def sample_count(self) -> int:
        """J, the number of samples."""
        return int(self.X.shape[1])

    def require_y(self) -> np.ndarray:
        if self.Y is None:
            raise ContractViolationError(
                "This estimator needs observations Y",
                suggestion="Build the DataSet with both X and Y",
            )
        return self.Y

    def columns(self, index: slice | np.ndarray) -> "DataSet":
        """Subset of samples."""
        return DataSet(
            X=self.X[:, index],
            Y=None if self.Y is None else self.Y[:, index],
            variable_rows=dict(self.variable_rows),
        )

    def split(self, train_fraction: float) -> tuple["DataSet", "DataSet"]:
        """Chronological split: the first ``train_fraction`` of samples trains."""
        if not 0 < train_fraction < 1:
            raise ContractViolationError(f"train_fraction must be in (0, 1), got {train_fraction}")
        J = self.sample_count
        if J < 2:
            raise InsufficientSamplesError(2, J)
        cut = min(max(int(round(J * train_fraction)), 1), J - 1)
        return self.columns(slice(0, cut)), self.columns(slice(cut, J))


def default_ridge(moment: np.ndarray) -> float:
    """1e-8 times the mean diagonal entry."""
    if moment.size == 0:
        return 0.0
    return float(DEFAULT_RIDGE_SCALE * max(np.mean(np.diag(moment)), 0.0))


def _variable(D: DataSet, variable: str) -> np.ndarray:
    if variable == "X":
        return D.X
    if variable == "Y":
        return D.require_y()
    raise ContractViolationError(f"variable must be 'X' or 'Y', got {variable!r}")


def empirical_second_moment(
    D: DataSet,
    ridge: float | None = None,
    strategy: FactorStrategy = FactorStrategy.PSD,
    variable: str = "X",
) -> MomentModel:
    """Gamma = (1/J) X X^T + ridge I; ``ridge`` None selects the default ridge."""
    X = _variable(D, variable)
    moment = X @ X.T / X.shape[1]
    ridge = default_ridge(moment) if ridge is None else ridge
    return MomentModel.from_moment(moment, strategy=strategy, ridge=ridge)


def empirical_covariance(
    D: DataSet,
    ridge: float | None = None,
    strategy: FactorStrategy = FactorStrategy.PSD,
    variable: str = "X",
) -> MomentModel:
    """S = (1/(J-1)) (X - mu 1^T)(X - mu 1^T)^T + ridge I with mu the sample mean.

    Raises:
        InsufficientSamplesError: If J < 2
    """
    X = _variable(D, variable)
    J = X.shape[1]
    if J < 2:
        raise InsufficientSamplesError(2, J)
    mean = X.mean(axis=1)
    centered = X - mean[:, None]
    covariance = centered @ centered.T / (J - 1)
    ridge = default_ridge(covariance) if ridge is None else ridge
    return MomentModel.from_covariance(covariance, mean, strategy=strategy, ridge=ridge)


def cross_moment(D: DataSet) -> np.ndarray:
    """Gamma_XY = (1/J) X Y^T."""
    Y = D.require_y()
    return D.X @ Y.T / D.sample_count


def task_pair(D: DataSet, task: Task) -> tuple[np.ndarray, np.ndarray]:
    """(inputs, targets) of a task: forward X->Y, inverse and denoise Y->X, autoencode X->X."""
    if task == Task.AUTOENCODE:
        return D.X, D.X
    Y = D.require_y()
    if task == Task.FORWARD:
        return D.X, Y
    return Y, D.X


def _training_risk(
    A: np.ndarray, bias: np.ndarray | None, inputs: np.ndarray, targets: np.ndarray
) -> float:
    residual = A @ inputs - targets
    if bias is not None:
        residual += bias[:, None]
    return float(np.sum(residual**2) / inputs.shape[1])


def _trace(branch: str, solution: linalg.RankConstrainedSolution) -> ConstructionTrace:
    notes = []
    if solution.clamped:
        notes.append(
            f"rank {solution.requested_rank} clamped to available rank {solution.core_rank}"
        )
    if not solution.unique:
        notes.append("minimizer not unique at the truncation boundary")
    return ConstructionTrace(
        branch=branch,
        requested_rank=solution.requested_rank,
        effective_rank=solution.effective_rank,
        clamped=solution.clamped,
        unique=solution.unique,
        notes=tuple(notes),
    )


def empirical_map(D: DataSet, r: int, task: Task, form: Form = Form.LINEAR) -> OptimalMap:
    """Least-squares rank-r map (targets V V^T)_r inputs^+ for any task.

    The affine form fits centered data and sets b = mu_targets - A mu_inputs.
    ``risk`` holds the training mean squared error.
    """
    inputs, targets = task_pair(D, task)
    bias = None
    if form == Form.AFFINE:
        mu_in = inputs.mean(axis=1)
        mu_out = targets.mean(axis=1)
        solution = linalg.solve_rank_constrained(
            targets - mu_out[:, None], None, inputs - mu_in[:, None], r
        )
        bias = mu_out - solution.W @ mu_in
    else:
        solution = linalg.solve_rank_constrained(targets, None, inputs, r)

    A = solution.W
    risk = _training_risk(A, bias, inputs, targets)
    logger.debug("least-squares %s/%s r=%d training risk %.6g", task, form, r, risk)
    return OptimalMap(
        A=A,
        bias=bias,
        rank=r,
        task=task,
        form=form,
        risk=risk,
        trace=_trace("least-squares", solution),
    )


def empirical_forward_map(D: DataSet, r: int) -> OptimalMap:
    """(Y V_X V_X^T)_r X^+, the rank-r least-squares fit of Y from X."""
    return empirical_map(D, r, Task.FORWARD)


def empirical_inverse_map(D: DataSet, r: int) -> OptimalMap:
    """(X V_Y V_Y^T)_r Y^+, the rank-r least-squares fit of X from Y."""
    return empirical_map(D, r, Task.INVERSE)


def _factor_pseudoinverse(factor: linalg.SymmetricFactor) -> np.ndarray:
    if factor.source_kind == FactorStrategy.CHOLESKY:
        n = factor.L.shape[0]
        return scipy.linalg.solve_triangular(factor.L, np.eye(n), lower=True)
    return linalg.pseudoinverse(factor.L)


def _plugin(
    inputs: np.ndarray,
    targets: np.ndarray,
    r: int,
    ridge: float,
    strategy: FactorStrategy,
    task: Task,
) -> OptimalMap:
    """A = (Gamma_TI L_I^+T)_r L_I^+ with Gamma_I = L_I L_I^T the ridged input moment."""
    J = inputs.shape[1]
    cross = targets @ inputs.T / J
    moment_in = inputs @ inputs.T / J
    factor = linalg.symmetric_factor(moment_in, strategy=strategy, ridge=ridge)
    L_pinv = _factor_pseudoinverse(factor)
    solution = linalg.solve_rank_constrained(cross @ L_pinv.T, None, None, r)
    A = solution.W @ L_pinv
    return OptimalMap(
        A=A,
        bias=None,
        rank=r,
        task=task,
        form=Form.LINEAR,
        risk=_training_risk(A, None, inputs, targets),
        trace=_trace(f"moment plug-in ({strategy}, ridge {ridge:g})", solution),
    )


def plugin_forward_map(
    D: DataSet, r: int, ridge: float = 0.0, strategy: FactorStrategy = FactorStrategy.PSD
) -> OptimalMap:
    """Forward map from empirical moments: (Gamma_YX L_X^+T)_r L_X^+."""
    return _plugin(D.X, D.require_y(), r, ridge, strategy, Task.FORWARD)


def plugin_inverse_map(
    D: DataSet, r: int, ridge: float = 0.0, strategy: FactorStrategy = FactorStrategy.PSD
) -> OptimalMap:
    """Inverse map from empirical moments: (Gamma_XY L_Y^+T)_r L_Y^+."""
    return _plugin(D.require_y(), D.X, r, ridge, strategy, Task.INVERSE)
