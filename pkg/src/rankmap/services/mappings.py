"""Closed-form Bayes-optimal rank-constrained mappings.

Forward surrogates, inverse recovery, autoencoding and denoising, each in
linear form (second moments Gamma, factors L) and affine form (covariances S,
factors K, plus a bias). Risks are evaluated by the completed-square closed
form; no random draws are materialized.
"""

import logging
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from rankmap.core.models import FactorStrategy, Form, Task
from rankmap.services import linalg
from rankmap.utils.errors import (
    ContractViolationError,
    DimensionMismatchError,
    KindMismatchError,
)

logger = logging.getLogger(__name__)


class FittedMap(Protocol):
    """Anything that maps input columns to predicted target columns."""

    def apply(self, inputs: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class MomentModel:
    """A second moment or covariance together with its symmetric factor.

    ``moment`` already contains the ridge, so ``factor.L @ factor.L.T``
    reproduces it.
    """

    moment: np.ndarray
    factor: linalg.SymmetricFactor
    mean: np.ndarray | None = None
    centered: bool = False

    @property
    def dim(self) -> int:
        return int(self.moment.shape[0])

    @property
    def ridge(self) -> float:
        return self.factor.ridge

    @classmethod
    def from_moment(
        cls,
        moment: np.ndarray,
        strategy: FactorStrategy = FactorStrategy.PSD,
        ridge: float = 0.0,
        mean: np.ndarray | None = None,
    ) -> "MomentModel":
        """Uncentered second moment Gamma (+ ridge I)."""
        return cls._build(moment, strategy, ridge, mean, centered=False)

    @classmethod
    def from_covariance(
        cls,
        covariance: np.ndarray,
        mean: np.ndarray,
        strategy: FactorStrategy = FactorStrategy.PSD,
        ridge: float = 0.0,
    ) -> "MomentModel":
        """Covariance S (+ ridge I) with its mean."""
        return cls._build(covariance, strategy, ridge, mean, centered=True)

    @classmethod
    def _build(
        cls,
        moment: np.ndarray,
        strategy: FactorStrategy,
        ridge: float,
        mean: np.ndarray | None,
        centered: bool,
    ) -> "MomentModel":
        moment = linalg.as_matrix(moment, "moment")
        factor = linalg.symmetric_factor(moment, strategy=strategy, ridge=ridge)
        ridged = moment + ridge * np.eye(moment.shape[0]) if ridge else moment
        if mean is not None:
            mean = np.asarray(mean, dtype=np.float64).reshape(-1)
            if mean.shape[0] != moment.shape[0]:
                raise DimensionMismatchError("mean length", moment.shape[0], mean.shape[0])
        return cls(moment=0.5 * (ridged + ridged.T), factor=factor, mean=mean, centered=centered)


@dataclass(frozen=True)
class ProblemSpec:
    """A rank-constrained estimation problem.

    ``forward_operator`` None stands for the identity; ``noise`` None means
    noiseless observations. ``output_factor_strategy`` and ``output_ridge``
    control how the observation moment Gamma_Y is factored.
    """

    signal: MomentModel
    rank: int
    task: Task
    form: Form = Form.LINEAR
    forward_operator: np.ndarray | None = None
    noise: MomentModel | None = None
    output_factor_strategy: FactorStrategy = FactorStrategy.PSD
    output_ridge: float = 0.0

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ContractViolationError(f"Target rank must be >= 1, got {self.rank}")

        n = self.signal.dim
        if self.forward_operator is not None:
            F = linalg.as_matrix(self.forward_operator, "forward_operator")
            if F.shape[1] != n:
                raise DimensionMismatchError("forward operator columns", n, F.shape[1])
            object.__setattr__(self, "forward_operator", F)
        if self.noise is not None and self.noise.dim != self.output_dim:
            raise DimensionMismatchError("noise dimension", self.output_dim, self.noise.dim)

        if self.form == Form.AFFINE:
            if not self.signal.centered or self.signal.mean is None:
                raise ContractViolationError(
                    f"Affine {self.task} requires a covariance with its mean",
                    suggestion="Build the signal with MomentModel.from_covariance",
                )
        elif self.signal.centered:
            raise ContractViolationError(
                f"Linear {self.task} requires an uncentered second moment",
                suggestion="Build the signal with MomentModel.from_moment or use the affine form",
            )

        if self.task == Task.FORWARD and self.forward_operator is None:
            raise ContractViolationError("Forward problems need a forward operator")
        if self.task in (Task.AUTOENCODE, Task.DENOISE) and self.forward_operator is not None:
            raise ContractViolationError(f"{self.task} problems take no forward operator")
        if self.task == Task.DENOISE and self.noise is None:
            raise ContractViolationError("Denoising problems need noise moments")

    @property
    def kind(self) -> str:
        return f"{self.task}/{self.form}"

    @property
    def input_dim(self) -> int:
        """Signal dimension n."""
        return self.signal.dim

    @property
    def output_dim(self) -> int:
        """Observation dimension m."""
        if self.forward_operator is None:
            return self.signal.dim
        return int(self.forward_operator.shape[0])

    @property
    def F(self) -> np.ndarray:
        if self.forward_operator is None:
            return np.eye(self.signal.dim)
        return self.forward_operator

    def noise_moment(self) -> np.ndarray:
        """Gamma_E (or S_E), zero when noiseless."""
        if self.noise is None:
            return np.zeros((self.output_dim, self.output_dim))
        return self.noise.moment


@dataclass(frozen=True)
class ConstructionTrace:
    """Which closed-form branch produced a map, and rank bookkeeping."""

    branch: str
    requested_rank: int
    effective_rank: int
    clamped: bool
    unique: bool
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class OptimalMap:
    """Rank-constrained map A (and bias b for affine kinds) with its Bayes risk."""

    A: np.ndarray
    bias: np.ndarray | None
    rank: int
    task: Task
    form: Form
    risk: float
    trace: ConstructionTrace

    @property
    def kind(self) -> str:
        return f"{self.task}/{self.form}"

    def apply(self, inputs: np.ndarray) -> np.ndarray:
        """Map a vector or the columns of a matrix."""
        inputs = np.asarray(inputs, dtype=np.float64)
        out = self.A @ inputs
        if self.bias is not None:
            out = out + (self.bias if inputs.ndim == 1 else self.bias[:, None])
        return out

    def factorize(self, basis: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Split A = D E with D m x r and E r x n.

        An invertible r x r ``basis`` Q yields the equally valid pair
        (D Q, Q^-1 E).
        """
        f = linalg.truncate(linalg.svd(self.A), self.rank) if self.A.size else None
        if f is None or f.effective_rank == 0:
            return np.zeros((self.A.shape[0], 0)), np.zeros((0, self.A.shape[1]))
        decoder = f.U * f.sigma
        encoder = f.V.T
        if basis is not None:
            Q = linalg.as_matrix(basis, "basis")
            if Q.shape != (f.effective_rank, f.effective_rank):
                raise DimensionMismatchError(
                    "latent basis", (f.effective_rank, f.effective_rank), Q.shape
                )
            decoder = decoder @ Q
            encoder = np.linalg.solve(Q, encoder)
        return decoder, encoder


@dataclass(frozen=True)
class TableBranch:
    """Case of the forward solution selected by ranks of F and L_X."""

    name: str
    k: int
    ell: int
    p: int
    simplified: np.ndarray | None = field(default=None, repr=False)


def _weighted_sq_norm(M: np.ndarray, moment: np.ndarray) -> float:
    """||M L||_F^2 = trace(M Gamma M^T) for Gamma = L L^T."""
    return float(np.sum((M @ moment) * M))


def forward_table_branch(spec: ProblemSpec) -> TableBranch:
    """Select the simplified forward case from k = rank(L_X), l = rank(F), p = min(m, n).

    The simplifications hold whenever r >= rank(F L_X):
    k = n gives A = F, k < n gives A = F U_k U_k^T.
    """
    F = spec.F
    L = spec.signal.factor.L
    n = spec.input_dim
    p = min(F.shape)
    k = linalg.numerical_rank(L) if L.size else 0
    ell = linalg.numerical_rank(F) if F.size else 0
    fl_rank = linalg.numerical_rank(F @ L) if L.size else 0
    cell = f"k{'=' if k == n else '<'}n,l{'=' if ell == p else '<'}p"

    if spec.rank < fl_rank:
        return TableBranch(name=f"truncated ({cell})", k=k, ell=ell, p=p)
    if k == n:
        return TableBranch(name=f"full-rank recovery ({cell})", k=k, ell=ell, p=p, simplified=F)

    U_k = linalg.svd(L).U[:, :k]
    return TableBranch(
        name=f"column-space projection ({cell})",
        k=k,
        ell=ell,
        p=p,
        simplified=F @ U_k @ U_k.T,
    )


def _require_kind(spec: ProblemSpec, task: Task, form: Form) -> None:
    if spec.task != task or spec.form != form:
        raise KindMismatchError(f"{task}/{form}", spec.kind)


def _trace_from(
    branch: str, spec: ProblemSpec, solution: linalg.RankConstrainedSolution, *notes: str
) -> ConstructionTrace:
    extra = list(notes)
    if solution.clamped:
        extra.append(
            f"rank {solution.requested_rank} clamped to available rank {solution.core_rank}"
        )
    if not solution.unique:
        extra.append(f"sigma_{spec.rank} ties sigma_{spec.rank + 1}; minimizer not unique")
    return ConstructionTrace(
        branch=branch,
        requested_rank=solution.requested_rank,
        effective_rank=solution.effective_rank,
        clamped=solution.clamped,
        unique=solution.unique,
        notes=tuple(extra),
    )


def _finish(
    spec: ProblemSpec, A: np.ndarray, bias: np.ndarray | None, trace: ConstructionTrace
) -> OptimalMap:
    provisional = OptimalMap(
        A=A, bias=bias, rank=spec.rank, task=spec.task, form=spec.form, risk=0.0, trace=trace
    )
    risk = bayes_risk(provisional, spec)
    logger.debug("%s r=%d branch=%s risk=%.6g", spec.kind, spec.rank, trace.branch, risk)
    return OptimalMap(
        A=A, bias=bias, rank=spec.rank, task=spec.task, form=spec.form, risk=risk, trace=trace
    )


def _forward_solution(spec: ProblemSpec) -> tuple[np.ndarray, ConstructionTrace]:
    """A = (F L)_r L^+ with L the signal factor (L_X or K_X)."""
    L = spec.signal.factor.L
    solution = linalg.solve_rank_constrained(spec.F @ L, None, L, spec.rank)
    branch = forward_table_branch(spec)
    return solution.W, _trace_from(branch.name, spec, solution)


def optimal_forward(spec: ProblemSpec) -> OptimalMap:
    """Best rank-r linear surrogate of y = F x + e: A = (F L_X)_r L_X^+."""
    _require_kind(spec, Task.FORWARD, Form.LINEAR)
    A, trace = _forward_solution(spec)
    return _finish(spec, A, None, trace)


def optimal_forward_affine(spec: ProblemSpec) -> OptimalMap:
    """A = (F K_X)_r K_X^+ and b = (F - A) mu_X."""
    _require_kind(spec, Task.FORWARD, Form.AFFINE)
    A, trace = _forward_solution(spec)
    bias = (spec.F - A) @ spec.signal.mean
    return _finish(spec, A, bias, trace)


def _inverse_solution(spec: ProblemSpec) -> tuple[np.ndarray, ConstructionTrace]:
    """A = (Gamma_X F^T L_Y^+T)_r L_Y^+ with Gamma_Y = F Gamma_X F^T + Gamma_E."""
    F = spec.F
    gamma_x = spec.signal.moment
    gamma_y = F @ gamma_x @ F.T + spec.noise_moment()
    gamma_y = 0.5 * (gamma_y + gamma_y.T)
    L_y = linalg.symmetric_factor(
        gamma_y, strategy=spec.output_factor_strategy, ridge=spec.output_ridge
    ).L
    L_y_pinv = linalg.pseudoinverse(L_y)
    target = gamma_x @ F.T @ L_y_pinv.T
    solution = linalg.solve_rank_constrained(target, None, None, spec.rank)
    A = solution.W @ L_y_pinv
    if spec.rank >= solution.core_rank:
        return A, _trace_from(
            "full-rank", spec, solution, "A reduces to Gamma_X F^T Gamma_Y^+"
        )
    return A, _trace_from("truncated", spec, solution)


def optimal_inverse(spec: ProblemSpec) -> OptimalMap:
    """Best rank-r linear recovery of x from y = F x + e."""
    _require_kind(spec, Task.INVERSE, Form.LINEAR)
    A, trace = _inverse_solution(spec)
    return _finish(spec, A, None, trace)


def optimal_inverse_affine(spec: ProblemSpec) -> OptimalMap:
    """A = (S_X F^T K_Y^+T)_r K_Y^+ and b = (I - A F) mu_X.

    At full rank this is the estimator S_X F^T S_Y^+.
    """
    _require_kind(spec, Task.INVERSE, Form.AFFINE)
    A, trace = _inverse_solution(spec)
    bias = (np.eye(spec.input_dim) - A @ spec.F) @ spec.signal.mean
    return _finish(spec, A, bias, trace)


def optimal_autoencoder(spec: ProblemSpec) -> OptimalMap:
    """Rank-r orthogonal projector U_r U_r^T onto the leading subspace of L_X (or K_X)."""
    if spec.task != Task.AUTOENCODE:
        raise KindMismatchError(f"{Task.AUTOENCODE}/{spec.form}", spec.kind)

    L = spec.signal.factor.L
    f = linalg.svd(L)
    k = f.effective_rank
    keep = min(spec.rank, k)
    U_r = f.U[:, :keep]
    A = U_r @ U_r.T
    n = spec.input_dim
    branch = "identity recovery" if keep == n else "leading-subspace projector"
    trace = ConstructionTrace(
        branch=branch,
        requested_rank=spec.rank,
        effective_rank=keep,
        clamped=spec.rank > k,
        unique=f.has_gap(spec.rank) if k else True,
        notes=(f"rank {spec.rank} clamped to rank(L_X) = {k}",) if spec.rank > k else (),
    )
    bias = None
    if spec.form == Form.AFFINE:
        bias = (np.eye(n) - A) @ spec.signal.mean
    return _finish(spec, A, bias, trace)


def optimal_denoiser(spec: ProblemSpec) -> OptimalMap:
    """A = (Gamma_X L_Y^+T)_r L_Y^+ with Gamma_Y = Gamma_X + Gamma_E.

    At full rank this is the Wiener filter Gamma_X (Gamma_X + Gamma_E)^+.
    """
    if spec.task != Task.DENOISE:
        raise KindMismatchError(f"{Task.DENOISE}/{spec.form}", spec.kind)
    A, trace = _inverse_solution(spec)
    if trace.branch == "full-rank":
        trace = ConstructionTrace(
            branch="wiener filter",
            requested_rank=trace.requested_rank,
            effective_rank=trace.effective_rank,
            clamped=trace.clamped,
            unique=trace.unique,
            notes=trace.notes,
        )
    bias = None
    if spec.form == Form.AFFINE:
        bias = (np.eye(spec.input_dim) - A) @ spec.signal.mean
    return _finish(spec, A, bias, trace)


_BUILDERS = {
    (Task.FORWARD, Form.LINEAR): optimal_forward,
    (Task.FORWARD, Form.AFFINE): optimal_forward_affine,
    (Task.INVERSE, Form.LINEAR): optimal_inverse,
    (Task.INVERSE, Form.AFFINE): optimal_inverse_affine,
    (Task.AUTOENCODE, Form.LINEAR): optimal_autoencoder,
    (Task.AUTOENCODE, Form.AFFINE): optimal_autoencoder,
    (Task.DENOISE, Form.LINEAR): optimal_denoiser,
    (Task.DENOISE, Form.AFFINE): optimal_denoiser,
}


def optimal_map(spec: ProblemSpec) -> OptimalMap:
    """Dispatch to the closed-form builder for the problem's task and form."""
    return _BUILDERS[(spec.task, spec.form)](spec)


def bayes_risk(optimal: OptimalMap, spec: ProblemSpec) -> float:
    """Expected squared error of ``optimal`` under the problem's moments.

    Forward: E||A x + b - (F x + e)||^2. Every other task: E||A y + b - x||^2
    with y = F x + e (F = I for autoencoding and denoising).
    """
    if optimal.task != spec.task or optimal.form != spec.form:
        raise KindMismatchError(optimal.kind, spec.kind)

    F = spec.F
    n, m = spec.input_dim, spec.output_dim
    gamma_x = spec.signal.moment
    gamma_e = spec.noise_moment()

    if spec.task == Task.FORWARD:
        if optimal.A.shape != (m, n):
            raise DimensionMismatchError("forward map", (m, n), optimal.A.shape)
        residual = optimal.A - F
        risk = _weighted_sq_norm(residual, gamma_x) + float(np.trace(gamma_e))
    else:
        if optimal.A.shape != (n, m):
            raise DimensionMismatchError(f"{spec.task} map", (n, m), optimal.A.shape)
        residual = optimal.A @ F - np.eye(n)
        risk = _weighted_sq_norm(residual, gamma_x) + _weighted_sq_norm(optimal.A, gamma_e)

    if spec.form == Form.AFFINE:
        bias = optimal.bias if optimal.bias is not None else 0.0
        offset = residual @ spec.signal.mean + bias
        risk += float(offset @ offset)
    return risk
