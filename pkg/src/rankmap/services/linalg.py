"""Dense linear-algebra kernels.

SVD, truncated SVD, pseudoinverse, projectors, symmetric factorizations and the
generalized rank-constrained approximation

    W = B^+ (P_B^L A P_C^R)_r C^+

which minimizes ||A - B W C||_F over rank(W) <= r. Every rank decision flows
through one tolerance, ``max(m, n) * sigma_1 * eps``, unless a caller passes an
explicit positive tolerance.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from rankmap.core.models import FactorStrategy
from rankmap.utils.errors import (
    ContractViolationError,
    ConvergenceError,
    DimensionMismatchError,
    NotPositiveDefiniteError,
    NotPositiveSemidefiniteError,
)

logger = logging.getLogger(__name__)

EPS = np.finfo(np.float64).eps
SYMMETRY_TOLERANCE = 1e-10
PSD_NEGATIVE_TOLERANCE = 1e-8


@dataclass(frozen=True)
class SvdFactors:
    """Thin singular value decomposition M = U diag(sigma) V^T.

    Attributes:
        U: m x k matrix with orthonormal columns
        sigma: nonincreasing nonnegative singular values (length k)
        V: n x k matrix with orthonormal columns
        effective_rank: number of singular values above ``rank_tolerance``
        rank_tolerance: threshold used for the rank decision
    """

    U: np.ndarray
    sigma: np.ndarray
    V: np.ndarray
    effective_rank: int
    rank_tolerance: float

    @property
    def shape(self) -> tuple[int, int]:
        """Shape of the factored matrix."""
        return (self.U.shape[0], self.V.shape[0])

    def reconstruct(self) -> np.ndarray:
        """Return U diag(sigma) V^T."""
        return (self.U * self.sigma) @ self.V.T

    def has_gap(self, r: int) -> bool:
        """Whether sigma_r > sigma_{r+1}, i.e. the rank-r truncation is unique.

        Ranks at or beyond the effective rank always count as unique.
        """
        if r >= self.effective_rank:
            return True
        gap = self.sigma[r - 1] - self.sigma[r]
        return bool(gap > max(self.rank_tolerance, EPS * self.sigma[0]))


@dataclass(frozen=True)
class SymmetricFactor:
    """Symmetric factor L with L L^T = S + ridge * I."""

    L: np.ndarray
    source_kind: FactorStrategy
    ridge: float

    @property
    def rank(self) -> int:
        """Number of columns of L."""
        return int(self.L.shape[1])


@dataclass(frozen=True)
class RankConstrainedSolution:
    """Minimizer of ||A - B W C||_F with bookkeeping for the trace."""

    W: np.ndarray
    requested_rank: int
    effective_rank: int
    core_rank: int
    clamped: bool
    unique: bool


def as_matrix(M: np.ndarray | list, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a finite 2-D float64 array."""
    array = np.asarray(M, dtype=np.float64)
    if array.ndim != 2:
        raise DimensionMismatchError(name, "a 2-D matrix", f"{array.ndim}-D array")
    if not np.all(np.isfinite(array)):
        raise ContractViolationError(f"{name} contains NaN or Inf entries")
    return array


def default_rank_tolerance(shape: tuple[int, int], sigma_max: float) -> float:
    """The library-wide rank tolerance max(m, n) * sigma_1 * eps."""
    return float(max(shape) * sigma_max * EPS)


def svd(M: np.ndarray, rank_tolerance: float = 0.0) -> SvdFactors:
    """Thin SVD with the effective rank attached.

    Args:
        M: Finite m x n matrix
        rank_tolerance: Singular values at or below this count as zero;
            0 selects the default tolerance

    Returns:
        SvdFactors with k = min(m, n) triplets

    Raises:
        ConvergenceError: If both LAPACK drivers fail
    """
    M = as_matrix(M)
    if rank_tolerance < 0:
        raise ContractViolationError("rank_tolerance must be nonnegative")

    m, n = M.shape
    if m == 0 or n == 0:
        return SvdFactors(
            U=np.zeros((m, 0)),
            sigma=np.zeros(0),
            V=np.zeros((n, 0)),
            effective_rank=0,
            rank_tolerance=float(rank_tolerance),
        )

    try:
        U, sigma, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        logger.debug("gesdd failed on %s input, retrying with gesvd", M.shape)
        try:
            U, sigma, Vt = scipy.linalg.svd(M, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError("SVD", M.shape) from exc

    tolerance = rank_tolerance or default_rank_tolerance(M.shape, float(sigma[0]))
    effective_rank = int(np.count_nonzero(sigma > tolerance))
    return SvdFactors(
        U=U,
        sigma=sigma,
        V=Vt.T,
        effective_rank=effective_rank,
        rank_tolerance=float(tolerance),
    )


def truncate(f: SvdFactors, r: int) -> SvdFactors:
    """Keep the leading min(r, effective_rank) singular triplets.

    Ties at the boundary keep the first r triplets in LAPACK's output order.
    """
    if r < 1:
        raise ContractViolationError(f"Truncation rank must be >= 1, got {r}")
    keep = min(r, f.effective_rank)
    return SvdFactors(
        U=f.U[:, :keep],
        sigma=f.sigma[:keep],
        V=f.V[:, :keep],
        effective_rank=keep,
        rank_tolerance=f.rank_tolerance,
    )


def truncated(M: np.ndarray, r: int, rank_tolerance: float = 0.0) -> np.ndarray:
    """Best rank-r approximation (M)_r."""
    return truncate(svd(M, rank_tolerance), r).reconstruct()


def pseudoinverse_from_factors(f: SvdFactors) -> np.ndarray:
    """Moore-Penrose inverse from an existing decomposition."""
    k = f.effective_rank
    return (f.V[:, :k] / f.sigma[:k]) @ f.U[:, :k].T


def pseudoinverse(M: np.ndarray, rank_tolerance: float = 0.0) -> np.ndarray:
    """Moore-Penrose pseudoinverse via the thin SVD."""
    return pseudoinverse_from_factors(svd(M, rank_tolerance))


def left_projector(M: np.ndarray, rank_tolerance: float = 0.0) -> np.ndarray:
    """Orthogonal projector onto the column space of M."""
    f = svd(M, rank_tolerance)
    U_k = f.U[:, : f.effective_rank]
    return U_k @ U_k.T


def right_projector(M: np.ndarray, rank_tolerance: float = 0.0) -> np.ndarray:
    """Orthogonal projector onto the row space of M."""
    f = svd(M, rank_tolerance)
    V_k = f.V[:, : f.effective_rank]
    return V_k @ V_k.T


def _check_symmetric(S: np.ndarray) -> np.ndarray:
    if S.shape[0] != S.shape[1]:
        raise DimensionMismatchError("symmetric factorization", "a square matrix", S.shape)
    asymmetry = np.linalg.norm(S - S.T)
    if asymmetry > SYMMETRY_TOLERANCE * max(1.0, np.linalg.norm(S)):
        raise ContractViolationError(
            f"Matrix is not symmetric (||S - S^T||_F = {asymmetry:.3e})",
            suggestion="Symmetrize moment matrices as (S + S^T) / 2 before factoring",
        )
    return 0.5 * (S + S.T)


def symmetric_factor(
    S: np.ndarray,
    strategy: FactorStrategy = FactorStrategy.PSD,
    ridge: float = 0.0,
    rank_tolerance: float = 0.0,
) -> SymmetricFactor:
    """Factor S + ridge * I as L L^T.

    Cholesky returns the square lower-triangular factor. The eigendecomposition
    path returns the thin n x p factor Q_p Lambda_p^(1/2) over eigenvalues above
    the rank tolerance, so L has full column rank.

    Raises:
        NotPositiveDefiniteError: Cholesky on an indefinite ridged matrix
        NotPositiveSemidefiniteError: Eigenvalue below -1e-8 * ||S||
    """
    if ridge < 0:
        raise ContractViolationError(f"Ridge must be nonnegative, got {ridge}")
    S = _check_symmetric(as_matrix(S, "moment"))
    n = S.shape[0]
    ridged = S + ridge * np.eye(n) if ridge else S

    if strategy == FactorStrategy.CHOLESKY:
        try:
            L = scipy.linalg.cholesky(ridged, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NotPositiveDefiniteError(ridge) from exc
        return SymmetricFactor(L=L, source_kind=strategy, ridge=float(ridge))

    if n == 0:
        return SymmetricFactor(L=np.zeros((0, 0)), source_kind=strategy, ridge=float(ridge))

    eigenvalues, eigenvectors = scipy.linalg.eigh(ridged)
    scale = np.linalg.norm(S, 2) if S.size else 0.0
    if eigenvalues[0] < -PSD_NEGATIVE_TOLERANCE * scale:
        raise NotPositiveSemidefiniteError(float(eigenvalues[0]), PSD_NEGATIVE_TOLERANCE * scale)

    # eigh returns ascending order
    eigenvalues = eigenvalues[::-1]
    eigenvectors = eigenvectors[:, ::-1]
    lam_max = max(float(eigenvalues[0]), 0.0)
    tolerance = rank_tolerance or default_rank_tolerance(ridged.shape, lam_max)
    keep = eigenvalues > tolerance
    L = eigenvectors[:, keep] * np.sqrt(eigenvalues[keep])
    return SymmetricFactor(L=L, source_kind=strategy, ridge=float(ridge))


def solve_rank_constrained(
    A: np.ndarray,
    B: np.ndarray | None,
    C: np.ndarray | None,
    r: int,
    rank_tolerance: float = 0.0,
) -> RankConstrainedSolution:
    """Minimum-norm minimizer of ||A - B W C||_F subject to rank(W) <= r.

    ``B`` or ``C`` set to ``None`` stands for the identity of matching size.
    """
    A = as_matrix(A, "target")
    m, n = A.shape
    if r < 1:
        raise ContractViolationError(f"Target rank must be >= 1, got {r}")

    if B is not None:
        B = as_matrix(B, "B")
        if B.shape[0] != m:
            raise DimensionMismatchError("B rows", m, B.shape[0])
        fB = svd(B, rank_tolerance)
        U_B = fB.U[:, : fB.effective_rank]
        core = U_B @ (U_B.T @ A)
        B_pinv = pseudoinverse_from_factors(fB)
    else:
        core = A
        B_pinv = None

    if C is not None:
        C = as_matrix(C, "C")
        if C.shape[1] != n:
            raise DimensionMismatchError("C columns", n, C.shape[1])
        fC = svd(C, rank_tolerance)
        V_C = fC.V[:, : fC.effective_rank]
        core = (core @ V_C) @ V_C.T
        C_pinv = pseudoinverse_from_factors(fC)
    else:
        C_pinv = None

    core_factors = svd(core, rank_tolerance)
    kept = truncate(core_factors, r) if core_factors.effective_rank else core_factors
    W = kept.reconstruct() if kept.effective_rank else np.zeros_like(core)
    if B_pinv is not None:
        W = B_pinv @ W
    if C_pinv is not None:
        W = W @ C_pinv

    clamped = r > core_factors.effective_rank
    unique = core_factors.has_gap(r) if core_factors.effective_rank else True
    if clamped:
        logger.debug("rank %d clamped to core rank %d", r, core_factors.effective_rank)
    if not unique:
        logger.info("sigma_%d equals sigma_%d: rank-%d minimizer is not unique", r, r + 1, r)

    return RankConstrainedSolution(
        W=W,
        requested_rank=r,
        effective_rank=kept.effective_rank,
        core_rank=core_factors.effective_rank,
        clamped=clamped,
        unique=unique,
    )


def generalized_rank_approx(
    A: np.ndarray,
    B: np.ndarray | None,
    C: np.ndarray | None,
    r: int,
    rank_tolerance: float = 0.0,
) -> np.ndarray:
    """W = B^+ (P_B^L A P_C^R)_r C^+, the generalized Eckart-Young minimizer."""
    return solve_rank_constrained(A, B, C, r, rank_tolerance).W


def numerical_rank(M: np.ndarray, rank_tolerance: float = 0.0) -> int:
    """Rank of M under the library tolerance."""
    return svd(M, rank_tolerance).effective_rank
