"""Factor-analysis post-processing of fitted encoder-decoders.

Varimax rotation by pairwise planar rotations, orthogonal Procrustes
alignment against reference factors, explained variance per factor, factor
balance, and sign-free correlations with ground truth.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from rankmap.services import linalg
from rankmap.services.baselines import NonlinearAutoencoder, TrainedMap
from rankmap.services.mappings import OptimalMap
from rankmap.utils.errors import (
    ContractViolationError,
    DimensionMismatchError,
    UndefinedMetricError,
)

logger = logging.getLogger(__name__)

DEGENERACY_TOLERANCE = 1e-12

EncoderDecoder = OptimalMap | TrainedMap | NonlinearAutoencoder


@dataclass(frozen=True)
class LatentFactors:
    """Factor scores (T x r) and loadings (A x r)."""

    scores: np.ndarray
    loadings: np.ndarray
    rotation_applied: bool = False

    def __post_init__(self) -> None:
        if self.scores.ndim != 2 or self.loadings.ndim != 2:
            raise DimensionMismatchError("latent factors", "2-D scores and loadings", "other")
        if self.scores.shape[1] != self.loadings.shape[1]:
            raise DimensionMismatchError(
                "factor count", self.loadings.shape[1], self.scores.shape[1]
            )

    @property
    def factor_count(self) -> int:
        return int(self.loadings.shape[1])


@dataclass(frozen=True)
class VarimaxResult:
    """Rotated factors with the rotation and per-sweep criterion values."""

    factors: LatentFactors
    rotation: np.ndarray
    criterion_history: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    degenerate: bool = False


def varimax_criterion(loadings: np.ndarray) -> float:
    """Sum over factors of the variance of squared loadings."""
    squared = loadings**2
    return float(np.sum(np.mean(squared**2, axis=0) - np.mean(squared, axis=0) ** 2))


def _pair_angle(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Angle maximizing the criterion in the (x, y) plane, with its numerator and denominator."""
    d = x.shape[0]
    u = x * x - y * y
    v = 2.0 * x * y
    u_sum, v_sum = u.sum(), v.sum()
    numer = 2.0 * (u @ v) - 2.0 * u_sum * v_sum / d
    denom = (u @ u) - (v @ v) - (u_sum**2 - v_sum**2) / d
    return float(np.arctan2(numer, denom) / 4.0), float(numer), float(denom)


def varimax_rotate(
    f: LatentFactors, tol: float = 1e-10, max_iters: int = 500, normalize: bool = False
) -> VarimaxResult:
    """Rotate loadings and scores by the orthogonal R maximizing the varimax criterion.

    Each sweep applies one optimal planar rotation per factor pair, so the
    criterion never decreases. ``normalize`` applies Kaiser row normalization.
    """
    r = f.factor_count
    if r < 2:
        raise ContractViolationError(f"Varimax needs at least 2 factors, got {r}")

    loadings = f.loadings.copy()
    row_norms = np.ones(loadings.shape[0])
    if normalize:
        row_norms = np.linalg.norm(loadings, axis=1)
        row_norms[row_norms == 0] = 1.0
        loadings = loadings / row_norms[:, None]

    rotation = np.eye(r)
    history = [varimax_criterion(loadings)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        for i in range(r - 1):
            for j in range(i + 1, r):
                theta, _, _ = _pair_angle(loadings[:, i], loadings[:, j])
                c, s = np.cos(theta), np.sin(theta)
                planar = np.array([[c, -s], [s, c]])
                loadings[:, [i, j]] = loadings[:, [i, j]] @ planar
                rotation[:, [i, j]] = rotation[:, [i, j]] @ planar
        history.append(varimax_criterion(loadings))
        if history[-1] - history[-2] < tol:
            converged = True
            break

    scale = max(1.0, float(np.sum(loadings**4)))
    degenerate = False
    for i in range(r - 1):
        for j in range(i + 1, r):
            _, numer, denom = _pair_angle(loadings[:, i], loadings[:, j])
            if np.hypot(numer, denom) <= DEGENERACY_TOLERANCE * scale:
                degenerate = True
    if degenerate:
        logger.info("varimax criterion is flat for some factor pair; rotation is arbitrary")

    loadings = loadings * row_norms[:, None]
    rotated = LatentFactors(scores=f.scores @ rotation, loadings=loadings, rotation_applied=True)
    return VarimaxResult(
        factors=rotated,
        rotation=rotation,
        criterion_history=history,
        iterations=iterations,
        converged=converged,
        degenerate=degenerate,
    )


@dataclass(frozen=True)
class ProcrustesResult:
    """Orthogonal R minimizing ||Z R - target||_F and the aligned Z R."""

    R: np.ndarray
    aligned: np.ndarray
    unique: bool


def procrustes_align(Z: np.ndarray, target: np.ndarray) -> ProcrustesResult:
    """Align Z to ``target`` with the orthogonal factor of the SVD of Z^T target."""
    Z = linalg.as_matrix(Z, "Z")
    target = linalg.as_matrix(target, "target")
    if Z.shape[1] != target.shape[1]:
        raise DimensionMismatchError("Procrustes factor count", target.shape[1], Z.shape[1])
    if Z.shape[0] != target.shape[0]:
        raise DimensionMismatchError("Procrustes sample count", target.shape[0], Z.shape[0])

    U, sigma, Vt = scipy.linalg.svd(Z.T @ target)
    R = U @ Vt
    tolerance = linalg.default_rank_tolerance(Z.shape, float(sigma[0])) if sigma.size else 0.0
    unique = bool(sigma.size == 0 or sigma[-1] > tolerance)
    if not unique:
        logger.info("Z^T target is rank deficient; Procrustes rotation is not unique")
    return ProcrustesResult(R=R, aligned=Z @ R, unique=unique)


@dataclass(frozen=True)
class ExplainedVariance:
    """Fraction of total data variance along each factor direction."""

    per_factor: np.ndarray
    total: float


def cumulative_explained_variance(f: LatentFactors, data: np.ndarray) -> ExplainedVariance:
    """Variance of ``data`` (T x A) along each normalized loading over the total variance.

    Raises:
        UndefinedMetricError: If the data has zero variance
    """
    data = linalg.as_matrix(data, "data")
    if data.shape[1] != f.loadings.shape[0]:
        raise DimensionMismatchError("asset count", f.loadings.shape[0], data.shape[1])

    covariance = np.atleast_2d(np.cov(data, rowvar=False))
    total_variance = float(np.trace(covariance))
    if total_variance <= 0:
        raise UndefinedMetricError("cumulative explained variance", "data has zero variance")

    norms = np.linalg.norm(f.loadings, axis=0)
    norms[norms == 0] = 1.0
    directions = f.loadings / norms
    captured = np.einsum("ij,ik,kj->j", directions, covariance, directions)
    per_factor = captured / total_variance
    return ExplainedVariance(per_factor=per_factor, total=float(per_factor.sum()))


def factor_balance(per_factor_cev: np.ndarray) -> float:
    """min(CEV) / max(CEV); 1 means perfectly balanced factors."""
    cev = np.asarray(per_factor_cev, dtype=np.float64)
    if cev.size < 2:
        raise ContractViolationError(f"Factor balance needs at least 2 factors, got {cev.size}")
    if np.any(cev < 0):
        raise ContractViolationError("Explained variances must be nonnegative")
    if np.max(cev) == 0:
        raise UndefinedMetricError("factor balance", "all explained variances are zero")
    return float(np.min(cev) / np.max(cev))


def aligned_factor_correlations(aligned: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """Absolute Pearson correlation per column; NaN where a column has zero variance."""
    aligned = linalg.as_matrix(aligned, "aligned")
    truth = linalg.as_matrix(truth, "truth")
    if aligned.shape != truth.shape:
        raise DimensionMismatchError("correlation operands", truth.shape, aligned.shape)

    a = aligned - aligned.mean(axis=0)
    t = truth - truth.mean(axis=0)
    denom = np.linalg.norm(a, axis=0) * np.linalg.norm(t, axis=0)
    correlations = np.full(aligned.shape[1], np.nan)
    defined = denom > 0
    correlations[defined] = np.abs(np.sum(a * t, axis=0)[defined] / denom[defined])
    if not defined.all():
        logger.info("correlation undefined for zero-variance factors %s", np.flatnonzero(~defined))
    return correlations


def zscore(M: np.ndarray) -> np.ndarray:
    """Standardize columns to zero mean and unit variance (constant columns become 0)."""
    centered = M - M.mean(axis=0)
    std = centered.std(axis=0)
    std[std == 0] = 1.0
    return centered / std


def latent_factors_from_map(model: EncoderDecoder, data: np.ndarray) -> LatentFactors:
    """Scores and loadings of a fitted encoder-decoder on ``data`` (A x T, columns are days).

    Loadings are decoder columns; scores are encoder outputs on mean-centered
    data. Works with closed-form maps (via their factorization), trained
    linear maps and the nonlinear autoencoder.
    """
    data = linalg.as_matrix(data, "data")
    centered = data - data.mean(axis=1, keepdims=True)
    if isinstance(model, NonlinearAutoencoder):
        return LatentFactors(scores=model.encode(data).T, loadings=model.loadings)
    if isinstance(model, TrainedMap):
        return LatentFactors(scores=(model.encoder @ centered).T, loadings=model.decoder)
    decoder, encoder = model.factorize()
    return LatentFactors(scores=(encoder @ centered).T, loadings=decoder)
