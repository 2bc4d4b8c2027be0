"""Synthetic data generators.

Gaussian-blur forward operators and smooth synthetic images for the imaging
pipeline, white observation noise, and a factor model of asset returns with
GARCH(1,1) heteroskedastic noise. Every generator takes its randomness from a
seeded PCG64 stream.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd
import scipy.ndimage
import scipy.signal

from rankmap.core.models import BlurSpec, SyntheticMarketSpec
from rankmap.utils.errors import ContractViolationError, MatrixFormatError
from rankmap.utils.random import make_rng, spawn

logger = logging.getLogger(__name__)

# Relative factor strengths: a dominant market-like factor, then weaker ones
FACTOR_STRENGTHS = (5.0, 2.0, 1.0)
MAX_PRICE_GAP_DAYS = 5
MAX_DAILY_MOVE = 0.5

Seed = int | np.random.Generator


def _rng(seed: Seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else make_rng(seed)


def gaussian_kernel(side: int, std: float) -> np.ndarray:
    """Square Gaussian kernel sampled at integer offsets, normalized to sum 1."""
    if side < 1 or side % 2 == 0:
        raise ContractViolationError(f"kernel side must be a positive odd number, got {side}")
    offsets = np.arange(side) - side // 2
    profile = np.exp(-(offsets**2) / (2.0 * std**2))
    kernel = np.outer(profile, profile)
    return kernel / kernel.sum()


def blur_image(image: np.ndarray, spec: BlurSpec) -> np.ndarray:
    """2-D convolution of one image with the configured Gaussian kernel under zero padding."""
    kernel = gaussian_kernel(spec.kernel_side, spec.kernel_std)
    return scipy.signal.convolve2d(image, kernel, mode="same", boundary="fill", fillvalue=0.0)


def build_blur_operator(spec: BlurSpec) -> np.ndarray:
    """Operator F whose column j is the blurred j-th basis image, raveled in C order."""
    side = spec.image_side
    n = spec.dimension
    F = np.empty((n, n))
    basis = np.zeros((side, side))
    for j in range(n):
        basis.flat[j] = 1.0
        F[:, j] = blur_image(basis, spec).ravel()
        basis.flat[j] = 0.0
    logger.debug(
        "built %dx%d blur operator (kernel %d, std %g)", n, n, spec.kernel_side, spec.kernel_std
    )
    return F


def synthetic_images(count: int, side: int, smoothness: float, seed: Seed) -> np.ndarray:
    """``count`` smooth random fields in [0, 1] as columns of a side^2 x count matrix."""
    rng = _rng(seed)
    noise = rng.standard_normal((count, side, side))
    fields = scipy.ndimage.gaussian_filter(noise, sigma=(0.0, smoothness, smoothness))
    scale = fields.reshape(count, -1).std(axis=1)
    scale[scale == 0] = 1.0
    images = np.clip(0.5 + 0.25 * fields / scale[:, None, None], 0.0, 1.0)
    return images.reshape(count, side * side).T.copy()


def add_white_noise(Ydata: np.ndarray, std: float, seed: Seed) -> np.ndarray:
    """Y + E with i.i.d. N(0, std^2) entries."""
    if std < 0:
        raise ContractViolationError(f"noise std must be >= 0, got {std}")
    Ydata = np.asarray(Ydata, dtype=np.float64)
    if std == 0:
        return Ydata.copy()
    return Ydata + std * _rng(seed).standard_normal(Ydata.shape)


@dataclass(frozen=True)
class GarchPath:
    """Conditional variances and the shocks that drove them."""

    variance: np.ndarray
    shocks: np.ndarray


def garch_volatility_path(
    spec: SyntheticMarketSpec, seed: Seed | None = None, length: int | None = None
) -> GarchPath:
    """Simulate v_t = omega + alpha e_{t-1}^2 + beta v_{t-1} from the unconditional variance."""
    rng = _rng(spec.seed if seed is None else seed)
    T = spec.days if length is None else length
    omega, alpha, beta = spec.garch_omega, spec.garch_alpha, spec.garch_beta

    variance = np.empty(T)
    shocks = np.empty(T)
    z = rng.standard_normal(T)
    variance[0] = spec.unconditional_variance
    for t in range(T):
        shocks[t] = np.sqrt(variance[t]) * z[t]
        if t + 1 < T:
            variance[t + 1] = omega + alpha * shocks[t] ** 2 + beta * variance[t]
    return GarchPath(variance=variance, shocks=shocks)


@dataclass(frozen=True)
class MarketData:
    """Returns X = C B^T + Delta with the generating factors, loadings and variances."""

    returns: np.ndarray
    true_factors: np.ndarray
    true_loadings: np.ndarray
    variances: np.ndarray


def factor_strengths(count: int, volatility: float) -> np.ndarray:
    """Per-factor standard deviations, 5:2:1 then 1 for any further factor."""
    ratios = list(FACTOR_STRENGTHS[:count]) + [1.0] * max(count - len(FACTOR_STRENGTHS), 0)
    return volatility * np.asarray(ratios)


def _ar1_factors(
    T: int, strengths: np.ndarray, persistence: float, rng: np.random.Generator
) -> np.ndarray:
    """Stationary AR(1) paths c_t = phi c_{t-1} + e_t with std ``strengths``."""
    innovation_std = strengths * np.sqrt(1.0 - persistence**2)
    innovations = rng.standard_normal((T, strengths.size)) * innovation_std
    factors = np.empty((T, strengths.size))
    factors[0] = rng.standard_normal(strengths.size) * strengths
    for t in range(1, T):
        factors[t] = persistence * factors[t - 1] + innovations[t]
    return factors


def synthetic_market(spec: SyntheticMarketSpec) -> MarketData:
    """Factor returns with GARCH(1,1)-scaled noise Delta = P * Q."""
    factor_rng, loading_rng, garch_rng, noise_rng = spawn(spec.seed, 4)
    T, A, r = spec.days, spec.assets, spec.factors

    strengths = factor_strengths(r, spec.factor_volatility)
    C = _ar1_factors(T, strengths, spec.factor_persistence, factor_rng)

    B = loading_rng.standard_normal((A, r))
    B[:, 0] = loading_rng.uniform(0.5, 1.5, size=A)

    garch_streams = garch_rng.spawn(A)
    P = np.column_stack(
        [garch_volatility_path(spec, seed=stream).variance for stream in garch_streams]
    )
    Q = noise_rng.standard_normal((T, A))
    returns = C @ B.T + spec.noise_scale * (P * Q)
    logger.debug("synthetic market %d days x %d assets, %d factors", T, A, r)
    return MarketData(returns=returns, true_factors=C, true_loadings=B, variances=P)


def load_returns_csv(path: Path, from_prices: bool = False) -> tuple[np.ndarray, list[str]]:
    """Read a T x A returns table with a header row of tickers.

    A non-numeric first column is treated as the date index. With
    ``from_prices`` the table holds prices: gaps of up to five days are
    forward-filled, log returns are taken, and days with any simple move
    beyond 50% are dropped.

    Raises:
        MatrixFormatError: If the file has no numeric columns
    """
    frame = pd.read_csv(path)
    if frame.shape[1] and not pd.api.types.is_numeric_dtype(frame.iloc[:, 0]):
        frame = frame.set_index(frame.columns[0])
    frame = frame.apply(pd.to_numeric, errors="coerce")
    if frame.shape[1] == 0:
        raise MatrixFormatError("Returns file has no asset columns", offset=0, path=path)

    if from_prices:
        prices = frame.ffill(limit=MAX_PRICE_GAP_DAYS)
        frame = np.log(prices).diff().iloc[1:]
        extreme = (np.expm1(frame).abs() > MAX_DAILY_MOVE).any(axis=1)
        if extreme.any():
            logger.info(
                "dropping %d days with moves beyond %.0f%%",
                int(extreme.sum()),
                100 * MAX_DAILY_MOVE,
            )
        frame = frame.loc[~extreme]

    complete = frame.dropna()
    if len(complete) < len(frame):
        logger.info("dropping %d days with missing values", len(frame) - len(complete))
    return complete.to_numpy(dtype=np.float64), [str(c) for c in complete.columns]
