"""Trained comparators for the closed-form maps.

A gradient-trained encoder-decoder y ~ D E x + b fitted to the mean squared
error (1/J)||D E X + b 1^T - Y||_F^2 with analytic gradients, a PCA baseline,
and an optional small nonlinear autoencoder.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from rankmap.core.models import Form, OptimizerKind, Task, TrainConfig
from rankmap.services import linalg
from rankmap.services.empirical import DataSet
from rankmap.services.mappings import ConstructionTrace, OptimalMap
from rankmap.utils.errors import (
    ContractViolationError,
    DivergenceError,
    InsufficientSamplesError,
)
from rankmap.utils.random import make_rng

logger = logging.getLogger(__name__)

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPSILON = 1e-8
LEAKY_SLOPE = 0.01

# Largest problem gradient_check accepts
GRADIENT_CHECK_MAX_DIM = 6
GRADIENT_CHECK_MAX_SAMPLES = 10

LossAndGradients = Callable[[list[np.ndarray], np.ndarray | None], tuple[float, list[np.ndarray]]]


@dataclass(frozen=True)
class TrainedMap:
    """Encoder E (r x n), decoder D (m x r) and optional bias b."""

    encoder: np.ndarray
    decoder: np.ndarray
    bias: np.ndarray | None
    loss_history: np.ndarray
    initial_loss: float

    @property
    def A(self) -> np.ndarray:
        """Composed map D E, of rank at most r."""
        return self.decoder @ self.encoder

    @property
    def rank(self) -> int:
        return int(self.encoder.shape[0])

    @property
    def final_loss(self) -> float:
        return float(self.loss_history[-1]) if self.loss_history.size else self.initial_loss

    def apply(self, inputs: np.ndarray) -> np.ndarray:
        inputs = np.asarray(inputs, dtype=np.float64)
        out = self.decoder @ (self.encoder @ inputs)
        if self.bias is not None:
            out = out + (self.bias if inputs.ndim == 1 else self.bias[:, None])
        return out


def _targets(D: DataSet) -> np.ndarray:
    return D.X if D.Y is None else D.Y


def mse_loss_and_gradients(
    E: np.ndarray,
    D: np.ndarray,
    b: np.ndarray | None,
    X: np.ndarray,
    Y: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray | None]:
    """Loss (1/J)||D E X + b 1^T - Y||_F^2 and its gradients (dE, dD, db)."""
    J = X.shape[1]
    latent = E @ X
    residual = D @ latent - Y
    if b is not None:
        residual += b[:, None]
    loss = float(np.sum(residual**2) / J)
    scaled = (2.0 / J) * residual
    dD = scaled @ latent.T
    dE = D.T @ scaled @ X.T
    db = scaled.sum(axis=1) if b is not None else None
    return loss, dE, dD, db


class _Adam:
    """Adam-style first-order updates over a list of parameter arrays."""

    def __init__(self, params: list[np.ndarray], learning_rate: float):
        self.learning_rate = learning_rate
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        correction1 = 1.0 - ADAM_BETA1**self.t
        correction2 = 1.0 - ADAM_BETA2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * g * g
            p -= self.learning_rate * (m / correction1) / (np.sqrt(v / correction2) + ADAM_EPSILON)


class _GradientDescent:
    def __init__(self, params: list[np.ndarray], learning_rate: float):
        self.learning_rate = learning_rate

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.learning_rate * g


def _optimize(
    params: list[np.ndarray],
    loss_and_gradients: LossAndGradients,
    sample_count: int,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> tuple[np.ndarray, float]:
    """Run ``cfg.epochs`` epochs in place; return (loss history, initial loss).

    Raises:
        DivergenceError: On a non-finite loss or a final loss above the initial one
    """
    optimizer_cls = _Adam if cfg.optimizer == OptimizerKind.ADAM else _GradientDescent
    optimizer = optimizer_cls(params, cfg.learning_rate)
    initial_loss, _ = loss_and_gradients(params, None)
    full_batch = cfg.batch_size is None or cfg.batch_size >= sample_count

    history = np.empty(cfg.epochs)
    for epoch in range(cfg.epochs):
        if full_batch:
            _, grads = loss_and_gradients(params, None)
            optimizer.step(params, grads)
        else:
            order = rng.permutation(sample_count)
            for start in range(0, sample_count, cfg.batch_size):
                _, grads = loss_and_gradients(params, order[start : start + cfg.batch_size])
                optimizer.step(params, grads)

        loss, _ = loss_and_gradients(params, None)
        if not np.isfinite(loss):
            raise DivergenceError(epoch + 1, loss)
        history[epoch] = loss
        if (epoch + 1) % 50 == 0:
            logger.debug("epoch %d/%d loss %.6g", epoch + 1, cfg.epochs, loss)

    if history[-1] > initial_loss:
        raise DivergenceError(cfg.epochs, float(history[-1]))
    return history, float(initial_loss)


def _uniform(rng: np.random.Generator, shape: tuple[int, int], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(max(fan_in, 1))
    return rng.uniform(-bound, bound, size=shape)


def _initial_parameters(
    n: int, m: int, cfg: TrainConfig, rng: np.random.Generator
) -> list[np.ndarray]:
    """[E, D] or [E, D, b] with fan-in uniform weights and zero bias."""
    params = [_uniform(rng, (cfg.rank, n), n), _uniform(rng, (m, cfg.rank), cfg.rank)]
    if cfg.affine:
        params.append(np.zeros(m))
    return params


def _linear_objective(X: np.ndarray, Y: np.ndarray) -> LossAndGradients:
    def loss_and_gradients(
        params: list[np.ndarray], index: np.ndarray | None
    ) -> tuple[float, list[np.ndarray]]:
        E, D = params[0], params[1]
        b = params[2] if len(params) > 2 else None
        Xb, Yb = (X, Y) if index is None else (X[:, index], Y[:, index])
        loss, dE, dD, db = mse_loss_and_gradients(E, D, b, Xb, Yb)
        grads = [dE, dD] if db is None else [dE, dD, db]
        return loss, grads

    return loss_and_gradients


def train_encoder_decoder(D: DataSet, cfg: TrainConfig) -> TrainedMap:
    """Fit D E X + b to Y by first-order training (Y absent means Y = X).

    Deterministic given ``cfg.seed``; a zero learning rate returns the
    initialization unchanged.
    """
    X = D.X
    Y = _targets(D)
    rng = make_rng(cfg.seed)
    params = _initial_parameters(X.shape[0], Y.shape[0], cfg, rng)
    history, initial_loss = _optimize(params, _linear_objective(X, Y), X.shape[1], cfg, rng)
    logger.info(
        "trained rank-%d %s map: loss %.6g -> %.6g",
        cfg.rank,
        "affine" if cfg.affine else "linear",
        initial_loss,
        history[-1],
    )
    return TrainedMap(
        encoder=params[0],
        decoder=params[1],
        bias=params[2] if cfg.affine else None,
        loss_history=history,
        initial_loss=initial_loss,
    )


@dataclass(frozen=True)
class GradientCheckReport:
    """Worst relative mismatch between analytic and central-difference gradients."""

    max_relative_error: float
    worst_parameter: str
    worst_index: tuple[int, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_error <= self.tolerance


def gradient_check(
    cfg: TrainConfig, D: DataSet, step: float = 1e-6, tolerance: float = 1e-5
) -> GradientCheckReport:
    """Compare analytic MSE gradients at the seeded initialization with finite differences.

    Errors are relative to the infinity norm of each analytic gradient block.
    """
    X = D.X
    Y = _targets(D)
    too_wide = max(X.shape[0], Y.shape[0]) > GRADIENT_CHECK_MAX_DIM
    if too_wide or X.shape[1] > GRADIENT_CHECK_MAX_SAMPLES:
        raise ContractViolationError(
            f"gradient_check needs n, m <= {GRADIENT_CHECK_MAX_DIM} "
            f"and J <= {GRADIENT_CHECK_MAX_SAMPLES}, got {X.shape} -> {Y.shape}"
        )

    params = _initial_parameters(X.shape[0], Y.shape[0], cfg, make_rng(cfg.seed))
    objective = _linear_objective(X, Y)
    _, analytic = objective(params, None)
    names = ["encoder", "decoder", "bias"]

    worst = (0.0, "encoder", (0,))
    for name, param, grad in zip(names, params, analytic):
        scale = max(float(np.max(np.abs(grad))) if grad.size else 0.0, np.finfo(float).tiny)
        for index in np.ndindex(param.shape):
            original = param[index]
            param[index] = original + step
            plus, _ = objective(params, None)
            param[index] = original - step
            minus, _ = objective(params, None)
            param[index] = original
            numeric = (plus - minus) / (2.0 * step)
            error = abs(numeric - grad[index]) / scale
            if error > worst[0]:
                worst = (float(error), name, tuple(int(i) for i in index))

    report = GradientCheckReport(
        max_relative_error=worst[0],
        worst_parameter=worst[1],
        worst_index=worst[2],
        tolerance=tolerance,
    )
    if not report.passed:
        logger.warning(
            "gradient mismatch %.3e at %s%s", report.max_relative_error, worst[1], worst[2]
        )
    return report


def pca_baseline(D: DataSet, r: int) -> OptimalMap:
    """Centered rank-r PCA reconstruction x -> U_r U_r^T (x - mu) + mu.

    ``risk`` holds the training reconstruction mean squared error.
    """
    X = D.X
    J = X.shape[1]
    if J < 2:
        raise InsufficientSamplesError(2, J)
    mean = X.mean(axis=1)
    centered = X - mean[:, None]
    f = linalg.svd(centered)
    kept = linalg.truncate(f, r) if f.effective_rank else f
    U_r = kept.U[:, : kept.effective_rank]
    A = U_r @ U_r.T
    bias = mean - A @ mean
    residual = A @ centered - centered
    trace = ConstructionTrace(
        branch="pca",
        requested_rank=r,
        effective_rank=kept.effective_rank,
        clamped=r > f.effective_rank,
        unique=f.has_gap(r) if f.effective_rank else True,
    )
    return OptimalMap(
        A=A,
        bias=bias,
        rank=r,
        task=Task.AUTOENCODE,
        form=Form.AFFINE,
        risk=float(np.sum(residual**2) / J),
        trace=trace,
    )


def _leaky(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, z, LEAKY_SLOPE * z)


def _leaky_slope(z: np.ndarray) -> np.ndarray:
    return np.where(z > 0, 1.0, LEAKY_SLOPE)


@dataclass(frozen=True)
class NonlinearAutoencoder:
    """affine -> leaky ReLU -> affine (latent) -> affine -> leaky ReLU -> affine."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    loss_history: np.ndarray
    initial_loss: float

    def encode(self, inputs: np.ndarray) -> np.ndarray:
        W1, W2 = self.weights[0], self.weights[1]
        b1, b2 = self.biases[0], self.biases[1]
        return W2 @ _leaky(W1 @ inputs + b1[:, None]) + b2[:, None]

    def decode(self, latent: np.ndarray) -> np.ndarray:
        W3, W4 = self.weights[2], self.weights[3]
        b3, b4 = self.biases[2], self.biases[3]
        return W4 @ _leaky(W3 @ latent + b3[:, None]) + b4[:, None]

    def apply(self, inputs: np.ndarray) -> np.ndarray:
        return self.decode(self.encode(np.asarray(inputs, dtype=np.float64)))

    @property
    def loadings(self) -> np.ndarray:
        """Linearized decoder W4 W3 (m x r)."""
        return self.weights[3] @ self.weights[2]


def _nonlinear_objective(X: np.ndarray, Y: np.ndarray) -> LossAndGradients:
    def loss_and_gradients(
        params: list[np.ndarray], index: np.ndarray | None
    ) -> tuple[float, list[np.ndarray]]:
        W1, b1, W2, b2, W3, b3, W4, b4 = params
        Xb, Yb = (X, Y) if index is None else (X[:, index], Y[:, index])
        J = Xb.shape[1]
        z1 = W1 @ Xb + b1[:, None]
        h1 = _leaky(z1)
        latent = W2 @ h1 + b2[:, None]
        z3 = W3 @ latent + b3[:, None]
        h3 = _leaky(z3)
        residual = W4 @ h3 + b4[:, None] - Yb
        loss = float(np.sum(residual**2) / J)

        d_out = (2.0 / J) * residual
        dW4, db4 = d_out @ h3.T, d_out.sum(axis=1)
        d_z3 = (W4.T @ d_out) * _leaky_slope(z3)
        dW3, db3 = d_z3 @ latent.T, d_z3.sum(axis=1)
        d_latent = W3.T @ d_z3
        dW2, db2 = d_latent @ h1.T, d_latent.sum(axis=1)
        d_z1 = (W2.T @ d_latent) * _leaky_slope(z1)
        dW1, db1 = d_z1 @ Xb.T, d_z1.sum(axis=1)
        return loss, [dW1, db1, dW2, db2, dW3, db3, dW4, db4]

    return loss_and_gradients


def train_nonlinear_autoencoder(D: DataSet, cfg: TrainConfig, hidden: int) -> NonlinearAutoencoder:
    """Train the small leaky-ReLU autoencoder with latent width ``cfg.rank``."""
    if hidden < 1:
        raise ContractViolationError(f"hidden width must be >= 1, got {hidden}")
    X = D.X
    Y = _targets(D)
    n, m, r = X.shape[0], Y.shape[0], cfg.rank
    rng = make_rng(cfg.seed)
    shapes = [(hidden, n), (r, hidden), (hidden, r), (m, hidden)]
    params: list[np.ndarray] = []
    for shape in shapes:
        params.append(_uniform(rng, shape, shape[1]))
        params.append(np.zeros(shape[0]))

    history, initial_loss = _optimize(params, _nonlinear_objective(X, Y), X.shape[1], cfg, rng)
    logger.info("trained nonlinear autoencoder: loss %.6g -> %.6g", initial_loss, history[-1])
    return NonlinearAutoencoder(
        weights=tuple(params[0::2]),
        biases=tuple(params[1::2]),
        loss_history=history,
        initial_loss=initial_loss,
    )
