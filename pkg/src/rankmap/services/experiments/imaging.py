"""Deblurring experiment on synthetic images."""

import logging

import numpy as np

from rankmap.core.models import ExperimentConfig, Form, Task
from rankmap.services import datagen
from rankmap.services.baselines import train_encoder_decoder
from rankmap.services.empirical import (
    DataSet,
    empirical_covariance,
    empirical_second_moment,
    task_pair,
)
from rankmap.services.mappings import MomentModel, ProblemSpec, optimal_map
from rankmap.services.metrics import mse
from rankmap.utils.random import spawn

from .base import BaseExperiment, ExperimentResult, Row, map_matrices

logger = logging.getLogger(__name__)

DENOISE_SUFFIX = "_denoise"


def task_split(splits: dict[str, DataSet], task: Task, split: str) -> DataSet:
    """The split a task reads: denoising pairs X with X + E instead of F X + E."""
    if task == Task.DENOISE:
        return splits[split + DENOISE_SUFFIX]
    return splits[split]


class ImagingExperiment(BaseExperiment):
    """Closed-form maps from empirical image moments against the trained baseline.

    For each task and rank the optimal map is built from the ridged empirical
    moment of the training images and Gamma_E = s^2 I, then scored by its
    Bayes risk and by test mean squared error next to the learned map.
    """

    def __init__(self, config: ExperimentConfig):
        super().__init__(config)
        self._forward_operator: np.ndarray | None = None

    @property
    def name(self) -> str:
        """Get experiment name."""
        return "imaging"

    @property
    def forward_operator(self) -> np.ndarray:
        """Blur operator, built once."""
        if self._forward_operator is None:
            self._forward_operator = datagen.build_blur_operator(self.config.blur)
        return self._forward_operator

    def generate(self, seed: int) -> dict[str, DataSet]:
        """Train and test images with blurred noisy observations.

        Denoising splits are added when the denoise task is configured.
        """
        cfg = self.config
        images, side = cfg.images, cfg.blur.image_side
        train_rng, test_rng, noise_rng, denoise_rng = spawn(seed, 4)
        F = self.forward_operator

        X_train = datagen.synthetic_images(images.train_count, side, images.smoothness, train_rng)
        X_test = datagen.synthetic_images(images.test_count, side, images.smoothness, test_rng)
        Y_train = datagen.add_white_noise(F @ X_train, cfg.noise_std, noise_rng)
        Y_test = datagen.add_white_noise(F @ X_test, cfg.noise_std, noise_rng)
        splits = {"train": DataSet(X_train, Y_train), "test": DataSet(X_test, Y_test)}
        if Task.DENOISE in cfg.tasks:
            for split, X in (("train", X_train), ("test", X_test)):
                noisy = datagen.add_white_noise(X, cfg.noise_std, denoise_rng)
                splits[split + DENOISE_SUFFIX] = DataSet(X, noisy)
        return splits

    def data_matrices(self, splits: dict[str, DataSet]) -> dict[str, np.ndarray]:
        matrices = super().data_matrices(splits)
        matrices["data/F"] = self.forward_operator
        return matrices

    def _moments(
        self, train: DataSet, task: Task
    ) -> tuple[MomentModel, MomentModel | None, np.ndarray | None]:
        """Signal moment, noise moment and forward operator of a task."""
        cfg = self.config
        affine = cfg.form == Form.AFFINE
        estimator = empirical_covariance if affine else empirical_second_moment
        signal = estimator(train, ridge=cfg.ridge, strategy=cfg.factor_strategy)

        F = None if task in (Task.AUTOENCODE, Task.DENOISE) else self.forward_operator
        noise = None
        if task != Task.AUTOENCODE and (cfg.noise_std > 0 or task == Task.DENOISE):
            m = signal.dim if F is None else F.shape[0]
            noise_matrix = cfg.noise_std**2 * np.eye(m)
            if affine:
                noise = MomentModel.from_covariance(noise_matrix, np.zeros(m))
            else:
                noise = MomentModel.from_moment(noise_matrix)
        return signal, noise, F

    def run(self) -> ExperimentResult:
        """Sweep tasks and ranks for every seed."""
        cfg = self.config
        rows: list[Row] = []
        matrices: dict[str, np.ndarray] = {}
        notes: list[str] = []

        for seed_index, seed in enumerate(cfg.seeds):
            splits = self.generate(seed)
            if seed_index == 0:
                matrices.update(self.data_matrices(splits))

            for task in cfg.tasks:
                train = task_split(splits, task, "train")
                test = task_split(splits, task, "test")
                train_in, train_out = task_pair(train, task)
                test_in, test_out = task_pair(test, task)
                signal, noise, F = self._moments(train, task)

                for rank in cfg.ranks:
                    spec = ProblemSpec(
                        signal=signal,
                        rank=rank,
                        task=task,
                        form=cfg.form,
                        forward_operator=F,
                        noise=noise,
                    )
                    optimal = optimal_map(spec)
                    row: Row = {
                        "seed": seed,
                        "task": str(task),
                        "form": str(cfg.form),
                        "rank": rank,
                        "effective_rank": optimal.trace.effective_rank,
                        "clamped": optimal.trace.clamped,
                        "branch": optimal.trace.branch,
                        "bayes_risk": optimal.risk,
                        "optimal_test_mse": mse(optimal.apply(test_in), test_out),
                        "learned_train_mse": None,
                        "learned_test_mse": None,
                    }
                    if optimal.trace.clamped and seed_index == 0:
                        notes.append(f"{task} rank {rank}: {'; '.join(optimal.trace.notes)}")

                    train_cfg = self.train_config(rank, seed, affine=cfg.form == Form.AFFINE)
                    if train_cfg is not None:
                        learned = train_encoder_decoder(DataSet(train_in, train_out), train_cfg)
                        row["learned_train_mse"] = learned.final_loss
                        row["learned_test_mse"] = mse(learned.apply(test_in), test_out)
                    rows.append(row)
                    logger.info(
                        "%s r=%d: bayes risk %.6g, optimal test %.6g, learned test %s",
                        task,
                        rank,
                        row["bayes_risk"],
                        row["optimal_test_mse"],
                        row["learned_test_mse"],
                    )
                    if seed_index == 0:
                        matrices.update(map_matrices(optimal, task, cfg.form, rank))

        return ExperimentResult(
            experiment_name=self.name,
            tables={"imaging_risk": rows},
            matrices=matrices,
            summary=_summarize(rows),
            notes=notes,
        )


def _summarize(rows: list[Row]) -> dict[str, float]:
    """Mean test MSE per task at the largest rank."""
    if not rows:
        return {}
    top = max(row["rank"] for row in rows)
    summary: dict[str, float] = {}
    for task in sorted({row["task"] for row in rows}):
        at_top = [row for row in rows if row["task"] == task and row["rank"] == top]
        summary[f"{task} optimal test MSE (r={top})"] = float(
            np.mean([row["optimal_test_mse"] for row in at_top])
        )
        learned = [row["learned_test_mse"] for row in at_top if row["learned_test_mse"] is not None]
        if learned:
            summary[f"{task} learned test MSE (r={top})"] = float(np.mean(learned))
    return summary
