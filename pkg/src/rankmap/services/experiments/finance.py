"""Latent-factor recovery from asset returns."""

import contextlib
import logging
from typing import Any

import numpy as np

from rankmap.core.models import Form, Task
from rankmap.services import datagen, factors
from rankmap.services.baselines import (
    pca_baseline,
    train_encoder_decoder,
    train_nonlinear_autoencoder,
)
from rankmap.services.empirical import DataSet, empirical_covariance, empirical_second_moment
from rankmap.services.mappings import ProblemSpec, optimal_map
from rankmap.services.metrics import mse
from rankmap.utils.errors import UndefinedMetricError

from .base import BaseExperiment, ExperimentResult, Row, map_matrices

logger = logging.getLogger(__name__)


class FinanceExperiment(BaseExperiment):
    """Optimal autoencoder, PCA and trained encoders on daily returns.

    Returns are split chronologically. Each method is scored by held-out
    reconstruction MSE, per-factor explained variance after varimax, factor
    balance and, for synthetic markets, the correlation of its z-scored,
    Procrustes-aligned scores with the generating factors.
    """

    @property
    def name(self) -> str:
        """Get experiment name."""
        return "finance"

    def _market(self, seed: int) -> datagen.MarketData | None:
        if self.config.market is None:
            return None
        return datagen.synthetic_market(self.config.market.model_copy(update={"seed": seed}))

    def _load(self, seed: int) -> tuple[dict[str, DataSet], datagen.MarketData | None]:
        cfg = self.config
        market = self._market(seed)
        if market is not None:
            returns = market.returns
        else:
            returns, tickers = datagen.load_returns_csv(cfg.returns_csv, cfg.from_prices)
            logger.info("loaded %d days of %d assets", returns.shape[0], len(tickers))
        full = DataSet(X=returns.T)
        train, test = full.split(cfg.train_fraction)
        return {"full": full, "train": train, "test": test}, market

    def generate(self, seed: int) -> dict[str, DataSet]:
        """Full, train and test returns (assets x days) for one seed."""
        return self._load(seed)[0]

    def _models(self, train: DataSet, rank: int, seed: int) -> dict[str, Any]:
        cfg = self.config
        affine = cfg.form == Form.AFFINE
        estimator = empirical_covariance if affine else empirical_second_moment
        signal = estimator(train, ridge=cfg.ridge, strategy=cfg.factor_strategy)
        spec = ProblemSpec(signal=signal, rank=rank, task=Task.AUTOENCODE, form=cfg.form)

        models: dict[str, Any] = {"optimal": optimal_map(spec), "pca": pca_baseline(train, rank)}
        train_cfg = self.train_config(rank, seed, affine=affine)
        if train_cfg is not None:
            models["trained"] = train_encoder_decoder(train, train_cfg)
            if cfg.nonlinear_hidden is not None:
                models["nonlinear"] = train_nonlinear_autoencoder(
                    train, train_cfg, cfg.nonlinear_hidden
                )
        return models

    def _factor_rows(
        self,
        model: Any,
        returns: np.ndarray,
        market: datagen.MarketData | None,
        base: Row,
    ) -> tuple[Row, Row | None]:
        """Explained-variance row and, with known factors, the correlation row."""
        latent = factors.latent_factors_from_map(model, returns.T)
        rank = latent.factor_count
        if rank >= 2:
            latent = factors.varimax_rotate(latent).factors

        cev = factors.cumulative_explained_variance(latent, returns)
        cev_row = dict(base)
        for k, value in enumerate(cev.per_factor, start=1):
            cev_row[f"factor_{k}"] = float(value)
        cev_row["total_cev"] = cev.total
        cev_row["factor_balance"] = None
        if rank >= 2:
            with contextlib.suppress(UndefinedMetricError):
                cev_row["factor_balance"] = factors.factor_balance(cev.per_factor)

        if market is None or market.true_factors.shape[1] != rank:
            return cev_row, None
        aligned = factors.procrustes_align(
            factors.zscore(latent.scores), factors.zscore(market.true_factors)
        )
        correlations = factors.aligned_factor_correlations(aligned.aligned, market.true_factors)
        corr_row = dict(base)
        for k, value in enumerate(correlations, start=1):
            corr_row[f"factor_{k}"] = float(value)
        corr_row["rotation_unique"] = aligned.unique
        return cev_row, corr_row

    def run(self) -> ExperimentResult:
        """Fit and score every method for each seed and rank."""
        cfg = self.config
        mse_rows: list[Row] = []
        cev_rows: list[Row] = []
        corr_rows: list[Row] = []
        matrices: dict[str, np.ndarray] = {}

        for seed_index, seed in enumerate(cfg.seeds):
            splits, market = self._load(seed)
            train, test = splits["train"], splits["test"]
            returns = splits["full"].X.T
            if seed_index == 0:
                matrices.update(self.data_matrices(splits))
                if market is not None:
                    matrices["data/true_factors"] = market.true_factors
                    matrices["data/true_loadings"] = market.true_loadings

            for rank in cfg.ranks:
                for method, model in self._models(train, rank, seed).items():
                    base: Row = {"seed": seed, "rank": rank, "method": method}
                    mse_rows.append(
                        {
                            **base,
                            "train_mse": mse(model.apply(train.X), train.X),
                            "test_mse": mse(model.apply(test.X), test.X),
                        }
                    )
                    cev_row, corr_row = self._factor_rows(model, returns, market, base)
                    cev_rows.append(cev_row)
                    if corr_row is not None:
                        corr_rows.append(corr_row)
                    if seed_index == 0 and method == "optimal":
                        matrices.update(map_matrices(model, Task.AUTOENCODE, cfg.form, rank))
            logger.info("finance seed %d done", seed)

        tables = {"finance_mse": mse_rows, "finance_cev": cev_rows}
        if corr_rows:
            tables["finance_correlations"] = corr_rows
        return ExperimentResult(
            experiment_name=self.name,
            tables=tables,
            matrices=matrices,
            summary=_summarize(mse_rows, corr_rows),
        )


def _summarize(mse_rows: list[Row], corr_rows: list[Row]) -> dict[str, float]:
    """Median test MSE per method over seeds, and median dominant-factor correlation."""
    summary: dict[str, float] = {}
    for method in dict.fromkeys(row["method"] for row in mse_rows):
        values = [row["test_mse"] for row in mse_rows if row["method"] == method]
        summary[f"{method} median test MSE"] = float(np.median(values))
    for method in dict.fromkeys(row["method"] for row in corr_rows):
        values = [row["factor_1"] for row in corr_rows if row["method"] == method]
        summary[f"{method} median factor-1 correlation"] = float(np.nanmedian(values))
    return summary
