"""Risk-versus-rank sweep of the least-squares estimator on synthetic images."""

import logging
from functools import partial

import numpy as np

from rankmap.core.models import Form, Task, TrainConfig
from rankmap.services.baselines import TrainedMap, train_encoder_decoder
from rankmap.services.empirical import DataSet, empirical_map, task_pair
from rankmap.services.metrics import risk_rank_sweep
from rankmap.services.mappings import OptimalMap

from .base import ExperimentResult, Row, map_matrices
from .imaging import ImagingExperiment, task_split

logger = logging.getLogger(__name__)


def _least_squares(form: Form, D: DataSet, r: int) -> OptimalMap:
    """Rank-r least-squares fit of D.Y from D.X."""
    return empirical_map(D, r, Task.FORWARD, form)


def _learner(cfg: TrainConfig, D: DataSet, r: int) -> TrainedMap:
    return train_encoder_decoder(D, cfg.with_rank(r))


class SweepExperiment(ImagingExperiment):
    """Training risk of the rank-r least-squares map next to the trained baseline.

    Both are fit to the same samples, so the least-squares column is the
    floor every learned rank-r map sits on.
    """

    @property
    def name(self) -> str:
        """Get experiment name."""
        return "sweep"

    def run(self) -> ExperimentResult:
        """One sweep per seed and task over the configured ranks."""
        cfg = self.config
        tables: dict[str, list[Row]] = {}
        matrices: dict[str, np.ndarray] = {}

        for seed_index, seed in enumerate(cfg.seeds):
            splits = self.generate(seed)
            if seed_index == 0:
                matrices.update(self.data_matrices(splits))

            for task in cfg.tasks:
                inputs, targets = task_pair(task_split(splits, task, "train"), task)
                pair = DataSet(inputs, targets)
                fitted: dict[int, OptimalMap] = {}

                def builder(D: DataSet, r: int) -> OptimalMap:
                    fitted[r] = _least_squares(cfg.form, D, r)
                    return fitted[r]

                learner = None
                train_cfg = self.train_config(cfg.ranks[0], seed, affine=cfg.form == Form.AFFINE)
                if train_cfg is not None:
                    learner = partial(_learner, train_cfg)

                sweep = risk_rank_sweep(builder, cfg.ranks, pair, Task.FORWARD, learner=learner)
                rows = tables.setdefault(f"sweep_{task}", [])
                for entry in sweep:
                    rows.append(
                        {
                            "seed": seed,
                            "rank": entry.rank,
                            "optimal_risk": entry.optimal_risk,
                            "learned_risk": entry.learned_risk,
                        }
                    )
                if seed_index == 0:
                    for rank, model in fitted.items():
                        matrices.update(map_matrices(model, task, cfg.form, rank))
                logger.info("swept %s over %d ranks (seed %d)", task, len(cfg.ranks), seed)

        summary = {}
        for name, rows in tables.items():
            last = rows[-1] if rows else None
            if last is not None:
                summary[f"{name} optimal risk (r={last['rank']})"] = last["optimal_risk"]
        return ExperimentResult(
            experiment_name=self.name, tables=tables, matrices=matrices, summary=summary
        )
