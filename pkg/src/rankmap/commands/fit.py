"""Fit rank-constrained maps to stored data."""

from pathlib import Path

import click

from rankmap.core.config import parse_ranks
from rankmap.core.models import FactorStrategy, Form, Task
from rankmap.services import matrix_io
from rankmap.services.empirical import (
    DataSet,
    empirical_map,
    plugin_forward_map,
    plugin_inverse_map,
)
from rankmap.services.experiments.base import map_matrices
from rankmap.services.runner import write_matrices
from rankmap.utils.console import success
from rankmap.utils.errors import ContractViolationError
from rankmap.utils.paths import ensure_dir
from rankmap.utils.tables import render_rows

from .common import handle_errors


def load_data_dir(data_dir: Path) -> DataSet:
    """Read X.rkmp and, when present, Y.rkmp from a data directory."""
    X = matrix_io.read_matrix(data_dir / "X.rkmp")
    y_path = data_dir / "Y.rkmp"
    Y = matrix_io.read_matrix(y_path) if y_path.exists() else None
    return DataSet(X=X, Y=Y)


@click.command()
@click.argument("data_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option(
    "--task",
    type=click.Choice([t.value for t in Task]),
    default=Task.INVERSE.value,
    help="Estimation task",
)
@click.option(
    "--form",
    type=click.Choice([f.value for f in Form]),
    default=Form.LINEAR.value,
    help="Linear map or affine map with bias",
)
@click.option("--ranks", required=True, help="Comma-separated ranks, e.g. 25,50,100")
@click.option(
    "--ridge",
    type=float,
    help="Use the moment plug-in estimator with this ridge (linear forward/inverse only)",
)
@click.option(
    "--strategy",
    type=click.Choice([s.value for s in FactorStrategy]),
    default=FactorStrategy.PSD.value,
    help="Factorization of the input moment for the plug-in estimator",
)
@click.option(
    "--out",
    "out_dir",
    type=click.Path(file_okay=False, path_type=Path),
    required=True,
    help="Directory receiving maps/",
)
@handle_errors
def fit(
    data_dir: Path,
    task: str,
    form: str,
    ranks: str,
    ridge: float | None,
    strategy: str,
    out_dir: Path,
) -> None:
    """Fit least-squares (or plug-in) rank-r maps to DATA_DIR.

    \b
    Examples:
      rankmap fit runs/swe/data/train --task inverse --ranks 64 --out runs/fit
      rankmap fit data/ --task forward --ranks 10,20 --ridge 1e-2 --out fit/
    """
    D = load_data_dir(data_dir)
    task_kind, form_kind = Task(task), Form(form)
    if ridge is not None and (
        form_kind != Form.LINEAR or task_kind not in (Task.FORWARD, Task.INVERSE)
    ):
        raise ContractViolationError(
            "--ridge applies to linear forward and inverse maps only",
            suggestion="Drop --ridge to fit the least-squares estimator",
        )

    rows = []
    matrices = {}
    for rank in parse_ranks(ranks):
        if ridge is None:
            fitted = empirical_map(D, rank, task_kind, form_kind)
        elif task_kind == Task.FORWARD:
            fitted = plugin_forward_map(D, rank, ridge, FactorStrategy(strategy))
        else:
            fitted = plugin_inverse_map(D, rank, ridge, FactorStrategy(strategy))
        matrices.update(map_matrices(fitted, task_kind, form_kind, rank))
        rows.append(
            {
                "rank": rank,
                "effective_rank": fitted.trace.effective_rank,
                "clamped": fitted.trace.clamped,
                "training_mse": fitted.risk,
            }
        )

    written = write_matrices(matrices, ensure_dir(out_dir))
    render_rows(rows, title=f"{task} / {form} fits")
    success(f"Wrote {len(written)} map files to {out_dir / 'maps'}")
