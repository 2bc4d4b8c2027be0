"""Evaluate a stored map on stored data."""

from pathlib import Path

import click

from rankmap.core.models import Task
from rankmap.services import matrix_io
from rankmap.services.empirical import task_pair
from rankmap.services.metrics import mae, mse, nrmse
from rankmap.services.runner import write_table
from rankmap.utils.console import success
from rankmap.utils.errors import DimensionMismatchError
from rankmap.utils.tables import render_rows

from .common import handle_errors
from .fit import load_data_dir


@click.command()
@click.argument("map_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("data_dir", type=click.Path(exists=True, file_okay=False, path_type=Path))
@click.option(
    "--task",
    type=click.Choice([t.value for t in Task]),
    default=Task.INVERSE.value,
    help="Which pair of DATA_DIR the map is applied to",
)
@click.option(
    "--bias",
    "bias_file",
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
    help="Bias vector (n x 1 matrix) of an affine map",
)
@click.option(
    "--out",
    "out_file",
    type=click.Path(dir_okay=False, path_type=Path),
    help="Also write the metrics row to this CSV file",
)
@handle_errors
def evaluate(
    map_file: Path, data_dir: Path, task: str, bias_file: Path | None, out_file: Path | None
) -> None:
    """Apply MAP_FILE to the inputs in DATA_DIR and report reconstruction errors.

    \b
    Examples:
      rankmap evaluate runs/fit/maps/A_inverse_linear_r64.rkmp runs/swe/data/test
      rankmap evaluate A.rkmp data/ --task autoencode --bias b.rkmp --out metrics.csv
    """
    A = matrix_io.read_matrix(map_file)
    inputs, targets = task_pair(load_data_dir(data_dir), Task(task))
    if A.shape != (targets.shape[0], inputs.shape[0]):
        raise DimensionMismatchError(
            "map and data", (targets.shape[0], inputs.shape[0]), A.shape
        )

    pred = A @ inputs
    if bias_file is not None:
        bias = matrix_io.read_matrix(bias_file).reshape(-1)
        if bias.shape[0] != targets.shape[0]:
            raise DimensionMismatchError("bias length", targets.shape[0], bias.shape[0])
        pred = pred + bias[:, None]

    row = {
        "map": map_file.name,
        "samples": inputs.shape[1],
        "mse": mse(pred, targets),
        "nrmse": nrmse(pred, targets),
        "mae": mae(pred, targets),
    }
    render_rows([row], title=f"{task} evaluation")
    if out_file is not None:
        write_table(out_file, [row])
        success(f"Wrote {out_file}")
