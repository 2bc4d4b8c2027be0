"""Risk-versus-rank sweep."""

from pathlib import Path

import click

from rankmap.core.models import ExperimentKind
from rankmap.services.runner import run_experiment
from rankmap.utils.console import success
from rankmap.utils.progress import progress_spinner
from rankmap.utils.tables import render_rows

from .common import config_options, handle_errors, load_config


@click.command()
@config_options
@handle_errors
def sweep(
    preset: str | None,
    config_path: Path | None,
    seed: int | None,
    ranks: str | None,
    out_dir: Path | None,
) -> None:
    """Sweep ranks with the least-squares estimator and the trained baseline.

    Uses the image generator of the chosen preset or config and writes one
    tables/sweep_<task>.csv per task.

    \b
    Examples:
      rankmap sweep --preset desk-imaging
      rankmap sweep --preset desk-imaging --ranks 25,50,100 --out runs/sweep
    """
    cfg = load_config(
        preset,
        config_path,
        seed,
        ranks,
        out_dir,
        overrides={"experiment": ExperimentKind.SWEEP.value},
    )
    with progress_spinner("Sweeping ranks..."):
        result, out = run_experiment(cfg)

    for name, rows in result.tables.items():
        render_rows(rows, title=name)
    success(f"Results written to {out}")
