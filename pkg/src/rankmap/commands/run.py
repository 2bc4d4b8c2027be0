"""Run a complete experiment."""

from pathlib import Path

import click

from rankmap.services.runner import run_experiment
from rankmap.utils.console import info, success, warn
from rankmap.utils.progress import progress_spinner
from rankmap.utils.tables import render_summary

from .common import config_options, handle_errors, load_config


@click.command()
@config_options
@handle_errors
def run(
    preset: str | None,
    config_path: Path | None,
    seed: int | None,
    ranks: str | None,
    out_dir: Path | None,
) -> None:
    """Generate data, fit every map, and write tables, maps and a report.

    \b
    Examples:
      rankmap run --preset desk-swe
      rankmap run --preset paper-imaging --ranks 25,50,100 --out runs/imaging
      rankmap run --config finance.yaml --seed 7
    """
    cfg = load_config(preset, config_path, seed, ranks, out_dir)
    info(f"Running {cfg.experiment} with seeds {cfg.seeds} and ranks {cfg.ranks}")
    with progress_spinner(f"Running {cfg.experiment}..."):
        result, out = run_experiment(cfg)

    render_summary(result.summary, title=f"{cfg.experiment} summary")
    for note in result.notes:
        warn(note)
    success(f"Results written to {out}")
