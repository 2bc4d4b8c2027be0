"""Generate experiment data."""

from pathlib import Path

import click

from rankmap.services.experiments import create_experiment
from rankmap.services.runner import output_directory, write_matrices
from rankmap.utils.console import info, success
from rankmap.utils.paths import ensure_dir
from rankmap.utils.progress import progress_spinner

from .common import config_options, handle_errors, load_config


@click.command()
@config_options
@handle_errors
def generate(
    preset: str | None,
    config_path: Path | None,
    seed: int | None,
    ranks: str | None,
    out_dir: Path | None,
) -> None:
    """Generate the data splits of an experiment.

    Writes data/<split>/X.rkmp and data/<split>/Y.rkmp for the first
    configured seed.

    \b
    Examples:
      rankmap generate --preset desk-swe --out runs/swe
      rankmap generate --config imaging.yaml --seed 3
    """
    cfg = load_config(preset, config_path, seed, ranks, out_dir)
    experiment = create_experiment(cfg)
    data_seed = cfg.seeds[0]

    info(f"Generating {experiment.name} data (seed {data_seed})...")
    with progress_spinner("Generating data..."):
        splits = experiment.generate(data_seed)

    out = ensure_dir(output_directory(cfg))
    written = write_matrices(experiment.data_matrices(splits), out)
    for split, data in splits.items():
        info(f"{split}: {data.X.shape[0]} x {data.sample_count}")
    success(f"Wrote {len(written)} matrices to {out}")
