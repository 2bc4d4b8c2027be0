"""Writing experiment results to an output directory.

Layout::

    <out>/data/...          input matrices (.rkmp)
    <out>/maps/...          fitted maps A_<task>_<form>_r<rank>.rkmp, biases b_...
    <out>/tables/*.csv      result tables
    <out>/manifest.json     config echo, seeds, version, artifact list
    <out>/report.md         human-readable summary

Nothing written depends on the clock or the output location, so equal
configurations produce byte-identical directories.
"""

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from rankmap import __version__
from rankmap.core.models import ExperimentConfig
from rankmap.services import matrix_io
from rankmap.services.experiments import ExperimentResult, create_experiment
from rankmap.services.templates import render_template
from rankmap.utils.paths import default_output_root, ensure_dir

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
REPORT_NAME = "report.md"


def output_directory(config: ExperimentConfig) -> Path:
    """Configured output directory, else ``$RKMP_OUT_DIR/<experiment>``."""
    if config.output_dir is not None:
        return Path(config.output_dir)
    return default_output_root() / str(config.experiment)


def write_table(path: Path, rows: list[dict[str, Any]]) -> Path:
    """Write rows as CSV with full float precision and LF endings."""
    frame = pd.DataFrame(rows)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def config_echo(config: ExperimentConfig) -> dict[str, Any]:
    """JSON-ready configuration without the output location."""
    return config.model_dump(mode="json", exclude={"output_dir"})


def write_matrices(matrices: dict[str, np.ndarray], out_dir: Path) -> list[str]:
    """Write each matrix to ``<out_dir>/<key>.rkmp``; return relative paths."""
    written = []
    for key, matrix in sorted(matrices.items()):
        path = out_dir / f"{key}{matrix_io.BINARY_SUFFIX}"
        ensure_dir(path.parent)
        matrix_io.write_matrix(path, matrix)
        written.append(path.relative_to(out_dir).as_posix())
    return written


def write_results(
    result: ExperimentResult, config: ExperimentConfig, out_dir: Path
) -> list[str]:
    """Write matrices, tables, manifest and report; return the sorted artifact list."""
    out_dir = ensure_dir(out_dir)
    artifacts = write_matrices(result.matrices, out_dir)

    tables_dir = ensure_dir(out_dir / "tables")
    for name, rows in sorted(result.tables.items()):
        path = write_table(tables_dir / f"{name}.csv", rows)
        artifacts.append(path.relative_to(out_dir).as_posix())

    artifacts = sorted(artifacts + [REPORT_NAME])
    manifest = {
        "rankmap_version": __version__,
        "experiment": result.experiment_name,
        "seeds": list(config.seeds),
        "config": config_echo(config),
        "summary": result.summary,
        "notes": result.notes,
        "artifacts": artifacts,
    }
    (out_dir / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    report = render_template(
        "run_report.md.j2",
        {
            "experiment": result.experiment_name,
            "version": __version__,
            "seeds": config.seeds,
            "ranks": config.ranks,
            "tasks": [str(task) for task in config.tasks],
            "form": str(config.form),
            "summary": result.summary,
            "tables": {name: len(rows) for name, rows in sorted(result.tables.items())},
            "notes": result.notes,
            "artifacts": artifacts,
        },
    )
    (out_dir / REPORT_NAME).write_text(report, encoding="utf-8")
    logger.info("wrote %d artifacts to %s", len(artifacts), out_dir)
    return artifacts


def run_experiment(config: ExperimentConfig) -> tuple[ExperimentResult, Path]:
    """Run the configured pipeline and write its artifacts."""
    out_dir = output_directory(config)
    result = create_experiment(config).run()
    write_results(result, config, out_dir)
    return result, out_dir
