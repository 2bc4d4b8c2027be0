"""Path utilities for rankmap."""

import os
from pathlib import Path

OUT_DIR_ENV = "RKMP_OUT_DIR"
DEFAULT_OUT_DIR = "rankmap-out"


def ensure_dir(path: str | Path, parents: bool = True) -> Path:
    """Ensure directory exists.

    Args:
        path: Directory path
        parents: Create parent directories if needed

    Returns:
        Path object for directory
    """
    dir_path = Path(path)
    dir_path.mkdir(parents=parents, exist_ok=True)
    return dir_path


def default_output_root() -> Path:
    """Output root from ``RKMP_OUT_DIR``, falling back to ./rankmap-out."""
    return Path(os.environ.get(OUT_DIR_ENV, DEFAULT_OUT_DIR))


def map_filename(prefix: str, task: str, form: str, rank: int) -> str:
    """File name for a fitted map artifact, e.g. ``A_inverse_linear_r25.rkmp``."""
    return f"{prefix}_{task}_{form}_r{rank}.rkmp"
