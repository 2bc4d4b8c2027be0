"""Named experiment presets.

Each preset is a plain mapping so that ``--config`` files can override it
key by key before validation.
"""

import copy
from typing import Any

from rankmap.core.models import Preset

# Ranks 25, 50, ..., 775 of the imaging sweep
IMAGING_SWEEP_RANKS = list(range(25, 776, 25))

_PRESETS: dict[Preset, dict[str, Any]] = {
    Preset.PAPER_IMAGING: {
        "experiment": "imaging",
        "tasks": ["forward", "inverse"],
        "form": "linear",
        "ranks": IMAGING_SWEEP_RANKS,
        "blur": {"image_side": 28, "kernel_side": 5, "kernel_std": 1.5},
        "images": {"train_count": 5000, "test_count": 1000, "smoothness": 2.0},
        "noise_std": 0.05,
        "training": {"epochs": 200, "learning_rate": 1e-3, "batch_size": 64},
    },
    Preset.DESK_IMAGING: {
        "experiment": "imaging",
        "tasks": ["forward", "inverse"],
        "form": "linear",
        "ranks": [25, 50, 75, 100, 125, 150, 175, 200],
        "blur": {"image_side": 28, "kernel_side": 5, "kernel_std": 1.5},
        "images": {"train_count": 400, "test_count": 100, "smoothness": 2.0},
        "noise_std": 0.05,
        "training": {"epochs": 200, "learning_rate": 1e-3},
    },
    Preset.PAPER_SWE: {
        "experiment": "swe",
        "tasks": ["inverse"],
        "form": "linear",
        "ranks": [250],
        "swe": {
            "params": {"grid": [64, 64], "cfl_fraction": 0.1},
            "steps": 1500,
            "train_per_family": 2500,
            "test_per_family": 500,
            "ood_per_family": 500,
            "ridge": 1e-2,
            "factor_strategy": "cholesky-with-ridge",
        },
        "training": {"epochs": 150, "learning_rate": 1e-3, "batch_size": 64},
    },
    Preset.DESK_SWE: {
        "experiment": "swe",
        "tasks": ["inverse"],
        "form": "linear",
        "ranks": [64],
        "swe": {
            "params": {"grid": [16, 16], "cfl_fraction": 0.1},
            "steps": 300,
            "train_per_family": 50,
            "test_per_family": 25,
            "ood_per_family": 25,
            "ridge": 1e-2,
            "factor_strategy": "cholesky-with-ridge",
        },
        "training": {"epochs": 200, "learning_rate": 1e-3},
    },
    Preset.PAPER_FINANCE: {
        "experiment": "finance",
        "tasks": ["autoencode"],
        "form": "affine",
        "ranks": [3],
        "seeds": list(range(20)),
        "market": {
            "days": 2000,
            "assets": 10,
            "factors": 3,
            "garch_omega": 0.01,
            "garch_alpha": 0.1,
            "garch_beta": 0.85,
        },
        "train_fraction": 0.8,
        "nonlinear_hidden": 16,
        "training": {"epochs": 150, "learning_rate": 1e-3, "batch_size": 64, "affine": True},
    },
    Preset.DESK_FINANCE: {
        "experiment": "finance",
        "tasks": ["autoencode"],
        "form": "affine",
        "ranks": [3],
        "seeds": [0, 1, 2],
        "market": {"days": 2000, "assets": 10, "factors": 3},
        "train_fraction": 0.8,
        "training": {"epochs": 150, "learning_rate": 1e-3, "affine": True},
    },
}


def preset_config(preset: Preset | str) -> dict[str, Any]:
    """Return a fresh copy of a preset's raw configuration."""
    return copy.deepcopy(_PRESETS[Preset(preset)])


def preset_names() -> list[str]:
    """All preset names, for CLI choices."""
    return [preset.value for preset in Preset]
