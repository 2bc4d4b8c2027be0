"""Utility modules for rankmap."""

from .console import console, info, success, warn
from .paths import ensure_dir

__all__ = [
    "console",
    "info",
    "success",
    "warn",
    "ensure_dir",
]
