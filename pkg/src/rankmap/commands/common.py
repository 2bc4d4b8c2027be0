"""Options and error handling shared by the experiment commands."""

import functools
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, NoReturn

import click

from rankmap.core.config import parse_ranks, resolve_config
from rankmap.core.models import ExperimentConfig
from rankmap.core.presets import preset_names
from rankmap.utils.console import console
from rankmap.utils.errors import ConfigurationError, RankmapError, display_error

EXIT_FAILURE = 1
EXIT_CONFIG = 2


def _raising_module(e: BaseException) -> str | None:
    """Module of the innermost frame that raised ``e``."""
    tb = e.__traceback__
    if tb is None:
        return None
    while tb.tb_next is not None:
        tb = tb.tb_next
    return tb.tb_frame.f_globals.get("__name__")


def fail(e: Exception) -> NoReturn:
    """Display an error and exit: 2 for configuration errors, 1 otherwise."""
    display_error(e)
    if isinstance(e, ConfigurationError):
        sys.exit(EXIT_CONFIG)
    module = _raising_module(e)
    if module:
        console.print(f"[dim]Raised in {module}[/dim]")
    sys.exit(EXIT_FAILURE)


def config_options(command: Callable[..., Any]) -> Callable[..., Any]:
    """Attach --preset/--config/--seed/--ranks/--out to a command."""
    options = [
        click.option(
            "--preset",
            type=click.Choice(preset_names()),
            help="Start from a named preset",
        ),
        click.option(
            "--config",
            "config_path",
            type=click.Path(exists=True, dir_okay=False, path_type=Path),
            help="YAML or JSON configuration (overrides the preset key by key)",
        ),
        click.option("--seed", type=int, help="Run a single seed instead of the configured list"),
        click.option("--ranks", help="Comma-separated ranks, e.g. 25,50,100"),
        click.option(
            "--out",
            "out_dir",
            type=click.Path(file_okay=False, path_type=Path),
            help="Output directory (default: $RKMP_OUT_DIR/<experiment>)",
        ),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def load_config(
    preset: str | None,
    config_path: Path | None,
    seed: int | None,
    ranks: str | None,
    out_dir: Path | None,
    overrides: dict[str, Any] | None = None,
) -> ExperimentConfig:
    """Resolve the command-line configuration, exiting with code 2 when invalid."""
    try:
        return resolve_config(
            preset=preset,
            config_path=config_path,
            seed=seed,
            ranks=parse_ranks(ranks) if ranks else None,
            output_dir=out_dir,
            overrides=overrides,
        )
    except ConfigurationError as e:
        fail(e)


def handle_errors(command: Callable[..., Any]) -> Callable[..., Any]:
    """Turn RankmapError escapes into a displayed message and exit code."""

    @functools.wraps(command)
    def wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            return command(*args, **kwargs)
        except RankmapError as e:
            fail(e)

    return wrapper
