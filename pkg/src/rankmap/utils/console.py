"""Rich console and logging utilities for rankmap."""

import logging

from rich.console import Console
from rich.logging import RichHandler

# Global console instance
console = Console()


def configure_logging(verbose: bool = False) -> None:
    """Route library logging through a rich handler.

    Args:
        verbose: Emit DEBUG records instead of WARNING and above
    """
    level = logging.DEBUG if verbose else logging.WARNING
    handler = RichHandler(console=Console(stderr=True), show_path=False, markup=False)
    logger = logging.getLogger("rankmap")
    logger.handlers.clear()
    logger.addHandler(handler)
    logger.setLevel(level)
    logger.propagate = False


def info(message: str) -> None:
    """Print info message."""
    console.print(f"[blue]ℹ[/blue] {message}")


def success(message: str) -> None:
    """Print success message."""
    console.print(f"[green]✓[/green] {message}")


def warn(message: str) -> None:
    """Print warning message."""
    console.print(f"[yellow]⚠[/yellow] {message}")
