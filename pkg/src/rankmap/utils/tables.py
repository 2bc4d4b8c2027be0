"""Shared table rendering utilities."""

from typing import Any

from rich.table import Table

from rankmap.utils.console import console


def _format(value: Any) -> str:
    if value is None:
        return "[dim]-[/dim]"
    if isinstance(value, bool):
        return "Y" if value else "N"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def render_rows(rows: list[dict[str, Any]], title: str, title_style: str = "cyan") -> None:
    """Render result rows as a table, one column per key of the first row.

    Args:
        rows: Result rows
        title: Table title
        title_style: Color style for title
    """
    if not rows:
        return

    table = Table(title=title, style=title_style, show_header=True)
    columns = list(dict.fromkeys(key for row in rows for key in row))
    for column in columns:
        justify = "right" if isinstance(rows[0].get(column), int | float) else "left"
        table.add_column(column, justify=justify)
    for row in rows:
        table.add_row(*(_format(row.get(column)) for column in columns))

    console.print(table)


def render_summary(summary: dict[str, float], title: str) -> None:
    """Render headline numbers as a two-column table."""
    if not summary:
        return
    table = Table(title=title, style="cyan", show_header=True)
    table.add_column("Quantity", style="cyan")
    table.add_column("Value", justify="right")
    for name, value in summary.items():
        table.add_row(name, _format(value))
    console.print(table)
