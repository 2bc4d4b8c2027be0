"""Template rendering service for rankmap."""

from pathlib import Path
from typing import Any

from jinja2 import Environment, FileSystemLoader, TemplateError

from rankmap.utils.errors import RankmapError


def get_template_path() -> Path:
    """Get the path to the packaged templates directory.

    Raises:
        RankmapError: If the templates directory is missing
    """
    import rankmap

    templates_path = Path(rankmap.__file__).parent / "templates"
    if not templates_path.exists():
        raise RankmapError(
            f"Templates directory not found at {templates_path}",
            hint="Ensure rankmap is properly installed",
        )
    return templates_path


def render_template(template_name: str, context: dict[str, Any]) -> str:
    """Render a Jinja2 template with given context.

    Args:
        template_name: Template filename (e.g., "run_report.md.j2")
        context: Template context variables

    Returns:
        Rendered template content

    Raises:
        RankmapError: If the template is missing or fails to render
    """
    env = Environment(
        loader=FileSystemLoader(get_template_path()),
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
    )
    try:
        return env.get_template(template_name).render(**context)
    except TemplateError as e:
        raise RankmapError(
            f"Failed to render template {template_name}: {e}",
            hint="Check template syntax and context variables",
        ) from e
