from pathlib import Path

from jinja2 import Environment, FileSystemLoader, StrictUndefined, Template

TEMPLATES_DIR = Path(__file__).resolve().parent.parent / "templates"


def get_template(template_path: str) -> Template:
    """
    Get a Jinja2 template from the package templates directory.

    Args:
        template_path: The path to the template relative to the templates directory

    Returns:
        A Jinja2 template object
    """
    env = Environment(
        loader=FileSystemLoader(str(TEMPLATES_DIR)),
        undefined=StrictUndefined,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
    )
    env.filters["metric"] = format_metric
    return env.get_template(template_path)


def format_metric(value: float, digits: int = 4) -> str:
    """Fixed-point number, with 'inf'/'nan' spelled out."""
    if value != value:
        return "nan"
    if value in (float("inf"), float("-inf")):
        return "inf" if value > 0 else "-inf"
    return f"{value:.{digits}f}"
