import json
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, select_autoescape

from .utils import ParseError

BASE_PATH = Path(__file__).resolve().parent
templates = Environment(
    loader=FileSystemLoader(str(BASE_PATH / "templates")),
    autoescape=select_autoescape(["html"]),
)


def render_report(summary, title="Hybrid switch scheduling results"):
    """Render a sweep summary document (as written to summary.json) to HTML."""
    try:
        config, cells = summary["config"], summary["cells"]
    except (KeyError, TypeError) as e:
        raise ParseError(f"not a sweep summary: {e}") from e
    return templates.get_template("report.html").render(title=title, config=config, cells=cells)


def write_report(summary_path, out_path=None):
    """Render summary.json next to itself (or to out_path) and return the path."""
    summary_path = Path(summary_path)
    try:
        summary = json.loads(summary_path.read_text())
    except OSError as e:
        raise ParseError(f"cannot read summary {summary_path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"bad summary JSON in {summary_path}: {e}") from e
    out_path = Path(out_path) if out_path else summary_path.with_suffix(".html")
    out_path.write_text(render_report(summary))
    return out_path
