from __future__ import annotations

import datetime as dt
import logging
import math
from io import BytesIO
from pathlib import Path
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from markdown import markdown
from reportlab.graphics import renderSVG
from reportlab.graphics.charts.lineplots import LinePlot
from reportlab.graphics.shapes import Drawing, String
from reportlab.lib import colors
from xhtml2pdf import pisa

from qhx.core.errors import QhxError

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12g"
PALETTE = (colors.HexColor("#1F4E79"), colors.HexColor("#C55A11"), colors.HexColor("#548235"), colors.HexColor("#7030A0"))

Curve = Tuple[Sequence[float], Sequence[float]]


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info("wrote %s (%d rows)", path, len(frame))
    return path


def _log10_points(x: Sequence[float], y: Sequence[float]):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    keep = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    return [(float(a), float(b)) for a, b in zip(np.log10(x[keep]), np.log10(y[keep]))]


def loglog_svg(curves: Mapping[str, Curve], path: Path, title: str = "", xlabel: str = "", ylabel: str = "") -> Optional[Path]:
    """Log-log line plot of each named curve; non-positive points are dropped."""
    data = {name: _log10_points(x, y) for name, (x, y) in curves.items()}
    data = {name: pts for name, pts in data.items() if len(pts) >= 2}
    if not data:
        logger.warning("nothing to plot for %s", path)
        return None
    drawing = Drawing(480, 340)
    plot = LinePlot()
    plot.x, plot.y, plot.width, plot.height = 60, 50, 300, 240
    plot.data = list(data.values())
    for j, _ in enumerate(data):
        plot.lines[j].strokeColor = PALETTE[j % len(PALETTE)]
        plot.lines[j].strokeWidth = 1.2
    drawing.add(plot)
    drawing.add(String(240, 318, title, textAnchor="middle", fontSize=12))
    drawing.add(String(210, 18, f"log10 {xlabel}".strip(), textAnchor="middle", fontSize=9))
    drawing.add(String(14, 170, f"log10 {ylabel}".strip(), fontSize=9))
    for j, name in enumerate(data):
        drawing.add(String(372, 280 - 14 * j, name, fontSize=9, fillColor=PALETTE[j % len(PALETTE)]))
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    renderSVG.drawToFile(drawing, str(path))
    return path


def _cell(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "-"
        return f"{value:.6g}"
    return str(value)


def frame_to_markdown(frame: pd.DataFrame, max_rows: int = 40) -> str:
    head = frame.head(max_rows)
    lines = ["| " + " | ".join(str(c) for c in head.columns) + " |", "|" + "---|" * len(head.columns)]
    for row in head.itertuples(index=False):
        lines.append("| " + " | ".join(_cell(v) for v in row) + " |")
    if len(frame) > max_rows:
        lines.append(f"\n_{len(frame) - max_rows} more rows in the CSV._")
    return "\n".join(lines)


def make_markdown_report(command: str, params: Mapping[str, object], tables: Dict[str, pd.DataFrame], summary: str = "") -> str:
    ts = dt.datetime.now().strftime("%Y-%m-%d %H:%M")
    lines = [f"# qhx {command} - run report", f"_Generated: {ts}_", ""]
    lines += ["## Parameters"]
    lines += [f"- **{key}**: {value}" for key, value in params.items()]
    lines.append("")
    if summary:
        lines += ["## Outcome", summary, ""]
    for name, frame in tables.items():
        lines += [f"## {name}", frame_to_markdown(frame), ""]
    return "\n".join(lines)


def make_pdf_report(command: str, params: Mapping[str, object], tables: Dict[str, pd.DataFrame], summary: str = "") -> bytes:
    markdown_body = make_markdown_report(command, params, tables, summary)
    html = markdown(markdown_body, extensions=["extra", "tables", "sane_lists"], output_format="html5")
    template = (
        "<html><head><meta charset='utf-8' />"
        "<style>"
        "body { font-family: 'Helvetica', sans-serif; line-height: 1.4; font-size: 10pt; }"
        "h1, h2 { color: #1F4E79; margin-top: 1.0em; }"
        "table { width: 100%; border-collapse: collapse; margin: 0.6em 0; }"
        "th, td { border: 1px solid #ccc; padding: 4px; text-align: right; }"
        "</style>"
        "</head><body>"
        f"{html}"
        "</body></html>"
    )
    buffer = BytesIO()
    result = pisa.CreatePDF(src=template, dest=buffer, encoding="utf-8")
    if result.err:
        raise QhxError("could not render the markdown report as PDF")
    buffer.seek(0)
    return buffer.read()


def write_report(path: Path, command: str, params: Mapping[str, object], tables: Dict[str, pd.DataFrame], summary: str = "") -> Path:
    """Markdown or PDF depending on the suffix of ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() == ".pdf":
        path.write_bytes(make_pdf_report(command, params, tables, summary))
    else:
        path.write_text(make_markdown_report(command, params, tables, summary), encoding="utf-8")
    logger.info("report written to %s", path)
    return path
