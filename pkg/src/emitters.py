"""
Emitters Module for rf-SQUID Escape Simulator
Handles CSV and SVG output of sweep rows and reading CSV files back.
"""

import csv
import logging
import math
import xml.etree.ElementTree as ET
from dataclasses import fields
from typing import Dict, List, Sequence, Type

from src.sweep_runner import LevelRow, SweepRow

logger = logging.getLogger(__name__)

UNITS: Dict[str, str] = {
    "phi_x": "1", "nu": "Hz",
    "E_f1": "J", "E_f2": "J", "E_0": "J", "E_L": "J", "E_R": "J",
    "f1_GHz": "GHz", "f2_GHz": "GHz", "hyperbola_f1_GHz": "GHz", "hyperbola_f2_GHz": "GHz",
    "gamma1": "1/s", "gamma2": "1/s", "rho_f1": "1", "rho_f2": "1",
    "W": "1/s", "W_osc": "1/s", "flags": "",
}

SVG_WIDTH = 800
SVG_HEIGHT = 500
SVG_MARGIN = 70


def _format(value) -> str:
    if isinstance(value, float):
        return format(value, ".16e") if math.isfinite(value) else str(value)
    return str(value)


def emit_csv(rows: Sequence, path: str) -> None:
    """
    Write rows as CSV: one units comment line, a header of field names, one line per row.

    Args:
        rows: SweepRow or LevelRow instances of a single type
        path: output file path
    """
    if not rows:
        raise ValueError("no rows to write")
    names = [f.name for f in fields(rows[0])]
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write("# units: " + ", ".join(f"{n}[{UNITS.get(n, '')}]" for n in names) + "\r\n")
            writer = csv.writer(handle)
            writer.writerow(names)
            for row in rows:
                writer.writerow([_format(getattr(row, n)) for n in names])
    except OSError as e:
        raise OSError(f"cannot write CSV {path}: {e}") from e
    logger.info(f"wrote {len(rows)} rows to {path}")


def read_csv(path: str, row_type: Type = SweepRow) -> List:
    """
    Read a CSV written by emit_csv.

    Args:
        path: input file path
        row_type: SweepRow or LevelRow; detected from the header when they differ

    Returns:
        List of rows
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as handle:
            lines = [line for line in handle if not line.startswith("#")]
    except OSError as e:
        raise OSError(f"cannot read CSV {path}: {e}") from e
    reader = csv.reader(lines)
    header = next(reader)
    for candidate in (row_type, SweepRow, LevelRow):
        if header == [f.name for f in fields(candidate)]:
            row_type = candidate
            break
    else:
        raise ValueError(f"{path}: unrecognised header {header}")
    kinds = {f.name: f.type for f in fields(row_type)}
    rows = []
    for record in reader:
        values = {name: (text if kinds[name] in (str, "str") else float(text)) for name, text in zip(header, record)}
        rows.append(row_type(**values))
    return rows


def emit_svg(rows: Sequence[SweepRow], path: str, x: str = "phi_x", y: str = "W") -> None:
    """
    Write a single-polyline SVG plot of one column against another.

    Args:
        rows: rows in ascending x order
        path: output file path
        x: column on the horizontal axis
        y: column on the vertical axis
    """
    points = [(getattr(r, x), getattr(r, y)) for r in rows]
    points = [(a, b) for a, b in points if math.isfinite(a) and math.isfinite(b)]
    if not points:
        raise ValueError("no finite points to plot")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(0.0, min(ys)), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0
    plot_w = SVG_WIDTH - 2 * SVG_MARGIN
    plot_h = SVG_HEIGHT - 2 * SVG_MARGIN

    def sx(value: float) -> float:
        return SVG_MARGIN + (value - x_lo) / x_span * plot_w

    def sy(value: float) -> float:
        return SVG_HEIGHT - SVG_MARGIN - (value - y_lo) / y_span * plot_h

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", version="1.1",
                     width=str(SVG_WIDTH), height=str(SVG_HEIGHT))
    axes = ET.SubElement(svg, "g", stroke="black", fill="none")
    ET.SubElement(axes, "line", x1=str(SVG_MARGIN), y1=str(SVG_HEIGHT - SVG_MARGIN),
                  x2=str(SVG_WIDTH - SVG_MARGIN), y2=str(SVG_HEIGHT - SVG_MARGIN))
    ET.SubElement(axes, "line", x1=str(SVG_MARGIN), y1=str(SVG_MARGIN),
                  x2=str(SVG_MARGIN), y2=str(SVG_HEIGHT - SVG_MARGIN))
    ET.SubElement(svg, "polyline", fill="none", stroke="steelblue",
                  points=" ".join(f"{sx(a):.3f},{sy(b):.3f}" for a, b in points))
    labels = ET.SubElement(svg, "g", attrib={"font-family": "sans-serif", "font-size": "14"})
    ET.SubElement(labels, "text", x=str(SVG_WIDTH // 2), y=str(SVG_HEIGHT - 20),
                  attrib={"text-anchor": "middle"}).text = f"{x} [{UNITS.get(x, '')}]"
    ET.SubElement(labels, "text", x="20", y=str(SVG_HEIGHT // 2),
                  transform=f"rotate(-90 20 {SVG_HEIGHT // 2})",
                  attrib={"text-anchor": "middle"}).text = f"{y} [{UNITS.get(y, '')}]"
    for value, anchor_x in ((x_lo, SVG_MARGIN), (x_hi, SVG_WIDTH - SVG_MARGIN)):
        ET.SubElement(labels, "text", x=str(anchor_x), y=str(SVG_HEIGHT - SVG_MARGIN + 20),
                      attrib={"text-anchor": "middle"}).text = f"{value:.6g}"
    ET.SubElement(labels, "text", x=str(SVG_MARGIN - 5), y=str(SVG_MARGIN),
                  attrib={"text-anchor": "end"}).text = f"{y_hi:.3e}"
    try:
        ET.ElementTree(svg).write(path, encoding="utf-8", xml_declaration=True)
    except OSError as e:
        raise OSError(f"cannot write SVG {path}: {e}") from e
    logger.info(f"wrote SVG plot to {path}")
