"""Plot-ready output from result CSVs: gnuplot data blocks or a static SVG line chart."""
from __future__ import annotations

import csv
import logging
import math
from collections import OrderedDict

log = logging.getLogger(__name__)

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


class ColumnError(KeyError):
    pass


def load_series(path, x: str | None = None, y: str | None = None,
                group: str | None = None) -> "OrderedDict[str, list[tuple[float, float]]]":
    """Group rows of a CSV into ``{key: [(x, y), ...]}``.

    With no ``x``/``y`` given, the first two columns are used.  Rows whose
    values do not parse as numbers are skipped.
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        rows = list(reader)
    if not cols:
        return OrderedDict()
    x = x or cols[0]
    y = y or (cols[1] if len(cols) > 1 else None)
    for c in (x, y, group):
        if c is not None and c not in cols:
            raise ColumnError(f"column {c!r} not in {path} (have {', '.join(cols)})")
    if y is None:
        raise ColumnError(f"{path} has a single column; need an x and a y column")
    out: OrderedDict[str, list[tuple[float, float]]] = OrderedDict()
    for r in rows:
        try:
            xv, yv = float(r[x]), float(r[y])
        except (TypeError, ValueError):
            continue
        out.setdefault(r[group] if group else y, []).append((xv, yv))
    return out


def gnuplot_blocks(series) -> str:
    """Blank-line separated blocks, each headed by a comment with its key."""
    parts = []
    for key, pts in series.items():
        lines = [f"# {key}"] + [f"{a!r} {b!r}" for a, b in pts]
        parts.append("\n".join(lines))
    return "\n\n\n".join(parts) + ("\n" if parts else "")


def svg_chart(series, width: int = 640, height: int = 400, title: str = "") -> str:
    pad = 50
    pts = [p for s in series.values() for p in s]
    if pts:
        xs, ys = [p[0] for p in pts], [p[1] for p in pts]
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
    else:
        x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
    if x1 == x0:
        x1 = x0 + 1
    if y1 == y0:
        y1 = y0 + 1
    sx = lambda v: pad + (v - x0) / (x1 - x0) * (width - 2 * pad)
    sy = lambda v: height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
           f'<text x="{pad}" y="{height - pad + 20}" font-size="11">{_fmt(x0)}</text>',
           f'<text x="{width - pad}" y="{height - pad + 20}" font-size="11" text-anchor="end">{_fmt(x1)}</text>',
           f'<text x="{pad - 5}" y="{height - pad}" font-size="11" text-anchor="end">{_fmt(y0)}</text>',
           f'<text x="{pad - 5}" y="{pad + 4}" font-size="11" text-anchor="end">{_fmt(y1)}</text>']
    if title:
        out.append(f'<text x="{width / 2}" y="20" font-size="13" text-anchor="middle">{title}</text>')
    for i, (key, s) in enumerate(series.items()):
        color = _COLORS[i % len(_COLORS)]
        path = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in s)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{path}"/>')
        out.append(f'<text x="{width - pad + 4}" y="{pad + 14 * i}" font-size="11" fill="{color}">{key}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _fmt(v: float) -> str:
    return f"{v:.4g}" if math.isfinite(v) else str(v)


def emit_plot_data(path, x: str | None = None, y: str | None = None, group: str | None = None,
                   fmt: str = "gnuplot", title: str = "") -> str:
    series = load_series(path, x, y, group)
    if not series:
        log.warning("%s has no plottable rows; emitting an empty plot", path)
    if fmt == "gnuplot":
        return gnuplot_blocks(series)
    if fmt == "svg":
        return svg_chart(series, title=title)
    raise ValueError(f"unknown plot format {fmt!r}")
