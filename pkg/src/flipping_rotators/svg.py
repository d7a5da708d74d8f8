"""Static SVG rendering from CSV/JSONL text.

Every function here takes the text that the CLI already wrote to disk, so a
figure is a pure function of its data file.
"""

from __future__ import annotations

import csv
import io
import json
import math
from typing import Optional, Sequence

from .lattice import SiteCoord, embed

_COLORS = ("#1f4e79", "#c0392b", "#2e7d32", "#8e44ad")


def _num(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _viewbox(xs: Sequence[float], ys: Sequence[float], margin: float = 0.05):
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    w = max(x1 - x0, 1e-9)
    h = max(y1 - y0, 1e-9)
    mx, my = w * margin, h * margin
    return x0 - mx, y0 - my, w + 2 * mx, h + 2 * my


def _header(vb, width: int = 800) -> list[str]:
    x, y, w, h = vb
    height = max(1, int(round(width * h / w)))
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{_num(x)} {_num(y)} {_num(w)} {_num(h)}">',
    ]


def trajectory_svg(trajectory_csv: str, events_jsonl: Optional[str] = None) -> str:
    """Trajectory polyline in lattice coordinates with diamonds at reflector bases.

    ``trajectory_csv`` has columns ``t,a,b,sub,x,y``; the y axis is flipped so
    the picture has the usual orientation.
    """
    rows = list(csv.DictReader(io.StringIO(trajectory_csv)))
    if not rows:
        raise ValueError("trajectory CSV has no rows")
    pts = [(float(r["x"]), -float(r["y"])) for r in rows]
    bases = []
    if events_jsonl:
        seen = set()
        for line in events_jsonl.splitlines():
            if not line.strip():
                continue
            ev = json.loads(line)
            if ev["kind"] != "ReflectorConfirmed" or ev["base"] is None:
                continue
            b = ev["base"]
            site = SiteCoord(b["a"], b["b"], "AB".index(b["sub"]))
            if site not in seen:
                seen.add(site)
                x, y = embed(site)
                bases.append((x, -y))
    xs = [p[0] for p in pts] + [b[0] for b in bases]
    ys = [p[1] for p in pts] + [b[1] for b in bases]
    vb = _viewbox(xs, ys)
    stroke = max(vb[2], vb[3]) / 800
    out = _header(vb)
    out.append(f'<polyline fill="none" stroke="{_COLORS[0]}" stroke-width="{_num(stroke)}" '
               f'stroke-linejoin="round" points="'
               + " ".join(f"{_num(x)},{_num(y)}" for x, y in pts) + '"/>')
    r = 0.45
    for x, y in bases:
        out.append(f'<path d="M {_num(x)} {_num(y - r)} L {_num(x + r)} {_num(y)} '
                   f'L {_num(x)} {_num(y + r)} L {_num(x - r)} {_num(y)} Z" '
                   f'fill="{_COLORS[1]}" stroke="none"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def series_svg(series_csv: str, x_column: Optional[str] = None,
               y_columns: Optional[Sequence[str]] = None, log: bool = False) -> str:
    """Line chart of numeric CSV columns against the first (or ``x_column``)."""
    reader = csv.DictReader(io.StringIO(series_csv))
    names = reader.fieldnames or []
    rows = list(reader)
    if not rows or len(names) < 2:
        raise ValueError("series CSV needs a header and at least one data row")
    xc = x_column or names[0]
    ycs = list(y_columns) if y_columns else [n for n in names if n != xc][:1]

    def value(s: str) -> Optional[float]:
        try:
            v = float(s)
        except ValueError:
            return None
        if not math.isfinite(v) or (log and v <= 0):
            return None
        return math.log10(v) if log else v

    raw = []
    for yc in ycs:
        pts = [(value(r[xc]), value(r[yc])) for r in rows]
        raw.append([(x, y) for x, y in pts if x is not None and y is not None])
    allpts = [p for ln in raw for p in ln]
    if not allpts:
        raise ValueError("no plottable values")
    # data are scaled into an 800 x 500 box so charts keep a fixed aspect
    x0, x1 = min(p[0] for p in allpts), max(p[0] for p in allpts)
    y0, y1 = min(p[1] for p in allpts), max(p[1] for p in allpts)
    sx = 800.0 / max(x1 - x0, 1e-12)
    sy = 500.0 / max(y1 - y0, 1e-12)
    lines = [[((x - x0) * sx, (y0 - y) * sy) for x, y in ln] for ln in raw]
    vb = _viewbox([0.0, 800.0], [-500.0, 0.0])
    out = _header(vb)
    for k, ln in enumerate(lines):
        out.append(f'<polyline fill="none" stroke="{_COLORS[k % len(_COLORS)]}" '
                   f'stroke-width="1.5" vector-effect="non-scaling-stroke" points="'
                   + " ".join(f"{_num(x)},{_num(y)}" for x, y in ln) + '"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
