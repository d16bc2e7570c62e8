"""Minimal SVG line/point charts with error bars."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#e6a800", "#2ca02c", "#9467bd", "#8c564b")
WIDTH, HEIGHT = 640, 420
MARGIN = dict(left=70, right=150, top=40, bottom=55)


@dataclass
class Series:
    name: str
    x: Sequence[float]
    y: Sequence[float]
    err: Optional[Sequence[float]] = None
    style: str = "points"  # points | line | dashed
    color: Optional[str] = None


@dataclass
class Chart:
    title: str
    xlabel: str
    ylabel: str
    logy: bool = False
    series: List[Series] = field(default_factory=list)

    def add(self, *args, **kwargs) -> Series:
        s = Series(*args, **kwargs)
        self.series.append(s)
        return s

    def _yrange(self):
        lo, hi = math.inf, -math.inf
        for s in self.series:
            for i, y in enumerate(s.y):
                e = s.err[i] if s.err is not None else 0.0
                if not math.isfinite(y):
                    continue
                e = e if math.isfinite(e) else 0.0
                lo, hi = min(lo, y - e), max(hi, y + e)
        if self.logy:
            lo = min(y for s in self.series for y in s.y if y > 0)
            return math.log10(lo) - 0.1, math.log10(hi) + 0.1
        if lo == hi:
            lo, hi = lo - 1, hi + 1
        pad = 0.05 * (hi - lo)
        return lo - pad, hi + pad

    def render(self) -> str:
        xs = [x for s in self.series for x in s.x]
        x0, x1 = min(xs), max(xs)
        if x0 == x1:
            x0, x1 = x0 - 1, x1 + 1
        y0, y1 = self._yrange()
        pw = WIDTH - MARGIN["left"] - MARGIN["right"]
        ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

        def px(x):
            return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

        def py(y):
            if self.logy:
                y = math.log10(max(y, 1e-300))
            return MARGIN["top"] + (1 - (y - y0) / (y1 - y0)) * ph

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
               f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
               f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
               f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">{escape(self.title)}</text>']
        L, T, B = MARGIN["left"], MARGIN["top"], MARGIN["top"] + ph
        out.append(f'<rect x="{L}" y="{T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
        for i in range(6):
            xv = x0 + (x1 - x0) * i / 5
            out.append(f'<line x1="{px(xv):.1f}" y1="{B}" x2="{px(xv):.1f}" y2="{B + 5}" stroke="black"/>')
            out.append(f'<text x="{px(xv):.1f}" y="{B + 18}" text-anchor="middle">{xv:.3g}</text>')
            yv = y0 + (y1 - y0) * i / 5
            ypix = MARGIN["top"] + (1 - i / 5) * ph
            label = f"{10**yv:.3g}" if self.logy else f"{yv:.3g}"
            out.append(f'<line x1="{L - 5}" y1="{ypix:.1f}" x2="{L}" y2="{ypix:.1f}" stroke="black"/>')
            out.append(f'<text x="{L - 8}" y="{ypix + 4:.1f}" text-anchor="end">{label}</text>')
        out.append(f'<text x="{L + pw / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text x="16" y="{T + ph / 2:.1f}" text-anchor="middle" '
                   f'transform="rotate(-90 16 {T + ph / 2:.1f})">{escape(self.ylabel)}</text>')
        for k, s in enumerate(self.series):
            c = s.color or PALETTE[k % len(PALETTE)]
            pts = [(px(x), py(y)) for x, y in zip(s.x, s.y) if math.isfinite(y) and (y > 0 or not self.logy)]
            if s.style in ("line", "dashed") and len(pts) > 1:
                dash = ' stroke-dasharray="6,4"' if s.style == "dashed" else ""
                path = " ".join(f"{a:.1f},{b:.1f}" for a, b in pts)
                out.append(f'<polyline points="{path}" fill="none" stroke="{c}" stroke-width="1.5"{dash}/>')
            if s.style == "points":
                for (a, b) in pts:
                    out.append(f'<circle cx="{a:.1f}" cy="{b:.1f}" r="3.5" fill="{c}"/>')
            if s.err is not None:
                for x, y, e in zip(s.x, s.y, s.err):
                    if not (math.isfinite(y) and math.isfinite(e)):
                        continue
                    xa, ya, yb = px(x), py(y + e), py(max(y - e, 1e-300) if self.logy else y - e)
                    out.append(f'<line x1="{xa:.1f}" y1="{ya:.1f}" x2="{xa:.1f}" y2="{yb:.1f}" stroke="#d62728"/>')
                    for yy in (ya, yb):
                        out.append(f'<line x1="{xa - 4:.1f}" y1="{yy:.1f}" x2="{xa + 4:.1f}" y2="{yy:.1f}" '
                                   f'stroke="#d62728"/>')
            ly = T + 14 + 18 * k
            lx = L + pw + 12
            out.append(f'<rect x="{lx}" y="{ly - 9}" width="12" height="10" fill="{c}"/>')
            out.append(f'<text x="{lx + 18}" y="{ly}">{escape(s.name)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"
