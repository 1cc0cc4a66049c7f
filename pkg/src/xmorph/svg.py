"""Minimal SVG line-chart writer for accuracy-vs-budget curves.

No plotting dependency: the evaluation reports are small enough that a
hand-rolled chart (mean lines, shaded standard-deviation bands, reference
line, axes, legend) diffs cleanly and renders anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")


@dataclass
class Series:
    label: str
    x: list[float]
    mean: list[float]
    std: list[float] | None = None


@dataclass
class LineChart:
    title: str
    x_label: str
    y_label: str
    series: list[Series] = field(default_factory=list)
    reference: tuple[str, float] | None = None  # horizontal line
    width: int = 640
    height: int = 420
    y_range: tuple[float, float] | None = None

    def _bounds(self):
        xs = [v for s in self.series for v in s.x]
        ys = [v for s in self.series for v in s.mean]
        for s in self.series:
            if s.std:
                ys += [m + d for m, d in zip(s.mean, s.std)]
                ys += [m - d for m, d in zip(s.mean, s.std)]
        if self.reference:
            ys.append(self.reference[1])
        x0, x1 = min(xs), max(xs)
        if self.y_range:
            y0, y1 = self.y_range
        else:
            y0, y1 = min(ys), max(ys)
            pad = 0.05 * max(y1 - y0, 1e-9)
            y0, y1 = y0 - pad, y1 + pad
        if x1 == x0:
            x1 = x0 + 1.0
        return x0, x1, y0, y1

    def render(self) -> str:
        left, right, top, bottom = 64, 20, 40, 52
        pw = self.width - left - right
        ph = self.height - top - bottom
        x0, x1, y0, y1 = self._bounds()

        def px(x):
            return left + pw * (x - x0) / (x1 - x0)

        def py(y):
            return top + ph * (1.0 - (y - y0) / (y1 - y0))

        parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<text x="{self.width / 2:.1f}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{_esc(self.title)}</text>',
        ]

        # Axes with ~5 ticks each.
        parts.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" '
                     'fill="none" stroke="#444"/>')
        for i in range(6):
            ty = y0 + (y1 - y0) * i / 5
            parts.append(f'<line x1="{left - 4}" y1="{py(ty):.1f}" x2="{left}" '
                         f'y2="{py(ty):.1f}" stroke="#444"/>')
            parts.append(f'<text x="{left - 8}" y="{py(ty) + 4:.1f}" '
                         'text-anchor="end" font-family="sans-serif" '
                         f'font-size="10">{ty:.0f}</text>')
            tx = x0 + (x1 - x0) * i / 5
            parts.append(f'<line x1="{px(tx):.1f}" y1="{top + ph}" '
                         f'x2="{px(tx):.1f}" y2="{top + ph + 4}" stroke="#444"/>')
            parts.append(f'<text x="{px(tx):.1f}" y="{top + ph + 16}" '
                         'text-anchor="middle" font-family="sans-serif" '
                         f'font-size="10">{tx:.0f}</text>')
        parts.append(f'<text x="{left + pw / 2:.1f}" y="{self.height - 8}" '
                     'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="12">{_esc(self.x_label)}</text>')
        parts.append(f'<text x="16" y="{top + ph / 2:.1f}" text-anchor="middle" '
                     'font-family="sans-serif" font-size="12" '
                     f'transform="rotate(-90 16 {top + ph / 2:.1f})">'
                     f'{_esc(self.y_label)}</text>')

        if self.reference:
            label, value = self.reference
            parts.append(f'<line x1="{left}" y1="{py(value):.1f}" '
                         f'x2="{left + pw}" y2="{py(value):.1f}" stroke="#777" '
                         'stroke-dasharray="6,4"/>')
            parts.append(f'<text x="{left + pw - 4}" y="{py(value) - 4:.1f}" '
                         'text-anchor="end" font-family="sans-serif" '
                         f'font-size="10" fill="#555">{_esc(label)}</text>')

        for idx, s in enumerate(self.series):
            color = PALETTE[idx % len(PALETTE)]
            if s.std:
                upper = [(px(x), py(m + d)) for x, m, d in zip(s.x, s.mean, s.std)]
                lower = [(px(x), py(m - d)) for x, m, d in
                         zip(reversed(s.x), reversed(s.mean), reversed(s.std))]
                pts = " ".join(f"{a:.1f},{b:.1f}" for a, b in upper + lower)
                parts.append(f'<polygon points="{pts}" fill="{color}" '
                             'opacity="0.15"/>')
            pts = " ".join(f"{px(x):.1f},{py(m):.1f}" for x, m in zip(s.x, s.mean))
            parts.append(f'<polyline points="{pts}" fill="none" '
                         f'stroke="{color}" stroke-width="1.8"/>')
            for x, mn in zip(s.x, s.mean):
                parts.append(f'<circle cx="{px(x):.1f}" cy="{py(mn):.1f}" '
                             f'r="2.4" fill="{color}"/>')
            ly = top + 14 + 16 * idx
            parts.append(f'<line x1="{left + 10}" y1="{ly}" x2="{left + 30}" '
                         f'y2="{ly}" stroke="{color}" stroke-width="2"/>')
            parts.append(f'<text x="{left + 36}" y="{ly + 4}" '
                         'font-family="sans-serif" font-size="11">'
                         f'{_esc(s.label)}</text>')

        parts.append("</svg>")
        return "\n".join(parts)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.render())


def _esc(text: str) -> str:
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))
