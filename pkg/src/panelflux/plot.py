"""Standalone SVG line charts of impulse responses (no plotting dependency)."""
from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .irf import IrfResult

WIDTH, HEIGHT = 640, 400
LEFT, RIGHT, TOP, BOTTOM = 70, 20, 40, 50


def _fmt(x: float) -> str:
    return f"{x:.3f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    return list(np.linspace(lo, hi, n))


def render_irf_svg(irf: IrfResult, pair: tuple[str, str], path) -> Path:
    """Write the response of ``pair[0]`` to a shock in ``pair[1]``."""
    response, shock = pair
    y = irf.path(response, shock)
    band = irf.band(response, shock)
    H = irf.horizon
    values = [y] + (list(band) if band is not None else [])
    lo = float(min(0.0, *(v.min() for v in values)))
    hi = float(max(0.0, *(v.max() for v in values)))
    if hi - lo < 1e-12:
        lo, hi = lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    plot_w, plot_h = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    xspan = max(H, 1)

    def px(h):
        return LEFT + plot_w * h / xspan

    def py(v):
        return TOP + plot_h * (hi - v) / (hi - lo)

    hs = np.arange(H + 1)
    title = f"Response of {response} to {shock} innovation (Cholesky ordering: {', '.join(irf.ordering)})"
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text id="title" x="{WIDTH / 2}" y="22" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">{escape(title)}</text>',
    ]
    if band is not None:
        pts = [(px(h), py(v)) for h, v in zip(hs, band[1])] + [
            (px(h), py(v)) for h, v in zip(hs[::-1], band[0][::-1])
        ]
        out.append(
            '<polygon id="band" fill="#9ecae1" fill-opacity="0.5" stroke="none" points="'
            + " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in pts) + '"/>'
        )
    # axes and zero line
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + plot_h}" stroke="black"/>')
    out.append(f'<line x1="{LEFT}" y1="{TOP + plot_h}" x2="{LEFT + plot_w}" y2="{TOP + plot_h}" stroke="black"/>')
    out.append(
        f'<line id="baseline" x1="{LEFT}" y1="{_fmt(py(0.0))}" x2="{LEFT + plot_w}" y2="{_fmt(py(0.0))}" '
        'stroke="#888" stroke-dasharray="4 3"/>'
    )
    step = max(1, int(np.ceil(xspan / 10)))
    for h in range(0, H + 1, step):
        out.append(
            f'<text x="{_fmt(px(h))}" y="{TOP + plot_h + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{h}</text>'
        )
    for v in _nice_ticks(lo, hi):
        out.append(
            f'<text x="{LEFT - 6}" y="{_fmt(py(v) + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{v:.3g}</text>'
        )
    out.append(
        f'<text id="xlabel" x="{LEFT + plot_w / 2}" y="{HEIGHT - 10}" text-anchor="middle" '
        'font-family="sans-serif" font-size="12">quarters</text>'
    )
    out.append(
        f'<text id="ylabel" x="16" y="{TOP + plot_h / 2}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12" transform="rotate(-90 16 {TOP + plot_h / 2})">response</text>'
    )
    pts = " ".join(f"{_fmt(px(h))},{_fmt(py(v))}" for h, v in zip(hs, y))
    out.append(f'<polyline id="response" fill="none" stroke="#08519c" stroke-width="2" points="{pts}"/>')
    if H == 0:
        out.append(f'<circle cx="{_fmt(px(0))}" cy="{_fmt(py(y[0]))}" r="3" fill="#08519c"/>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
