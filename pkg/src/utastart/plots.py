"""Dependency-free SVG step plots of marginal value functions.

Output is a pure function of the inputs (fixed number formatting, no
timestamps or random ids) so identical models give byte-identical files.
"""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 420, 300
LEFT, RIGHT, TOP, BOTTOM = 56, 16, 34, 64


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _tick_label(x: float) -> str:
    ax = abs(x)
    if ax >= 1000:
        return f"{x:.0f}"
    if ax >= 10:
        return f"{x:.1f}"
    return f"{x:.3g}"


def step_plot_svg(
    breakpoints: Sequence[float],
    values: Sequence[float],
    title: str,
    y_label: str = "u",
    y_max: float | None = None,
) -> str:
    """Staircase through ``(breakpoints[l], values[l])`` with a tick per breakpoint.

    Breakpoints are spaced evenly along the x axis (they are ordinal grades,
    often spanning orders of magnitude), labelled with their actual values.
    """
    if len(breakpoints) != len(values) or len(values) < 2:
        raise ValueError("need matching breakpoints and values (at least 2)")
    top = y_max if y_max is not None else max(1.0, max(values))
    if top <= 0:
        top = 1.0
    pw, ph = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    n = len(values)

    def px(i: int) -> float:
        return LEFT + pw * i / (n - 1)

    def py(v: float) -> float:
        return TOP + ph * (1.0 - v / top)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-family="sans-serif" font-size="13">{escape(title)}</text>',
        f'<line x1="{LEFT}" y1="{TOP + ph}" x2="{LEFT + pw}" y2="{TOP + ph}" stroke="black"/>',
        f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{TOP + ph}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = py(frac * top)
        out.append(f'<line x1="{LEFT - 4}" y1="{_fmt(y)}" x2="{LEFT}" y2="{_fmt(y)}" stroke="black"/>')
        out.append(
            f'<text x="{LEFT - 6}" y="{_fmt(y + 4)}" text-anchor="end" font-family="sans-serif" font-size="10">{frac * top:.2f}</text>'
        )
    for i, b in enumerate(breakpoints):
        x = px(i)
        out.append(f'<line x1="{_fmt(x)}" y1="{TOP + ph}" x2="{_fmt(x)}" y2="{TOP + ph + 4}" stroke="black"/>')
        out.append(
            f'<text x="{_fmt(x)}" y="{TOP + ph + 8}" transform="rotate(60 {_fmt(x)} {TOP + ph + 8})" '
            f'font-family="sans-serif" font-size="9">{escape(_tick_label(b))}</text>'
        )
    pts = [f"{_fmt(px(0))},{_fmt(py(values[0]))}"]
    for i in range(1, n):
        pts.append(f"{_fmt(px(i))},{_fmt(py(values[i - 1]))}")
        pts.append(f"{_fmt(px(i))},{_fmt(py(values[i]))}")
    out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="#1f4e9c" stroke-width="2"/>')
    for i, v in enumerate(values):
        out.append(f'<circle cx="{_fmt(px(i))}" cy="{_fmt(py(v))}" r="2.5" fill="#1f4e9c"/>')
    out.append(
        f'<text x="14" y="{TOP + ph / 2:.1f}" transform="rotate(-90 14 {TOP + ph / 2:.1f})" text-anchor="middle" '
        f'font-family="sans-serif" font-size="11">{escape(y_label)}</text>'
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def model_plots(model, normalized: bool = True) -> dict[str, str]:
    """One SVG per (measure, criterion), keyed ``value_k{K}_c{J}.svg`` (1-based)."""
    files = {}
    for k, mname in enumerate(model.measures):
        for j, cname in enumerate(model.criteria):
            u = model.marginal_function(k, j, normalized=normalized)
            label = "normalized u" if normalized else "u"
            svg = step_plot_svg(
                model.scales[k][j].breakpoints,
                [float(v) for v in u],
                f"{mname} / {cname}",
                y_label=label,
                y_max=1.0 if normalized else None,
            )
            files[f"value_k{k + 1}_c{j + 1}.svg"] = svg
    return files
