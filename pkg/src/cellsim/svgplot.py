"""Minimal self-contained SVG line plots (no external renderer)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 64, 16, 28, 40
_PANEL_W, _PANEL_H = 560, 220
_MAX_POINTS = 4000


@dataclass
class Panel:
    title: str
    ylabel: str
    times: np.ndarray
    values: np.ndarray


def _nice_ticks(lo: float, hi: float, target: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + step * 1e-9:
        ticks.append(round(t / step) * step)
        t += step
    return ticks


def _fmt(x: float) -> str:
    if x == 0:
        return "0"
    if abs(x) >= 1e4 or abs(x) < 1e-3:
        return f"{x:.3g}"
    return f"{x:.6g}"


def render(panels: list[Panel]) -> str:
    """Render stacked panels as one SVG document string."""
    width = _MARGIN_L + _PANEL_W + _MARGIN_R
    height = len(panels) * (_MARGIN_T + _PANEL_H + _MARGIN_B)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"'
        f' viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">'
    ]
    for idx, panel in enumerate(panels):
        top = idx * (_MARGIN_T + _PANEL_H + _MARGIN_B) + _MARGIN_T
        left = _MARGIN_L
        t = np.asarray(panel.times, dtype=float)
        v = np.asarray(panel.values, dtype=float)
        if t.size > _MAX_POINTS:
            pick = np.linspace(0, t.size - 1, _MAX_POINTS).astype(int)
            t, v = t[pick], v[pick]
        t0, t1 = float(t[0]), float(t[-1])
        v0, v1 = float(v.min()), float(v.max())
        if v1 - v0 < 1e-12:
            v0 -= 0.5
            v1 += 0.5
        pad = 0.05 * (v1 - v0)
        v0 -= pad
        v1 += pad

        def sx(x):
            return left + (x - t0) / (t1 - t0) * _PANEL_W

        def sy(y):
            return top + _PANEL_H - (y - v0) / (v1 - v0) * _PANEL_H

        out.append(f'<text x="{left}" y="{top - 10}" font-weight="bold">{panel.title}</text>')
        out.append(
            f'<rect x="{left}" y="{top}" width="{_PANEL_W}" height="{_PANEL_H}"'
            ' fill="none" stroke="#444" stroke-width="1"/>'
        )
        for tick in _nice_ticks(v0, v1):
            y = sy(tick)
            out.append(
                f'<line x1="{left}" y1="{y:.2f}" x2="{left + _PANEL_W}" y2="{y:.2f}"'
                ' stroke="#ddd" stroke-width="0.5"/>'
            )
            out.append(f'<text x="{left - 6}" y="{y + 3:.2f}" text-anchor="end">{_fmt(tick)}</text>')
        for tick in _nice_ticks(t0, t1, 6):
            x = sx(tick)
            out.append(
                f'<line x1="{x:.2f}" y1="{top}" x2="{x:.2f}" y2="{top + _PANEL_H}"'
                ' stroke="#eee" stroke-width="0.5"/>'
            )
            out.append(
                f'<text x="{x:.2f}" y="{top + _PANEL_H + 14}" text-anchor="middle">{_fmt(tick)}</text>'
            )
        points = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(t, v))
        out.append(f'<polyline points="{points}" fill="none" stroke="#0b62a4" stroke-width="1.3"/>')
        out.append(
            f'<text x="{left - 50}" y="{top + _PANEL_H / 2:.0f}"'
            f' transform="rotate(-90 {left - 50} {top + _PANEL_H / 2:.0f})"'
            f' text-anchor="middle">{panel.ylabel}</text>'
        )
        out.append(
            f'<text x="{left + _PANEL_W / 2:.0f}" y="{top + _PANEL_H + 30}" text-anchor="middle">time (s)</text>'
        )
    out.append("</svg>")
    return "\n".join(out)


def write(path: str, panels: list[Panel]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render(panels))
