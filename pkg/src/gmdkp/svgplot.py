"""Minimal static SVG line plots (no plotting dependency).

Good enough for the benchmark harness: multiple series with optional
error bars, linear or log axes, a legend, and axis labels.  The CSV
files remain the authoritative artifact; these are quick-look charts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["Series", "line_plot"]

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"]
_W, _H = 640, 440
_ML, _MR, _MT, _MB = 70, 20, 36, 56


@dataclass
class Series:
    label: str
    x: list[float]
    y: list[float]
    yerr: list[float] | None = None
    dashed: bool = False


def _ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    out = []
    v = start
    while v <= hi + 1e-12 * abs(step):
        out.append(round(v, 12))
        v += step
    return out


def _log_ticks(lo: float, hi: float) -> list[float]:
    out = []
    e = math.floor(math.log10(lo))
    while 10**e <= hi * 1.0001:
        if 10**e >= lo * 0.9999:
            out.append(10.0**e)
        e += 1
    return out or [lo, hi]


def _fmt(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-3:
        return f"{v:.0e}"
    return f"{v:g}"


def line_plot(
    series: list[Series],
    title: str = "",
    xlabel: str = "",
    ylabel: str = "",
    logx: bool = False,
    logy: bool = False,
) -> str:
    """Render the series to an SVG document string."""
    xs = [x for s in series for x in s.x]
    ys = [y for s in series for y in s.y]
    if not xs:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    errs = [e for s in series if s.yerr for e in s.yerr]
    ylo = min(ys) - (max(errs) if errs else 0.0)
    yhi = max(ys) + (max(errs) if errs else 0.0)
    xlo, xhi = min(xs), max(xs)
    if logx:
        xlo, xhi = max(xlo, 1e-300), max(xhi, 1e-299)
    if logy:
        ylo, yhi = max(ylo, 1e-300), max(yhi, 1e-299)
    if xhi == xlo:
        xhi = xlo + 1.0
    if yhi == ylo:
        yhi = ylo + 1.0
    pad = 0.06
    if logx:
        lxlo, lxhi = math.log10(xlo), math.log10(xhi)
        lxlo, lxhi = lxlo - pad * (lxhi - lxlo + 1e-9), lxhi + pad * (lxhi - lxlo + 1e-9)
    else:
        d = xhi - xlo
        xlo, xhi = xlo - pad * d, xhi + pad * d
    if logy:
        lylo, lyhi = math.log10(ylo), math.log10(yhi)
        lylo, lyhi = lylo - pad * (lyhi - lylo + 1e-9), lyhi + pad * (lyhi - lylo + 1e-9)
    else:
        d = yhi - ylo
        ylo, yhi = ylo - pad * d, yhi + pad * d

    def px(x: float) -> float:
        t = (math.log10(x) - lxlo) / (lxhi - lxlo) if logx else (x - xlo) / (xhi - xlo)
        return _ML + t * (_W - _ML - _MR)

    def py(y: float) -> float:
        t = (math.log10(y) - lylo) / (lyhi - lylo) if logy else (y - ylo) / (yhi - ylo)
        return _H - _MB - t * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<rect x="{_ML}" y="{_MT}" width="{_W-_ML-_MR}" height="{_H-_MT-_MB}" '
        f'fill="none" stroke="#333"/>',
    ]
    if title:
        parts.append(f'<text x="{_W/2:.1f}" y="20" text-anchor="middle" font-size="14">{title}</text>')
    xticks = _log_ticks(10**lxlo, 10**lxhi) if logx else _ticks(xlo, xhi)
    for tv in xticks:
        x = px(tv)
        if x < _ML - 1 or x > _W - _MR + 1:
            continue
        parts.append(f'<line x1="{x:.1f}" y1="{_H-_MB}" x2="{x:.1f}" y2="{_H-_MB+5}" stroke="#333"/>')
        parts.append(f'<text x="{x:.1f}" y="{_H-_MB+18}" text-anchor="middle">{_fmt(tv)}</text>')
    yticks = _log_ticks(10**lylo, 10**lyhi) if logy else _ticks(ylo, yhi)
    for tv in yticks:
        y = py(tv)
        if y < _MT - 1 or y > _H - _MB + 1:
            continue
        parts.append(f'<line x1="{_ML-5}" y1="{y:.1f}" x2="{_ML}" y2="{y:.1f}" stroke="#333"/>')
        parts.append(f'<text x="{_ML-8}" y="{y+4:.1f}" text-anchor="end">{_fmt(tv)}</text>')
        parts.append(
            f'<line x1="{_ML}" y1="{y:.1f}" x2="{_W-_MR}" y2="{y:.1f}" stroke="#ddd" stroke-width="0.5"/>'
        )
    if xlabel:
        parts.append(f'<text x="{_W/2:.1f}" y="{_H-14}" text-anchor="middle">{xlabel}</text>')
    if ylabel:
        parts.append(
            f'<text x="16" y="{_H/2:.1f}" text-anchor="middle" transform="rotate(-90 16 {_H/2:.1f})">{ylabel}</text>'
        )
    for si, s in enumerate(series):
        color = _COLORS[si % len(_COLORS)]
        pts = sorted(zip(s.x, s.y, s.yerr if s.yerr else [0.0] * len(s.x)))
        path = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y, _ in pts)
        dash = ' stroke-dasharray="6,4"' if s.dashed else ""
        parts.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>')
        for x, y, e in pts:
            parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{color}"/>')
            if e:
                parts.append(
                    f'<line x1="{px(x):.1f}" y1="{py(y-e):.1f}" x2="{px(x):.1f}" y2="{py(y+e):.1f}" '
                    f'stroke="{color}" stroke-width="1.2"/>'
                )
        ly = _MT + 16 + 16 * si
        parts.append(f'<line x1="{_W-_MR-150}" y1="{ly-4}" x2="{_W-_MR-128}" y2="{ly-4}" stroke="{color}" stroke-width="2"{dash}/>')
        parts.append(f'<text x="{_W-_MR-122}" y="{ly}">{s.label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
