"""Deterministic SVG snapshots of period-map displacements on boundary circles."""
from __future__ import annotations

import math

import numpy as np

from .boundary import Ball, GeneralizedAnnulus
from .degree import BoundaryEvaluator
from .errors import OriginCrossing
from .flow import DEFAULT_CONFIG

ARROWS = 12
CLIP = 0.45
SIZE = 480
PAD = 24


def _circles(regions):
    out = []
    for reg in regions:
        if isinstance(reg, Ball):
            out.append((reg.center, reg.radius))
        elif isinstance(reg, GeneralizedAnnulus):
            if reg.outer_ball is None or reg.inner_ball is None:
                raise TypeError("only annuli built from balls can be drawn")
            out += [(reg.inner_ball.center, reg.inner_ball.radius),
                    (reg.outer_ball.center, reg.outer_ball.radius)]
        else:
            raise TypeError(f"cannot draw region {reg!r}")
    return out


def _f(x):
    return f"{x:.3f}"


def _vectors(ev, pts, which):
    if which == "f_T":
        return ev.fT(pts)
    try:
        return ev.FT(pts)
    except OriginCrossing:
        # F_T is undefined where a trajectory hits the origin; leave those arrows out
        out = np.full_like(pts, np.nan)
        for k, p in enumerate(pts):
            try:
                out[k] = ev.FT(p[None, :])[0]
            except OriginCrossing:
                pass
        return out


def render_snapshot(field, regions, which: str = "f_T", out=None, cfg=DEFAULT_CONFIG, evaluator=None) -> str:
    """Arrow field of ``f_T`` (or of ``F_T`` in chart components) on every boundary circle.

    Twelve arrows per circle, drawn at unit scale; arrows longer than 0.45 of
    the circle radius are shortened to that length and marked with an open
    circle.  Points whose trajectory reaches the origin get a filled dot.
    Returns the SVG text and writes it to ``out`` when given.
    """
    if which not in ("f_T", "F_T_chart"):
        raise ValueError("which must be 'f_T' or 'F_T_chart'")
    circles = _circles(regions)
    ev = evaluator or BoundaryEvaluator(field, cfg)
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
             f'viewBox="0 0 {SIZE} {SIZE}">',
             f'<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>']
    if circles:
        ext = max(max(abs(c[0]) + r, abs(c[1]) + r) for c, r in circles) * 1.1
        s = (SIZE / 2 - PAD) / ext

        def X(x):
            return SIZE / 2 + s * x

        def Y(y):
            return SIZE / 2 - s * y

        a = 2 * math.pi * np.arange(ARROWS) / ARROWS
        lines.append(f'<line x1="{_f(X(-ext))}" y1="{_f(Y(0))}" x2="{_f(X(ext))}" y2="{_f(Y(0))}" '
                     'stroke="#ccc"/>')
        lines.append(f'<line x1="{_f(X(0))}" y1="{_f(Y(-ext))}" x2="{_f(X(0))}" y2="{_f(Y(ext))}" '
                     'stroke="#ccc"/>')
        for (cx, cy), r in circles:
            lines.append(f'<circle cx="{_f(X(cx))}" cy="{_f(Y(cy))}" r="{_f(s * r)}" fill="none" '
                         'stroke="black"/>')
            pts = np.column_stack([cx + r * np.cos(a), cy + r * np.sin(a)])
            vec = _vectors(ev, pts, which)
            for p, v in zip(pts, vec):
                x0, y0 = X(p[0]), Y(p[1])
                if not np.all(np.isfinite(v)):
                    lines.append(f'<circle cx="{_f(x0)}" cy="{_f(y0)}" r="3" fill="black"/>')
                    continue
                n = math.hypot(v[0], v[1])
                clipped = n > CLIP * r
                if clipped:
                    v = v * (CLIP * r / n)
                x1, y1 = X(p[0] + v[0]), Y(p[1] + v[1])
                colour = "#c03" if clipped else "#036"
                lines.append(f'<line x1="{_f(x0)}" y1="{_f(y0)}" x2="{_f(x1)}" y2="{_f(y1)}" '
                             f'stroke="{colour}" stroke-width="1.5"/>')
                lines.append(f'<circle cx="{_f(x0)}" cy="{_f(y0)}" r="2" fill="{colour}"/>')
                if clipped:
                    lines.append(f'<circle cx="{_f(x1)}" cy="{_f(y1)}" r="3" fill="none" stroke="{colour}"/>')
        label = "f_T = phi_T - id" if which == "f_T" else "F_T = (dtheta, dr) in plane components"
        lines.append(f'<text x="8" y="16" font-size="12" font-family="monospace">{label}; '
                     f'scale 1:1, clipped at {CLIP} r (open marker)</text>')
    lines.append("</svg>")
    text = "\n".join(lines) + "\n"
    if out is not None:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
