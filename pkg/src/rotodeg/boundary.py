"""Oriented closed curves, regions bounded by them, and adaptive refinement.

A curve is a closed parameterisation ``[0, 1] -> R^2`` together with a sorted
list of sample parameters in ``[0, 1)``.  Refinement only ever inserts
midpoints, so earlier samples are always kept.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field, replace
from typing import Callable

import numpy as np

from . import kernels
from .errors import RefinementLimit

TWO_PI = 2.0 * math.pi
MAX_REFINE_DEPTH = 40


@dataclass(frozen=True)
class OrientedCurve:
    param: Callable[[np.ndarray], np.ndarray]
    orientation: int = 1
    s: np.ndarray = dc_field(default_factory=lambda: np.zeros(0))
    points: np.ndarray = dc_field(default_factory=lambda: np.zeros((0, 2)))
    depth: np.ndarray = dc_field(default_factory=lambda: np.zeros(0, dtype=int))
    values: np.ndarray | None = None
    label: str = ""
    scale: float = 1.0

    def __len__(self):
        return len(self.s)

    def signed_area(self) -> float:
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def winding_about(self, p) -> int:
        """Winding number of the sampled polygon about ``p``."""
        w = self.points - np.asarray(p, dtype=float)
        total, _ = kernels.winding_sum(w[:, 0], w[:, 1])
        return int(round(total / TWO_PI))

    def resampled(self, n0: int) -> "OrientedCurve":
        return make_curve(self.param, n0, self.label, self.scale, self.orientation)


def make_curve(param, n0: int, label="", scale=1.0, orientation=None) -> OrientedCurve:
    s = np.arange(n0) / n0
    pts = np.asarray(param(s), dtype=float)
    c = OrientedCurve(param, 1, s, pts, np.zeros(n0, dtype=int), None, label, scale)
    if orientation is None:
        orientation = 1 if c.signed_area() > 0 else -1
    return replace(c, orientation=orientation)


def circle(center=(0.0, 0.0), radius: float = 1.0, n0: int = 64) -> OrientedCurve:
    """Counter-clockwise circle with ``n0`` equally spaced samples."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    if n0 < 16:
        raise ValueError("n0 must be at least 16")
    cx, cy = float(center[0]), float(center[1])

    def param(s):
        a = TWO_PI * np.asarray(s, dtype=float)
        return np.column_stack([cx + radius * np.cos(a), cy + radius * np.sin(a)])

    return make_curve(param, n0, f"circle({cx:g},{cy:g};{radius:g})", radius, 1)


def rectangle(x0, y0, x1, y1, n0: int = 64) -> OrientedCurve:
    """Counter-clockwise rectangle boundary; each side gets a quarter of the parameter.

    ``n0`` is rounded up to a multiple of 4 so that the corners are samples.
    """
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate rectangle")
    w, h = x1 - x0, y1 - y0
    corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]])
    cum = np.array([0.0, 0.25, 0.5, 0.75, 1.0])

    def param(s):
        s = np.mod(np.asarray(s, dtype=float), 1.0)
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, 3)
        frac = (s - cum[k]) / (cum[k + 1] - cum[k])
        return corners[k] + frac[:, None] * (corners[k + 1] - corners[k])

    n0 = max(16, 4 * math.ceil(n0 / 4))
    return make_curve(param, n0, f"rect({x0:g},{y0:g},{x1:g},{y1:g})", 0.5 * math.hypot(w, h), 1)


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float
    n0: int = 64

    @property
    def curve(self):
        return circle(self.center, self.radius, self.n0)

    def contains(self, p, margin=0.0):
        return math.hypot(p[0] - self.center[0], p[1] - self.center[1]) < self.radius - margin

    @property
    def scale(self):
        return self.radius

    def spec(self):
        return f"ball:{self.center[0]:g},{self.center[1]:g},{self.radius:g}"


@dataclass(frozen=True)
class GeneralizedAnnulus:
    """``closure(U_out) minus U_in`` for two positively oriented boundary curves."""

    outer: OrientedCurve
    inner: OrientedCurve
    contains_origin_inner: bool = True
    outer_ball: Ball | None = None
    inner_ball: Ball | None = None

    def __post_init__(self):
        if any(self.outer.winding_about(p) != 1 for p in self.inner.points):
            raise ValueError("inner curve must lie strictly inside the outer curve")
        if self.contains_origin_inner and self.inner.winding_about((0.0, 0.0)) != 1:
            raise ValueError("origin must lie strictly inside the inner curve")

    @property
    def scale(self):
        return self.outer.scale

    def spec(self):
        if self.outer_ball and self.inner_ball:
            return f"annulus:{self.inner_ball.radius:g},{self.outer_ball.radius:g}"
        return f"annulus({self.inner.label}|{self.outer.label})"


def annulus(r_in: float, r_out: float, n0: int = 64, center=(0.0, 0.0)) -> GeneralizedAnnulus:
    if not 0 < r_in < r_out:
        raise ValueError("need 0 < r_in < r_out")
    bi, bo = Ball(tuple(center), r_in, n0), Ball(tuple(center), r_out, n0)
    return GeneralizedAnnulus(bo.curve, bi.curve, True, bo, bi)


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float
    n0: int = 64

    @property
    def curve(self):
        return rectangle(self.x0, self.y0, self.x1, self.y1, self.n0)

    def contains(self, p, margin=0.0):
        return (self.x0 + margin < p[0] < self.x1 - margin) and (self.y0 + margin < p[1] < self.y1 - margin)

    @property
    def scale(self):
        return 0.5 * math.hypot(self.x1 - self.x0, self.y1 - self.y0)

    @property
    def center(self):
        return (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))

    def spec(self):
        return f"rect:{self.x0:g},{self.y0:g},{self.x1:g},{self.y1:g}"


def boundary_components(region) -> list[tuple[OrientedCurve, int]]:
    """Boundary curves with the orientation sign induced by the region.

    A ball (or rectangle) has one positive component; an annulus has its outer
    curve positive and its inner curve negative.
    """
    if isinstance(region, GeneralizedAnnulus):
        return [(region.outer, 1), (region.inner, -1)]
    if isinstance(region, (Ball, Rect)):
        return [(region.curve, 1)]
    if isinstance(region, OrientedCurve):
        return [(region, 1)]
    raise TypeError(f"unsupported region {region!r}")


def origin_position(region, margin: float = 0.0) -> str:
    """``'inside'``, ``'outside'`` (of the closure) or ``'boundary'``."""
    o = (0.0, 0.0)
    if isinstance(region, GeneralizedAnnulus):
        if region.contains_origin_inner:
            return "outside"
        w = region.outer.winding_about(o) - region.inner.winding_about(o)
        return "inside" if w else "outside"
    if isinstance(region, (Ball, Rect)):
        if region.contains(o, margin):
            return "inside"
        if region.contains(o, -margin):
            return "boundary"
        return "outside"
    return "inside" if region.winding_about(o) else "outside"


# ---------------------------------------------------------------------------
# refinement


def refine_many(curves, needs_split, max_depth: int = MAX_REFINE_DEPTH, evaluate=None):
    """Refine several curves together until no adjacent sample pair needs splitting.

    Parameters
    ----------
    curves : list of OrientedCurve
    needs_split : callable
        ``needs_split(va, vb) -> bool array`` over arrays of adjacent values.
    evaluate : callable, optional
        Maps an ``(n, 2)`` array of points to values.  All midpoints of one
        refinement round are evaluated in a single call.  Defaults to the
        identity (the points themselves).

    Returns
    -------
    list of (OrientedCurve, bool)
        Each refined curve (with ``values`` filled in) and whether some pair
        was still flagged when ``max_depth`` was reached.
    """
    if max_depth > MAX_REFINE_DEPTH:
        raise ValueError(f"max_depth must be <= {MAX_REFINE_DEPTH}")
    evaluate = evaluate or (lambda p: p)
    curves = list(curves)
    missing = [k for k, c in enumerate(curves) if c.values is None or len(c.values) != len(c.s)]
    if missing:
        vals = _evaluate_split(evaluate, [curves[k].points for k in missing])
        for k, v in zip(missing, vals):
            curves[k] = replace(curves[k], values=v)
    limited = [False] * len(curves)
    active = list(range(len(curves)))
    while active:
        plans = []
        for k in active:
            c = curves[k]
            flag = np.asarray(needs_split(c.values, np.roll(c.values, -1, axis=0)), dtype=bool)
            stuck = flag & (c.depth >= max_depth)
            if stuck.any():
                limited[k] = True
            flag &= ~stuck
            if flag.any():
                plans.append((k, np.flatnonzero(flag)))
        if not plans:
            break
        mids = []
        for k, idx in plans:
            c = curves[k]
            s_next = np.append(c.s[1:], 1.0)
            sm = 0.5 * (c.s[idx] + s_next[idx])
            mids.append((sm, np.asarray(c.param(sm), dtype=float)))
        vals = _evaluate_split(evaluate, [m[1] for m in mids])
        for (k, idx), (sm, pm), vm in zip(plans, mids, vals):
            curves[k] = _insert(curves[k], idx, sm, pm, vm)
        active = [k for k, _ in plans]
    return list(zip(curves, limited))


def refine(curve: OrientedCurve, needs_split, max_depth: int = MAX_REFINE_DEPTH, evaluate=None) -> OrientedCurve:
    """Single-curve :func:`refine_many`; raises ``RefinementLimit`` at the depth limit."""
    (out, limited), = refine_many([curve], needs_split, max_depth, evaluate)
    if limited:
        raise RefinementLimit(f"refinement of {curve.label or 'curve'} reached depth {max_depth}", partial=out)
    return out


def double_many(curves, evaluate=None):
    """Insert the midpoint of every segment of every curve, evaluated in one batch."""
    evaluate = evaluate or (lambda p: p)
    curves = list(curves)
    missing = [k for k, c in enumerate(curves) if c.values is None]
    if missing:
        vals = _evaluate_split(evaluate, [curves[k].points for k in missing])
        for k, v in zip(missing, vals):
            curves[k] = replace(curves[k], values=v)
    mids = []
    for c in curves:
        s_next = np.append(c.s[1:], 1.0)
        sm = 0.5 * (c.s + s_next)
        mids.append((sm, np.asarray(c.param(sm), dtype=float)))
    vals = _evaluate_split(evaluate, [m[1] for m in mids])
    return [_insert(c, np.arange(len(c.s)), sm, pm, vm) for c, (sm, pm), vm in zip(curves, mids, vals)]


def _evaluate_split(evaluate, chunks):
    sizes = [len(c) for c in chunks]
    if not sum(sizes):
        return [np.zeros((0,) + (2,)) for _ in chunks]
    vals = np.asarray(evaluate(np.concatenate(chunks, axis=0)))
    return np.split(vals, np.cumsum(sizes)[:-1])


def _insert(c: OrientedCurve, idx, sm, pm, vm) -> OrientedCurve:
    n = len(c.s)
    pos = idx + 1
    s = np.insert(c.s, pos, sm)
    pts = np.insert(c.points, pos, pm, axis=0)
    vals = np.insert(c.values, pos, vm, axis=0)
    depth = c.depth.copy()
    depth[idx] += 1
    depth = np.insert(depth, pos, depth[idx])
    assert len(s) == n + len(idx)
    return replace(c, s=s, points=pts, values=vals, depth=depth)
