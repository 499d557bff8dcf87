"""Degree-guided localization of periodic orbits.

Zeros of ``G_i = F_T o Psi^{-1} - nu_i`` are fixed points of the period map
that turn ``i`` times clockwise around the origin.  They are bracketed by a
quadtree of squares in plane coordinates: a square's degree is a winding
number along its edges, and by additivity the degrees of its four children sum
to its own.  Nonzero leaves seed a damped Newton iteration on ``f_T``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .boundary import Ball, GeneralizedAnnulus, Rect, rectangle
from .degree import (BoundaryEvaluator, TwistReport, brouwer_deg_fT, check_twist,
                     dee_degree, nu, winding_many)
from .errors import BlowUp, GuaranteeViolation, IllConditioned, NoConvergence, OriginCrossing
from .flow import DEFAULT_CONFIG, IntegratorConfig, flow_summary

TWO_PI = 2.0 * math.pi
ORBIT_TOL = 1e-8
ROT_TOL = 1e-6
MIN_DIAM = 1e-3
JITTER = 1e-6
MAX_JITTER = 3
CELL_N0 = 16


@dataclass
class PeriodicOrbit:
    point: tuple
    rotation: int | None
    residual: float
    enclosure: Rect | None = None
    multipliers: tuple | None = None
    best_effort: bool = False
    cell_degree: int | None = None
    rotation_value: float = float("nan")
    location: str = "annulus"

    def to_json(self):
        mult = None
        if self.multipliers is not None:
            mult = [[float(m.real), float(m.imag)] for m in self.multipliers]
        return {"point": [float(self.point[0]), float(self.point[1])], "rotation": self.rotation,
                "rotation_value": self.rotation_value, "residual": self.residual,
                "enclosure": None if self.enclosure is None else self.enclosure.spec(),
                "cell_degree": self.cell_degree, "best_effort": self.best_effort,
                "certificate": None if self.best_effort else "nonzero cell degree",
                "location": self.location, "multipliers": mult}


# ---------------------------------------------------------------------------
# cell tree


@dataclass
class Cell:
    rect: Rect
    depth: int
    degree: int | None = None
    certified: bool = False
    origin: bool = False
    inside: str = "partial"          # "partial", "outside" (of the region)
    children: list = dc_field(default_factory=list)
    parent: int | None = None
    note: str = ""

    @property
    def diameter(self):
        r = self.rect
        return math.hypot(r.x1 - r.x0, r.y1 - r.y0)

    @property
    def is_leaf(self):
        return not self.children


@dataclass
class CellTree:
    i: int
    region: object
    cells: list
    max_depth: int

    @property
    def root(self) -> Cell:
        return self.cells[0]

    def leaves(self):
        return [c for c in self.cells if c.is_leaf]

    def hits(self):
        """Leaves with nonzero certified degree, away from the origin and meeting the region."""
        return [c for c in self.leaves()
                if c.certified and c.degree and not c.origin and c.inside != "outside"]

    def level_sums(self):
        """Degree sum over the frontier at each depth (a partition of the root square).

        ``None`` for a level whose frontier has an uncertified cell.
        """
        depth = max(c.depth for c in self.cells)
        out = []
        for d in range(depth + 1):
            front = [c for c in self.cells if c.depth == d or (c.is_leaf and c.depth < d)]
            if all(c.certified for c in front):
                out.append(int(sum(c.degree for c in front)))
            else:
                out.append(None)
        return out

    def bookkeeping_ok(self):
        return all(s is None or s == self.root.degree for s in self.level_sums())

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "parent", "depth", "x0", "y0", "x1", "y1", "degree", "certified", "origin",
                    "inside", "leaf"])
        for k, c in enumerate(self.cells):
            r = c.rect
            w.writerow([k, "" if c.parent is None else c.parent, c.depth, repr(r.x0), repr(r.y0),
                        repr(r.x1), repr(r.y1), "" if c.degree is None else c.degree, int(c.certified),
                        int(c.origin), c.inside, int(c.is_leaf)])
        return buf.getvalue()


def _bounding_square(region):
    if isinstance(region, GeneralizedAnnulus):
        if region.outer_ball is not None:
            region = region.outer_ball
        else:
            p = region.outer.points
            x0, y0 = p.min(axis=0)
            x1, y1 = p.max(axis=0)
            region = Rect(x0, y0, x1, y1)
    if isinstance(region, Ball):
        cx, cy, half = region.center[0], region.center[1], region.radius
    elif isinstance(region, Rect):
        (cx, cy), half = region.center, 0.5 * max(region.x1 - region.x0, region.y1 - region.y0)
    else:
        raise TypeError(f"unsupported region {region!r}")
    # slightly enlarged and off-centre so that dyadic grid lines avoid symmetry axes
    half *= 1.0371
    cx += 0.0123457 * half
    cy += 0.0234568 * half
    return Rect(cx - half, cy - half, cx + half, cy + half)


def _dist_range(rect, c):
    dx = max(rect.x0 - c[0], 0.0, c[0] - rect.x1)
    dy = max(rect.y0 - c[1], 0.0, c[1] - rect.y1)
    far_x = max(abs(rect.x0 - c[0]), abs(rect.x1 - c[0]))
    far_y = max(abs(rect.y0 - c[1]), abs(rect.y1 - c[1]))
    return math.hypot(dx, dy), math.hypot(far_x, far_y)


def _relation(rect, region):
    """``"outside"`` if the closed rectangle misses the region, else ``"partial"``."""
    if isinstance(region, Ball):
        lo, _ = _dist_range(rect, region.center)
        return "outside" if lo > region.radius else "partial"
    if isinstance(region, Rect):
        miss = rect.x1 < region.x0 or rect.x0 > region.x1 or rect.y1 < region.y0 or rect.y0 > region.y1
        return "outside" if miss else "partial"
    if isinstance(region, GeneralizedAnnulus) and region.outer_ball and region.inner_ball:
        lo, hi = _dist_range(rect, region.outer_ball.center)
        if lo > region.outer_ball.radius:
            return "outside"
        lo, hi = _dist_range(rect, region.inner_ball.center)
        return "outside" if hi < region.inner_ball.radius else "partial"
    return "partial"


def _contains_origin(rect):
    return rect.x0 <= 0.0 <= rect.x1 and rect.y0 <= 0.0 <= rect.y1


def _split(rect, jitter=(0.0, 0.0)):
    mx = 0.5 * (rect.x0 + rect.x1) + jitter[0]
    my = 0.5 * (rect.y0 + rect.y1) + jitter[1]
    # fixed quadrant order: SW, SE, NE, NW
    return [Rect(rect.x0, rect.y0, mx, my), Rect(mx, rect.y0, rect.x1, my),
            Rect(mx, my, rect.x1, rect.y1), Rect(rect.x0, my, mx, rect.y1)]


def _degrees(ev, rects, i):
    curves = [rectangle(r.x0, r.y0, r.x1, r.y1, CELL_N0) for r in rects]
    try:
        return winding_many(ev.FT, curves, nu(i), op=f"cell[{i}]")
    except OriginCrossing as exc:
        return [exc] * len(rects)


def localize(field, region, i: int, max_depth: int = 16, cfg: IntegratorConfig = DEFAULT_CONFIG, *,
             evaluator=None, min_diam: float = MIN_DIAM, root: Rect | None = None,
             seed_jitter: int = 0) -> CellTree:
    """Quadtree bracketing of the zeros of ``G_i`` inside ``region``.

    Cells with nonzero degree (and cells containing the origin, where ``G_i``
    is undefined) are split into four until their diameter drops below
    ``min_diam`` or ``max_depth`` is reached; cells missing the region are not
    split.  When a child edge carries a zero the parent's split point is
    jittered by ``1e-6`` of its diameter, at most three times.

    Use :meth:`CellTree.hits` for the nonzero certified leaves.
    """
    ev = evaluator or BoundaryEvaluator(field, cfg)
    rng = np.random.default_rng(seed_jitter)
    root = root or _bounding_square(region)
    rep = None
    for attempt in range(MAX_JITTER + 1):
        rep, = _degrees(ev, [root], i)
        if not isinstance(rep, Exception):
            break
        g = 1.0 + JITTER * (attempt + 1)
        c = root.center
        h = 0.5 * (root.x1 - root.x0) * g
        root = Rect(c[0] - h, c[1] - h, c[0] + h, c[1] + h)
    if isinstance(rep, Exception):
        raise rep
    cells = [Cell(root, 0, rep.value, rep.certified, _contains_origin(root), _relation(root, region))]
    frontier = [0]
    for depth in range(max_depth):
        parents = [k for k in frontier if _should_split(cells[k], min_diam)]
        if not parents:
            break
        pending = {k: (0.0, 0.0) for k in parents}
        done = {}
        for attempt in range(MAX_JITTER + 1):
            if not pending:
                break
            plan = [(k, _split(cells[k].rect, j)) for k, j in pending.items()]
            reps = _degrees(ev, [r for _, rs in plan for r in rs], i)
            pending = {}
            for n, (k, rs) in enumerate(plan):
                sub = reps[4 * n:4 * n + 4]
                if any(isinstance(r, Exception) for r in sub) and attempt < MAX_JITTER:
                    d = cells[k].diameter * JITTER * (attempt + 1)
                    pending[k] = tuple(d * rng.uniform(-1.0, 1.0, 2))
                else:
                    done[k] = (rs, sub)
        frontier = []
        for k in parents:
            rs, sub = done[k]
            if any(isinstance(r, Exception) for r in sub):
                cells[k].note = f"unresolved: {next(r for r in sub if isinstance(r, Exception))}"
                continue
            for r, rp in zip(rs, sub):
                cells.append(Cell(r, depth + 1, rp.value, rp.certified, _contains_origin(r),
                                  _relation(r, region), parent=k))
                cells[k].children.append(len(cells) - 1)
                frontier.append(len(cells) - 1)
            if sum(rp.value for rp in sub) != cells[k].degree:
                cells[k].note = "additivity mismatch"
    return CellTree(int(i), region, cells, max_depth)


def _should_split(cell, min_diam):
    if cell.inside == "outside" or not cell.certified or cell.diameter < min_diam:
        return False
    return bool(cell.degree) or cell.origin


# ---------------------------------------------------------------------------
# Newton refinement


def _period_map(field, pts, cfg):
    s = flow_summary(field, pts, cfg, blowup="nan")
    return s.end, s.dtheta


def _residual(field, x, cfg):
    end, dth = _period_map(field, x, cfg)
    return float(np.hypot(*(end[0] - x))), float(dth[0])


def newton_fixed_point(field, seed, cfg: IntegratorConfig = DEFAULT_CONFIG, *, max_iter: int = 100,
                       tol: float = ORBIT_TOL, bounds: Rect | None = None):
    """Damped Newton iteration for ``phi_T(x) = x`` with a central-difference Jacobian.

    Returns ``(x, residual, dtheta, iterations)``; raises ``NoConvergence``,
    also when an iterate leaves ``bounds``.
    """
    x = np.asarray(seed, dtype=float).reshape(2)
    res, dth = _residual(field, x, cfg)
    if not np.isfinite(res):
        raise NoConvergence("seed trajectory blows up")
    if res < 1e-3 * tol:
        return x, res, dth, 0
    lambdas = 0.5 ** np.arange(12)
    for it in range(1, max_iter + 1):
        h = 1e-7 * max(1.0, float(np.hypot(*x)))
        e = np.array([[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]])
        end, _ = _period_map(field, x + e, cfg)
        if not np.all(np.isfinite(end)):
            raise NoConvergence("Jacobian stencil blows up")
        fx = _period_map(field, x[None], cfg)[0][0] - x
        J = np.column_stack([(end[0] - end[1]) / (2 * h), (end[2] - end[3]) / (2 * h)]) - np.eye(2)
        dx = np.linalg.lstsq(J, -fx, rcond=None)[0]
        trial = x + lambdas[:, None] * dx
        tend, tdth = _period_map(field, trial, cfg)
        tres = np.hypot(*(tend - trial).T)
        ok = np.flatnonzero(np.isfinite(tres) & (tres < res))
        if not ok.size:
            if res < tol:
                return x, res, dth, it
            raise NoConvergence(f"no descent after {it} iterations (residual {res:.3g})")
        k = ok[0]
        step = float(np.hypot(*(trial[k] - x)))
        x, res, dth = trial[k], float(tres[k]), float(tdth[k])
        if bounds is not None and not bounds.contains(x):
            raise NoConvergence(f"iterate left {bounds.spec()}")
        if res < 1e-3 * tol or (res < tol and step < 1e-14 * max(1.0, float(np.hypot(*x)))):
            return x, res, dth, it
    if res < tol:
        return x, res, dth, max_iter
    raise NoConvergence(f"no convergence after {max_iter} iterations (residual {res:.3g})")


def refine_orbit(field, seed, i: int | None, cfg: IntegratorConfig = DEFAULT_CONFIG, *,
                 enclosure: Rect | None = None, cell_degree: int | None = None, tol: float = ORBIT_TOL,
                 evaluator=None) -> PeriodicOrbit:
    """Polish a seed into a periodic orbit turning ``i`` times clockwise.

    Newton first; if it fails (or lands on an orbit with another rotation)
    and an enclosure is given, the enclosure is subdivided further by degree
    and Newton restarted from the centres of the surviving cells.
    """
    try:
        return _orbit_from_newton(field, seed, i, cfg, enclosure, cell_degree, tol)
    except NoConvergence as exc:
        first = exc
    if enclosure is None or i is None:
        raise NoConvergence(str(first), cell=enclosure)
    d = math.hypot(enclosure.x1 - enclosure.x0, enclosure.y1 - enclosure.y0)
    tree = localize(field, enclosure, i, 12, cfg, evaluator=evaluator, min_diam=d * 1e-3, root=enclosure)
    for c in tree.hits():
        try:
            return _orbit_from_newton(field, c.rect.center, i, cfg, enclosure, cell_degree, tol)
        except NoConvergence:
            continue
    raise NoConvergence(f"{first}; degree bisection did not help", cell=enclosure)


def _orbit_from_newton(field, seed, i, cfg, enclosure, cell_degree, tol, bounds=None, max_iter=100):
    x, res, dth, _ = newton_fixed_point(field, seed, cfg, tol=tol, bounds=bounds, max_iter=max_iter)
    rot = dth / TWO_PI
    if float(np.hypot(*x)) < cfg.origin_clearance_eps:
        if i is not None:
            raise NoConvergence(f"converged to the origin, wanted rotation {i}", cell=enclosure)
        return PeriodicOrbit((float(x[0]), float(x[1])), None, res, enclosure, None, False, cell_degree,
                             float("nan"), "origin")
    k = int(round(rot))
    if abs(rot - k) > ROT_TOL:
        raise NoConvergence(f"rotation {rot:.9f} is not an integer", cell=enclosure)
    if i is not None and k != i:
        raise NoConvergence(f"converged to an orbit with rotation {k}, wanted {i}", cell=enclosure)
    return PeriodicOrbit((float(x[0]), float(x[1])), k, res, enclosure, None, False, cell_degree, rot)


# ---------------------------------------------------------------------------
# multipliers


def floquet_multipliers(field, orbit, cfg: IntegratorConfig = DEFAULT_CONFIG, *, scale: float | None = None):
    """Eigenvalues of the central-difference monodromy at an orbit (step ``1e-6 * scale``)."""
    x = np.asarray(orbit.point if hasattr(orbit, "point") else orbit, dtype=float)
    if scale is None:
        scale = max(1.0, float(np.hypot(*x)))
    h = 1e-6 * scale
    e = np.array([[h, 0.0], [-h, 0.0], [0.0, h], [0.0, -h]])
    try:
        end = flow_summary(field, x + e, cfg).end
    except BlowUp as exc:
        raise IllConditioned(f"monodromy stencil blows up: {exc}") from exc
    M = np.column_stack([(end[0] - end[1]) / (2 * h), (end[2] - end[3]) / (2 * h)])
    if not np.all(np.isfinite(M)) or np.linalg.cond(M) > 1e12:
        raise IllConditioned("finite-difference monodromy is singular or not finite")
    ev = np.linalg.eigvals(M)
    return tuple(sorted((complex(v) for v in ev), key=lambda z: (z.real, z.imag)))


# ---------------------------------------------------------------------------
# search over an annulus


@dataclass
class SearchReport:
    orbits: list
    twist: TwistReport
    deg_inner: int
    deg_outer: int
    annulus_degrees: dict
    trees: dict
    guarantees: list
    failures: list = dc_field(default_factory=list)

    @property
    def guarantees_met(self):
        return all(g["met"] for g in self.guarantees)

    def to_json(self):
        return {"op": "locate", "twist": self.twist.to_json(), "deg_inner": self.deg_inner,
                "deg_outer": self.deg_outer,
                "annulus_degrees": {str(k): v for k, v in sorted(self.annulus_degrees.items())},
                "bookkeeping": {str(k): {"root": t.root.degree, "level_sums": t.level_sums(),
                                         "ok": t.bookkeeping_ok()} for k, t in sorted(self.trees.items())},
                "guarantees": self.guarantees, "failures": self.failures,
                "orbits": [o.to_json() for o in self.orbits]}


def in_annulus(ann: GeneralizedAnnulus, p, tol=1e-12) -> bool:
    if ann.outer_ball is not None and ann.inner_ball is not None:
        c = ann.outer_ball.center
        r = math.hypot(p[0] - c[0], p[1] - c[1])
        return ann.inner_ball.radius - tol <= r <= ann.outer_ball.radius + tol
    return ann.outer.winding_about(p) == 1 and ann.inner.winding_about(p) == 0


def _dedupe(orbits, sep):
    out = []
    for o in orbits:
        if all(math.hypot(o.point[0] - q.point[0], o.point[1] - q.point[1]) > sep for q in out):
            out.append(o)
    return out


def find_all_report(field, ann: GeneralizedAnnulus, cfg: IntegratorConfig = DEFAULT_CONFIG, *,
                    max_depth: int = 16, sweep: bool = True, sweep_n: int = 64, strict: bool = True,
                    multipliers: bool = True, evaluator=None) -> SearchReport:
    """Every periodic orbit the degree bookkeeping guarantees in ``ann``, plus a best-effort sweep.

    For each index ``i`` whose annulus degree of ``G_i`` is nonzero the
    annulus is subdivided and every nonzero leaf refined by Newton.  When the
    inner and outer period-map degrees both vanish the inner ball is searched
    too.  A residual sweep on a ``sweep_n`` square grid then looks for orbits
    of index zero, which carry no certificate.
    """
    ev = evaluator or BoundaryEvaluator(field, cfg)
    twist = check_twist(field, ann, cfg, evaluator=ev)
    deg_in = brouwer_deg_fT(field, ann.inner, cfg, evaluator=ev).value
    deg_out = brouwer_deg_fT(field, ann.outer, cfg, evaluator=ev).value
    s_in, s_out = twist.sigma_in.sigma_possible, twist.sigma_out.sigma_possible
    idx = sorted(set(s_in) | set(s_out))
    cand = range(idx[0], idx[-1] + 1) if idx else ()
    ann_deg, trees, found, failures = {}, {}, [], []
    for i in cand:
        d = dee_degree(field, ann, i, cfg, evaluator=ev).value
        ann_deg[i] = d
        if d == 0:
            continue
        tree = localize(field, ann, i, max_depth, cfg, evaluator=ev)
        trees[i] = tree
        found += _refine_hits(field, tree, i, cfg, ev, failures, "annulus")
    if deg_in == 0 and deg_out == 0 and ann.inner_ball is not None:
        for i in s_in:
            if dee_degree(field, ann.inner, i, cfg, evaluator=ev).value == 0:
                continue
            tree = localize(field, ann.inner_ball, i, max_depth, cfg, evaluator=ev)
            trees[("inner", i)] = tree
            found += _refine_hits(field, tree, i, cfg, ev, failures, "inner")
    sep = 1e-4 * ann.scale
    found = [o for o in found if o.location != "annulus" or in_annulus(ann, o.point)]
    orbits = _dedupe(found, sep)
    if sweep:
        extra = _sweep(field, ann, cfg, sweep_n)
        orbits = _dedupe(orbits + extra, sep)
    if multipliers:
        for o in orbits:
            try:
                o.multipliers = floquet_multipliers(field, o, cfg)
            except IllConditioned:
                o.multipliers = None
    guarantees = []
    certified = [o for o in orbits if not o.best_effort and o.location == "annulus"]
    for side, deg, sig in (("inner", deg_in, s_in), ("outer", deg_out, s_out)):
        if twist.twist and deg != 1:
            met = any(o.rotation in sig for o in certified)
            guarantees.append({"boundary": side, "degree": deg, "sigma": list(sig), "met": met})
    rep = SearchReport(orbits, twist, deg_in, deg_out, ann_deg, trees, guarantees, failures)
    if strict and not rep.guarantees_met:
        raise GuaranteeViolation(f"missing guaranteed orbit: {[g for g in guarantees if not g['met']]}")
    if strict and not all(t.bookkeeping_ok() for t in trees.values()):
        raise GuaranteeViolation("cell-tree degree bookkeeping does not balance")
    return rep


def find_all(field, ann: GeneralizedAnnulus, cfg: IntegratorConfig = DEFAULT_CONFIG, **kw) -> list:
    """Periodic orbits in ``ann``; see :func:`find_all_report`."""
    return find_all_report(field, ann, cfg, **kw).orbits


def _refine_hits(field, tree, i, cfg, ev, failures, location):
    out = []
    for c in tree.hits():
        try:
            o = refine_orbit(field, c.rect.center, i, cfg, enclosure=c.rect, cell_degree=c.degree, evaluator=ev)
        except NoConvergence as exc:
            failures.append({"i": i, "cell": c.rect.spec(), "error": str(exc)})
            continue
        o.location = location
        out.append(o)
    return out


def _sweep(field, ann, cfg, n):
    b = _bounding_square(ann)
    xs = np.linspace(b.x0, b.x1, n)
    ys = np.linspace(b.y0, b.y1, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = np.array([in_annulus(ann, p) for p in pts])
    val = np.full(len(pts), np.inf)
    end, _ = _period_map(field, pts[inside], cfg)
    val[inside] = np.hypot(*(end - pts[inside]).T) / np.maximum(1.0, np.hypot(*pts[inside].T))
    val[~np.isfinite(val)] = np.inf
    V = val.reshape(n, n)
    pad = np.pad(V, 1, constant_values=np.inf)
    nb = np.min([pad[1 + a:n + 1 + a, 1 + c:n + 1 + c] for a in (-1, 0, 1) for c in (-1, 0, 1)
                 if a or c], axis=0)
    mins = np.flatnonzero(((V <= nb) & np.isfinite(V)).ravel())
    finite = val[np.isfinite(val)]
    if not finite.size:
        return []
    # only basins that are markedly deeper than the typical displacement
    mins = mins[val[mins] < 0.1 * np.median(finite)]
    mins = mins[np.argsort(val[mins])][:16]
    box = Rect(2 * b.x0 - b.x1, 2 * b.y0 - b.y1, 2 * b.x1 - b.x0, 2 * b.y1 - b.y0)
    out = []
    for k in mins:
        try:
            o = _orbit_from_newton(field, pts[k], None, cfg, None, None, ORBIT_TOL, box, 40)
        except NoConvergence:
            continue
        if o.rotation is None or not in_annulus(ann, o.point):
            continue
        o.best_effort = True
        out.append(o)
    return out


__all__ = ["PeriodicOrbit", "Cell", "CellTree", "SearchReport", "localize", "refine_orbit",
           "newton_fixed_point", "floquet_multipliers", "find_all", "find_all_report", "in_annulus"]
