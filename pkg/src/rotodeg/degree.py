"""Certified winding numbers, Brouwer degree and the rotation-resolved degree.

The rotation-resolved degree of ``F_T - nu_i`` (``nu_i = (2 pi i, 0)``) over a
region ``U`` is the Brouwer degree of an extension of ``F_T o Psi^{-1}`` to
``U``.  A planar Brouwer degree depends only on boundary values, so it equals
the winding number of ``F_T o Psi^{-1} - nu_i`` along ``dU`` and no
extension is ever constructed.
"""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import kernels
from .boundary import (Ball, GeneralizedAnnulus, boundary_components, double_many, origin_position,
                       refine_many)
from .errors import BoundaryZero, OriginCrossing
from .flow import DEFAULT_CONFIG, IntegratorConfig, NullSetHit, flow_summary

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi
CLEARANCE_TOL = 1e-8
INTEGER_MARGIN = 1e-4
SIGMA_STEP = 0.05


class IntegerGrazingWarning(UserWarning):
    """An integer lies within the margin of an endpoint of the rotation hull."""


@dataclass(frozen=True)
class IntegerTarget:
    i: int

    @property
    def value(self):
        return (TWO_PI * self.i, 0.0)


def nu(i: int) -> np.ndarray:
    return np.array(IntegerTarget(int(i)).value)


@dataclass
class DegreeReport:
    value: int
    boundary_clearance: float
    max_angular_step: float
    samples_used: int
    certified: bool
    op: str = "winding"
    region: str = ""
    relative_clearance: float = float("nan")

    def to_json(self):
        return {"op": self.op, "region": self.region, "value": int(self.value),
                "certified": bool(self.certified), "clearance": self.boundary_clearance,
                "samples": int(self.samples_used), "max_angular_step": self.max_angular_step}


@dataclass
class RotationSummary:
    min_rot: float
    max_rot: float
    sigma: tuple
    clearance_to_integers: float
    samples: int = 0
    integer_margin: float = INTEGER_MARGIN

    @property
    def grazing(self) -> bool:
        return self.clearance_to_integers < self.integer_margin

    @property
    def sigma_possible(self) -> tuple:
        """Integers in the hull widened by the margin."""
        return _ints_in(self.min_rot - self.integer_margin, self.max_rot + self.integer_margin)

    @property
    def sigma_certain(self) -> tuple:
        """Integers in the hull shrunk by the margin."""
        return _ints_in(self.min_rot + self.integer_margin, self.max_rot - self.integer_margin)

    def to_json(self):
        return {"min_rot": self.min_rot, "max_rot": self.max_rot, "sigma": list(self.sigma),
                "clearance_to_integers": self.clearance_to_integers, "grazing": self.grazing,
                "samples": self.samples}


def _ints_in(lo, hi):
    if hi < lo:
        return ()
    return tuple(range(math.ceil(lo), math.floor(hi) + 1))


def rotation_summary(rotations, margin=INTEGER_MARGIN) -> RotationSummary:
    rot = np.asarray(rotations, dtype=float)
    lo, hi = float(rot.min()), float(rot.max())
    clr = min(abs(lo - round(lo)), abs(hi - round(hi)))
    return RotationSummary(lo, hi, _ints_in(lo, hi), clr, len(rot), margin)


# ---------------------------------------------------------------------------
# winding numbers


def _winding_of_values(values, target, backend=None):
    w = values - target
    total, mstep = kernels.winding_sum(w[:, 0], w[:, 1], backend=backend)
    return total, mstep, float(np.min(np.hypot(w[:, 0], w[:, 1])))


def _angle_split(target):
    def needs_split(va, vb):
        a, b = va - target, vb - target
        inc = np.arctan2(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0], a[:, 0] * b[:, 0] + a[:, 1] * b[:, 1])
        return np.abs(inc) >= HALF_PI
    return needs_split


def winding_many(g, curves, target=(0.0, 0.0), *, clearance_tol=CLEARANCE_TOL, max_depth=40,
                 op="winding", backend=None, confirm=3):
    """Winding number of ``g - target`` along each curve, with one shared evaluation batch.

    Each curve is refined until every angular step of ``g - target`` between
    adjacent samples is below ``pi/2``; then every segment is halved and the
    refinement repeated.  A count that changes under doubling is re-examined
    up to ``confirm`` times and otherwise left uncertified.

    Returns one entry per curve: a :class:`DegreeReport`, or a
    :class:`BoundaryZero` instance when ``min |g - target|`` over the samples,
    divided by the curve's scale, is below ``clearance_tol``.
    """
    target = np.asarray(target, dtype=float)
    split = _angle_split(target)
    curves = list(curves)
    out = [None] * len(curves)
    prev = [None] * len(curves)
    todo = list(range(len(curves)))
    for rnd in range(confirm + 2):
        if not todo:
            break
        if rnd:
            fresh = double_many([curves[k] for k in todo], g)
            for k, c in zip(todo, fresh):
                curves[k] = c
        refined = refine_many([curves[k] for k in todo], split, max_depth, g)
        nxt = []
        for k, (curve, limited) in zip(todo, refined):
            curves[k] = curve
            total, mstep, clr = _winding_of_values(curve.values, target, backend)
            rel = clr / curve.scale
            if rel < clearance_tol:
                j = int(np.argmin(np.hypot(*(curve.values - target).T)))
                out[k] = BoundaryZero(f"|g - target| = {clr:.3g} on {curve.label}",
                                      point=tuple(curve.points[j]), clearance=clr)
                continue
            w = total / TWO_PI
            n = int(round(w))
            certified = (not limited) and mstep < HALF_PI and abs(w - n) < 1e-6
            stable = prev[k] is not None and prev[k] == n
            out[k] = DegreeReport(curve.orientation * n, clr, mstep, len(curve),
                                  bool(certified and stable), op, curve.label, rel)
            if not stable and certified:
                nxt.append(k)
            prev[k] = n
        todo = nxt
    return out


def winding_components(g, components, target=(0.0, 0.0), *, op="winding", region="", **kw) -> DegreeReport:
    """Orientation-signed sum of winding numbers over ``(curve, sign)`` components.

    Raises ``BoundaryZero`` if any component fails the clearance test.
    """
    reps = winding_many(g, [c for c, _ in components], target, op=op, **kw)
    for r in reps:
        if isinstance(r, BoundaryZero):
            raise r
    return DegreeReport(
        int(sum(sign * r.value for r, (_, sign) in zip(reps, components))),
        min(r.boundary_clearance for r in reps), max(r.max_angular_step for r in reps),
        sum(r.samples_used for r in reps), all(r.certified for r in reps), op, region,
        min(r.relative_clearance for r in reps))


def winding_number(g, curve, target=(0.0, 0.0), **kw) -> DegreeReport:
    """Winding number of ``g - target`` along one oriented curve."""
    return winding_components(g, [(curve, 1)], target, region=kw.pop("region", curve.label), **kw)


# ---------------------------------------------------------------------------
# period-map evaluation with caching


class BoundaryEvaluator:
    """Caches one-period flow summaries of a field, keyed by start point.

    Degree computations for several targets (and the Σ set) revisit the same
    boundary samples; every batch of new points is integrated in one call.
    """

    def __init__(self, field, cfg: IntegratorConfig = DEFAULT_CONFIG):
        self.field = field
        self.cfg = cfg
        self._cache: dict[bytes, np.ndarray] = {}
        self._lock = threading.Lock()
        self.integrations = 0

    def summary(self, points) -> np.ndarray:
        """Rows ``(end_x, end_y, dtheta, max_step, min_r)`` for each point."""
        pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 2))
        keys = [p.tobytes() for p in pts]
        with self._lock:
            todo = [k for k, key in enumerate(keys) if key not in self._cache]
        if todo:
            uniq = {}
            for k in todo:
                uniq.setdefault(keys[k], k)
            idx = list(uniq.values())
            s = flow_summary(self.field, pts[idx], self.cfg)
            rows = np.column_stack([s.end, s.dtheta, s.max_step, s.min_r])
            with self._lock:
                self.integrations += len(idx)
                for k, row in zip(idx, rows):
                    self._cache[keys[k]] = row
        with self._lock:
            return np.array([self._cache[key] for key in keys]).reshape(-1, 5)

    def fT(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return self.summary(pts)[:, :2] - pts

    def FT(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        s = self.summary(pts)
        low = np.flatnonzero(s[:, 4] < self.cfg.origin_clearance_eps)
        if low.size:
            raise OriginCrossing(f"{low.size} boundary trajectories reach the origin",
                                 [NullSetHit(tuple(pts[k]), float("nan")) for k in low])
        dr = np.hypot(s[:, 0], s[:, 1]) - np.hypot(pts[:, 0], pts[:, 1])
        return np.column_stack([s[:, 2], dr])

    def rotation(self, points):
        return self.FT(points)[:, 0] / TWO_PI


def _evaluator(field, cfg, evaluator):
    if evaluator is not None:
        return evaluator
    return BoundaryEvaluator(field, cfg)


def _region_label(region):
    return region.spec() if hasattr(region, "spec") else str(region)


def brouwer_deg_fT(field, region, cfg: IntegratorConfig = DEFAULT_CONFIG, *, evaluator=None,
                   **kw) -> DegreeReport:
    """``deg(f_T, U, 0)`` from the boundary winding of ``f_T``."""
    ev = _evaluator(field, cfg, evaluator)
    return winding_components(ev.fT, boundary_components(region), (0.0, 0.0),
                              op="deg_fT", region=_region_label(region), **kw)


def dee_degree(field, region, i: int, cfg: IntegratorConfig = DEFAULT_CONFIG, *, evaluator=None,
               **kw) -> DegreeReport:
    """Rotation-resolved degree of ``F_T`` at ``nu_i`` over ``region``."""
    ev = _evaluator(field, cfg, evaluator)
    return winding_components(ev.FT, boundary_components(region), nu(i),
                              op=f"dee[{int(i)}]", region=_region_label(region), **kw)


def sigma_set(field, region, cfg: IntegratorConfig = DEFAULT_CONFIG, *, evaluator=None,
              max_depth=40, margin=INTEGER_MARGIN) -> RotationSummary:
    """Rotation hull and the integers it contains, over every boundary sample.

    Samples are refined until adjacent rotations differ by less than 0.05.
    Emits :class:`IntegerGrazingWarning` when a hull endpoint is within
    ``margin`` of an integer.
    """
    ev = _evaluator(field, cfg, evaluator)
    comps = boundary_components(region)

    def needs_split(va, vb):
        return np.abs(va[:, 0] - vb[:, 0]) >= SIGMA_STEP * TWO_PI

    refined = refine_many([c for c, _ in comps], needs_split, max_depth, ev.FT)
    rot = np.concatenate([c.values[:, 0] for c, _ in refined]) / TWO_PI
    summ = rotation_summary(rot, margin)
    if summ.grazing:
        warnings.warn(f"rotation hull [{summ.min_rot:.6f}, {summ.max_rot:.6f}] grazes an integer",
                      IntegerGrazingWarning, stacklevel=2)
    return summ


# ---------------------------------------------------------------------------
# verifiers


@dataclass
class DecompositionReport:
    lhs: int
    rhs: int
    holds: bool
    per_i: dict
    origin: str
    sigma: RotationSummary
    reports: list = dc_field(default_factory=list)
    certified: bool = True
    region: str = ""

    def to_json(self):
        return {"op": "decomposition", "region": self.region, "lhs": self.lhs, "rhs": self.rhs,
                "holds": self.holds, "certified": self.certified, "origin": self.origin,
                "per_i": {str(k): v for k, v in sorted(self.per_i.items())},
                "sigma": self.sigma.to_json(), "reports": [r.to_json() for r in self.reports]}


def verify_decomposition(field, region, cfg: IntegratorConfig = DEFAULT_CONFIG, *,
                         evaluator=None) -> DecompositionReport:
    """Check ``deg(f_T, U, 0) = [0 in U] + sum over i in Sigma of D(F_T, U, nu_i)``.

    The sum runs over the integers within the margin of the rotation hull;
    any extra index contributes 0, so a grazing integer cannot bias the sum.
    """
    ev = _evaluator(field, cfg, evaluator)
    pos = origin_position(region, margin=1e-12)
    if pos == "boundary":
        raise ValueError("origin lies on the region boundary")
    lhs = brouwer_deg_fT(field, region, cfg, evaluator=ev)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegerGrazingWarning)
        summ = sigma_set(field, region, cfg, evaluator=ev)
    per_i, reports = {}, [lhs]
    for i in summ.sigma_possible:
        rep = dee_degree(field, region, i, cfg, evaluator=ev)
        per_i[i] = rep.value
        reports.append(rep)
    rhs = (1 if pos == "inside" else 0) + sum(per_i.values())
    certified = all(r.certified for r in reports)
    return DecompositionReport(lhs.value, rhs, bool(certified and lhs.value == rhs), per_i, pos, summ,
                               reports, certified, _region_label(region))


@dataclass
class AnnulusConsistency:
    i: int
    direct: DegreeReport
    outer: DegreeReport
    inner: DegreeReport

    @property
    def holds(self):
        return (self.direct.certified and self.outer.certified and self.inner.certified
                and self.direct.value == self.outer.value - self.inner.value)

    def to_json(self):
        return {"op": f"annulus_consistency[{self.i}]", "direct": self.direct.to_json(),
                "outer": self.outer.to_json(), "inner": self.inner.to_json(), "holds": self.holds}


def annulus_consistency(field, ann: GeneralizedAnnulus, i: int, cfg: IntegratorConfig = DEFAULT_CONFIG,
                        *, evaluator=None, direct_n0: int = 97) -> AnnulusConsistency:
    """Degree over the annulus computed directly versus as outer minus inner.

    The direct side uses its own sampling density and a single combined
    refinement over both boundary curves.
    """
    ev = _evaluator(field, cfg, evaluator)
    comps = [(ann.outer.resampled(direct_n0), 1), (ann.inner.resampled(direct_n0), -1)]
    direct = winding_components(ev.FT, comps, nu(i), op=f"deg_annulus[{i}]", region=ann.spec())
    outer = winding_components(ev.FT, [(ann.outer, 1)], nu(i), op=f"dee[{i}]", region=ann.outer.label)
    inner = winding_components(ev.FT, [(ann.inner, 1)], nu(i), op=f"dee[{i}]", region=ann.inner.label)
    return AnnulusConsistency(int(i), direct, outer, inner)


@dataclass
class TwistReport:
    twist: bool | None
    sigma_in: RotationSummary
    sigma_out: RotationSummary

    @property
    def indeterminate(self):
        return self.twist is None

    def to_json(self):
        return {"op": "twist", "twist": self.twist, "indeterminate": self.indeterminate,
                "sigma_in": self.sigma_in.to_json(), "sigma_out": self.sigma_out.to_json()}


def check_twist(field, ann: GeneralizedAnnulus, cfg: IntegratorConfig = DEFAULT_CONFIG, *,
                evaluator=None) -> TwistReport:
    """Twist holds when the Σ sets of the inner and outer boundaries are disjoint.

    A grazing integer only makes the answer indeterminate when it can change
    it: disjointness is decided on the margin-widened sets, overlap on the
    margin-shrunk ones.
    """
    ev = _evaluator(field, cfg, evaluator)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegerGrazingWarning)
        s_in = sigma_set(field, ann.inner, cfg, evaluator=ev)
        s_out = sigma_set(field, ann.outer, cfg, evaluator=ev)
    if not set(s_in.sigma_possible) & set(s_out.sigma_possible):
        twist = True
    elif set(s_in.sigma_certain) & set(s_out.sigma_certain):
        twist = False
    else:
        twist = None
    return TwistReport(twist, s_in, s_out)


def ball_pair(ann: GeneralizedAnnulus):
    """The inner and outer balls of an annulus built by :func:`boundary.annulus`."""
    if ann.inner_ball is None or ann.outer_ball is None:
        raise ValueError("annulus was not built from balls")
    return ann.inner_ball, ann.outer_ball


__all__ = [
    "BoundaryEvaluator", "DegreeReport", "RotationSummary", "IntegerTarget", "winding_number",
    "winding_many", "winding_components", "brouwer_deg_fT", "dee_degree", "sigma_set", "verify_decomposition",
    "annulus_consistency", "check_twist", "nu", "Ball",
]
