"""Evolution maps, angle lifts and rotation numbers.

Angles use the clockwise chart ``(theta, r) -> (r cos theta, -r sin theta)``,
so clockwise motion increases ``theta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from ._pykernels import segment_end
from .errors import BlowUp, OriginCrossing, RefinementLimit, StepLimit
from .vectorfield import TimeVaryingField

HALF_PI = 0.5 * math.pi
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4_fixed"
    step_h: float = 5e-4
    abs_tol: float = 1e-11
    rel_tol: float = 1e-11
    max_steps: int = 5_000_000
    origin_clearance_eps: float = 1e-10
    max_refinements: int = 20
    backend: str | None = None

    def __post_init__(self):
        if self.method not in ("rk4_fixed", "rk45_adaptive"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.step_h > 0:
            raise ValueError("step_h must be positive")
        if not (0 < self.abs_tol <= 1e-2 and 0 < self.rel_tol <= 1e-2):
            raise ValueError("abs_tol and rel_tol must lie in (0, 1e-2]")
        if not self.origin_clearance_eps > 0:
            raise ValueError("origin_clearance_eps must be positive")

    def refined(self, factor=2.0):
        """A config with the step halved (or tolerances tightened) by ``factor``."""
        if self.method == "rk4_fixed":
            return replace(self, step_h=self.step_h / factor)
        return replace(self, abs_tol=self.abs_tol / factor ** 5, rel_tol=self.rel_tol / factor ** 5)


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True)
class NullSetHit:
    start_point: tuple
    hit_time: float


@dataclass
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    field: TimeVaryingField | None = None


@dataclass
class LiftedPath:
    times: np.ndarray
    points: np.ndarray
    theta: np.ndarray
    r: np.ndarray


@dataclass
class FlowSummary:
    """Endpoint data for a batch of trajectories over one time interval."""

    start: np.ndarray
    end: np.ndarray
    dtheta: np.ndarray
    max_step: np.ndarray
    min_r: np.ndarray

    @property
    def fT(self):
        return self.end - self.start

    @property
    def FT(self):
        dr = np.hypot(self.end[:, 0], self.end[:, 1]) - np.hypot(self.start[:, 0], self.start[:, 1])
        return np.column_stack([self.dtheta, dr])

    @property
    def rotation(self):
        return self.dtheta / TWO_PI


def chart(theta, r):
    """The clockwise polar chart ``Psi``."""
    theta = np.asarray(theta, dtype=float)
    r = np.asarray(r, dtype=float)
    return np.stack([r * np.cos(theta), -r * np.sin(theta)], axis=-1)


def chart_inverse(z):
    """Canonical preimage under ``Psi`` with ``theta`` in ``[0, 2 pi)``."""
    z = np.asarray(z, dtype=float)
    theta = np.mod(np.arctan2(-z[..., 1], z[..., 0]), TWO_PI)
    return theta, np.hypot(z[..., 0], z[..., 1])


def knots(field: TimeVaryingField, t0: float, t1: float):
    """Integration knots on ``[t0, t1]``: endpoints plus every field discontinuity.

    When a field has breakpoints its period boundaries are jumps too.
    """
    pts = {float(t0), float(t1)}
    T = field.period
    marks = tuple(field.breakpoints) + ((0.0,) if field.breakpoints else ())
    for b in marks:
        k = math.floor((t0 - b) / T)
        while True:
            tb = b + k * T
            if tb >= t1:
                break
            if tb > t0:
                pts.add(tb)
            k += 1
    return np.array(sorted(pts))


def _check_steps(kn, h, cfg):
    steps = int(np.sum(np.maximum(1, np.ceil(np.diff(kn) / h - 1e-9))))
    if steps > cfg.max_steps:
        raise StepLimit(f"{steps} steps exceed max_steps={cfg.max_steps}")


def flow_summary(field: TimeVaryingField, z0, cfg: IntegratorConfig = DEFAULT_CONFIG,
                 t1: float | None = None, t0: float = 0.0, *, blowup: str = "raise") -> FlowSummary:
    """Integrate every row of ``z0`` from ``t0`` to ``t1`` (default: one period).

    The angle is accumulated step by step; trajectories whose largest step
    subtends ``pi/2`` or more are re-integrated with a halved step.  With
    ``blowup="nan"`` trajectories that leave the norm cap get NaN endpoints
    instead of raising ``BlowUp``.
    """
    z0 = np.asarray(z0, dtype=float).reshape(-1, 2)
    t1 = field.period if t1 is None else float(t1)
    kn = knots(field, t0, t1)
    if t1 <= t0:
        n = len(z0)
        return FlowSummary(z0.copy(), z0.copy(), np.zeros(n), np.zeros(n), np.hypot(z0[:, 0], z0[:, 1]))
    if cfg.method == "rk4_fixed":
        end, dth, mstep, minr, status = _rk4_certified(field, z0, kn, cfg)
    else:
        end, dth, mstep, minr, status = _dp45_flow(field, z0, kn, cfg)
    if np.any(status) and blowup == "nan":
        dead = status.astype(bool)
        end[dead] = np.nan
        dth[dead] = np.nan
    elif np.any(status):
        bad = z0[status.astype(bool)]
        raise BlowUp(f"{len(bad)} trajectories exceeded norm_cap={field.norm_cap}", start_points=bad)
    return FlowSummary(z0.copy(), end, dth, mstep, minr)


def _rk4_certified(field, z0, kn, cfg):
    h = cfg.step_h
    _check_steps(kn, h, cfg)
    out = kernels.rk4_flow(field, z0, kn, h, backend=cfg.backend)
    end, dth, mstep, minr, status = (np.array(a) for a in out)
    redo = np.flatnonzero((mstep >= HALF_PI) & (status == 0))
    level = 0
    while redo.size:
        level += 1
        if level > cfg.max_refinements:
            raise RefinementLimit(f"angular step still >= pi/2 after {cfg.max_refinements} halvings")
        h *= 0.5
        _check_steps(kn, h, cfg)
        sub = kernels.rk4_flow(field, z0[redo], kn, h, backend=cfg.backend)
        for arr, new in zip((end, dth, mstep, minr, status), sub):
            arr[redo] = new
        redo = redo[(mstep[redo] >= HALF_PI) & (status[redo] == 0)]
    return end, dth, mstep, minr, status


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_E = _DP_B - np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])


def _dp45_step(rhs, t, z, h, te):
    ks = []
    for i in range(7):
        zi = z
        for a, k in zip(_DP_A[i], ks):
            if a:
                zi = zi + h * a * k
        ks.append(rhs(min(t + _DP_C[i] * h, te), zi))
    znew = z + h * sum(b * k for b, k in zip(_DP_B, ks) if b)
    err = h * sum(e * k for e, k in zip(_DP_E, ks) if e)
    return znew, err


def _dp45_flow(field, z0, kn, cfg, record=False):
    """Batch Dormand-Prince with a step shared by the whole batch."""
    z = z0.copy()
    n = len(z)
    dth = np.zeros(n)
    mstep = np.zeros(n)
    minr = np.hypot(z[:, 0], z[:, 1])
    status = (~(minr <= field.norm_cap)).astype(np.int64)
    alive = status == 0
    times, points = [float(kn[0])], [z.copy()]
    nsteps = 0
    for seg in range(len(kn) - 1):
        t, tend = float(kn[seg]), float(kn[seg + 1])
        te = segment_end(tend)
        h = min(tend - t, 1e-2 * (tend - t) + 1e-3)
        while t < tend and alive.any():
            h = min(h, tend - t)
            idx = np.flatnonzero(alive)
            za = z[idx]
            zn, err = _dp45_step(field.rhs, t, za, h, te)
            nsteps += 1
            if nsteps > cfg.max_steps:
                raise StepLimit(f"adaptive integration exceeded max_steps={cfg.max_steps}")
            rn = np.hypot(zn[:, 0], zn[:, 1])
            over = ~(rn <= field.norm_cap)
            if over.any():
                status[idx[over]] = 1
                alive[idx[over]] = False
                continue
            scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(za), np.abs(zn))
            en = float(np.max(np.abs(err) / scale))
            inc = -np.arctan2(za[:, 0] * zn[:, 1] - za[:, 1] * zn[:, 0],
                              za[:, 0] * zn[:, 0] + za[:, 1] * zn[:, 1])
            if en > 1.0 or np.any(np.abs(inc) >= HALF_PI):
                h *= max(0.2, 0.9 * en ** -0.2) if en > 1.0 else 0.5
                if h < 1e-14 * max(1.0, abs(tend)):
                    raise StepLimit("adaptive step size underflow")
                continue
            z[idx] = zn
            dth[idx] += inc
            mstep[idx] = np.maximum(mstep[idx], np.abs(inc))
            minr[idx] = np.minimum(minr[idx], rn)
            t = tend if tend - (t + h) < 1e-14 * max(1.0, abs(tend)) else t + h
            if record:
                times.append(t)
                points.append(z.copy())
            h *= min(5.0, 0.9 * en ** -0.2) if en > 0 else 5.0
    if record:
        return np.array(times), np.array(points), status
    return z, dth, mstep, minr, status


def evolve(field: TimeVaryingField, x0, t1: float | None = None,
           cfg: IntegratorConfig = DEFAULT_CONFIG, t0: float = 0.0) -> Trajectory:
    """Integrate a single start point, recording every accepted step."""
    x0 = np.asarray(x0, dtype=float).reshape(2)
    if not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be finite")
    t1 = field.period if t1 is None else float(t1)
    kn = knots(field, t0, t1)
    if t1 <= t0:
        return Trajectory(np.array([t0]), x0[None, :].copy(), field)
    if cfg.method == "rk45_adaptive":
        times, pts, status = _dp45_flow(field, x0[None, :], kn, cfg, record=True)
        if status[0]:
            raise BlowUp(f"trajectory from {tuple(x0)} exceeded norm_cap", start_points=x0[None, :])
        return Trajectory(times, pts[:, 0, :], field)
    _check_steps(kn, cfg.step_h, cfg)
    times, pts = [float(t0)], [x0.copy()]
    z = x0[None, :].copy()
    rhs = field.rhs
    for seg in range(len(kn) - 1):
        n = int(max(1, math.ceil((kn[seg + 1] - kn[seg]) / cfg.step_h - 1e-9)))
        h = (kn[seg + 1] - kn[seg]) / n
        te = segment_end(float(kn[seg + 1]))
        for j in range(n):
            t = kn[seg] + j * h
            k1 = rhs(t, z)
            k2 = rhs(min(t + 0.5 * h, te), z + 0.5 * h * k1)
            k3 = rhs(min(t + 0.5 * h, te), z + 0.5 * h * k2)
            k4 = rhs(min(t + h, te), z + h * k3)
            z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.hypot(z[0, 0], z[0, 1]) <= field.norm_cap:
                raise BlowUp(f"trajectory from {tuple(x0)} exceeded norm_cap at t={t + h:.6g}",
                             start_points=x0[None, :])
            times.append(float(kn[seg + 1]) if j == n - 1 else t + h)
            pts.append(z[0].copy())
    return Trajectory(np.array(times), np.array(pts), field)


def lift_trajectory(traj: Trajectory, cfg: IntegratorConfig = DEFAULT_CONFIG,
                    seed_turns: int = 0) -> LiftedPath:
    """Continuous clockwise angle along a trajectory.

    ``theta[0]`` is the canonical angle in ``[0, 2 pi)`` plus ``2 pi * seed_turns``.
    Consecutive samples subtending ``pi/2`` or more are split by re-integrating
    the gap (never by interpolation).
    """
    times = list(np.asarray(traj.times, dtype=float))
    pts = [np.asarray(p, dtype=float) for p in traj.points]
    r = np.hypot(np.array(pts)[:, 0], np.array(pts)[:, 1])
    low = np.flatnonzero(r < cfg.origin_clearance_eps)
    if low.size:
        hit = NullSetHit(tuple(pts[0]), float(times[low[0]]))
        raise OriginCrossing(f"trajectory passes within {cfg.origin_clearance_eps} of the origin", [hit])
    out_t, out_p = [times[0]], [pts[0]]
    for k in range(len(pts) - 1):
        stack = [(times[k + 1], pts[k + 1], 0)]
        ta, za = times[k], pts[k]
        while stack:
            tb, zb, depth = stack[-1]
            if abs(_cw_inc(za, zb)) < HALF_PI:
                out_t.append(tb)
                out_p.append(zb)
                ta, za = tb, zb
                stack.pop()
                continue
            if traj.field is None:
                raise RefinementLimit("angular gap >= pi/2 and no field to re-integrate with")
            if depth >= cfg.max_refinements:
                raise RefinementLimit(f"angular gap not resolved after {depth} bisections")
            tm = 0.5 * (ta + tb)
            sub = flow_summary(traj.field, za[None, :], replace(cfg, step_h=min(cfg.step_h, (tm - ta) / 8)),
                               t1=tm, t0=ta)
            zm = sub.end[0]
            if np.hypot(*zm) < cfg.origin_clearance_eps or sub.min_r[0] < cfg.origin_clearance_eps:
                raise OriginCrossing("trajectory passes near the origin",
                                     [NullSetHit(tuple(pts[0]), float(tm))])
            stack.append((tm, zm, depth + 1))
    P = np.array(out_p)
    incs = np.array([_cw_inc(P[i], P[i + 1]) for i in range(len(P) - 1)])
    theta0, _ = chart_inverse(P[0])
    theta = float(theta0) + TWO_PI * seed_turns + np.concatenate([[0.0], np.cumsum(incs)])
    return LiftedPath(np.array(out_t), P, theta, np.hypot(P[:, 0], P[:, 1]))


def _cw_inc(a, b):
    return -math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1])


def _summary_checked(field, x0, cfg, need_lift):
    s = flow_summary(field, x0, cfg)
    if need_lift:
        low = np.flatnonzero(s.min_r < cfg.origin_clearance_eps)
        if low.size:
            hits = [NullSetHit(tuple(s.start[i]), float("nan")) for i in low]
            raise OriginCrossing(f"{len(low)} trajectories come within "
                                 f"{cfg.origin_clearance_eps} of the origin", hits)
    return s


def rotation_numbers(field, points, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    return _summary_checked(field, points, cfg, True).rotation


def rotation_number(field, x0, cfg: IntegratorConfig = DEFAULT_CONFIG) -> float:
    """Clockwise turns made by the solution from ``x0`` over one period."""
    return float(rotation_numbers(field, np.asarray(x0, dtype=float)[None, :], cfg)[0])


def displacement_fT(field, x0, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """``phi(T, x) - x``; accepts one point or an ``(n, 2)`` batch."""
    x0 = np.asarray(x0, dtype=float)
    out = _summary_checked(field, x0.reshape(-1, 2), cfg, False).fT
    return out.reshape(x0.shape)


def displacement_FT(field, x0, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Lifted displacement ``(delta theta, delta r)``; one point or a batch."""
    x0 = np.asarray(x0, dtype=float)
    out = _summary_checked(field, x0.reshape(-1, 2), cfg, True).FT
    return out.reshape(x0.shape)


def trajectory_csv(lifted: LiftedPath) -> str:
    lines = ["t,x,y,theta,r"]
    for t, p, th, r in zip(lifted.times, lifted.points, lifted.theta, lifted.r):
        lines.append(f"{t:.12g},{p[0]:.12g},{p[1]:.12g},{th:.12g},{r:.12g}")
    return "\n".join(lines) + "\n"
