"""Pure numpy implementations of the hot kernels.

Every function here has a twin in ``_ckernels.pyx`` with the same signature
(except that the C version takes a kernel id instead of a Python callable).
The two must follow the same step schedule so that their outputs agree to
rounding error.
"""
from __future__ import annotations

import math

import numpy as np

OK, BLOWUP = 0, 1


def segment_steps(knots, h_max):
    """Number of equal RK4 steps for each segment between consecutive knots."""
    knots = np.asarray(knots, dtype=float)
    lengths = np.diff(knots)
    return np.maximum(1, np.ceil(lengths / h_max - 1e-9)).astype(np.int64)


def segment_end(b):
    """Latest time at which a segment ending at ``b`` evaluates its right-hand side.

    Stages never sample the field exactly at a knot, so a jump at ``b`` is
    seen from the left.
    """
    return b - 1e-12 * max(1.0, abs(b))


def cw_increment(x0, y0, x1, y1):
    # clockwise angle swept from (x0, y0) to (x1, y1), in (-pi, pi]
    return -np.arctan2(x0 * y1 - y0 * x1, x0 * x1 + y0 * y1)


def rk4_flow(rhs, z0, knots, h_max, norm_cap):
    """Integrate a batch of start points with fixed-step RK4, lifting the angle.

    Returns ``(end, dtheta, max_step, min_r, status)`` where ``dtheta`` is the
    accumulated clockwise angle, ``max_step`` the largest single-step angular
    increment and ``min_r`` the smallest radius seen (start point included).
    """
    z = np.array(z0, dtype=float, copy=True).reshape(-1, 2)
    n = z.shape[0]
    dtheta = np.zeros(n)
    max_step = np.zeros(n)
    min_r = np.hypot(z[:, 0], z[:, 1])
    status = np.zeros(n, dtype=np.int64)
    alive = np.isfinite(z).all(axis=1) & (min_r <= norm_cap)
    status[~alive] = BLOWUP
    steps = segment_steps(knots, h_max)
    for k in range(len(steps)):
        t = float(knots[k])
        h = (float(knots[k + 1]) - t) / steps[k]
        te = segment_end(float(knots[k + 1]))
        for j in range(int(steps[k])):
            tj = t + j * h
            if not alive.any():
                break
            za = z[alive]
            k1 = rhs(tj, za)
            k2 = rhs(min(tj + 0.5 * h, te), za + 0.5 * h * k1)
            k3 = rhs(min(tj + 0.5 * h, te), za + 0.5 * h * k2)
            k4 = rhs(min(tj + h, te), za + h * k3)
            zn = za + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            rn = np.hypot(zn[:, 0], zn[:, 1])
            bad = ~(rn <= norm_cap)
            idx = np.flatnonzero(alive)
            if bad.any():
                dead = idx[bad]
                status[dead] = BLOWUP
                alive[dead] = False
                keep = ~bad
                idx, za, zn, rn = idx[keep], za[keep], zn[keep], rn[keep]
            inc = cw_increment(za[:, 0], za[:, 1], zn[:, 0], zn[:, 1])
            dtheta[idx] += inc
            max_step[idx] = np.maximum(max_step[idx], np.abs(inc))
            min_r[idx] = np.minimum(min_r[idx], rn)
            z[idx] = zn
    return z, dtheta, max_step, min_r, status


def winding_sum(wx, wy):
    """Total signed (counter-clockwise) angle of the closed polygon ``w`` about 0.

    Returns ``(total, max_abs_step)``; the polygon closes from the last sample
    back to the first.
    """
    wx = np.asarray(wx, dtype=float)
    wy = np.asarray(wy, dtype=float)
    nx, ny = np.roll(wx, -1), np.roll(wy, -1)
    inc = np.arctan2(wx * ny - wy * nx, wx * nx + wy * ny)
    return float(math.fsum(inc)), float(np.max(np.abs(inc))) if inc.size else 0.0
