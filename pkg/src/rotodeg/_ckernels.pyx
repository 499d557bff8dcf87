# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``.

The right-hand sides of the built-in scenarios are re-implemented here in C,
selected by the kernel id stored on the field (see ``vectorfield.K_*``).
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport atan2, cos, sin, fabs, fmod, hypot, ceil, isfinite, fmin

cnp.import_array()

cdef enum:
    K_RIGID = 0
    K_LINEAR = 1
    K_EXAMPLE51 = 2
    K_DUFFING = 3
    K_ASYMLIN = 4
    K_SPIRAL = 5
    K_PERTLIN = 6

cdef double TWO_PI = 6.283185307179586

KNOWN_KINDS = (K_RIGID, K_LINEAR, K_EXAMPLE51, K_DUFFING, K_ASYMLIN, K_SPIRAL, K_PERTLIN)


cdef inline double _tmod(double t, double T) noexcept nogil:
    cdef double r = fmod(t, T)
    if r < 0:
        r += T
    return r


cdef inline double _smoothstep(double u) noexcept nogil:
    if u <= 0.0:
        return 0.0
    if u >= 1.0:
        return 1.0
    return u * u * (3.0 - 2.0 * u)


cdef inline void _rhs(int kind, const double* p, double t, double x, double y,
                      double* dx, double* dy) noexcept nogil:
    cdef double c, s, ax, ay, tm, m, u
    if kind == K_RIGID:
        dx[0] = p[0] * y
        dy[0] = -p[0] * x
    elif kind == K_LINEAR:
        dx[0] = x * p[0] + y * p[1]
        dy[0] = x * p[2] + y * p[3]
    elif kind == K_EXAMPLE51:
        # p = (tau, T, r_in, r_out)
        tm = _tmod(t, p[1])
        s = _smoothstep((hypot(x, y) - p[2]) / (p[3] - p[2]))
        if tm < p[0]:
            c = TWO_PI / p[0]
            ax = c * y
            ay = -c * x
        else:
            ax = -x
            ay = y
        dx[0] = (1.0 - s) * ax + s * (-x)
        dy[0] = (1.0 - s) * ay + s * y
    elif kind == K_DUFFING:
        # p = (k1, k3, eps, T)
        m = p[0] + p[2] * cos((TWO_PI / p[3]) * _tmod(t, p[3]))
        dx[0] = y
        dy[0] = -m * x - p[1] * x * x * x
    elif kind == K_ASYMLIN:
        # p = (lam0, laminf, eps, T)
        m = 1.0 + p[2] * cos((TWO_PI / p[3]) * _tmod(t, p[3]))
        u = x
        dx[0] = y
        dy[0] = -m * (p[1] + (p[0] - p[1]) / (1.0 + u * u)) * u
    elif kind == K_PERTLIN:
        # p = (a11, a12, a21, a22, eps, T)
        c = TWO_PI / p[5]
        dx[0] = p[0] * x + p[1] * y + p[4] * sin(x) * cos(c * t + y)
        dy[0] = p[2] * x + p[3] * y + p[4] * sin(y) * sin(x + c * t)
    else:
        # K_SPIRAL, p = (T,)
        tm = 1.0 + _tmod(t, p[0])
        c = hypot(x, y)
        dx[0] = (x + c * y) / tm
        dy[0] = (y - c * x) / tm


def rk4_flow(int kind, params, z0, knots, double h_max, double norm_cap):
    """See ``_pykernels.rk4_flow``; ``kind`` picks the compiled right-hand side."""
    if kind not in KNOWN_KINDS:
        raise ValueError(f"unknown kernel id {kind}")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] z = np.array(z0, dtype=np.float64).reshape(-1, 2)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] kn = np.ascontiguousarray(knots, dtype=np.float64)
    cdef Py_ssize_t n = z.shape[0], nseg = kn.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dtheta = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] max_step = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] min_r = np.zeros(n)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] status = np.zeros(n, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] steps = np.zeros(max(nseg, 0), dtype=np.int64)
    cdef double* pp = <double*> p.data
    cdef Py_ssize_t i, k, j
    cdef long nst
    cdef double x, y, xn, yn, t, h, tj, te, rn, inc, acc, mx, mr
    cdef double k1x, k1y, k2x, k2y, k3x, k3y, k4x, k4y
    cdef bint dead
    for k in range(nseg):
        nst = <long> ceil((kn[k + 1] - kn[k]) / h_max - 1e-9)
        steps[k] = nst if nst > 1 else 1
    with nogil:
        for i in range(n):
            x = z[i, 0]
            y = z[i, 1]
            acc = 0.0
            mx = 0.0
            mr = hypot(x, y)
            dead = not (isfinite(x) and isfinite(y) and mr <= norm_cap)
            for k in range(nseg):
                if dead:
                    break
                t = kn[k]
                h = (kn[k + 1] - t) / steps[k]
                # stages stop just short of the knot so a jump there is seen from the left
                te = kn[k + 1] - 1e-12 * (fabs(kn[k + 1]) if fabs(kn[k + 1]) > 1.0 else 1.0)
                for j in range(steps[k]):
                    tj = t + j * h
                    _rhs(kind, pp, tj, x, y, &k1x, &k1y)
                    _rhs(kind, pp, fmin(tj + 0.5 * h, te), x + 0.5 * h * k1x, y + 0.5 * h * k1y, &k2x, &k2y)
                    _rhs(kind, pp, fmin(tj + 0.5 * h, te), x + 0.5 * h * k2x, y + 0.5 * h * k2y, &k3x, &k3y)
                    _rhs(kind, pp, fmin(tj + h, te), x + h * k3x, y + h * k3y, &k4x, &k4y)
                    xn = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
                    yn = y + (h / 6.0) * (k1y + 2.0 * k2y + 2.0 * k3y + k4y)
                    rn = hypot(xn, yn)
                    if not (rn <= norm_cap):
                        dead = True
                        break
                    inc = -atan2(x * yn - y * xn, x * xn + y * yn)
                    acc += inc
                    if fabs(inc) > mx:
                        mx = fabs(inc)
                    if rn < mr:
                        mr = rn
                    x = xn
                    y = yn
            z[i, 0] = x
            z[i, 1] = y
            dtheta[i] = acc
            max_step[i] = mx
            min_r[i] = mr
            status[i] = 1 if dead else 0
    return z, dtheta, max_step, min_r, status


def winding_sum(wx, wy):
    """See ``_pykernels.winding_sum``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ax = np.ascontiguousarray(wx, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ay = np.ascontiguousarray(wy, dtype=np.float64)
    cdef Py_ssize_t n = ax.shape[0], i, j
    cdef double inc, mx = 0.0
    incs = np.empty(n)
    cdef double[:] iv = incs
    with nogil:
        for i in range(n):
            j = i + 1 if i + 1 < n else 0
            inc = atan2(ax[i] * ay[j] - ay[i] * ax[j], ax[i] * ax[j] + ay[i] * ay[j])
            iv[i] = inc
            if fabs(inc) > mx:
                mx = fabs(inc)
    import math
    return float(math.fsum(incs)), float(mx)
