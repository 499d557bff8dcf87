"""Linear planar systems ``z' = L(t) z``: monodromy, degree, rotation and Maslov index.

For a nonresonant linear system the period map has degree ``sign det(M - I)``
on any ball about the origin, and its rotation numbers are scale invariant.
For a Hamiltonian system ``L = J S`` (``S`` symmetric) these two pieces of
data determine the Maslov index ``i_T``:

* degree -1 and rotations in ``(-k - 1/2, -k + 1/2)``  give ``i_T = 2k``;
* degree +1 and rotations in ``(-k - 1, -k)``          give ``i_T = 2k + 1``.

Rotations count clockwise turns, so a counter-clockwise rigid rotation has
negative rotation number.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np

from .boundary import Ball, circle, refine_many
from .degree import (IntegerGrazingWarning, brouwer_deg_fT, rotation_summary, sigma_set,
                     winding_number)
from .errors import (BlowUp, Inconsistent, InvalidParams, MarginalResonance, NotFound, OriginCrossing,
                     ResonantSystem)
from .flow import DEFAULT_CONFIG, IntegratorConfig, flow_summary
from .vectorfield import K_LINEAR, TimeVaryingField

TWO_PI = 2.0 * math.pi
J = np.array([[0.0, -1.0], [1.0, 0.0]])
RESONANT_TOL = 1e-12
MARGINAL_TOL = 1e-8
MARGIN = 1e-4


@dataclass(frozen=True)
class LinearSystem:
    """``z' = L(t) z`` with ``L`` a constant matrix or a callable ``t -> 2x2``."""

    L: object
    T: float
    hamiltonian_flag: bool = False
    breakpoints: tuple = ()

    def __post_init__(self):
        if not self.T > 0:
            raise InvalidParams("T must be positive")
        if self.hamiltonian_flag:
            for t in np.linspace(0.0, self.T, 17)[:-1]:
                S = J @ self.at(t)
                if np.max(np.abs(S - S.T)) > 1e-10:
                    raise InvalidParams(f"J L(t) is not symmetric at t={t:g}")

    def at(self, t):
        m = self.L(t) if callable(self.L) else self.L
        return np.asarray(m, dtype=float).reshape(2, 2)

    @property
    def constant(self):
        return not callable(self.L)

    def field(self) -> TimeVaryingField:
        if self.constant:
            a = self.at(0.0)
            kernel = (K_LINEAR, tuple(float(v) for v in a.ravel()))

            def rhs(t, z):
                return z @ a.T
        else:
            kernel = None

            def rhs(t, z):
                return z @ self.at(t).T
        return TimeVaryingField(rhs=rhs, period=float(self.T), lin_zero=self.L, lin_inf=self.L,
                                breakpoints=tuple(self.breakpoints), kernel=kernel, name="linear",
                                norm_cap=1e12)

    @classmethod
    def rotation(cls, omega, T):
        """``L = omega J``: rigid counter-clockwise rotation at rate ``omega``."""
        return cls(omega * J, T, True)

    @classmethod
    def from_field(cls, field: TimeVaryingField, which: str = "zero"):
        m = field.lin_zero if which == "zero" else field.lin_inf
        if m is None:
            raise InvalidParams(f"field {field.name!r} has no linearization at {which}")
        return cls(m, field.period, False, field.breakpoints)


def is_hamiltonian(sys: LinearSystem, tol=1e-10) -> bool:
    ts = np.linspace(0.0, sys.T, 17)[:-1]
    return all(np.max(np.abs((J @ sys.at(t)) - (J @ sys.at(t)).T)) <= tol for t in ts)


def monodromy(sys: LinearSystem, cfg: IntegratorConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Fundamental matrix at ``T``; columns are the evolved basis vectors."""
    end = flow_summary(sys.field(), np.eye(2), cfg).end
    return end.T.copy()


def nonresonant(M) -> bool:
    """``det(M - I) != 0``; raises ``MarginalResonance`` when ``|det|`` is in ``[1e-12, 1e-8]``."""
    d = abs(float(np.linalg.det(np.asarray(M, dtype=float) - np.eye(2))))
    if d > MARGINAL_TOL:
        return True
    if d < RESONANT_TOL:
        return False
    raise MarginalResonance(f"|det(M - I)| = {d:.3g} is marginal")


def linear_degree(M) -> int:
    """``sign det(M - I)``, cross-checked against the winding of ``(M - I) z`` on the unit circle."""
    M = np.asarray(M, dtype=float)
    if not nonresonant(M):
        raise ResonantSystem("det(M - I) = 0")
    A = M - np.eye(2)
    d = 1 if np.linalg.det(A) > 0 else -1
    w = winding_number(lambda p: p @ A.T, circle((0.0, 0.0), 1.0, 64)).value
    if w != d:
        raise Inconsistent(f"sign det(M - I) = {d} but winding number = {w}")
    return d


@dataclass
class RotationInterval:
    lo: float
    hi: float
    samples: int
    scale_deviation: float = 0.0
    richardson_delta: float = 0.0

    def to_json(self):
        return {"min_rot": self.lo, "max_rot": self.hi, "samples": self.samples,
                "scale_deviation": self.scale_deviation, "richardson_delta": self.richardson_delta}


def _rotations(field, pts, cfg):
    return flow_summary(field, pts, cfg).dtheta / TWO_PI


def rotation_interval(sys: LinearSystem, cfg: IntegratorConfig = DEFAULT_CONFIG, *, n0: int = 256,
                      radii=(0.1, 10.0), richardson: bool = True) -> RotationInterval:
    """Hull of clockwise rotation numbers on the unit circle.

    Samples are refined until adjacent rotations differ by less than 0.01.
    The same angles are recomputed at each radius in ``radii`` and must agree
    to ``1e-6``; otherwise ``Inconsistent`` is raised.
    """
    f = sys.field()

    def ev(p):
        return _rotations(f, p, cfg)[:, None]

    (c, _), = refine_many([circle((0.0, 0.0), 1.0, n0)], lambda a, b: np.abs(a[:, 0] - b[:, 0]) >= 0.01, 30, ev)
    rot = c.values[:, 0]
    dev = 0.0
    for r in radii:
        dev = max(dev, float(np.max(np.abs(_rotations(f, r * c.points, cfg) - rot))))
    if dev > 1e-6:
        raise Inconsistent(f"rotation numbers are not scale invariant (deviation {dev:.3g})")
    rich = 0.0
    if richardson:
        rich = float(np.max(np.abs(_rotations(f, c.points, cfg.refined(2.0)) - rot)))
    return RotationInterval(float(rot.min()), float(rot.max()), len(rot), dev, rich)


@dataclass
class MaslovReport:
    index: int
    degree: int
    interval: RotationInterval
    k: int
    convention: str = "clockwise rotations; deg -1 -> 2k, deg +1 -> 2k+1"

    def to_json(self):
        return {"op": "maslov", "i_T": self.index, "degree": self.degree, "k": self.k,
                "rotation_interval": self.interval.to_json(), "convention": self.convention}


def maslov_from(degree: int, lo: float, hi: float, margin: float = MARGIN):
    """Invert the (degree, rotation interval) dichotomy; returns ``(i_T, k)``."""
    if degree == -1:
        k = -int(round(0.5 * (lo + hi)))
        ok = lo > -k - 0.5 + margin and hi < -k + 0.5 - margin
        index = 2 * k
    elif degree == 1:
        k = -math.ceil(0.5 * (lo + hi))
        ok = lo > -k - 1 + margin and hi < -k - margin
        index = 2 * k + 1
    else:
        raise Inconsistent(f"degree {degree} is not +-1")
    if not ok:
        raise Inconsistent(f"rotation interval [{lo:.9f}, {hi:.9f}] straddles a boundary for degree {degree}")
    return index, k


def maslov_index(sys: LinearSystem, cfg: IntegratorConfig = DEFAULT_CONFIG) -> MaslovReport:
    """Maslov index of a nonresonant Hamiltonian system from its degree and rotation interval."""
    if not sys.hamiltonian_flag and not is_hamiltonian(sys):
        raise InvalidParams("maslov_index needs a Hamiltonian system (L = J S with S symmetric)")
    M = monodromy(sys, cfg)
    deg = linear_degree(M)
    iv = rotation_interval(sys, cfg)
    index, k = maslov_from(deg, iv.lo, iv.hi)
    return MaslovReport(index, deg, iv, k)


# ---------------------------------------------------------------------------
# asymptotic radius


@dataclass
class AsymptoticRadius:
    which: str
    radius: float
    sigma: tuple
    degree: int
    trace: list = dc_field(default_factory=list)

    def to_json(self):
        return {"op": f"asymptotic_radius[{self.which}]", "radius": self.radius, "sigma": list(self.sigma),
                "degree": self.degree, "trace": self.trace}


def asymptotic_radius(field: TimeVaryingField, which: str = "zero", cfg: IntegratorConfig = DEFAULT_CONFIG,
                      *, max_steps: int = 40, hull_tol: float = 0.05) -> AsymptoticRadius:
    """Radius where the nonlinear boundary data match the linearization at 0 or infinity.

    Starting from ``r = 1`` the radius is halved (``which="zero"``) or doubled
    (``which="infinity"``) until the Σ set and the period-map degree on
    ``dB_r`` equal those of the linearized system on the unit circle and both
    ends of the rotation hull lie within ``hull_tol`` of the linear hull.
    """
    if which not in ("zero", "infinity"):
        raise ValueError("which must be 'zero' or 'infinity'")
    lin = LinearSystem.from_field(field, which)
    iv = rotation_interval(lin, cfg, richardson=False)
    target_sigma = rotation_summary([iv.lo, iv.hi]).sigma
    target_deg = linear_degree(monodromy(lin, cfg))
    factor = 0.5 if which == "zero" else 2.0
    r, trace = 1.0, []
    for _ in range(max_steps + 1):
        ball = Ball((0.0, 0.0), r)
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", IntegerGrazingWarning)
                summ = sigma_set(field, ball, cfg)
            deg = brouwer_deg_fT(field, ball, cfg).value
        except (BlowUp, OriginCrossing) as exc:
            trace.append({"r": r, "error": type(exc).__name__})
            break
        trace.append({"r": r, "sigma": list(summ.sigma), "degree": deg,
                      "rot": [summ.min_rot, summ.max_rot]})
        close = abs(summ.min_rot - iv.lo) <= hull_tol and abs(summ.max_rot - iv.hi) <= hull_tol
        if summ.sigma == target_sigma and deg == target_deg and close and not summ.grazing:
            return AsymptoticRadius(which, r, summ.sigma, deg, trace)
        r *= factor
    raise NotFound(f"no radius matched the linearization at {which} "
                   f"(target sigma {list(target_sigma)}, degree {target_deg})", trace=trace)


__all__ = ["LinearSystem", "J", "monodromy", "nonresonant", "linear_degree", "rotation_interval",
           "maslov_index", "maslov_from", "MaslovReport", "RotationInterval", "asymptotic_radius",
           "AsymptoticRadius", "is_hamiltonian"]
