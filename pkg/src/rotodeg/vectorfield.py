"""Planar time-periodic vector fields and the built-in scenarios.

A field's ``rhs(t, z)`` is vectorised: ``z`` has shape ``(..., 2)`` and the
result has the same shape.  Built-in scenarios also carry a ``kernel``
descriptor ``(kind, params)`` which lets the compiled integrator evaluate the
same right-hand side in C.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Mapping

import numpy as np

from .errors import InvalidParams, NormCapExceeded, UnknownScenario

TWO_PI = 2.0 * math.pi

# compiled-kernel ids, mirrored in _ckernels.pyx
K_RIGID, K_LINEAR, K_EXAMPLE51, K_DUFFING, K_ASYMLIN, K_SPIRAL, K_PERTLIN = range(7)

Matrix = "np.ndarray | Callable[[float], np.ndarray]"


@dataclass(frozen=True)
class TimeVaryingField:
    """Right-hand side ``h(t, z)`` of a T-periodic planar system.

    Parameters
    ----------
    rhs : callable
        ``rhs(t, z) -> dz/dt``, vectorised over the leading axes of ``z``.
    period : float
        The period ``T``.
    lin_zero, lin_inf : array or callable, optional
        Linearisation at the origin (``L0(t)``) and at infinity (``Linf``),
        either a constant 2x2 array or a function of time.
    breakpoints : tuple of float
        Times in ``(0, T)`` where ``rhs`` jumps; integrators never step
        across them.
    """

    rhs: Callable[[float, np.ndarray], np.ndarray]
    period: float
    lin_zero: object = None
    lin_inf: object = None
    norm_cap: float = 1e6
    breakpoints: tuple = ()
    kernel: tuple | None = None
    name: str = "custom"
    params: Mapping[str, float] = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.period > 0:
            raise InvalidParams(f"period must be positive, got {self.period}")
        if not self.norm_cap > 0:
            raise InvalidParams("norm_cap must be positive")

    def __call__(self, t, z):
        return self.rhs(t, z)

    def lin_zero_at(self, t: float) -> np.ndarray:
        return _matrix_at(self.lin_zero, t)

    def lin_inf_at(self, t: float) -> np.ndarray:
        return _matrix_at(self.lin_inf, t)


def _matrix_at(m, t):
    if m is None:
        raise ValueError("field carries no such linearization")
    if callable(m):
        return np.asarray(m(t), dtype=float)
    return np.asarray(m, dtype=float)


def evaluate_field(field: TimeVaryingField, t: float, z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if np.any(np.hypot(z[..., 0], z[..., 1]) > field.norm_cap):
        raise NormCapExceeded(f"|z| exceeds norm_cap={field.norm_cap}")
    return np.asarray(field.rhs(t, z), dtype=float)


# ---------------------------------------------------------------------------
# scenarios


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    params: Mapping[str, float] = dc_field(default_factory=dict)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioSpec":
        obj = json.loads(text) if isinstance(text, str) else text
        if not isinstance(obj, dict) or "name" not in obj:
            raise InvalidParams('scenario JSON must look like {"name": ..., "params": {...}}')
        params = obj.get("params") or {}
        return cls(obj["name"], {k: float(v) for k, v in params.items()})

    @classmethod
    def from_pairs(cls, name: str, pairs) -> "ScenarioSpec":
        params = {}
        for item in pairs or ():
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise InvalidParams(f"expected key=value, got {item!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise InvalidParams(f"parameter {key!r} is not a number: {value!r}") from None
        return cls(name, params)

    def to_dict(self):
        return {"name": self.name, "params": dict(self.params)}


def _rot_matrix_cw(omega):
    # x' = omega*y, y' = -omega*x: clockwise rotation at rate omega
    return np.array([[0.0, omega], [-omega, 0.0]])


def _linear_rhs(a):
    a = np.asarray(a, dtype=float)

    def rhs(t, z):
        return z @ a.T

    return rhs


def smoothstep(u):
    u = np.clip(u, 0.0, 1.0)
    return u * u * (3.0 - 2.0 * u)


def rigid_rotation(omega: float = math.pi / 4, T: float = 1.0) -> TimeVaryingField:
    a = _rot_matrix_cw(omega)
    return TimeVaryingField(
        rhs=_linear_rhs(a), period=T, lin_zero=a, lin_inf=a,
        kernel=(K_RIGID, (omega,)), name="rigid_rotation",
        params={"omega": omega, "T": T},
    )


def linear_system(a11=-1.0, a12=0.0, a21=0.0, a22=1.0, T=0.43) -> TimeVaryingField:
    a = np.array([[a11, a12], [a21, a22]], dtype=float)
    return TimeVaryingField(
        rhs=_linear_rhs(a), period=T, lin_zero=a, lin_inf=a,
        kernel=(K_LINEAR, (a11, a12, a21, a22)), name="linear_system",
        params={"a11": a11, "a12": a12, "a21": a21, "a22": a22, "T": T},
    )


def example51(tau=0.1, T=0.43, r_in=1.5, r_out=2.0) -> TimeVaryingField:
    """One clockwise turn on ``[0, tau)``, then a saddle; saddle only far out.

    ``h = L0(t) z`` for ``|z| <= r_in``, ``h = Linf z`` for ``|z| >= r_out``
    and a smoothstep blend of the two in between.
    """
    if not 0 < tau < T:
        raise InvalidParams(f"need 0 < tau < T, got tau={tau}, T={T}")
    if not 0 < r_in < r_out:
        raise InvalidParams("need 0 < r_in < r_out")
    c = TWO_PI / tau
    rot = _rot_matrix_cw(c)
    saddle = np.diag([-1.0, 1.0])
    width = r_out - r_in

    def lin_zero(t):
        return rot if math.fmod(t, T) % T < tau else saddle

    def rhs(t, z):
        tm = math.fmod(t, T) % T
        x = z[..., 0]
        y = z[..., 1]
        s = smoothstep((np.hypot(x, y) - r_in) / width)
        if tm < tau:
            ax, ay = c * y, -c * x
        else:
            ax, ay = -x, y
        out = np.empty_like(z, dtype=float)
        out[..., 0] = (1.0 - s) * ax + s * (-x)
        out[..., 1] = (1.0 - s) * ay + s * y
        return out

    return TimeVaryingField(
        rhs=rhs, period=T, lin_zero=lin_zero, lin_inf=saddle,
        breakpoints=(tau,), kernel=(K_EXAMPLE51, (tau, T, r_in, r_out)),
        name="example51", params={"tau": tau, "T": T, "r_in": r_in, "r_out": r_out},
    )


def duffing_superlinear(k1=0.0, k3=1.0, eps=0.0, T=1.0) -> TimeVaryingField:
    """``u'' + (k1 + eps cos(2 pi t / T)) u + k3 u^3 = 0`` as ``(u, u')``."""
    if k3 <= 0:
        raise InvalidParams("k3 must be positive for a superlinear restoring force")
    w = TWO_PI / T

    def stiffness(t):
        return k1 + eps * math.cos(w * (math.fmod(t, T) % T))

    def rhs(t, z):
        u = z[..., 0]
        out = np.empty_like(z, dtype=float)
        out[..., 0] = z[..., 1]
        out[..., 1] = -stiffness(t) * u - k3 * u * u * u
        return out

    return TimeVaryingField(
        rhs=rhs, period=T,
        lin_zero=lambda t: np.array([[0.0, 1.0], [-stiffness(t), 0.0]]),
        kernel=(K_DUFFING, (k1, k3, eps, T)), name="duffing_superlinear",
        params={"k1": k1, "k3": k3, "eps": eps, "T": T},
    )


def asymlin_hamiltonian(lam0=2.25, laminf=81.0, eps=0.0, T=1.0) -> TimeVaryingField:
    """``u'' + m(t) (laminf + (lam0 - laminf) / (1 + u^2)) u = 0``.

    ``m(t) = 1 + eps cos(2 pi t / T)``; linear with stiffness ``lam0`` at the
    origin and ``laminf`` at infinity.
    """
    if lam0 <= 0 or laminf <= 0 or abs(eps) >= 1:
        raise InvalidParams("need lam0 > 0, laminf > 0 and |eps| < 1")
    w = TWO_PI / T

    def mod(t):
        return 1.0 + eps * math.cos(w * (math.fmod(t, T) % T))

    def rhs(t, z):
        u = z[..., 0]
        out = np.empty_like(z, dtype=float)
        out[..., 0] = z[..., 1]
        out[..., 1] = -mod(t) * (laminf + (lam0 - laminf) / (1.0 + u * u)) * u
        return out

    return TimeVaryingField(
        rhs=rhs, period=T,
        lin_zero=lambda t: np.array([[0.0, 1.0], [-lam0 * mod(t), 0.0]]),
        lin_inf=lambda t: np.array([[0.0, 1.0], [-laminf * mod(t), 0.0]]),
        kernel=(K_ASYMLIN, (lam0, laminf, eps, T)), name="asymlin_hamiltonian",
        params={"lam0": lam0, "laminf": laminf, "eps": eps, "T": T},
    )


def expansive_spiral(T=TWO_PI) -> TimeVaryingField:
    """Field whose clockwise-polar lift is ``(theta + r t, r (1 + t))`` on ``[0, T]``.

    Twist holds on every annulus of circles, yet the origin is the only
    fixed point of the period map.
    """

    def rhs(t, z):
        tm = math.fmod(t, T) % T
        x = z[..., 0]
        y = z[..., 1]
        r = np.hypot(x, y)
        out = np.empty_like(z, dtype=float)
        out[..., 0] = (x + r * y) / (1.0 + tm)
        out[..., 1] = (y - r * x) / (1.0 + tm)
        return out

    return TimeVaryingField(
        rhs=rhs, period=T, kernel=(K_SPIRAL, (T,)), name="expansive_spiral",
        params={"T": T}, norm_cap=1e8,
    )


def perturbed_linear(a11=0.0, a12=2.0, a21=-2.0, a22=0.0, eps=0.3, T=1.0) -> TimeVaryingField:
    """``z' = A z + eps p(t, z)`` with a bounded smooth perturbation vanishing at 0.

    ``p(t, (x, y)) = (sin x cos(w t + y), sin y sin(x + w t))`` with ``w = 2 pi / T``.
    """
    a = np.array([[a11, a12], [a21, a22]], dtype=float)
    w = TWO_PI / T

    def rhs(t, z):
        x = z[..., 0]
        y = z[..., 1]
        out = np.empty_like(z, dtype=float)
        out[..., 0] = a11 * x + a12 * y + eps * np.sin(x) * np.cos(w * t + y)
        out[..., 1] = a21 * x + a22 * y + eps * np.sin(y) * np.sin(x + w * t)
        return out

    def lin_zero(t):
        return a + eps * np.diag([math.cos(w * t), math.sin(w * t)])

    return TimeVaryingField(
        rhs=rhs, period=T, lin_zero=lin_zero, lin_inf=a,
        kernel=(K_PERTLIN, (a11, a12, a21, a22, eps, T)), name="perturbed_linear",
        params={"a11": a11, "a12": a12, "a21": a21, "a22": a22, "eps": eps, "T": T},
    )


SCENARIOS = {
    "rigid_rotation": rigid_rotation,
    "example51": example51,
    "linear_system": linear_system,
    "duffing_superlinear": duffing_superlinear,
    "asymlin_hamiltonian": asymlin_hamiltonian,
    "expansive_spiral": expansive_spiral,
    "perturbed_linear": perturbed_linear,
}


def build_scenario(spec: ScenarioSpec) -> TimeVaryingField:
    try:
        factory = SCENARIOS[spec.name]
    except KeyError:
        raise UnknownScenario(
            f"unknown scenario {spec.name!r}; choose from {sorted(SCENARIOS)}") from None
    params = dict(spec.params)
    norm_cap = params.pop("norm_cap", None)
    code = factory.__code__
    allowed = code.co_varnames[:code.co_argcount]
    unknown = set(params) - set(allowed)
    if unknown:
        raise InvalidParams(f"{spec.name} does not accept {sorted(unknown)}; allowed: {list(allowed)}")
    for k, v in params.items():
        if not math.isfinite(v):
            raise InvalidParams(f"parameter {k} must be finite")
    if "T" in params and params["T"] <= 0:
        raise InvalidParams("T must be positive")
    f = factory(**params)
    if norm_cap is not None:
        f = TimeVaryingField(**{**f.__dict__, "norm_cap": norm_cap})
    return f
