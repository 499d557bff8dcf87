import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from oracles import rotation_matrix_ccw
from rotodeg.errors import Inconsistent, InvalidParams, MarginalResonance, NotFound, ResonantSystem
from rotodeg.linear import (J, LinearSystem, asymptotic_radius, linear_degree, maslov_from, maslov_index,
                            monodromy, nonresonant, rotation_interval)
from rotodeg.vectorfield import example51, expansive_spiral, linear_system

WT = [0.5, 1.5, 2.5, 3.5]


def test_monodromy_examples():
    M = monodromy(LinearSystem.rotation(math.pi / 2, 1.0))
    assert M == pytest.approx(rotation_matrix_ccw(math.pi / 2), abs=1e-10)
    M = monodromy(LinearSystem(np.diag([-1.0, 1.0]), 0.43))
    assert M == pytest.approx(np.diag([math.exp(-0.43), math.exp(0.43)]), rel=1e-11)
    M = monodromy(LinearSystem(np.array([[0.3, 2.0], [-1.0, 0.1]]), 1e-6))
    assert M == pytest.approx(np.eye(2), abs=1e-5)


def test_hamiltonian_det_one():
    L = lambda t: np.array([[0.0, 1.0], [-(2.0 + math.cos(2 * math.pi * t)), 0.0]])
    s = LinearSystem(L, 1.0, True)
    assert np.linalg.det(monodromy(s)) == pytest.approx(1.0, abs=1e-8)


def test_nonresonance():
    assert nonresonant(rotation_matrix_ccw(math.pi / 2))
    assert not nonresonant(np.eye(2))
    assert nonresonant(np.diag([math.exp(-0.43), math.exp(0.43)]))
    with pytest.raises(MarginalResonance):
        nonresonant(np.diag([1.0 + 1e-5, 1.0 - 1e-5 + 2e-5]))


def test_linear_degree():
    assert linear_degree(np.diag([math.exp(-0.43), math.exp(0.43)])) == -1
    assert linear_degree(rotation_matrix_ccw(math.pi / 2)) == 1
    with pytest.raises(ResonantSystem):
        linear_degree(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_rotation_interval_examples():
    iv = rotation_interval(LinearSystem.rotation(2.5 * math.pi, 1.0))
    assert iv.lo == pytest.approx(-1.25, abs=1e-6) and iv.hi == pytest.approx(-1.25, abs=1e-6)
    iv = rotation_interval(LinearSystem(np.diag([-1.0, 1.0]), 0.43))
    assert -0.25 < iv.lo <= iv.hi < 0.25
    iv = rotation_interval(LinearSystem(np.zeros((2, 2)), 1.0))
    assert iv.lo == iv.hi == 0.0


@pytest.mark.parametrize("wt, expect", list(zip(WT, [1, 1, 3, 3])))
def test_maslov_rotations(wt, expect):
    rep = maslov_index(LinearSystem.rotation(wt * math.pi, 1.0))
    assert rep.degree == 1
    assert rep.interval.lo == pytest.approx(-wt / 2, abs=1e-6)
    assert rep.index == expect


def test_maslov_saddle():
    rep = maslov_index(LinearSystem(np.diag([-1.0, 1.0]), 0.43, True))
    assert (rep.index, rep.degree) == (0, -1)


def test_maslov_rejects_non_hamiltonian():
    with pytest.raises(InvalidParams):
        maslov_index(LinearSystem(np.diag([-1.0, 2.0]), 1.0))
    with pytest.raises(InvalidParams):
        LinearSystem(np.diag([-1.0, 2.0]), 1.0, True)


def test_maslov_from_dichotomy():
    assert maslov_from(-1, -0.1, 0.1) == (0, 0)
    assert maslov_from(-1, 0.9, 1.1) == (-2, -1)
    assert maslov_from(1, -1.3, -1.2) == (3, 1)
    with pytest.raises(Inconsistent):
        maslov_from(-1, 0.3, 0.7)
    with pytest.raises(Inconsistent):
        maslov_from(1, -1.1, -0.9)


mat = st.floats(-2, 2, allow_nan=False)


@given(mat, mat, mat, mat)
def test_scale_invariance_of_linear_rotation(a, b, c, d):
    s = LinearSystem(np.array([[a, b], [c, d]]), 1.0)
    iv = rotation_interval(s, n0=64, radii=(0.1, 10.0), richardson=False)
    assert iv.scale_deviation <= 1e-6


@given(st.floats(0.1, 4.0).filter(lambda w: abs(w - round(w)) > 0.02))
def test_maslov_parity_matches_degree(w):
    wt = w * math.pi
    assume(abs((wt / (2 * math.pi)) % 1) > 0.01)
    rep = maslov_index(LinearSystem.rotation(wt, 1.0))
    assert (rep.index % 2 == 0) == (rep.degree == -1)


@given(st.floats(0.05, 2.0))
def test_hamiltonian_saddle_family_parity(T):
    rep = maslov_index(LinearSystem(np.array([[-1.0, 0.0], [0.0, 1.0]]), T, True))
    assert rep.degree == -1 and rep.index == 0


def test_asymptotic_radius_example51():
    a0 = asymptotic_radius(example51(), "zero")
    assert a0.radius <= 1 and a0.sigma == (1,) and a0.degree == -1
    ai = asymptotic_radius(example51(), "infinity")
    assert ai.radius >= 4 and ai.sigma == (0,) and ai.degree == -1


def test_asymptotic_radius_linear_is_immediate():
    assert asymptotic_radius(linear_system(), "zero").radius == 1.0
    assert asymptotic_radius(linear_system(), "infinity").radius == 1.0


def test_asymptotic_radius_needs_linearization():
    with pytest.raises(InvalidParams):
        asymptotic_radius(expansive_spiral(), "zero")


def test_asymptotic_radius_not_found():
    from rotodeg.vectorfield import TimeVaryingField

    # linearization claims a saddle, the field rotates: nothing ever matches
    f = TimeVaryingField(rhs=lambda t, z: np.stack([z[..., 1], -z[..., 0]], -1), period=1.0,
                         lin_zero=np.diag([-1.0, 1.0]))
    with pytest.raises(NotFound) as exc:
        asymptotic_radius(f, "zero", max_steps=3)
    assert len(exc.value.trace) == 4


def test_J_is_ccw():
    assert J @ np.array([1.0, 0.0]) == pytest.approx([0.0, 1.0])
