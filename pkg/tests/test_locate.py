import cmath
import math

import numpy as np
import pytest

from oracles import reintegrate
from rotodeg.boundary import Rect, annulus
from rotodeg.errors import IllConditioned, NoConvergence
from rotodeg.flow import evolve, lift_trajectory, rotation_number
from rotodeg.locate import (PeriodicOrbit, find_all_report, floquet_multipliers, localize, newton_fixed_point,
                            refine_orbit)
from rotodeg.vectorfield import example51, expansive_spiral, linear_system, rigid_rotation


@pytest.fixture(scope="module")
def ex51_search():
    return find_all_report(example51(), annulus(1, 4))


@pytest.mark.parametrize("i", [0, 1])
def test_localize_example51(i):
    tree = localize(example51(), annulus(1, 4), i)
    hits = tree.hits()
    assert len(hits) >= 1
    assert all(c.diameter < 1e-3 for c in hits)
    assert tree.bookkeeping_ok()
    # additivity at every internal node
    for c in tree.cells:
        if c.children and all(tree.cells[k].certified for k in c.children):
            assert c.degree == sum(tree.cells[k].degree for k in c.children)


def test_localize_rigid_rotation_is_empty():
    tree = localize(rigid_rotation(), annulus(1, 2), 0)
    assert tree.hits() == []


def test_cells_csv():
    tree = localize(example51(), annulus(1, 4), 0, max_depth=3)
    lines = tree.to_csv().splitlines()
    assert lines[0].startswith("id,parent,depth")
    assert len(lines) == len(tree.cells) + 1


def test_find_all_example51(ex51_search):
    rep = ex51_search
    rots = sorted(o.rotation for o in rep.orbits)
    assert set(rots) == {0, 1} and len(rots) >= 2
    assert rep.twist.twist is True and rep.guarantees_met
    assert all(t.bookkeeping_ok() for t in rep.trees.values())


def test_orbits_reverify(ex51_search):
    f = example51()
    for o in ex51_search.orbits:
        assert o.residual < 1e-8
        traj = evolve(f, o.point)
        assert np.hypot(*(traj.points[-1] - np.array(o.point))) < 1e-8
        lifted = lift_trajectory(traj)
        assert lifted.theta[-1] - lifted.theta[0] == pytest.approx(2 * math.pi * o.rotation, abs=1e-5)
        # independent high-order integration agrees up to the RK4 discretisation error
        assert np.hypot(*(reintegrate(f, o.point) - np.array(o.point))) < 1e-5


def test_orbits_are_distinct(ex51_search):
    pts = np.array([o.point for o in ex51_search.orbits])
    d = np.hypot(*(pts[:, None, :] - pts[None, :, :]).transpose(2, 0, 1))
    np.fill_diagonal(d, np.inf)
    assert d.min() > 1e-4 * 4


def test_integer_rotation_at_located_points(ex51_search):
    f = example51()
    for o in ex51_search.orbits:
        rot = rotation_number(f, o.point)
        assert abs(rot - round(rot)) < 1e-6 and round(rot) == o.rotation


def test_index_sign_matches_multipliers(ex51_search):
    # a fixed point with real multipliers on both sides of 1 has index -1,
    # one with both multipliers below -1 or in (-1, 1) ... the product sign decides
    for o in ex51_search.orbits:
        m = np.array(o.multipliers)
        index = int(np.sign(np.prod((m - 1).real)))
        assert index == o.cell_degree or o.cell_degree is None


def test_spiral_negative_control():
    rep = find_all_report(expansive_spiral(), annulus(1, 3))
    assert rep.twist.twist is True
    assert rep.deg_inner == rep.deg_outer == 1
    assert rep.orbits == []


def test_rigid_rotation_annulus_empty():
    assert find_all_report(rigid_rotation(), annulus(1, 2)).orbits == []


def test_refine_orbit_exact_fixed_point_returns_immediately():
    f = linear_system()
    o = refine_orbit(f, (0.0, 0.0), None)
    assert o.point == (0.0, 0.0) and o.residual == 0.0 and o.rotation is None


def test_refine_orbit_from_cell(ex51_search):
    f = example51()
    o = ex51_search.orbits[0]
    r = refine_orbit(f, (o.point[0] + 1e-4, o.point[1] - 1e-4), o.rotation, enclosure=o.enclosure)
    assert r.residual < 1e-8 and np.allclose(r.point, o.point, atol=1e-9)


def test_refine_orbit_no_convergence():
    with pytest.raises(NoConvergence):
        refine_orbit(rigid_rotation(), (1.0, 0.0), 0)
    with pytest.raises(NoConvergence):
        newton_fixed_point(expansive_spiral(), (2.0, 0.0), max_iter=5)


def test_floquet_rigid_rotation():
    m = floquet_multipliers(rigid_rotation(), (0.0, 0.0))
    expect = sorted([cmath.exp(-1j * math.pi / 4), cmath.exp(1j * math.pi / 4)], key=lambda z: z.imag)
    got = sorted(m, key=lambda z: z.imag)
    assert np.allclose(got, expect, atol=1e-8)


def test_floquet_saddle():
    m = floquet_multipliers(linear_system(), (0.0, 0.0))
    assert np.allclose(sorted(v.real for v in m), [math.exp(-0.43), math.exp(0.43)], atol=1e-8)


def test_floquet_example51_origin():
    # one full turn is the identity, then the saddle acts for T - tau = 0.33
    m = floquet_multipliers(example51(), (0.0, 0.0))
    assert np.allclose(sorted(v.real for v in m), [math.exp(-0.33), math.exp(0.33)], atol=1e-6)


def test_floquet_ill_conditioned():
    from rotodeg.vectorfield import TimeVaryingField

    f = TimeVaryingField(rhs=lambda t, z: np.stack([-50 * z[..., 0], z[..., 1]], -1), period=1.0)
    with pytest.raises(IllConditioned):
        floquet_multipliers(f, (0.0, 0.0))


def test_orbit_json():
    o = PeriodicOrbit((1.0, 2.0), 1, 1e-12, Rect(0, 0, 1, 1), (complex(1, 2), complex(1, -2)))
    js = o.to_json()
    assert js["rotation"] == 1 and js["multipliers"] == [[1.0, 2.0], [1.0, -2.0]]
