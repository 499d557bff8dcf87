import math
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import reintegrate, rotation_matrix_ccw
from rotodeg.errors import BlowUp, OriginCrossing
from rotodeg.flow import (DEFAULT_CONFIG, IntegratorConfig, chart, chart_inverse, displacement_FT, displacement_fT,
                          evolve, flow_summary, knots, lift_trajectory, rotation_number, rotation_numbers,
                          trajectory_csv)
from rotodeg.vectorfield import (SCENARIOS, ScenarioSpec, build_scenario, example51, expansive_spiral,
                                 linear_system, rigid_rotation)

RK45 = IntegratorConfig(method="rk45_adaptive")


@pytest.mark.parametrize("cfg", [DEFAULT_CONFIG, RK45])
def test_rigid_rotation_endpoint(cfg):
    f = rigid_rotation()
    end = flow_summary(f, [[2.0, 0.0]], cfg).end[0]
    # clockwise by pi/4
    assert end == pytest.approx(rotation_matrix_ccw(-math.pi / 4) @ [2.0, 0.0], abs=1e-9)
    assert rotation_number(f, (2.0, 0.0), cfg) == pytest.approx(0.125, abs=1e-9)


def test_linear_closed_form():
    f = linear_system()
    end = flow_summary(f, [[3.0, 1.0]]).end[0]
    assert end == pytest.approx([3 * math.exp(-0.43), math.exp(0.43)], rel=1e-11)
    assert 3 * math.exp(-0.43) == pytest.approx(1.951527, abs=1e-6)


def test_full_turn_lifts_exactly():
    f = rigid_rotation(omega=2 * math.pi)
    assert rotation_number(f, (1.0, 0.0)) == pytest.approx(1.0, abs=1e-12)
    f = rigid_rotation(omega=6 * math.pi)
    assert rotation_number(f, (0.3, -0.2)) == pytest.approx(3.0, abs=1e-8)


def test_knots_include_shifted_breakpoints():
    f = example51()
    kn = knots(f, 0.0, 2 * f.period)
    assert kn == pytest.approx([0.0, 0.1, 0.43, 0.53, 0.86])


def test_example51_against_scipy():
    f = example51()
    for p in ([1.0, 0.3], [-2.5, 1.0], [1.7, -0.2]):
        ours = flow_summary(f, [p]).end[0]
        # fourth-order error with the default step is about 1e-6 in the fast rotation phase
        assert ours == pytest.approx(reintegrate(f, p), abs=1e-5)
        fine = flow_summary(f, [p], IntegratorConfig(step_h=6.25e-5)).end[0]
        assert fine == pytest.approx(reintegrate(f, p), abs=1e-9)


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_step_halving_changes_rotation_little(name):
    f = build_scenario(ScenarioSpec(name))
    pts = np.array([[0.8, 0.3], [1.5, -1.0], [-2.0, 0.5]])
    a = rotation_numbers(f, pts)
    b = rotation_numbers(f, pts, DEFAULT_CONFIG.refined())
    assert np.max(np.abs(a - b)) < 1e-7


def test_adaptive_matches_fixed():
    f = example51()
    pts = np.array([[1.0, 1.0], [3.0, -1.0]])
    assert rotation_numbers(f, pts, RK45) == pytest.approx(rotation_numbers(f, pts), abs=1e-8)


def test_blowup_reported():
    f = build_scenario(ScenarioSpec("duffing_superlinear", {"norm_cap": 50.0}))
    with pytest.raises(BlowUp) as exc:
        flow_summary(f, [[0.5, 0.0], [40.0, 0.0]])
    assert exc.value.start_points.tolist() == [[40.0, 0.0]]
    s = flow_summary(f, [[0.5, 0.0], [40.0, 0.0]], blowup="nan")
    assert np.isfinite(s.end[0]).all() and np.isnan(s.end[1]).all()


def test_origin_start_rejected():
    with pytest.raises(OriginCrossing):
        displacement_FT(example51(), (0.0, 0.0))


def test_lift_matches_summary():
    f = example51()
    traj = evolve(f, (1.2, 0.4))
    lifted = lift_trajectory(traj)
    s = flow_summary(f, [[1.2, 0.4]])
    assert lifted.theta[-1] - lifted.theta[0] == pytest.approx(s.dtheta[0], abs=1e-9)
    csv_text = trajectory_csv(lifted)
    assert csv_text.splitlines()[0] == "t,x,y,theta,r"


def test_lift_refines_coarse_samples():
    f = rigid_rotation(omega=20 * math.pi)
    traj = evolve(f, (1.0, 0.0))
    # every 60th step: gaps of about 1.9 rad, so the lift must re-integrate them
    idx = np.r_[0:len(traj.times) - 1:60, len(traj.times) - 1]
    coarse = type(traj)(traj.times[idx], traj.points[idx], traj.field)
    lifted = lift_trajectory(coarse)
    assert (lifted.theta[-1] - lifted.theta[0]) / (2 * math.pi) == pytest.approx(10.0, abs=1e-6)


def test_displacements_shape():
    f = rigid_rotation()
    assert displacement_fT(f, (1.0, 0.0)).shape == (2,)
    assert displacement_FT(f, [[1.0, 0.0], [0.0, 2.0]]).shape == (2, 2)
    assert displacement_FT(f, [[0.0, 2.0]])[0] == pytest.approx([math.pi / 4, 0.0], abs=1e-10)


@given(st.floats(0, 2 * math.pi - 1e-9), st.floats(0.01, 100))
def test_chart_round_trip(theta, r):
    z = chart(theta, r)
    th, rr = chart_inverse(z)
    assert rr == pytest.approx(r)
    assert math.cos(th - theta) == pytest.approx(1.0, abs=1e-9)


def test_chart_is_clockwise():
    # increasing theta moves clockwise
    a, b = chart(0.0, 1.0), chart(0.1, 1.0)
    assert a[0] * b[1] - a[1] * b[0] < 0


def test_spiral_lift_formula():
    f = expansive_spiral()
    # theta(T) - theta(0) = r0 * T, r(T) = r0 (1 + T) over the first period
    s = flow_summary(f, [[1.0, 0.0], [0.0, 0.5]])
    T = f.period
    assert s.dtheta == pytest.approx([T, 0.5 * T], rel=1e-8)
    assert np.hypot(*s.end.T) == pytest.approx([1 + T, 0.5 * (1 + T)], rel=1e-8)


def test_pure_python_fallback_selected_by_env():
    code = "from rotodeg import kernels; print(kernels.BACKEND)"
    env = dict(os.environ, ROTODEG_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
