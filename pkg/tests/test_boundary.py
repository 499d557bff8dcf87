import math

import numpy as np
import pytest

from rotodeg.boundary import (Ball, GeneralizedAnnulus, Rect, annulus, boundary_components, circle, double_many,
                              origin_position, rectangle, refine, refine_many)
from rotodeg.errors import RefinementLimit


def test_circle_validation():
    with pytest.raises(ValueError):
        circle(radius=0.0)
    with pytest.raises(ValueError):
        circle(n0=8)
    c = circle((1.0, 2.0), 3.0, 32)
    assert len(c) == 32 and c.orientation == 1
    assert c.signed_area() == pytest.approx(math.pi * 9, rel=0.01)


def test_rectangle_is_ccw_and_closed():
    r = rectangle(0, 0, 2, 1, 16)
    assert r.signed_area() == pytest.approx(2.0)
    assert r.winding_about((1.0, 0.5)) == 1
    assert r.winding_about((3.0, 0.5)) == 0
    with pytest.raises(ValueError):
        rectangle(0, 0, 0, 1)


def test_annulus_invariants():
    ann = annulus(1.0, 4.0)
    comps = boundary_components(ann)
    assert [s for _, s in comps] == [1, -1]
    with pytest.raises(ValueError):
        annulus(2.0, 1.0)
    with pytest.raises(ValueError):
        GeneralizedAnnulus(circle((0, 0), 1.0), circle((0, 0), 2.0))
    with pytest.raises(ValueError):
        GeneralizedAnnulus(circle((0, 0), 4.0), circle((2.5, 0), 1.0))
    # an off-centre inner curve is fine as long as it surrounds the origin
    GeneralizedAnnulus(circle((0, 0), 4.0), circle((0.5, 0), 1.0))


def test_origin_position():
    assert origin_position(Ball((0, 0), 2)) == "inside"
    assert origin_position(Ball((5, 3), 1)) == "outside"
    assert origin_position(Ball((1, 0), 1), margin=1e-9) == "boundary"
    assert origin_position(annulus(1, 2)) == "outside"
    assert origin_position(Rect(-1, -1, 1, 1)) == "inside"


def test_refinement_keeps_samples_and_limits_depth():
    c = circle(n0=16)
    out = refine(c, lambda a, b: np.hypot(*(a - b).T) > 0.05)
    assert np.all(np.isin(c.s, out.s))
    assert np.all(np.diff(out.s) > 0)
    with pytest.raises(RefinementLimit) as exc:
        refine(c, lambda a, b: np.ones(len(a), bool), max_depth=3)
    assert len(exc.value.partial) == 16 * 8


def test_refine_many_batches_evaluations():
    calls = []

    def ev(p):
        calls.append(len(p))
        return p

    curves = [circle(n0=16), circle((3, 0), 0.5, 16)]
    refine_many(curves, lambda a, b: np.hypot(*(a - b).T) > 0.2, evaluate=ev)
    # one call for the initial samples, then one per refinement round
    assert calls[0] == 32 and len(calls) <= 5


def test_double_many():
    c, = double_many([circle(n0=16)])
    assert len(c) == 32 and np.allclose(c.values, c.points)


def test_rect_spec_and_scale():
    r = Rect(0, 0, 3, 4)
    assert r.scale == 2.5 and r.center == (1.5, 2.0)
    assert r.spec() == "rect:0,0,3,4"
