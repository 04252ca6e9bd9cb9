import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlrd.core import (
    ModelKind,
    ModelParams,
    ShapeFunction,
    ShapeKind,
    TorusPoint,
    bump_array,
    eval_bump,
    eval_shape,
    reduce_mod,
    torus_distance,
    torus_distance_array,
)
from nlrd.errors import ParameterError

SHAPES = ["triangle", "cubic_hump", "parabola", "indicator_step"]
coord = st.floats(-100, 100, allow_nan=False)
side = st.floats(0.5, 50, allow_nan=False)


def test_shape_closed_forms():
    tri, cub, par, step = (ShapeFunction.from_name(n) for n in SHAPES)
    assert tri(0.25) == pytest.approx(0.75)
    assert cub(0.5) == pytest.approx(0.125)
    assert par(0.5) == pytest.approx(0.75)
    assert step(0.999) == 1.0
    for sh in (tri, cub, par, step):
        assert sh(0.0) == 1.0
        assert sh(1.0) == 0.0 and sh(3.7) == 0.0


def test_shape_orders():
    assert ShapeFunction.triangle().order_n == 1
    assert ShapeFunction.cubic_hump().order_n == 1
    assert ShapeFunction.cubic_hump().deriv_n_at_0 == -3.0
    assert ShapeFunction.parabola().order_n == 2
    assert ShapeFunction.parabola().taylor_coefficient == -1.0
    assert not ShapeFunction.indicator_step().in_theorem_class


@pytest.mark.parametrize("name", SHAPES[:3])
def test_taylor_leading_term(name):
    sh = ShapeFunction.from_name(name)
    h = 1e-5
    assert (sh(h) - 1.0) / h ** sh.order_n == pytest.approx(sh.taylor_coefficient, rel=1e-4)


def test_eval_shape_rejects_negative():
    with pytest.raises(ParameterError):
        eval_shape(ShapeFunction.triangle(), -0.1)


def test_unknown_shape():
    with pytest.raises(ValueError):
        ShapeFunction.from_name("gaussian")


def test_reduce_mod():
    assert reduce_mod(-0.5, 10.0) == 9.5
    assert reduce_mod(10.0, 10.0) == 0.0
    assert reduce_mod(-1e-18, 10.0) == 0.0
    assert TorusPoint(23.0, 10.0).coords == (3.0,)


def test_torus_distance_examples():
    assert torus_distance(1.0, 9.0, 10.0, 1) == pytest.approx(2.0)
    assert torus_distance([0.0, 0.0], [9.0, 4.0], 10.0, 2) == pytest.approx(5.0)
    assert torus_distance([1.0, 1.0], [6.0, 6.0], 10.0, 2) == pytest.approx(10.0)


@given(coord, coord, coord, coord, side)
def test_torus_distance_metric_properties(a0, a1, b0, b1, D):
    a, b = [a0, a1], [b0, b1]
    ab = torus_distance(a, b, D, 2)
    assert ab == pytest.approx(torus_distance(b, a, D, 2), abs=1e-9)
    assert -1e-9 <= ab <= D + 1e-9
    shifted = torus_distance([a0 + 3 * D, a1 - D], b, D, 2)
    assert shifted == pytest.approx(ab, abs=1e-7)
    assert torus_distance(a, a, D, 2) == pytest.approx(0.0, abs=1e-9)


@given(st.lists(coord, min_size=1, max_size=20), coord, side)
def test_distance_array_matches_scalar(xs, y, D):
    arr = torus_distance_array(np.array(xs)[:, None], np.array([y]), D)
    ref = [torus_distance(x, y, D, 1) for x in xs]
    np.testing.assert_allclose(arr, ref, atol=1e-9)


def test_params_exponents():
    p = ModelParams(1.5, 2.0, 60.0, 1)
    assert (p.zeta, p.kappa) == (0.5, -0.5)
    q = ModelParams(3.0, 2.0, 6.0, 2, shape="parabola", model="stellar")
    assert q.zeta == 1.0 and q.kappa == -1.0
    assert q.model is ModelKind.STELLAR and q.shape.kind is ShapeKind.PARABOLA
    assert p.cell_width == pytest.approx(60.0 / p.grid_per_dim)


@pytest.mark.parametrize("kw", [
    dict(alpha=0.0, beta=2.0, D=1.0),
    dict(alpha=1.0, beta=1.0, D=1.0),
    dict(alpha=1.0, beta=2.0, D=-1.0),
    dict(alpha=1.0, beta=2.0, D=1.0, d=3),
    dict(alpha=3.0, beta=2.0, D=1.0, d=1, model="stellar"),
])
def test_params_validation(kw):
    with pytest.raises(ParameterError):
        ModelParams(**kw)


def test_params_replace_keeps_others():
    p = ModelParams(1.5, 2.0, 60.0, 1, model="min", grid_per_dim=128)
    q = p.replace(alpha=2.5)
    assert q.alpha == 2.5 and q.model is ModelKind.MIN and q.grid_per_dim == 128
    assert q.kappa == pytest.approx(0.5)


def test_eval_bump_closed_form():
    p = ModelParams(1.5, 2.0, 10.0, 1)
    # Z^(alpha-d) psi(v/Z) with Z = 2, v = 1
    assert eval_bump(p, 3.0, 2.0, 4.0) == pytest.approx(math.sqrt(2.0) * 0.5)
    assert eval_bump(p, 3.0, 2.0, 6.0) == 0.0
    # across the seam
    assert eval_bump(p, 9.5, 2.0, 0.5) == pytest.approx(math.sqrt(2.0) * 0.5)


@settings(max_examples=50)
@given(st.sampled_from(SHAPES), st.floats(1.0, 50.0), st.floats(0, 10), st.floats(0, 10),
       st.floats(0, 10), st.floats(0, 10))
def test_bump_array_matches_scalar(shape, z, c0, c1, s0, s1):
    p = ModelParams(2.5, 2.0, 10.0, 2, shape=shape)
    got = bump_array(p, np.array([c0, c1]), z, np.array([[s0, s1]]))[0]
    assert got == pytest.approx(eval_bump(p, [c0, c1], z, [s0, s1]), rel=1e-12, abs=1e-12)
