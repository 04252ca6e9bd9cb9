import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate
from scipy import stats as sps

from nlrd.core import SphereMode
from nlrd.errors import ParameterError
from nlrd.sampling import (
    RngStream,
    exp_partial_sums,
    exp_partial_sums_many,
    order_stats_representation,
    pareto_from_uniform,
    sample_pareto,
    sample_sphere_centered,
    sample_uniform_torus,
    sample_vY_distance_direct,
    sphere_from_uniforms,
    sphere_mean,
    sphere_second_moment,
    uniform_torus_array,
    vY_distance_cdf,
    vY_distance_density,
)


def test_streams_are_reproducible_and_distinct():
    a = RngStream(7, 3).random(5)
    np.testing.assert_array_equal(a, RngStream(7, 3).random(5))
    assert not np.array_equal(a, RngStream(7, 4).random(5))
    assert not np.array_equal(a, RngStream(8, 3).random(5))


def test_open_uniform_never_zero(rng):
    u = rng.open_uniform(10**5)
    assert u.min() > 0.0 and u.max() <= 1.0


@given(st.floats(1e-300, 1.0), st.floats(1.05, 8.0))
def test_pareto_inverse_survival(u, beta):
    z = pareto_from_uniform(u, beta)
    assert z >= 1.0
    # the density (beta-1) x^-beta has survival function z^-(beta-1)
    if np.isfinite(z):
        assert z ** -(beta - 1) == pytest.approx(u, rel=1e-9)


def test_pareto_ks_against_scipy(rng):
    beta = 2.5
    z = sample_pareto(rng, beta, size=20000)
    res = sps.kstest(z, sps.pareto(b=beta - 1).cdf)
    assert res.pvalue > 1e-3


def test_pareto_rejects_bad_beta(rng):
    with pytest.raises(ParameterError):
        sample_pareto(rng, 1.0)


def test_exp_partial_sums(rng):
    s = exp_partial_sums(rng, 50)
    assert len(s) == 50
    np.testing.assert_allclose(np.cumsum(s.increments), s.values)
    assert np.all(np.diff(s.values) > 0)
    many = exp_partial_sums_many(rng, 5, 40000)
    assert many.shape == (40000, 5)
    # Gamma(i, 1) means
    np.testing.assert_allclose(many.mean(axis=0), np.arange(1, 6), rtol=0.02)


def test_order_stats_representation_shape(rng):
    x = order_stats_representation(rng, 100, 3.0)
    assert x.shape == (100,)
    assert np.all(np.diff(x) <= 0) and x[-1] > 1.0


def test_uniform_torus(rng):
    y = uniform_torus_array(rng, 5.0, 2, 1000)
    assert y.shape == (1000, 2) and y.min() >= 0 and y.max() < 5.0
    assert sample_uniform_torus(rng, 5.0, 2).d == 2


@pytest.mark.parametrize("mode", list(SphereMode))
def test_sphere_moments(rng, mode):
    th = sample_sphere_centered(rng, mode, 200000)
    raw = th + sphere_mean(mode)
    np.testing.assert_allclose(np.linalg.norm(raw, axis=1), 1.0, atol=1e-12)
    se = th.std(axis=0) / math.sqrt(len(th))
    assert np.all(np.abs(th.mean(axis=0)) < 5 * se)
    second = th.T @ th / len(th)
    np.testing.assert_allclose(second, sphere_second_moment(mode), atol=0.01)


def test_hemisphere_second_moment_by_hand():
    # height uniform on [0, 1]: Var = 1/12; E x^2 = E(1 - h^2)/2 = 1/3
    m = sphere_second_moment(SphereMode.UPPER_HEMISPHERE)
    np.testing.assert_allclose(np.diag(m), [1 / 3, 1 / 3, 1 / 12])


def test_sphere_from_uniforms_poles():
    top = sphere_from_uniforms(np.array([1.0]), np.array([0.0]), SphereMode.UNIFORM_SPHERE)[0]
    np.testing.assert_allclose(top, [0, 0, 1], atol=1e-12)


@pytest.mark.parametrize("d", [1, 2])
def test_vY_density_normalised_and_cdf_consistent(d):
    D = 6.0
    total, _ = integrate.quad(lambda u: float(vY_distance_density(u, D, d)), 0, d * D / 2,
                              points=[D / 2])
    assert total == pytest.approx(1.0)
    for u in (0.7, 2.0, 3.0, 4.5):
        if u <= d * D / 2:
            part, _ = integrate.quad(lambda x: float(vY_distance_density(x, D, d)), 0, u)
            assert float(vY_distance_cdf(u, D, d)) == pytest.approx(part, abs=1e-10)


@pytest.mark.parametrize("d", [1, 2])
def test_vY_direct_sampler_against_cdf(rng, d):
    D = 10.0
    v = sample_vY_distance_direct(rng, D, d, size=20000)
    assert sps.kstest(v, lambda u: vY_distance_cdf(u, D, d)).pvalue > 1e-3


def test_vY_brute_force_d2(rng):
    # distance from a uniform point to a fixed point, built by hand
    D = 4.0
    y = rng.random((50000, 2)) * D
    diff = np.abs(y - np.array([1.0, 3.5]))
    v = np.minimum(diff, D - diff).sum(axis=1)
    assert sps.kstest(v, lambda u: vY_distance_cdf(u, D, 2)).pvalue > 1e-3
