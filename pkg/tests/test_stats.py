import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from nlrd import stats
from nlrd.errors import ParameterError
from nlrd.sampling import RngStream


def ks_by_hand(x, cdf):
    x = np.sort(x)
    n = len(x)
    F = cdf(x)
    return max(np.max(np.arange(1, n + 1) / n - F), np.max(F - np.arange(n) / n))


def ks2_by_hand(a, b):
    grid = np.concatenate([a, b])
    Fa = np.searchsorted(np.sort(a), grid, side="right") / len(a)
    Fb = np.searchsorted(np.sort(b), grid, side="right") / len(b)
    return np.max(np.abs(Fa - Fb))


samples = st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=60)


@settings(max_examples=50)
@given(samples)
def test_ks_one_sample_matches_definition(xs):
    x = np.array(xs)
    g = stats.ks_one_sample(x, sps.norm.cdf)
    assert g.statistic == pytest.approx(ks_by_hand(x, sps.norm.cdf), abs=1e-12)
    assert g.passed == (g.statistic < g.threshold)


@settings(max_examples=50)
@given(samples, samples)
def test_ks_two_sample_matches_definition(a, b):
    g = stats.ks_two_sample(np.array(a), np.array(b))
    assert g.statistic == pytest.approx(ks2_by_hand(np.array(a), np.array(b)), abs=1e-12)


def test_ks_thresholds_and_record():
    g = stats.ks_one_sample(np.linspace(0.01, 0.99, 99), sps.uniform.cdf, threshold=0.05)
    assert g.passed and g.threshold == 0.05
    rec = g.record("uniform", {"a": 1}, 7)
    assert rec["pass"] is True and rec["seed"] == 7 and rec["n"] == 99
    with pytest.raises(ParameterError):
        stats.ks_one_sample([], sps.norm.cdf)


@given(st.floats(-2, 3), st.floats(-3, 3))
def test_fit_recovers_exact_power_law(b, c):
    ns = [10, 100, 1000, 10000]
    fit = stats.fit_scaling([(n, math.exp(c) * n ** b) for n in ns])
    assert fit.exponent == pytest.approx(b, abs=1e-9)
    assert fit.intercept == pytest.approx(c, abs=1e-7)
    if abs(b) > 1e-3:
        assert fit.r_squared == pytest.approx(1.0)


def test_fit_uses_metric_on_replicas():
    rows = [(n, np.array([-1.0, 1.0, 3.0]) * n) for n in (10, 100, 1000)]
    assert stats.fit_scaling(rows, stats.ScaleMetric.IQR).exponent == pytest.approx(1.0)
    with pytest.raises(ParameterError):
        stats.fit_scaling([(10, 1.0), (100, 2.0)])
    with pytest.raises(ParameterError):
        stats.fit_scaling([(10, 1.0), (100, 0.0), (1000, 2.0)])


def test_scale_metrics():
    v = np.array([-3.0, -1.0, 2.0, 4.0])
    assert stats.scale_of(v, "median_abs") == 2.5
    assert stats.scale_of(v, "mean_abs") == 2.5
    assert stats.scale_of(v, "iqr") == pytest.approx(np.subtract(*np.percentile(v, [75, 25])))


def test_log_corrected_speed_and_drift():
    r = stats.log_corrected_speed([(100, 100 * math.log(100)), (1000, 2000 * math.log(1000))])
    assert r == [(100, pytest.approx(1.0)), (1000, pytest.approx(2.0))]
    assert stats.last_decade_drift(r) == pytest.approx(1.0)
    assert math.isnan(stats.last_decade_drift(r[:1]))
    with pytest.raises(ParameterError):
        stats.log_corrected_speed([(1, 1.0)])


def test_empirical_covariance_matches_numpy(rng):
    x = rng.random((500, 3))
    fc = stats.empirical_field_covariance(x)
    np.testing.assert_allclose(fc.cov, np.cov(x, rowvar=False))
    assert fc.se.shape == (3, 3) and np.all(fc.se > 0)


def test_attraction_tail_exact_value():
    t = stats.attraction_tail_check(RngStream(3, 0), 5.0, 10**6)
    assert abs(t.value - 0.5) < 4 * t.se


def test_attraction_sums_signs_balanced():
    s = stats.attraction_sums(RngStream(1, 0), 1000, 400)
    assert abs(s.mean()) < 4 * s.std() / math.sqrt(400)
    with pytest.raises(ParameterError):
        stats.attraction_sums(RngStream(1, 0), 10, 5)


@pytest.mark.parametrize("alpha,beta,region", [
    (1.5, 2.0, "C"),    # zeta 1/2, kappa -1/2
    (4.0, 2.0, "A"),    # zeta 3, kappa 2
    (5.25, 6.0, "B"),   # zeta 0.85, kappa 0.65
    (2.25, 2.0, "D"),   # zeta 1.25, kappa 0.25
    (3.0, 3.0, "boundary"),
    (2.5, 2.0, "boundary"),  # kappa = 1/2
])
def test_phase_regions(alpha, beta, region):
    assert stats.phase_classify(alpha, beta, 1, 1).value == region


def test_region_properties():
    assert stats.Region.A.super_ballistic and not stats.Region.A.gaussian
    assert stats.Region.D.super_ballistic and stats.Region.D.gaussian
    assert not stats.Region.B.super_ballistic and not stats.Region.B.gaussian
    assert stats.Region.BOUNDARY.gaussian is None


@given(st.floats(1.2, 8.0), st.floats(1.2, 8.0))
def test_classify_fit_on_expected_exponents(alpha, beta):
    zeta, kappa = (alpha - 1) / (beta - 1), (alpha - 2) / (beta - 1)
    region = stats.classify_exponents(zeta, kappa)
    if region is stats.Region.BOUNDARY or abs(zeta - 1) < 0.2 or abs(kappa - 0.5) < 0.15:
        return
    es, ef = stats.expected_exponents(zeta, kappa)
    assert stats.classify_fit(es, ef) is region
