"""Limit objects: the speed constant, Gaussian covariances, Gamma moments
and truncated-series samplers for the heavy-tailed limit laws.

Deterministic evaluators are pure and thread-safe. Samplers take an
`RngStream` and follow its single-owner rule.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy import integrate, special

from .core import ModelParams, SphereMode, TorusPoint, bump_array, shape_values, torus_distance_array
from .errors import ParameterError, RegimeError
from .sampling import (
    RngStream,
    pareto_from_uniform,
    sample_sphere_centered,
    sphere_from_uniforms,
    sphere_second_moment,
    vY_distance_density,
)


class Estimate(NamedTuple):
    value: float
    error: float

    def __float__(self):
        return float(self.value)


class CovarianceMethod(enum.Enum):
    QUADRATURE = "quadrature"
    MONTE_CARLO = "monte_carlo"


class LimitLaw(enum.Enum):
    STABLE_SERIES = "stable_series"
    MU_D = "mu_d"
    MU_STELLAR = "mu_stellar"
    STELLAR_SERIES = "stellar_series"


@dataclass(frozen=True)
class SeriesTruncation:
    M: int
    tail_bound: float


@dataclass
class LimitSample:
    """Draws of one limit law.

    ``values`` is (n,) for the scalar series, (n, P) for mu_d over P probes,
    (n, 3) for the stellar speed series and (n, P, 3) for mu_stel.
    """

    law: LimitLaw
    values: np.ndarray
    truncation: SeriesTruncation
    probes: tuple = ()

    def __len__(self):
        return len(self.values)


# Gamma moments and truncation

def inverse_moment_T(i: int, v: float) -> float:
    """E[T_i^(-v)] = Gamma(i-v)/Gamma(i) for i > v; +inf when i <= v.

    The ratio is taken as 1/poch(i-v, v), which stays accurate for large i.
    """
    if i < 1:
        raise ParameterError("i must be a positive integer")
    if i <= v:
        return math.inf
    return 1.0 / float(special.poch(i - v, v))


def inverse_moment_tail(M: int, v: float) -> float:
    """sum_{i>M} E[T_i^(-v)] in closed form, for v > 1 and M+1 > v.

    Telescopes: Gamma(i+1-v)/Gamma(i) - Gamma(i+2-v)/Gamma(i+1)
    = (v-1) Gamma(i+1-v)/Gamma(i+1).
    """
    if v <= 1:
        return math.inf
    if M + 1 <= v:
        return math.inf
    return 1.0 / (float(special.poch(M + 1 - v, v - 1)) * (v - 1))


def stable_truncation(zeta: float, tol: float) -> SeriesTruncation:
    """M from the Riemann tail sum_{i>M} i^(-zeta) ~ M^(1-zeta)/(zeta-1) <= tol."""
    if zeta <= 1:
        raise RegimeError("the series sum T_i^(-zeta) diverges for zeta <= 1")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    M = max(1, math.ceil((tol * (zeta - 1)) ** (1.0 / (1.0 - zeta))))
    return SeriesTruncation(M, M ** (1.0 - zeta) / (zeta - 1))


def l2_truncation(v: float, tol: float, min_terms: int = 1) -> SeriesTruncation:
    """Smallest M >= min_terms with sum_{i>M} E[T_i^(-v)] <= tol^2 (v > 1)."""
    if v <= 1:
        raise RegimeError(f"the L2 tail is infinite for exponent {v} <= 1")
    if tol <= 0:
        raise ParameterError("tol must be positive")
    target = tol * tol
    M = max(min_terms, math.floor(v) + 1)
    if inverse_moment_tail(M, v) > target:
        # the tail behaves like M^(1-v)/(v-1); jump close, then bisect
        hi = max(M + 1, math.ceil((target * (v - 1)) ** (1.0 / (1.0 - v))) + 2)
        while inverse_moment_tail(hi, v) > target:
            hi *= 2
        lo = M
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if inverse_moment_tail(mid, v) > target:
                lo = mid
            else:
                hi = mid
        M = hi
    return SeriesTruncation(M, math.sqrt(inverse_moment_tail(M, v)))


# Speed constant

def _speed_inner(params: ModelParams, u: float, eps: float) -> float:
    """(beta-1) * int_1^inf z^(alpha-d-beta) psi(u/z) dz after z = 1/w."""
    e = params.beta - params.alpha + params.d - 2.0
    kind = params.shape.kind
    wmax = 1.0 if u <= 1.0 else 1.0 / u
    val, err = integrate.quad(lambda w: shape_values(kind, u * w), 0.0, wmax,
                              weight="alg", wvar=(e, 0.0), epsabs=eps, epsrel=0.0, limit=200)
    return (params.beta - 1.0) * val


def gamma_speed_estimate(params: ModelParams, quad_tol: float = 1e-8) -> Estimate:
    """Ballistic speed constant with an error estimate.

    The y-average is taken against the exact density of v_Y(0) (uniform on
    [0, D/2] for d=1, triangular on [0, D] for d=2), leaving a double
    integral over (distance, 1/z).
    """
    if params.zeta >= 1:
        raise RegimeError(f"the speed integral diverges for zeta = {params.zeta} >= 1")
    if quad_tol <= 0:
        raise ParameterError("quad_tol must be positive")
    D, d = params.D, params.d
    umax = d * D / 2.0
    inner_eps = quad_tol / 10.0
    breaks = sorted({b for b in (1.0, D / 2.0) if 0.0 < b < umax})
    f = lambda u: float(vY_distance_density(u, D, d)) * _speed_inner(params, u, inner_eps)
    val, err = integrate.quad(f, 0.0, umax, points=breaks or None, epsabs=quad_tol / 2.0,
                              epsrel=0.0, limit=200)
    return Estimate(val, err + inner_eps)


def gamma_speed(params: ModelParams, quad_tol: float = 1e-8) -> float:
    """gamma = (beta-1)/D^d int int z^(alpha-d-beta) psi(v_y(0)/z) dz dy, for zeta < 1."""
    return gamma_speed_estimate(params, quad_tol).value


def gamma_speed_upper_bound(params: ModelParams) -> float:
    """E[Z^(alpha-d)], which dominates gamma because psi <= 1."""
    return (params.beta - 1.0) / (params.beta - params.alpha + params.d - 1.0)


# Gaussian covariances

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


def _gl_nodes(breaks, D):
    """Gauss-Legendre nodes on [0, D] split at the given breakpoints.

    8 nodes per piece integrate polynomials up to degree 15 exactly, which
    covers every product of shape values used here.
    """
    b = np.unique(np.concatenate([[0.0, D], np.mod(np.asarray(breaks, float), D)]))
    lo, hi = b[:-1], b[1:]
    keep = hi - lo > 1e-14 * D
    lo, hi = lo[keep], hi[keep]
    half = (hi - lo)[:, None] / 2.0
    mid = (hi + lo)[:, None] / 2.0
    return (mid + half * _GL_X[None, :]).ravel(), (half * _GL_W[None, :]).ravel()


def _coord(p, d):
    arr = p.as_array() if isinstance(p, TorusPoint) else np.atleast_1d(np.asarray(p, float))
    if arr.shape != (d,):
        raise ParameterError("point dimension does not match the model")
    return arr


def _diff_product_1d(params, xs, z):
    """(1/D) int_0^D prod_k [psi(v_y(x_k)/z) - psi(v_y(0)/z)] dy, exact."""
    D = params.D
    pts = [0.0] + [x[0] for x in xs]
    br = []
    for x in pts:
        br += [x, x + D / 2.0, x + z, x - z]
    y, w = _gl_nodes(br, D)
    kind = params.shape.kind
    base = shape_values(kind, torus_distance_array(y[:, None], 0.0, D) / z)
    prod = np.ones_like(y)
    for x in xs:
        prod = prod * (shape_values(kind, torus_distance_array(y[:, None], x[0], D) / z) - base)
    return float(np.dot(w, prod)) / D


def _diff_product_2d(params, xs, z, eps):
    D = params.D
    kind = params.shape.kind
    pts = [np.zeros(2)] + list(xs)

    def row(y0):
        a0 = [float(torus_distance_array(np.array([y0]), p[0], D)) for p in pts]
        br = []
        for p, a in zip(pts, a0):
            br += [p[1], p[1] + D / 2.0]
            if z - a > 0:
                br += [p[1] + (z - a), p[1] - (z - a)]
        y1, w = _gl_nodes(br, D)
        base = shape_values(kind, (a0[0] + torus_distance_array(y1[:, None], 0.0, D)) / z)
        prod = np.ones_like(y1)
        for p, a in zip(xs, a0[1:]):
            prod = prod * (shape_values(kind, (a + torus_distance_array(y1[:, None], p[1], D)) / z)
                           - base)
        return float(np.dot(w, prod))

    br0 = []
    for p in pts:
        for off in (0.0, D / 2.0, z, -z, z - D / 2.0, D / 2.0 - z):
            br0.append((p[0] + off) % D)
    br0 = sorted({b for b in br0 if 0.0 < b < D})
    val, _ = integrate.quad(row, 0.0, D, points=br0 or None, epsabs=eps, epsrel=0.0, limit=200)
    return val / (D * D)


def _cov_quadrature(params, s, t, quad_tol):
    n = params.shape.order_n
    e = params.beta - 2.0 * params.amplitude_exponent - 2.0 + 2.0 * n
    xs = [s, t]
    inner_eps = quad_tol / 10.0

    # as w -> 0 the differenced product over w^(2n) tends to E[A(s) A(t)];
    # use the limit where cancellation would dominate
    w_small = 1e-7
    at_zero = critical_covariance(params, s, t)

    def f(w):
        if w < w_small:
            return at_zero
        z = 1.0 / w
        if params.d == 1:
            g = _diff_product_1d(params, xs, z)
        else:
            g = _diff_product_2d(params, xs, z, inner_eps)
        return g / w ** (2 * n)

    val, err = integrate.quad(f, 0.0, 1.0, weight="alg", wvar=(e, 0.0), epsabs=quad_tol,
                              epsrel=1e-10, limit=200)
    return Estimate((params.beta - 1.0) * val, (params.beta - 1.0) * (err + inner_eps))


def _cov_monte_carlo(params, s, t, n_draws, rng, chunk=10**6):
    if n_draws < 2:
        raise ParameterError("need at least two draws")
    rng = rng if rng is not None else RngStream(0x5EED, 0)
    where = np.array([np.zeros(params.d), s, t])
    acc = np.zeros(4)  # sums of a, b, a*b, (a*b)^2
    done = 0
    while done < n_draws:
        m = min(chunk, n_draws - done)
        u = rng.random((m, 1 + params.d))
        z = pareto_from_uniform(1.0 - u[:, 0], params.beta)
        y = u[:, 1:] * params.D
        x = bump_array(params, y[:, None, :], z[:, None], where[None, :, :])
        a = x[:, 1] - x[:, 0]
        b = x[:, 2] - x[:, 0]
        ab = a * b
        acc += [a.sum(), b.sum(), ab.sum(), (ab * ab).sum()]
        done += m
    n = float(n_draws)
    ma, mb = acc[0] / n, acc[1] / n
    cov = (acc[2] - n * ma * mb) / (n - 1.0)
    # both means vanish in law, so the spread of a*b drives the error
    se = math.sqrt(max(acc[3] / n - (acc[2] / n) ** 2, 0.0) / n)
    return Estimate(cov, se)


def diff_covariance(params: ModelParams, s, t, method=CovarianceMethod.QUADRATURE,
                    quad_tol: float = 1e-10, n_draws: int = 10**7,
                    rng: Optional[RngStream] = None) -> Estimate:
    """Cov(X_1(s) - X_1(0), X_1(t) - X_1(0)) for kappa < 1/2.

    Quadrature integrates over 1/z adaptively and over the center exactly
    (piecewise Gauss-Legendre; d=2 adds an adaptive pass over the first
    coordinate). MonteCarlo averages over `n_draws` i.i.d. bumps.
    """
    if params.kappa >= 0.5:
        raise RegimeError(f"the differenced bump has infinite variance for kappa = {params.kappa}")
    method = CovarianceMethod(method)
    s, t = _coord(s, params.d), _coord(t, params.d)
    if not np.any(torus_distance_array(s, 0.0, params.D)) or \
            not np.any(torus_distance_array(t, 0.0, params.D)):
        return Estimate(0.0, 0.0)
    if method is CovarianceMethod.QUADRATURE:
        return _cov_quadrature(params, s, t, quad_tol)
    return _cov_monte_carlo(params, s, t, n_draws, rng)


def stellar_diff_covariance(params: ModelParams, s, t, **kw) -> np.ndarray:
    """3x3 covariance of the stellar Gaussian limit: scalar covariance times E[Theta^T Theta]."""
    c = diff_covariance(params.replace(model="rand"), s, t, **kw).value
    return c * sphere_second_moment(params.sphere_mode)


def _a_field(params, u, x):
    n = params.shape.order_n
    D = params.D
    return params.shape.taylor_coefficient * (
        torus_distance_array(u, x, D) ** n - torus_distance_array(u, 0.0, D) ** n
    )


def critical_covariance(params: ModelParams, s, t) -> float:
    """Cov(A(s), A(t)) with A(x) = psi^(n)(0)/n! (v_U(x)^n - v_U(0)^n), U uniform.

    A is piecewise polynomial in each coordinate of U with kinks at x_i and
    x_i + D/2, so tensor Gauss-Legendre over those breakpoints is exact.
    """
    d, D = params.d, params.D
    s, t = _coord(s, d), _coord(t, d)
    pts = [np.zeros(d), s, t]
    axes = []
    for k in range(d):
        br = []
        for p in pts:
            br += [p[k], p[k] + D / 2.0]
        axes.append(_gl_nodes(br, D))
    if d == 1:
        u = axes[0][0][:, None]
        w = axes[0][1]
    else:
        a, b = np.meshgrid(axes[0][0], axes[1][0], indexing="ij")
        wa, wb = np.meshgrid(axes[0][1], axes[1][1], indexing="ij")
        u = np.stack([a.ravel(), b.ravel()], axis=-1)
        w = (wa * wb).ravel()
    As, At = _a_field(params, u, s), _a_field(params, u, t)
    vol = D ** d
    ms, mt = np.dot(w, As) / vol, np.dot(w, At) / vol
    return float(np.dot(w, As * At) / vol - ms * mt)


# Series samplers

def sample_stable_series(rng: RngStream, zeta: float, tol: float = 1e-6) -> float:
    """One draw of sum_i T_i^(-zeta) truncated per `stable_truncation`."""
    tr = stable_truncation(zeta, tol)
    T = np.cumsum(rng.exponential(tr.M))
    return float(np.sum(T ** -zeta))


def sample_stable_series_many(rng: RngStream, zeta: float, size: int,
                              tol: float = 1e-6) -> LimitSample:
    tr = stable_truncation(zeta, tol)
    out = np.empty(size)
    for i in range(size):
        T = np.cumsum(rng.exponential(tr.M))
        out[i] = np.sum(T ** -zeta)
    return LimitSample(LimitLaw.STABLE_SERIES, out, tr)


def _mu_truncation(params, tol):
    if params.kappa <= 0.5:
        raise RegimeError(f"mu_d is defined for kappa > 1/2, got {params.kappa}")
    n1 = math.floor(4 * params.kappa)
    return l2_truncation(2 * params.kappa, tol, min_terms=n1), n1


def _g_terms(params, y, probes):
    """G_i(x) for centers y (M, d) at probes (P, d), shape (M, P)."""
    return _a_field(params, y[:, None, :], probes[None, :, :])


def _mu_draw(rng, params, probes, M, stellar):
    T = np.cumsum(rng.exponential(M))
    y = rng.random((M, params.d)) * params.D
    Gt = _g_terms(params, y, probes) * (T ** -params.kappa)[:, None]
    if not stellar:
        return Gt.sum(axis=0)
    u = rng.random((M, 2))
    theta = sphere_from_uniforms(u[:, 0], u[:, 1], params.sphere_mode)
    return np.einsum("mp,mc->pc", Gt, theta)


def sample_mu_d(rng: RngStream, params: ModelParams, probes: Sequence,
                tol: float = 0.01, size: Optional[int] = None) -> LimitSample:
    """Draws of gamma_1 + gamma_2 over the probes, sum_i G_i(x) / T_i^kappa.

    The first floor(4 kappa) terms form gamma_1; the series stops at the
    first M with L2 tail sum_{i>M} E[T_i^(-2 kappa)] <= tol^2.
    ``size=None`` gives one draw with values of shape (P,).
    """
    tr, _ = _mu_truncation(params, tol)
    P = np.array([_coord(p, params.d) for p in probes])
    n = 1 if size is None else size
    vals = np.stack([_mu_draw(rng, params, P, tr.M, False) for _ in range(n)])
    return LimitSample(LimitLaw.MU_D, vals[0] if size is None else vals, tr, tuple(map(tuple, P)))


def sample_mu_stellar(rng: RngStream, params: ModelParams, probes: Sequence,
                      tol: float = 0.01, size: Optional[int] = None) -> LimitSample:
    """Vector analogue sum_i G_i(x) Theta_i / T_i^kappa, d = 2."""
    if params.d != 2:
        raise ParameterError("mu_stel is defined for d = 2")
    tr, _ = _mu_truncation(params, tol)
    P = np.array([_coord(p, params.d) for p in probes])
    n = 1 if size is None else size
    vals = np.stack([_mu_draw(rng, params, P, tr.M, True) for _ in range(n)])
    return LimitSample(LimitLaw.MU_STELLAR, vals[0] if size is None else vals, tr,
                       tuple(map(tuple, P)))


def stellar_series_truncation(zeta: float, tol: float) -> SeriesTruncation:
    if zeta < 1:
        raise RegimeError(f"the stellar speed series needs zeta >= 1, got {zeta}")
    if zeta == 1:
        return l2_truncation(2.0, tol)
    return stable_truncation(zeta, tol)


def sample_stellar_speed_series(rng: RngStream, zeta: float, tol: float = 1e-3,
                                mode: SphereMode = SphereMode.UNIFORM_SPHERE,
                                size: Optional[int] = None) -> LimitSample:
    """Draws of sum_i Theta_i / T_i^zeta. At zeta = 1 the series converges
    in L2 only, so M comes from the tail sum_{i>M} E[T_i^(-2)] <= tol^2."""
    tr = stellar_series_truncation(zeta, tol)
    n = 1 if size is None else size
    out = np.empty((n, 3))
    for k in range(n):
        T = np.cumsum(rng.exponential(tr.M))
        theta = sample_sphere_centered(rng, mode, tr.M)
        out[k] = (theta * (T ** -zeta)[:, None]).sum(axis=0)
    return LimitSample(LimitLaw.STELLAR_SERIES, out[0] if size is None else out, tr)


def stellar_series_variance(zeta: float, mode: SphereMode = SphereMode.UNIFORM_SPHERE,
                            start: int = 1, terms: int = 100_000) -> np.ndarray:
    """Per-component variance of sum_{i>=start} Theta_i / T_i^zeta.

    Equals E[Theta_c^2] * sum_{i>=start} E[T_i^(-2 zeta)]; infinite as soon as
    a term with i <= 2 zeta is included.
    """
    v = 2.0 * zeta
    if start <= v:
        return np.full(3, math.inf)
    last = start + terms - 1
    s = sum(inverse_moment_T(i, v) for i in range(start, last + 1)) + inverse_moment_tail(last, v)
    return np.diag(sphere_second_moment(mode)) * s
