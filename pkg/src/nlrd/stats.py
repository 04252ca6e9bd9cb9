"""Goodness-of-fit tests, scaling fits and the regime classifier."""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats as sps

from .errors import ParameterError
from .sampling import RngStream


@dataclass
class GofResult:
    """A test statistic against a fixed threshold; ``passed`` iff statistic < threshold."""

    statistic: float
    n: int
    threshold: float
    passed: bool

    @classmethod
    def make(cls, statistic: float, n: int, threshold: float) -> "GofResult":
        return cls(float(statistic), int(n), float(threshold), bool(statistic < threshold))

    def record(self, test: str, params=None, seed=None) -> dict:
        return {"test": test, "params": params, "statistic": self.statistic,
                "threshold": self.threshold, "pass": self.passed, "n": self.n, "seed": seed}


class ScaleMetric(enum.Enum):
    MEDIAN_ABS = "median_abs"
    IQR = "iqr"
    MEAN_ABS = "mean_abs"


@dataclass
class ScalingFit:
    exponent: float
    intercept: float
    r_squared: float
    n_points: int
    scale_metric: ScaleMetric

    def record(self, test: str, params=None, seed=None, expected=None, tolerance=None) -> dict:
        out = asdict(self)
        out["scale_metric"] = self.scale_metric.value
        out.update(test=test, params=params, seed=seed)
        if expected is not None:
            out.update(expected=expected, tolerance=tolerance,
                       **{"pass": bool(abs(self.exponent - expected) <= tolerance)})
        return out


def _kolmogorov_99(n: int) -> float:
    return float(sps.kstwo.ppf(0.99, n))


def ks_one_sample(sample, cdf: Callable, threshold: Optional[float] = None) -> GofResult:
    """Sup distance between the empirical CDF of `sample` and `cdf`.

    The default threshold is the 99% quantile of the Kolmogorov law for n.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size == 0:
        raise ParameterError("empty sample")
    stat = sps.ks_1samp(x, cdf).statistic
    thr = _kolmogorov_99(x.size) if threshold is None else threshold
    return GofResult.make(stat, x.size, thr)


def ks_two_sample(a, b, threshold: Optional[float] = None) -> GofResult:
    """Sup distance between two empirical CDFs.

    Default threshold: asymptotic 99% two-sample critical value.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ParameterError("empty sample")
    stat = sps.ks_2samp(a, b).statistic
    if threshold is None:
        threshold = 1.628 * math.sqrt((a.size + b.size) / (a.size * b.size))
    return GofResult.make(stat, min(a.size, b.size), threshold)


def scale_of(values, metric: ScaleMetric = ScaleMetric.MEDIAN_ABS) -> float:
    v = np.asarray(values, dtype=float)
    metric = ScaleMetric(metric)
    if metric is ScaleMetric.MEDIAN_ABS:
        return float(np.median(np.abs(v)))
    if metric is ScaleMetric.IQR:
        q75, q25 = np.percentile(v, [75, 25])
        return float(q75 - q25)
    return float(np.mean(np.abs(v)))


def fit_scaling(points: Iterable[Tuple[int, object]],
                metric: ScaleMetric = ScaleMetric.MEDIAN_ABS) -> ScalingFit:
    """Least-squares slope of log(scale) against log(N).

    Each point is (N, scale) or (N, replica values); in the latter case the
    scale is computed with `metric`.
    """
    metric = ScaleMetric(metric)
    ns, sc = [], []
    for n, val in points:
        ns.append(float(n))
        sc.append(scale_of(val, metric) if np.ndim(val) > 0 else float(val))
    ns, sc = np.array(ns), np.array(sc)
    if len(np.unique(ns)) < 3:
        raise ParameterError("need at least three distinct N")
    if np.any(ns <= 0):
        raise ParameterError("N must be positive")
    if np.any(~(sc > 0)):
        raise ParameterError("scale values must be positive")
    x, y = np.log(ns), np.log(sc)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return ScalingFit(float(slope), float(intercept), min(1.0, max(0.0, r2)), len(ns), metric)


def log_corrected_speed(points: Iterable[Tuple[int, float]]) -> List[Tuple[int, float]]:
    """(N, h / (N ln N)) for each point; natural log throughout."""
    out = []
    for n, h in points:
        if n < 2:
            raise ParameterError("N log N needs N >= 2")
        out.append((int(n), float(h) / (n * math.log(n))))
    return out


def last_decade_drift(ratios: Sequence[Tuple[int, float]]) -> float:
    """Change of the ratio over the last decade of N (last point minus the
    latest point at or below N_last / 10); NaN if there is none."""
    if not ratios:
        return float("nan")
    n_last, r_last = ratios[-1]
    earlier = [r for n, r in ratios if n <= n_last / 10]
    return r_last - earlier[-1] if earlier else float("nan")


@dataclass
class FieldCovariance:
    cov: np.ndarray
    se: np.ndarray
    n_replicas: int


def empirical_field_covariance(samples) -> FieldCovariance:
    """Unbiased covariance of replica rows (R, P) with standard errors.

    The standard error of entry (j, k) is the spread of the centered
    products divided by sqrt(R).
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 2:
        raise ParameterError("expected a (replicas, probes) array")
    R = x.shape[0]
    if R < 2:
        raise ParameterError("need at least two replicas")
    xc = x - x.mean(axis=0)
    prod = xc[:, :, None] * xc[:, None, :]
    cov = prod.sum(axis=0) / (R - 1)
    se = prod.std(axis=0, ddof=1) / math.sqrt(R)
    return FieldCovariance(cov, se, R)


# heavy-tailed CLT demonstration

def attraction_sums(rng: RngStream, n: int, replicas: int, chunk: int = 1 << 20) -> np.ndarray:
    """S_n / sqrt(n ln n) for xi = eps U^(-1/2), one value per replica.

    One uniform W per term: eps = +1 iff W < 1/2 and U = 1 - (2W mod 1),
    which is uniform on (0, 1] and independent of the sign.
    """
    if n < 1000:
        raise ParameterError("the demonstration needs n >= 1000")
    out = np.empty(replicas)
    for r in range(replicas):
        s = 0.0
        done = 0
        while done < n:
            m = min(chunk, n - done)
            w = rng.random(m)
            u = 1.0 - np.mod(2.0 * w, 1.0)
            s += float(np.sum(np.where(w < 0.5, 1.0, -1.0) / np.sqrt(u)))
            done += m
        out[r] = s
    return out / math.sqrt(n * math.log(n))


def domain_of_attraction_demo(rng: RngStream, n: int = 10**6, replicas: int = 2000,
                              threshold: float = 0.05) -> GofResult:
    """KS distance of S_n / sqrt(n ln n) from the standard normal."""
    return ks_one_sample(attraction_sums(rng, n, replicas), sps.norm.cdf, threshold)


@dataclass
class TailCheck:
    value: float
    se: float
    x: float
    draws: int


def attraction_tail_check(rng: RngStream, x: float = 10.0, draws: int = 10**6) -> TailCheck:
    """Estimate x^2 P(xi > x); the exact value is 1/2 for x >= 1."""
    w = rng.random(draws)
    u = 1.0 - np.mod(2.0 * w, 1.0)
    xi = np.where(w < 0.5, 1.0, -1.0) / np.sqrt(u)
    hit = (xi > x).astype(float)
    p = hit.mean()
    return TailCheck(float(x * x * p), float(x * x * hit.std(ddof=1) / math.sqrt(draws)), x, draws)


# phase diagram

class Region(enum.Enum):
    """Regions of the (alpha, beta) phase diagram.

    A: super-ballistic, heavy fluctuations. B: ballistic, heavy
    fluctuations. C: ballistic, Gaussian. D: super-ballistic, Gaussian.
    """

    A = "A"
    B = "B"
    C = "C"
    D = "D"
    BOUNDARY = "boundary"

    @property
    def super_ballistic(self) -> Optional[bool]:
        return None if self is Region.BOUNDARY else self in (Region.A, Region.D)

    @property
    def gaussian(self) -> Optional[bool]:
        return None if self is Region.BOUNDARY else self in (Region.C, Region.D)


BOUNDARY_TOL = 1e-12


def classify_exponents(zeta: float, kappa: float) -> Region:
    if abs(zeta - 1.0) <= BOUNDARY_TOL or abs(kappa - 0.5) <= BOUNDARY_TOL:
        return Region.BOUNDARY
    fast, heavy = zeta > 1.0, kappa > 0.5
    if fast:
        return Region.A if heavy else Region.D
    return Region.B if heavy else Region.C


def phase_classify(alpha: float, beta: float, d: int = 1, n: int = 1) -> Region:
    if beta <= 1:
        raise ParameterError("beta must exceed 1")
    return classify_exponents((alpha - d) / (beta - 1), (alpha - n - d) / (beta - 1))


def expected_exponents(zeta: float, kappa: float) -> Tuple[float, float]:
    """Growth exponents of h_N(0) and f_N away from the boundaries."""
    return max(1.0, zeta), max(0.5, kappa)


def classify_fit(speed_exponent: float, fluct_exponent: float,
                 speed_margin: float = 0.15, fluct_margin: float = 0.1) -> Region:
    """Region read off fitted exponents: a regime counts as anomalous once
    its exponent clears the diffusive/ballistic value by more than the margin."""
    fast = speed_exponent > 1.0 + speed_margin
    heavy = fluct_exponent > 0.5 + fluct_margin
    if fast:
        return Region.A if heavy else Region.D
    return Region.B if heavy else Region.C
