# Fluctuations f_N = h_N(s) - h_N(0) in the two kappa regimes.
#
# kappa < 1/2: N^(-1/2) f_N is Gaussian with the variance of one
# differenced bump. kappa > 1/2: N^(-kappa) f_N has a heavy-tailed limit we
# can sample directly from its series.
import math

import numpy as np
from scipy import stats as sps

from nlrd import limits
from nlrd.core import ModelParams, TorusPoint
from nlrd.deposition import probe_trajectory
from nlrd.sampling import RngStream

SEED, R, N = 11, 1000, 10**4


def fluct(params, s, offset):
    return np.array([probe_trajectory(params, RngStream(SEED, offset + r), [N], [s])[0].f_at_probes[0][1]
                     for r in range(R)])


gauss = ModelParams(alpha=1.5, beta=2.0, D=60.0)
s = TorusPoint(15.0, gauss.D)
var = limits.diff_covariance(gauss, s, s).value
f = fluct(gauss, s, 0) / math.sqrt(N)
print(f"kappa = {gauss.kappa:+.2f}: variance {f.var():.4f} (theory {var:.4f}), "
      f"KS vs normal {sps.kstest(f, sps.norm(0, math.sqrt(var)).cdf).statistic:.3f}")

heavy = ModelParams(alpha=3.0, beta=2.0, D=2.0)
s = TorusPoint(0.5, heavy.D)
f = fluct(heavy, s, 10**6) / N ** heavy.kappa
ref = limits.sample_mu_d(RngStream(SEED, 2 * 10**6), heavy, [s], size=R).values[:, 0]
q = [0.05, 0.5, 0.95]
print(f"kappa = {heavy.kappa:+.2f}: quantiles {np.round(np.quantile(f, q), 3)} "
      f"vs limit {np.round(np.quantile(ref, q), 3)}")
print(f"  two-sample KS {sps.ks_2samp(f, ref).statistic:.3f}")
