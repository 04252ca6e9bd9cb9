# Growth speed of h_N(0) on either side of zeta = 1.
#
# Below 1 the height grows linearly and h_N(0)/N settles on the constant
# gamma; above 1 a handful of huge bumps dominate and h_N(0)/N^zeta keeps a
# random limit, the series sum_i T_i^(-zeta).
import numpy as np
from scipy import stats as sps

from nlrd import limits
from nlrd.core import ModelParams
from nlrd.deposition import probe_trajectory
from nlrd.sampling import RngStream

SEED = 7

slow = ModelParams(alpha=1.5, beta=2.0, D=60.0)
gamma = limits.gamma_speed(slow)
print(f"zeta = {slow.zeta:.2f}, gamma = {gamma:.6f}")

ns = [10**3, 10**4, 10**5]
h = np.array([[cp.h_at_origin for cp in probe_trajectory(slow, RngStream(SEED, r), ns)]
              for r in range(40)])
for k, n in enumerate(ns):
    print(f"  N = {n:>6}: mean h_N(0)/N = {h[:, k].mean() / n:.4f}")

fast = ModelParams(alpha=4.0, beta=2.0, D=60.0)
N, R = 10**4, 1000
sim = np.array([probe_trajectory(fast, RngStream(SEED, 10**6 + r), [N])[0].h_at_origin
                for r in range(R)]) / N ** fast.zeta
ref = limits.sample_stable_series_many(RngStream(SEED, 2 * 10**6), fast.zeta, R).values
print(f"zeta = {fast.zeta:.2f}: median of h_N(0)/N^zeta {np.median(sim):.3f} "
      f"vs series {np.median(ref):.3f}, KS distance {sps.ks_2samp(sim, ref).statistic:.3f}")
