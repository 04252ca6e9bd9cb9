# A variable with P(|xi| > x) = 1/x^2 has infinite variance, yet its sums
# still become Gaussian once scaled by sqrt(n ln n) instead of sqrt(n).
# The approach is slow: the error decays like 1/ln n.
import numpy as np
from scipy import stats as sps

from nlrd import stats
from nlrd.sampling import RngStream

for n in (10**3, 10**4, 10**5):
    s = stats.attraction_sums(RngStream(1, n), n, 1000)
    print(f"n = {n:>6}: KS vs N(0,1) = {sps.kstest(s, sps.norm.cdf).statistic:.3f}, "
          f"sample variance {np.var(s):.3f}")

tail = stats.attraction_tail_check(RngStream(2, 0), x=10.0)
print(f"x^2 P(xi > x) at x = 10: {tail.value:.4f} +- {tail.se:.4f} (exact 0.5)")
