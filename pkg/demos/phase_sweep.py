# A coarse pass over the (alpha, beta) plane for the rand model.
#
# For each point we fit the growth exponents of the median height and of
# the fluctuation spread, then read off the region. Points on or next to a
# boundary line are only reported.
from nlrd import stats
from nlrd.core import ModelParams
from nlrd.experiments.suites import phase_point

base = ModelParams(alpha=2.0, beta=2.0, D=2.0)
ns = [1000, 3162, 10000, 31623]
print(" alpha  beta   zeta  kappa  speed  fluct  predicted  fitted")
for k, (a, b) in enumerate([(1.5, 2.0), (2.25, 2.0), (5.25, 6.0), (5.25, 2.0), (3.0, 3.0)]):
    p, sp, fl = phase_point(base, a, b, 300, ns, seed=5, stream_offset=k * 10**6)
    region = stats.phase_classify(a, b)
    fitted = stats.classify_fit(sp.exponent, fl.exponent)
    print(f"{a:6.2f} {b:5.2f} {p.zeta:6.2f} {p.kappa:6.2f} {sp.exponent:6.2f} {fl.exponent:6.2f}"
          f"  {region.value:>9}  {fitted.value:>6}")
