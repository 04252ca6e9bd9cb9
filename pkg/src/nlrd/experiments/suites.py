"""The validation battery: one function per acceptance criterion.

Every criterion draws from streams keyed by (master_seed, criterion id),
compares against thresholds loaded from the frozen calibration file, and
returns a `CriterionResult`. ``scale`` multiplies replica and sample counts
(the calibration protocol runs at scale 4).
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from importlib import resources
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import stats as sps

from .. import limits
from .. import stats
from ..core import ModelKind, ModelParams, ShapeFunction, TorusPoint, torus_distance_array
from ..deposition import (
    checkpoint_rows,
    deposit_min,
    kernels,
    new_profile,
    probe_trajectory,
    run_trajectory,
    to_csv,
)
from ..sampling import (
    RngStream,
    exp_partial_sums_many,
    order_stats_representation,
    sample_pareto,
    sample_vY_distance_direct,
    uniform_torus_array,
)
from .runner import map_replicas

SUITE_NAMES = {
    1: "order_stats",
    2: "vY_law",
    3: "gamma_moments",
    4: "ballistic_speed",
    5: "superballistic_law",
    6: "gaussian_fluct",
    7: "heavy_fluct",
    8: "critical_speed",
    9: "min_speed",
    10: "stellar_decay",
    11: "appendixD",
    12: "phase_diagram",
    13: "properties",
}


@dataclass
class CriterionResult:
    id: int
    name: str
    passed: bool
    measured: dict
    thresholds: dict
    provenance: str
    seed: int
    wall_time: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        bits = ", ".join(f"{k}={_short(v)}" for k, v in self.measured.items())
        return f"[{status}] criterion {self.id:2d} {self.name}: {bits}"

    def record(self) -> dict:
        return {"id": self.id, "name": self.name, "pass": self.passed, "measured": self.measured,
                "thresholds": self.thresholds, "provenance": self.provenance, "seed": self.seed,
                "wall_time": self.wall_time}


def _short(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_short(x)}" for k, x in v.items()) + "}"
    return str(v)


def load_calibration() -> dict:
    text = resources.files("nlrd.experiments").joinpath("calibration.json").read_text("utf-8")
    return json.loads(text)


def _thr(cal, cid):
    entry = cal["criteria"][str(cid)]
    return entry["threshold"], entry["provenance"]


def _stream(seed, cid, k=0):
    return RngStream(seed, cid * 10**8 + k)


def _n(base, scale):
    return int(round(base * scale))


# 1-3: sampling identities

def criterion_1(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 1)
    N, R = 10**4, _n(10**4, scale)
    measured = {}
    ok = True
    for j, beta in enumerate((2.0, 3.0)):
        rng_direct = _stream(seed, 1, 2 * j)
        rng_rep = _stream(seed, 1, 2 * j + 1)
        top = np.empty(R)
        chunk = 500
        for a in range(0, R, chunk):
            m = min(chunk, R - a)
            top[a:a + m] = sample_pareto(rng_direct, beta, size=(m, N)).max(axis=1)
        rep = np.array([order_stats_representation(rng_rep, N, beta)[0] for _ in range(R)])
        g = stats.ks_two_sample(top, rep, thr["ks"])
        measured[f"ks_beta{beta:g}"] = g.statistic
        ok = ok and g.passed
    return ok, measured, thr, prov


def criterion_2(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 2)
    D1, s1 = 60.0, 13.7
    rng = _stream(seed, 2, 0)
    n1 = _n(10**4, scale)
    y = uniform_torus_array(rng, D1, 1, n1)
    v = torus_distance_array(y, np.array([s1]), D1)
    g1 = stats.ks_one_sample(v, sps.uniform(0.0, D1 / 2).cdf, thr["ks"])
    D2, s2 = 10.0, np.array([2.5, 7.0])
    n2 = _n(10**5, scale)
    y2 = uniform_torus_array(_stream(seed, 2, 1), D2, 2, n2)
    v_direct = torus_distance_array(y2, s2, D2)
    v_law = sample_vY_distance_direct(_stream(seed, 2, 2), D2, 2, size=n2)
    g2 = stats.ks_two_sample(v_direct, v_law, thr["ks"])
    return g1.passed and g2.passed, {"ks_d1": g1.statistic, "ks_d2": g2.statistic}, thr, prov


def criterion_3(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 3)
    R = _n(10**6, scale)
    measured, ok = {}, True
    for k, (i, v) in enumerate(((3, 1.0), (5, 2.0), (10, 1.5))):
        rng = _stream(seed, 3, k)
        vals = np.concatenate([
            exp_partial_sums_many(rng, i, min(200_000, R - a))[:, -1] ** -v
            for a in range(0, R, 200_000)
        ])
        exact = limits.inverse_moment_T(i, v)
        se = vals.std(ddof=1) / math.sqrt(R)
        z = (vals.mean() - exact) / se
        measured[f"z_{i}_{v:g}"] = float(z)
        ok = ok and abs(z) <= thr["max_abs_z"]
    return ok, measured, thr, prov


# 4-9: one-dimensional rand and min models

def _origin_at(results, k=-1):
    return np.array([r[k].h_at_origin for r in results], dtype=float)


def _probe_runs(params, seed, cid, replicas, ns, probes, threads, k0=0):
    return map_replicas(
        lambda r: probe_trajectory(params, _stream(seed, cid, k0 + r), ns, probes),
        range(replicas), threads)


def criterion_4(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 4)
    p = ModelParams(1.5, 2.0, 60.0, 1)
    N, R = 10**5, _n(50, scale)
    gamma = limits.gamma_speed(p, 1e-8)
    res = _probe_runs(p, seed, 4, R, [N], [], threads)
    ratio = float(np.mean(_origin_at(res) / N))
    rel = abs(ratio / gamma - 1.0)
    return rel <= thr["rel"], {"mean_h_over_N": ratio, "gamma": gamma, "rel_err": rel}, thr, prov


def criterion_5(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 5)
    p = ModelParams(4.0, 2.0, 60.0, 1)
    N, R = 10**4, _n(2000, scale)
    res = _probe_runs(p, seed, 5, R, [N], [], threads)
    sim = _origin_at(res) / N ** p.zeta
    ref = limits.sample_stable_series_many(_stream(seed, 5, 10**7), p.zeta, R, tol=1e-6).values
    g = stats.ks_two_sample(sim, ref, thr["ks"])
    return g.passed, {"ks": g.statistic}, thr, prov


def criterion_6(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 6)
    p = ModelParams(1.5, 2.0, 60.0, 1)
    s = TorusPoint(p.D / 4, p.D)
    N, R = 10**4, _n(2000, scale)
    var = limits.diff_covariance(p, s, s).value
    res = _probe_runs(p, seed, 6, R, [N], [s], threads)
    f = np.array([r[-1].f_at_probes[0][1] for r in res]) / math.sqrt(N)
    g = stats.ks_one_sample(f, sps.norm(0.0, math.sqrt(var)).cdf, thr["ks"])
    return g.passed, {"ks": g.statistic, "var_quadrature": var,
                      "var_empirical": float(f.var(ddof=1))}, thr, prov


def criterion_7(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 7)
    p = ModelParams(3.0, 2.0, 2.0, 1)
    s = TorusPoint(p.D / 4, p.D)
    N, R = 10**4, _n(2000, scale)
    res = _probe_runs(p, seed, 7, R, [N], [s], threads)
    f = np.array([r[-1].f_at_probes[0][1] for r in res]) / N ** p.kappa
    ref = limits.sample_mu_d(_stream(seed, 7, 10**7), p, [s], tol=0.01, size=R).values[:, 0]
    g = stats.ks_two_sample(f, ref, thr["ks"])
    return g.passed, {"ks": g.statistic}, thr, prov


def criterion_8(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 8)
    p = ModelParams(2.0, 2.0, 60.0, 1)
    R = _n(50, scale)
    ns = [10**4, 10**6]
    res = _probe_runs(p, seed, 8, R, ns, [], threads)
    h = np.array([[cp.h_at_origin for cp in r] for r in res])
    ratios = [float(np.mean(h[:, k] / (n * math.log(n)))) for k, n in enumerate(ns)]
    lo, hi = thr["band"]
    ok = lo <= ratios[1] <= hi and abs(ratios[1] - 1) < abs(ratios[0] - 1)
    return ok, {"ratio_1e4": ratios[0], "ratio_1e6": ratios[1]}, thr, prov


def criterion_9(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 9)
    p = ModelParams(1.5, 2.0, 60.0, 1, model=ModelKind.MIN, grid_per_dim=thr["grid_per_dim"])
    N, R = 10**5, _n(50, scale)
    gamma = limits.gamma_speed(p, 1e-8)
    res = map_replicas(lambda r: run_trajectory(p, _stream(seed, 9, r), [N], [], log_cap=0),
                       range(R), threads)
    ratio = float(np.mean(_origin_at(res) / N))
    rel = abs(ratio / gamma - 1.0)
    return rel <= thr["rel"], {"mean_h_over_N": ratio, "gamma": gamma, "rel_err": rel}, thr, prov


# 10: stellar

def criterion_10(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 10)
    p = ModelParams(2.5, 4.0, thr["D"], 2, shape="parabola", model="stellar",
                    grid_per_dim=512)
    ns = [10**3, 10**4, 10**5]
    R = _n(30, scale)
    # the origin is grid point 0, where the grid engine and exact evaluation coincide
    res = _probe_runs(p, seed, 10, R, ns, [], threads)
    norms = np.array([[np.linalg.norm(cp.h_at_origin) for cp in r] for r in res])
    fit = stats.fit_scaling([(n, norms[:, k]) for k, n in enumerate(ns)], stats.ScaleMetric.MEDIAN_ABS)
    ok = abs(fit.exponent - thr["expected"]) <= thr["tol"]
    return ok, {"exponent": fit.exponent, "r2": fit.r_squared}, thr, prov


# 11: heavy-tailed CLT

def criterion_11(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 11)
    R = _n(2000, scale)
    g = stats.domain_of_attraction_demo(_stream(seed, 11, 0), 10**6, R, thr["ks"])
    tail = stats.attraction_tail_check(_stream(seed, 11, 1), 10.0, _n(10**6, scale))
    tail_ok = abs(tail.value - thr["tail_value"]) <= thr["tail_tol"]
    return g.passed and tail_ok, {"ks": g.statistic, "tail": tail.value}, thr, prov


# 12: phase diagram

PHASE_ALPHAS = (1.5, 2.25, 5.25)
PHASE_BETAS = (2.0, 3.0, 6.0)
PHASE_NS = (1000, 3162, 10000, 31623, 100000)


def phase_point(base: ModelParams, alpha, beta, replicas, ns, seed, stream_offset, threads=1):
    """Fitted speed (median h_N(0)) and fluctuation (IQR of f_N at D/4 along
    the first axis) exponents for the rand model at (alpha, beta)."""
    p = base.replace(alpha=alpha, beta=beta)
    D = p.D
    s = TorusPoint([D / 4] + [0.0] * (p.d - 1), D)
    res = map_replicas(
        lambda r: probe_trajectory(p, RngStream(seed, stream_offset + r), list(ns), [s]),
        range(replicas), threads)
    h = np.array([[cp.h_at_origin for cp in r] for r in res])
    f = np.array([[cp.f_at_probes[0][1] for cp in r] for r in res])
    sp = stats.fit_scaling([(n, h[:, k]) for k, n in enumerate(ns)], stats.ScaleMetric.MEDIAN_ABS)
    fl = stats.fit_scaling([(n, f[:, k]) for k, n in enumerate(ns)], stats.ScaleMetric.IQR)
    return p, sp, fl


def criterion_12(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 12)
    R = _n(thr["replicas"], scale)
    ok = True
    worst_speed = worst_fluct = 0.0
    regions = {}
    k = 0
    base = ModelParams(2.0, 2.0, thr["D"], 1)
    for a in PHASE_ALPHAS:
        for b in PHASE_BETAS:
            p, sp, fl = phase_point(base, a, b, R, PHASE_NS, seed, 12 * 10**8 + k * 10**6,
                                    threads)
            k += 1
            region = stats.phase_classify(a, b, 1, 1)
            if region is stats.Region.BOUNDARY:
                continue
            es, ef = stats.expected_exponents(p.zeta, p.kappa)
            ds, df = abs(sp.exponent - es), abs(fl.exponent - ef)
            worst_speed, worst_fluct = max(worst_speed, ds), max(worst_fluct, df)
            fit_region = stats.classify_fit(sp.exponent, fl.exponent, thr["speed_tol"],
                                            thr["fluct_tol"])
            regions[f"{a:g},{b:g}"] = region.value
            ok = ok and ds <= thr["speed_tol"] and df <= thr["fluct_tol"] and fit_region is region
    covered = sorted(set(regions.values()))
    return ok, {"max_speed_dev": worst_speed, "max_fluct_dev": worst_fluct,
                "regions": covered}, thr, prov


# 13: property suites

def property_checks(seed: int) -> Dict[str, float]:
    """Run the structural invariants; returns the worst observed error per check."""
    out = {}

    # localized updates against a full recomputation from the log
    worst = 0.0
    cases = [
        ModelParams(1.5, 2.0, 10.0, 1, grid_per_dim=256),
        ModelParams(1.5, 2.0, 10.0, 1, model="min", grid_per_dim=256),
        ModelParams(3.0, 2.5, 6.0, 2, shape="cubic_hump", grid_per_dim=32),
        ModelParams(2.5, 4.0, 6.0, 2, shape="parabola", model="stellar", grid_per_dim=32),
    ]
    for k, p in enumerate(cases):
        prof = new_profile(p)
        run_trajectory(p, RngStream(seed, 13 * 10**8 + k), [200], profile=prof)
        ref = prof.recompute_from_log()
        worst = max(worst, float(np.max(np.abs(prof.values - ref)) / max(np.max(np.abs(ref)), 1e-300)))
        if p.model is ModelKind.STELLAR:
            vref = prof.recompute_vector_from_log()
            worst = max(worst, float(np.max(np.abs(prof.vec - vref)) / np.max(np.abs(vref))))
    out["recompute_rel_err"] = worst

    # tree minimum and argmin against a linear scan, every step
    mismatches = 0
    for k, p in enumerate([ModelParams(1.5, 2.0, 10.0, 1, model="min", grid_per_dim=128),
                           ModelParams(2.5, 2.0, 5.0, 2, model="min", grid_per_dim=16)]):
        prof = new_profile(p)
        rng = RngStream(seed, 13 * 10**8 + 100 + k)
        for _ in range(300):
            deposit_min(prof, rng)
            if prof.min != prof.values.min():
                mismatches += 1
        # brute-force rule at the final state
        u = rng.random(p.d) * p.D
        cell, _ = kernels.argmin_nearest(prof.tree, prof.P, prof.n_cells, p.grid_per_dim, p.d,
                                         p.D, p.cell_width, u)
        m = prof.values.min()
        cand = np.flatnonzero(prof.values == m)
        dist = torus_distance_array(prof.all_coords()[cand], u, p.D)
        best = cand[np.flatnonzero(dist == dist.min())[0]]
        mismatches += int(best != cell)
    out["tree_mismatches"] = float(mismatches)

    # rand/min coupling: same widths, same grid mass
    p = ModelParams(1.5, 2.0, 60.0, 1)
    sums = []
    for model in ("rand", "min"):
        q = p.replace(model=model)
        prof = new_profile(q)
        run_trajectory(q, RngStream(seed, 13 * 10**8 + 200), [4], profile=prof)
        sums.append(prof.grid_sum())
    out["coupling_rel_diff_times_G"] = abs(sums[0] - sums[1]) / abs(sums[0]) * p.grid_per_dim

    # determinism: identical bytes from identical streams
    q = ModelParams(2.0, 2.0, 8.0, 1, model="min", grid_per_dim=512)
    texts = []
    for _ in range(2):
        cps = run_trajectory(q, RngStream(seed, 13 * 10**8 + 300), [0, 10, 100], [[2.0], [0.0]])
        texts.append(to_csv(checkpoint_rows([(0, cps)])))
    out["determinism_diff"] = float(texts[0] != texts[1])

    # Lipschitz and Taylor checks of every shape in the theorem class
    worst_lip, worst_taylor = -np.inf, np.inf
    xs = np.linspace(0.0, 1.2, 241)
    for name in ("triangle", "cubic_hump", "parabola"):
        sh = ShapeFunction.from_name(name)
        a, b = np.meshgrid(xs, xs)
        lhs = np.abs(sh(a) - sh(b))
        rhs = sh.increment_constant() * np.maximum(a, b) ** (sh.order_n - 1) * np.abs(a - b)
        worst_lip = max(worst_lip, float(np.max(lhs - rhs)))
        h = 1e-4
        ratio = (sh(h) - 1.0) / (h ** sh.order_n * sh.taylor_coefficient)
        worst_taylor = min(worst_taylor, -abs(ratio - 1.0))
    out["lipschitz_excess"] = worst_lip
    out["taylor_rel_err"] = -worst_taylor
    return out


def criterion_13(seed, scale=1.0, threads=1, cal=None):
    thr, prov = _thr(cal, 13)
    m = property_checks(seed)
    ok = (m["recompute_rel_err"] <= thr["recompute_rel"]
          and m["tree_mismatches"] == 0
          and m["coupling_rel_diff_times_G"] <= thr["coupling_rel_times_G"]
          and m["determinism_diff"] == 0
          and m["lipschitz_excess"] <= 1e-12
          and m["taylor_rel_err"] <= thr["taylor_rel"])
    return ok, m, thr, prov


CRITERIA: Dict[int, Callable] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11, 12: criterion_12, 13: criterion_13,
}


def resolve_suite(selection) -> List[int]:
    """'all', an id, a name, or a list of those."""
    if selection is None or selection == "all":
        return sorted(CRITERIA)
    items = selection if isinstance(selection, (list, tuple)) else str(selection).split(",")
    by_name = {v.lower(): k for k, v in SUITE_NAMES.items()}
    out = []
    for it in items:
        key = str(it).strip()
        if key.isdigit() and int(key) in CRITERIA:
            out.append(int(key))
        elif key.lower() in by_name:
            out.append(by_name[key.lower()])
        elif key.lower() == "all":
            out.extend(CRITERIA)
        else:
            raise KeyError(f"unknown suite {key!r}")
    return sorted(set(out))


def run_criterion(cid: int, seed: int, scale: float = 1.0, threads: int = 1,
                  cal: Optional[dict] = None) -> CriterionResult:
    cal = cal or load_calibration()
    t0 = time.perf_counter()
    ok, measured, thr, prov = CRITERIA[cid](seed, scale=scale, threads=threads, cal=cal)
    return CriterionResult(cid, SUITE_NAMES[cid], bool(ok), measured, thr, prov, seed,
                           time.perf_counter() - t0)
