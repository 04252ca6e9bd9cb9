import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlrd.core import ModelParams, bump_array, torus_distance_array
from nlrd.deposition import (
    checkpoint_rows,
    deposit_min,
    deposit_rand,
    deposit_stellar,
    deposition_log_rows,
    draw_block,
    geometric_schedule,
    new_profile,
    probe_paths,
    probe_trajectory,
    run_trajectory,
    to_csv,
)
from nlrd.deposition import kernels
from nlrd.errors import BudgetExceededError, GridMemoryError, ParameterError
from nlrd.sampling import RngStream

P1 = ModelParams(1.5, 2.0, 10.0, 1, grid_per_dim=200)
P2 = ModelParams(2.5, 2.0, 6.0, 2, shape="cubic_hump", grid_per_dim=24)


def brute_grid(params, centers, zs):
    """Sum of bumps at every grid point, straight from the definition."""
    G, D, d = params.grid_per_dim, params.D, params.d
    axes = [np.arange(G) * D / G] * d
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    out = np.zeros(len(pts))
    for c, z in zip(centers, zs):
        out += z ** (params.alpha - d) * params.shape(torus_distance_array(pts, np.asarray(c), D) / z)
    return out


@pytest.mark.parametrize("params", [P1, P2, P1.replace(model="min"), P2.replace(model="min")])
def test_grid_matches_definition(params):
    prof = new_profile(params)
    run_trajectory(params, RngStream(1, 0), [150], profile=prof)
    centers = [r.center for r in prof.log]
    zs = [r.z for r in prof.log]
    np.testing.assert_allclose(prof.values, brute_grid(params, centers, zs), rtol=1e-10, atol=1e-12)


def test_min_deposits_at_a_global_minimum():
    p = ModelParams(1.5, 2.0, 10.0, 1, model="min", grid_per_dim=64)
    prof = new_profile(p)
    rng = RngStream(3, 0)
    for _ in range(200):
        before = prof.values.copy()
        rec = deposit_min(prof, rng)
        cell = prof.cell_of(rec.center)
        assert before[cell] == before.min()
        assert prof.min == prof.values.min()


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=1, max_size=64), st.floats(0, 1, exclude_max=True))
def test_tree_argmin_against_scan(vals, ufrac):
    G, D = len(vals), 8.0
    dx = D / G
    values = np.array(vals, dtype=float)
    P = 1
    while P < G:
        P *= 2
    tree = np.empty(2 * P)
    kernels.tree_build(tree, values, P)
    u = np.array([ufrac * D])
    cell, count = kernels.argmin_nearest(tree, P, G, G, 1, D, dx, u)
    m = values.min()
    cand = np.flatnonzero(values == m)
    dist = torus_distance_array((cand * dx)[:, None], u, D)
    assert count == len(cand)
    assert cell == cand[np.flatnonzero(dist == dist.min())[0]]


def test_block_size_does_not_matter():
    p = P1.replace(model="min")
    a = new_profile(p)
    run_trajectory(p, RngStream(5, 0), [300], profile=a)
    b = new_profile(p)
    rng = RngStream(5, 0)
    for _ in range(300):
        deposit_min(b, rng)
    np.testing.assert_array_equal(a.values, b.values)


def test_rand_and_min_share_widths():
    logs = []
    for model in ("rand", "min"):
        q = P1.replace(model=model)
        prof = new_profile(q)
        run_trajectory(q, RngStream(9, 0), [40], profile=prof)
        logs.append([r.z for r in prof.log])
    assert logs[0] == logs[1]


def test_coupled_grid_mass():
    # four shared widths on a D = 60 line: masses agree up to discretisation
    p = ModelParams(1.5, 2.0, 60.0, 1, grid_per_dim=4096)
    sums = []
    for model in ("rand", "min"):
        prof = new_profile(p.replace(model=model))
        run_trajectory(p.replace(model=model), RngStream(11, 0), [4], profile=prof)
        sums.append(prof.grid_sum())
    assert abs(sums[0] - sums[1]) <= 2.0 / p.grid_per_dim * abs(sums[0])


def test_probe_engine_agrees_with_grid_at_grid_points():
    p = P2
    cps_grid = run_trajectory(p, RngStream(4, 0), [10, 500], probes=[[1.5, 0.25]])
    cps_probe = probe_trajectory(p, RngStream(4, 0), [10, 500], probes=[[1.5, 0.25]])
    for g, q in zip(cps_grid, cps_probe):
        assert g.h_at_origin == pytest.approx(q.h_at_origin, rel=1e-10)
        assert g.f_at_probes[0][1] == pytest.approx(q.f_at_probes[0][1], rel=1e-9, abs=1e-9)


def test_stellar_vector_and_probe_engine():
    p = ModelParams(2.5, 4.0, 6.0, 2, shape="parabola", model="stellar", grid_per_dim=16)
    prof = new_profile(p)
    rng = RngStream(6, 0)
    recs = [deposit_stellar(prof, rng) for _ in range(50)]
    np.testing.assert_allclose(prof.vec, prof.recompute_vector_from_log(), rtol=1e-10, atol=1e-12)
    x0 = sum(bump_array(p, np.array(r.center), r.z, np.zeros((1, 2)))[0] * np.array(r.theta)
             for r in recs)
    np.testing.assert_allclose(prof.vector_at([0.0, 0.0]), x0, rtol=1e-10, atol=1e-12)
    q = probe_trajectory(p, RngStream(6, 0), [50])[0]
    np.testing.assert_allclose(q.h_at_origin, x0, rtol=1e-10, atol=1e-12)


def test_probe_paths_are_running_sums():
    paths = probe_paths(P1, RngStream(2, 0), 64, probes=[[2.5]])
    last = probe_trajectory(P1, RngStream(2, 0), [64], probes=[[2.5]])[0]
    assert paths.shape == (64, 2)
    assert paths[-1, 0] == pytest.approx(last.h_at_origin)
    assert paths[-1, 1] - paths[-1, 0] == pytest.approx(last.f_at_probes[0][1])


def test_checkpoint_zero_is_flat():
    cps = run_trajectory(P1, RngStream(0, 0), [0, 5], probes=[[3.0]])
    c0 = cps[0]
    assert (c0.N, c0.h_at_origin, c0.h_min, c0.h_max) == (0, 0.0, 0.0, 0.0)
    assert c0.f_at_probes[0][1] == 0.0
    assert cps[1].h_max >= cps[1].h_min >= 0


def test_schedule_and_budget_errors():
    with pytest.raises(ParameterError):
        run_trajectory(P1, RngStream(0, 0), [10, 5])
    with pytest.raises(BudgetExceededError):
        run_trajectory(P1, RngStream(0, 0), [10, 100], budget=50)
    with pytest.raises(ParameterError):
        probe_trajectory(P1.replace(model="min"), RngStream(0, 0), [1])


def test_wrong_model_for_deposit():
    with pytest.raises(ParameterError):
        deposit_min(new_profile(P1), RngStream(0, 0))
    with pytest.raises(ParameterError):
        deposit_rand(new_profile(P1.replace(model="min")), RngStream(0, 0))


def test_memory_guard():
    with pytest.raises(GridMemoryError):
        new_profile(ModelParams(2.5, 2.0, 1.0, 2, grid_per_dim=1 << 16))


def test_geometric_schedule():
    ns = geometric_schedule(1000, per_decade=1)
    assert ns == [1, 10, 100, 1000]
    assert geometric_schedule(5000, per_decade=2)[-1] == 5000
    assert all(b > a for a, b in zip(ns, ns[1:]))


def test_draws_are_block_independent():
    a = draw_block(P2, RngStream(1, 0), 10)
    rng = RngStream(1, 0)
    b = [draw_block(P2, rng, 1) for _ in range(10)]
    np.testing.assert_array_equal(a.z, np.concatenate([x.z for x in b]))
    np.testing.assert_array_equal(a.pts, np.concatenate([x.pts for x in b]))


def test_csv_export_deterministic():
    def once():
        prof = new_profile(P1.replace(model="min"))
        cps = run_trajectory(P1.replace(model="min"), RngStream(8, 0), [0, 10], [[1.0]], profile=prof)
        return to_csv(checkpoint_rows([(0, cps)])), to_csv(deposition_log_rows(prof.log, 1))
    a, b = once(), once()
    assert a == b
    assert a[0].splitlines()[0] == "replica,N,h0,hmin,hmax,argmin_cell,probe_id,f_value"
    assert a[1].splitlines()[0] == "step,center_0,z,theta_x,theta_y,theta_z"
    assert len(a[1].splitlines()) == 11


def test_log_cap_truncates():
    prof = new_profile(P1, log_cap=5)
    run_trajectory(P1, RngStream(0, 0), [20], profile=prof)
    assert len(prof.log) == 5 and prof.log_truncated
    with pytest.raises(RuntimeError):
        prof.recompute_from_log()
