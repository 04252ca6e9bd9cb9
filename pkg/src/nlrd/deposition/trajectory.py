"""Checkpointed trajectories, on the grid or at probe points only.

`run_trajectory` evolves a full Profile. `probe_trajectory` consumes the
same draws but evaluates each bump only at the origin and the probes,
which is what the large-replica statistics need; at grid points the two
agree to rounding.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..core import ModelKind, ModelParams, TorusPoint, bump_array
from ..errors import BudgetExceededError, ParameterError
from ..sampling import RngStream
from .draws import draw_block
from .profile import Profile, StellarProfile, new_profile

BLOCK = 4096


@dataclass
class Checkpoint:
    """Statistics of one trajectory at N deposits.

    For the stellar model ``h_at_origin`` and the probe values are
    3-vectors and ``h_min``/``h_max`` are taken over the Euclidean norm.
    Probe-only trajectories have no grid, so ``h_min``/``h_max`` are NaN
    and ``argmin_cell`` is -1.
    """

    N: int
    h_at_origin: object
    h_min: float
    h_max: float
    f_at_probes: list = field(default_factory=list)
    argmin_cell: int = -1
    wall_time: float = 0.0

    def f_values(self) -> np.ndarray:
        return np.array([v for _, v in self.f_at_probes])


def geometric_schedule(n_max: int, per_decade: int = 4, start: int = 1) -> List[int]:
    """Rounded powers of 10^(1/per_decade) from `start` up to and including n_max."""
    if n_max < start:
        return [n_max]
    k = np.arange(0, int(np.ceil(per_decade * np.log10(n_max / start))) + 1)
    ns = np.unique(np.rint(start * 10.0 ** (k / per_decade)).astype(np.int64))
    ns = [int(n) for n in ns if n <= n_max]
    if ns[-1] != n_max:
        ns.append(int(n_max))
    return ns


def _check_schedule(checkpoint_Ns, budget):
    ns = [int(n) for n in checkpoint_Ns]
    if any(n < 0 for n in ns):
        raise ParameterError("checkpoint N must be non-negative")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ParameterError("checkpoint_Ns must be strictly increasing")
    if budget is not None and ns and ns[-1] > budget:
        raise BudgetExceededError(f"checkpoint N={ns[-1]} exceeds the budget of {budget} deposits")
    return ns


def _as_points(probes, d):
    out = []
    for p in probes:
        arr = p.as_array() if isinstance(p, TorusPoint) else np.atleast_1d(np.asarray(p, float))
        if arr.shape != (d,):
            raise ParameterError("probe dimension does not match the model")
        out.append(arr)
    return out


def _capture(profile: Profile, probe_cells, probes, t0) -> Checkpoint:
    o = profile.origin_cell
    if isinstance(profile, StellarProfile):
        norms = np.linalg.norm(profile.vec, axis=1)
        h0 = profile.vec[o].copy()
        f = [(p, profile.vec[c] - h0) for p, c in zip(probes, probe_cells)]
        return Checkpoint(profile.n_deposited, h0, float(norms.min()), float(norms.max()), f,
                          int(np.argmin(norms)), time.perf_counter() - t0)
    h0 = float(profile.values[o])
    f = [(p, float(profile.values[c]) - h0) for p, c in zip(probes, probe_cells)]
    return Checkpoint(profile.n_deposited, h0, profile.min, float(profile.values.max()), f,
                      profile.argmin_cell(), time.perf_counter() - t0)


def run_trajectory(params: ModelParams, rng: RngStream, checkpoint_Ns: Sequence[int],
                   probes: Sequence = (), budget: Optional[int] = None,
                   profile: Optional[Profile] = None, **profile_kw) -> List[Checkpoint]:
    """Evolve a grid profile and capture a Checkpoint at each requested N.

    Probes snap to their nearest grid point. Pass `profile` to keep access
    to the final grid (it must be fresh or continue the same stream).
    """
    ns = _check_schedule(checkpoint_Ns, budget)
    if profile is None:
        profile = new_profile(params, **profile_kw)
    pts = _as_points(probes, params.d)
    probe_list = [p if isinstance(p, TorusPoint) else TorusPoint(a, params.D)
                  for p, a in zip(probes, pts)]
    cells = [profile.cell_of(a) for a in pts]
    t0 = time.perf_counter()
    out = []
    for n in ns:
        while profile.n_deposited < n:
            b = min(BLOCK, n - profile.n_deposited)
            profile.apply_block(draw_block(params, rng, b))
        out.append(_capture(profile, cells, probe_list, t0))
    return out


def probe_trajectory(params: ModelParams, rng: RngStream, checkpoint_Ns: Sequence[int],
                     probes: Sequence = (), budget: Optional[int] = None) -> List[Checkpoint]:
    """Exact pointwise h_N(0) and f_N(probes) for the rand and stellar models.

    Probes are used as given (no snapping). The min model depends on the
    whole profile and is rejected.
    """
    if params.model is ModelKind.MIN:
        raise ParameterError("the min model needs the full grid; use run_trajectory")
    ns = _check_schedule(checkpoint_Ns, budget)
    pts = _as_points(probes, params.d)
    probe_list = [p if isinstance(p, TorusPoint) else TorusPoint(a, params.D)
                  for p, a in zip(probes, pts)]
    where = np.array([np.zeros(params.d)] + pts)  # (1+P, d)
    stellar = params.model is ModelKind.STELLAR
    total = np.zeros((len(where), 3)) if stellar else np.zeros(len(where))
    done = 0
    t0 = time.perf_counter()
    out = []
    for n in ns:
        while done < n:
            b = min(BLOCK, n - done)
            blk = draw_block(params, rng, b)
            x = bump_array(params, blk.pts[:, None, :], blk.z[:, None], where[None, :, :])
            if stellar:
                total = total + (x[:, :, None] * blk.theta[:, None, :]).sum(axis=0)
            else:
                total = total + x.sum(axis=0)
            done += b
        h0 = total[0].copy() if stellar else float(total[0])
        f = [(p, total[k + 1] - total[0] if stellar else float(total[k + 1] - total[0]))
             for k, p in enumerate(probe_list)]
        out.append(Checkpoint(n, h0, float("nan"), float("nan"), f, -1,
                              time.perf_counter() - t0))
    return out


def probe_paths(params: ModelParams, rng: RngStream, n: int, probes: Sequence = ()) -> np.ndarray:
    """Running sums at (origin, probes) after each of n deposits, shape (n, 1+P[, 3]).

    Scalar and stellar models; memory grows linearly in n.
    """
    if params.model is ModelKind.MIN:
        raise ParameterError("the min model needs the full grid; use run_trajectory")
    pts = _as_points(probes, params.d)
    where = np.array([np.zeros(params.d)] + pts)
    blk = draw_block(params, rng, n)
    x = bump_array(params, blk.pts[:, None, :], blk.z[:, None], where[None, :, :])
    if params.model is ModelKind.STELLAR:
        x = x[:, :, None] * blk.theta[:, None, :]
    return np.cumsum(x, axis=0)
