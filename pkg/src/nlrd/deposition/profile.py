"""Discretized profiles and the single-step deposit operations."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ..core import ModelKind, ModelParams, TorusPoint, bump_array
from ..errors import GridMemoryError, ParameterError
from ..sampling import RngStream
from . import kernels
from .draws import DrawBlock, draw_block

DEFAULT_LOG_CAP = 100_000
DEFAULT_MEMORY_LIMIT = 2 * 1024**3


@dataclass
class DepositionRecord:
    step: int
    center: tuple
    z: float
    theta: Optional[tuple] = None
    tie_count: int = 0


def _next_pow2(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


def grid_bytes(params: ModelParams, stellar: bool = False) -> int:
    n = params.grid_per_dim ** params.d
    per_cell = 8 + 16  # values plus the tree (about 2 nodes per cell)
    if stellar:
        per_cell += 24
    return n * per_cell


class Profile:
    """h_N sampled at the G^d grid points, with a min-tracking tree.

    ``values`` is flat; use `grid` for the (G,)*d view. The tree is kept in
    sync after every deposit, so `min` and `argmin_cell` are O(1).
    """

    def __init__(self, params: ModelParams, log_cap: int = DEFAULT_LOG_CAP,
                 memory_limit: int = DEFAULT_MEMORY_LIMIT):
        need = grid_bytes(params, isinstance(self, StellarProfile))
        if need > memory_limit:
            raise GridMemoryError(
                f"grid of {params.grid_per_dim}^{params.d} cells needs {need} bytes, "
                f"limit is {memory_limit}"
            )
        self.params = params
        self.n_cells = params.grid_per_dim ** params.d
        self.values = np.zeros(self.n_cells)
        self.P = _next_pow2(self.n_cells)
        self.tree = np.empty(2 * self.P)
        kernels.tree_build(self.tree, self.values, self.P)
        self.n_deposited = 0
        self.origin_cell = 0
        self.log_cap = log_cap
        self.log: List[DepositionRecord] = []
        self.log_truncated = False

    # geometry
    @property
    def G(self) -> int:
        return self.params.grid_per_dim

    @property
    def dx(self) -> float:
        return self.params.cell_width

    def cell_coords(self, cell: int) -> np.ndarray:
        G, dx = self.G, self.dx
        if self.params.d == 1:
            return np.array([cell * dx])
        return np.array([(cell // G) * dx, (cell % G) * dx])

    def all_coords(self) -> np.ndarray:
        G, dx = self.G, self.dx
        k = np.arange(G) * dx
        if self.params.d == 1:
            return k[:, None]
        a, b = np.meshgrid(k, k, indexing="ij")
        return np.stack([a.ravel(), b.ravel()], axis=-1)

    def cell_of(self, point) -> int:
        """Index of the grid point nearest to `point`."""
        p = point.as_array() if isinstance(point, TorusPoint) else np.atleast_1d(point)
        if len(p) != self.params.d:
            raise ParameterError("probe dimension does not match the model")
        idx = np.rint(np.asarray(p, dtype=float) / self.dx).astype(np.int64) % self.G
        return int(idx[0]) if self.params.d == 1 else int(idx[0] * self.G + idx[1])

    @property
    def grid(self) -> np.ndarray:
        return self.values.reshape((self.G,) * self.params.d)

    # statistics
    @property
    def min(self) -> float:
        return float(self.tree[1])

    def argmin_cell(self) -> int:
        cell, _ = kernels.argmin_nearest(self.tree, self.P, self.n_cells, self.G, self.params.d,
                                         self.params.D, self.dx, np.zeros(self.params.d))
        return int(cell)

    def scan_argmin(self) -> int:
        return int(np.argmin(self.values))

    def value_at(self, point) -> float:
        return float(self.values[self.cell_of(point)])

    def h_at_origin(self) -> float:
        return float(self.values[self.origin_cell])

    def grid_sum(self) -> float:
        return float(self.values.sum())

    def _record(self, block: DrawBlock, centers: np.ndarray, ties: np.ndarray, with_theta=False):
        for j in range(len(block)):
            step = self.n_deposited - len(block) + j + 1
            if len(self.log) >= self.log_cap:
                self.log_truncated = True
                return
            self.log.append(DepositionRecord(
                step, tuple(float(c) for c in centers[j]), float(block.z[j]),
                tuple(float(t) for t in block.theta[j]) if with_theta else None,
                int(ties[j]),
            ))

    def apply_block(self, block: DrawBlock):
        """Deposit a pre-drawn block; returns the centers used."""
        p = self.params
        centers = np.empty((len(block), p.d))
        ties = np.zeros(len(block), dtype=np.int64)
        kernels.run_block(self.values, self.tree, self.P, p.grid_per_dim, p.d, p.D, self.dx,
                          p.shape.kind.code, block.z, block.amp, block.pts,
                          p.model is ModelKind.MIN, True, centers, ties)
        self.n_deposited += len(block)
        self._record(block, centers, ties)
        return centers, ties

    def recompute_from_log(self) -> np.ndarray:
        """Full-grid rebuild of the values from the deposition log."""
        if self.log_truncated:
            raise RuntimeError("deposition log was truncated; raise log_cap to replay")
        out = np.zeros(self.n_cells)
        pts = self.all_coords()
        for rec in self.log:
            out += bump_array(self.params, np.asarray(rec.center), rec.z, pts)
        return out


class StellarProfile(Profile):
    """Vector field sum_j X_j Theta_j on the grid plus its scalar companion sum_j X_j.

    The companion shares the tree, so `min` refers to the scalar field.
    """

    def __init__(self, params: ModelParams, log_cap: int = DEFAULT_LOG_CAP,
                 memory_limit: int = DEFAULT_MEMORY_LIMIT):
        if params.d != 2:
            raise ParameterError("the stellar profile needs d = 2")
        super().__init__(params, log_cap, memory_limit)
        self.vec = np.zeros((self.n_cells, 3))

    @property
    def scalar_companion(self) -> np.ndarray:
        return self.values

    def vector_at(self, point) -> np.ndarray:
        return self.vec[self.cell_of(point)].copy()

    def apply_block(self, block: DrawBlock):
        p = self.params
        kernels.run_block_stellar(self.vec, self.values, self.tree, self.P, p.grid_per_dim,
                                  p.D, self.dx, p.shape.kind.code, block.z, block.amp,
                                  block.pts, block.theta, True)
        self.n_deposited += len(block)
        ties = np.zeros(len(block), dtype=np.int64)
        self._record(block, block.pts, ties, with_theta=True)
        return block.pts, ties

    def recompute_vector_from_log(self) -> np.ndarray:
        if self.log_truncated:
            raise RuntimeError("deposition log was truncated; raise log_cap to replay")
        out = np.zeros((self.n_cells, 3))
        pts = self.all_coords()
        for rec in self.log:
            x = bump_array(self.params, np.asarray(rec.center), rec.z, pts)
            out += x[:, None] * np.asarray(rec.theta)[None, :]
        return out


def new_profile(params: ModelParams, **kw) -> Profile:
    if params.model is ModelKind.STELLAR:
        return StellarProfile(params, **kw)
    return Profile(params, **kw)


def _single(profile: Profile, rng: RngStream) -> DepositionRecord:
    block = draw_block(profile.params, rng, 1)
    centers, ties = profile.apply_block(block)
    theta = tuple(float(t) for t in block.theta[0]) \
        if profile.params.model is ModelKind.STELLAR else None
    return DepositionRecord(profile.n_deposited, tuple(float(c) for c in centers[0]),
                            float(block.z[0]), theta, int(ties[0]))


def deposit_rand(profile: Profile, rng: RngStream) -> DepositionRecord:
    """One rand-model deposit: uniform center, Pareto width."""
    if profile.params.model is not ModelKind.RAND:
        raise ParameterError("deposit_rand needs a rand-model profile")
    return _single(profile, rng)


def deposit_min(profile: Profile, rng: RngStream) -> DepositionRecord:
    """One min-model deposit, centered at the exact global minimum nearest a fresh uniform U."""
    if profile.params.model is not ModelKind.MIN:
        raise ParameterError("deposit_min needs a min-model profile")
    return _single(profile, rng)


def deposit_stellar(profile: StellarProfile, rng: RngStream) -> DepositionRecord:
    if profile.params.d != 2 or not isinstance(profile, StellarProfile):
        raise ParameterError("deposit_stellar needs a two-dimensional stellar profile")
    return _single(profile, rng)
