"""Random inputs of the models: Pareto widths, exponential partial sums,
torus centers and sphere directions.

Every draw goes through an `RngStream`, a Philox counter-based generator
keyed by ``(master_seed, stream_id)``. One stream per replica; streams
are never shared between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import SphereMode, TorusPoint
from .errors import ParameterError


class RngStream:
    """Reproducible random stream for one replica.

    Equal ``(master_seed, stream_id)`` pairs give bit-identical sequences;
    distinct stream ids give independent streams (via `SeedSequence`
    spawn keys).
    """

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.Philox(seq))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"

    def random(self, size=None):
        """Uniforms on [0, 1)."""
        return self.generator.random(size)

    def open_uniform(self, size=None):
        """Uniforms on (0, 1]."""
        return 1.0 - self.generator.random(size)

    def exponential(self, size=None):
        return self.generator.standard_exponential(size)


def pareto_from_uniform(u, beta: float):
    """Inverse transform U^(-1/(beta-1)) for U in (0, 1]."""
    if beta <= 1:
        raise ParameterError(f"beta must exceed 1, got {beta}")
    return np.asarray(u, dtype=float) ** (-1.0 / (beta - 1.0))


def sample_pareto(rng: RngStream, beta: float, size=None):
    """Pareto widths with density (beta-1) u^(-beta) on [1, inf)."""
    if beta <= 1:
        raise ParameterError(f"beta must exceed 1, got {beta}")
    out = pareto_from_uniform(rng.open_uniform(size), beta)
    return float(out) if size is None else out


@dataclass(frozen=True)
class ExpPartialSums:
    values: np.ndarray
    increments: np.ndarray

    def __len__(self):
        return len(self.values)


def exp_partial_sums(rng: RngStream, n: int) -> ExpPartialSums:
    """T_i = xi_1 + ... + xi_i for i.i.d. standard exponentials xi."""
    if n < 1:
        raise ParameterError("need at least one term")
    xi = rng.exponential(n)
    return ExpPartialSums(np.cumsum(xi), xi)


def exp_partial_sums_many(rng: RngStream, n: int, size: int) -> np.ndarray:
    """`size` independent rows of n partial sums, shape (size, n)."""
    return np.cumsum(rng.exponential((size, n)), axis=1)


def order_stats_representation(rng: RngStream, N: int, beta: float) -> np.ndarray:
    """Draw the decreasing order statistics of N Pareto widths.

    Uses the identity in law with ((T_{N+1}/T_i)^(1/(beta-1)))_{i<=N}.
    """
    if N < 1:
        raise ParameterError("N must be positive")
    if beta <= 1:
        raise ParameterError(f"beta must exceed 1, got {beta}")
    T = exp_partial_sums(rng, N + 1).values
    return (T[N] / T[:N]) ** (1.0 / (beta - 1.0))


def sample_uniform_torus(rng: RngStream, D: float, d: int) -> TorusPoint:
    return TorusPoint(rng.random(d) * D, D)


def uniform_torus_array(rng: RngStream, D: float, d: int, size: int) -> np.ndarray:
    return rng.random((size, d)) * D


def sphere_mean(mode: SphereMode) -> np.ndarray:
    """theta_0, the mean of the un-centered direction law."""
    if mode is SphereMode.UPPER_HEMISPHERE:
        return np.array([0.0, 0.0, 0.5])
    return np.zeros(3)


def sphere_second_moment(mode: SphereMode) -> np.ndarray:
    """E[Theta^T Theta] of the centered direction."""
    if mode is SphereMode.UPPER_HEMISPHERE:
        return np.diag([1.0 / 3.0, 1.0 / 3.0, 1.0 / 12.0])
    return np.eye(3) / 3.0


def sphere_from_uniforms(u1, u2, mode: SphereMode) -> np.ndarray:
    """Centered directions from two uniform arrays (Archimedes' projection).

    The height is uniform on [-1, 1] (sphere) or [0, 1] (upper hemisphere),
    the azimuth uniform on [0, 2 pi).
    """
    u1 = np.asarray(u1, dtype=float)
    if mode is SphereMode.UPPER_HEMISPHERE:
        h = u1
    else:
        h = 2.0 * u1 - 1.0
    phi = 2.0 * math.pi * np.asarray(u2, dtype=float)
    r = np.sqrt(np.maximum(0.0, 1.0 - h * h))
    out = np.stack([r * np.cos(phi), r * np.sin(phi), h], axis=-1)
    return out - sphere_mean(mode)


def sample_sphere_centered(rng: RngStream, mode: SphereMode = SphereMode.UNIFORM_SPHERE,
                           size: Optional[int] = None) -> np.ndarray:
    """Theta = Theta~ - E[Theta~] for Theta~ uniform on the sphere or upper hemisphere."""
    u = rng.random((1 if size is None else size, 2))
    out = sphere_from_uniforms(u[:, 0], u[:, 1], mode)
    return out[0] if size is None else out


def sample_vY_distance_direct(rng: RngStream, D: float, d: int, size=None):
    """Draw v_Y(s) for uniform Y without building Y.

    d=1: uniform on [0, D/2]. d=2: sum of two independent uniforms on
    [0, D/2], i.e. the triangular law on [0, D].
    """
    if d not in (1, 2):
        raise ParameterError("d must be 1 or 2")
    n = 1 if size is None else size
    u = rng.random((n, d)) * (D / 2.0)
    out = u.sum(axis=1)
    return float(out[0]) if size is None else out


def vY_distance_cdf(u, D: float, d: int):
    """Distribution function of v_Y(s) for uniform Y."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, d * D / 2.0)
    if d == 1:
        return u / (D / 2.0)
    h = D / 2.0
    return np.where(u <= h, 2.0 * u * u / (D * D), 1.0 - 2.0 * (D - u) ** 2 / (D * D))


def vY_distance_density(u, D: float, d: int):
    u = np.asarray(u, dtype=float)
    if d == 1:
        return np.where((u >= 0) & (u <= D / 2.0), 2.0 / D, 0.0)
    c = 4.0 / (D * D)
    return np.where((u >= 0) & (u <= D / 2.0), c * u,
                    np.where((u > D / 2.0) & (u <= D), c * (D - u), 0.0))
