"""Torus geometry, bump shapes and single-bump evaluation.

Everything here is a pure function of its inputs. Scalar entry points
(`torus_distance`, `eval_shape`, `eval_bump`) validate their arguments;
the ``*_array`` variants are the vectorized forms used by the engines and
do not.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import ParameterError


class ShapeKind(enum.Enum):
    TRIANGLE = "triangle"
    CUBIC_HUMP = "cubic_hump"
    PARABOLA = "parabola"
    INDICATOR_STEP = "indicator_step"

    @property
    def code(self) -> int:
        """Integer tag understood by the compiled kernels."""
        return _SHAPE_CODES[self]


_SHAPE_CODES = {
    ShapeKind.TRIANGLE: 0,
    ShapeKind.CUBIC_HUMP: 1,
    ShapeKind.PARABOLA: 2,
    ShapeKind.INDICATOR_STEP: 3,
}


@dataclass(frozen=True)
class ShapeFunction:
    """A compactly supported bump profile psi with psi(0) = 1.

    ``order_n`` is the first non-vanishing derivative order at 0 and
    ``deriv_n_at_0`` its value. ``lipschitz_bound`` bounds the Lipschitz
    constant of the (n-1)-th derivative on [0, 1].

    Use the class constructors (`triangle`, `cubic_hump`, ...) rather than
    building instances by hand; the closed forms are fixed per kind.
    """

    kind: ShapeKind
    order_n: int
    deriv_n_at_0: float
    lipschitz_bound: float

    @classmethod
    def triangle(cls) -> "ShapeFunction":
        return cls(ShapeKind.TRIANGLE, 1, -1.0, 1.0)

    @classmethod
    def cubic_hump(cls) -> "ShapeFunction":
        # (1-x)^3 has psi'(0) = -3, so it is first order here even though it
        # is often quoted as a third-order example.
        return cls(ShapeKind.CUBIC_HUMP, 1, -3.0, 3.0)

    @classmethod
    def parabola(cls) -> "ShapeFunction":
        return cls(ShapeKind.PARABOLA, 2, -2.0, 2.0)

    @classmethod
    def indicator_step(cls) -> "ShapeFunction":
        # Discontinuous at 1: outside every smoothness class the limit
        # theorems assume. Exploratory runs only.
        return cls(ShapeKind.INDICATOR_STEP, 0, 1.0, math.inf)

    @classmethod
    def from_name(cls, name: Union[str, ShapeKind]) -> "ShapeFunction":
        kind = ShapeKind(name) if not isinstance(name, ShapeKind) else name
        return {
            ShapeKind.TRIANGLE: cls.triangle,
            ShapeKind.CUBIC_HUMP: cls.cubic_hump,
            ShapeKind.PARABOLA: cls.parabola,
            ShapeKind.INDICATOR_STEP: cls.indicator_step,
        }[kind]()

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def in_theorem_class(self) -> bool:
        """False for shapes that break the continuity hypothesis."""
        return self.kind is not ShapeKind.INDICATOR_STEP

    @property
    def taylor_coefficient(self) -> float:
        """psi^(n)(0) / n!, the leading coefficient of psi(x) - 1."""
        return self.deriv_n_at_0 / math.factorial(self.order_n)

    def increment_constant(self) -> float:
        """Constant C with |psi(x)-psi(y)| <= C (x v y)^(n-1) |x-y| for x, y >= 0."""
        n = self.order_n
        if n <= 1:
            return self.lipschitz_bound
        return 2.0 * self.lipschitz_bound / math.factorial(n - 1)

    def __call__(self, x):
        return shape_values(self.kind, x)


def shape_values(kind: ShapeKind, x):
    """Vectorized psi(x) for x >= 0 (no validation)."""
    x = np.asarray(x, dtype=float)
    inside = x < 1.0
    if kind is ShapeKind.TRIANGLE:
        out = 1.0 - x
    elif kind is ShapeKind.CUBIC_HUMP:
        out = (1.0 - x) ** 3
    elif kind is ShapeKind.PARABOLA:
        out = 1.0 - x * x
    else:
        out = np.ones_like(x)
    out = np.where(inside, out, 0.0)
    return out if out.ndim else float(out)


def eval_shape(shape: ShapeFunction, x: float) -> float:
    if x < 0:
        raise ParameterError(f"shape argument must be non-negative, got {x}")
    return float(shape_values(shape.kind, x))


def reduce_mod(x: float, D: float) -> float:
    """Reduce one coordinate into [0, D)."""
    r = math.fmod(x, D)
    if r < 0:
        r += D
    if r >= D:  # -tiny + D rounds to D
        r -= D
    return r


@dataclass(frozen=True)
class TorusPoint:
    """A point of the periodic box [0, D)^d; coordinates are reduced on construction."""

    coords: tuple
    D: float

    def __init__(self, coords: Union[float, Sequence[float]], D: float):
        if D <= 0:
            raise ParameterError("torus side D must be positive")
        if np.isscalar(coords):
            coords = (coords,)
        object.__setattr__(self, "coords", tuple(reduce_mod(float(c), D) for c in coords))
        object.__setattr__(self, "D", float(D))

    @property
    def d(self) -> int:
        return len(self.coords)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


class ModelKind(enum.Enum):
    RAND = "rand"
    MIN = "min"
    STELLAR = "stellar"


class SphereMode(enum.Enum):
    UNIFORM_SPHERE = "uniform_sphere"
    UPPER_HEMISPHERE = "upper_hemisphere"


DEFAULT_GRID = {1: 2**16, 2: 1024}


@dataclass(frozen=True)
class ModelParams:
    """Model parameters plus the two derived exponents.

    ``zeta`` = (alpha - d) / (beta - 1) sets the growth speed and
    ``kappa`` = (alpha - n - d) / (beta - 1) the fluctuation scale, with n
    the order of the shape. Both are fixed at construction.
    """

    alpha: float
    beta: float
    D: float
    d: int = 1
    shape: ShapeFunction = field(default_factory=ShapeFunction.triangle)
    model: ModelKind = ModelKind.RAND
    grid_per_dim: int = 0
    sphere_mode: SphereMode = SphereMode.UNIFORM_SPHERE
    zeta: float = field(init=False)
    kappa: float = field(init=False)

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if not self.beta > 1:
            raise ParameterError(f"beta must exceed 1, got {self.beta}")
        if not self.D > 0:
            raise ParameterError(f"D must be positive, got {self.D}")
        if self.d not in (1, 2):
            raise ParameterError(f"dimension must be 1 or 2, got {self.d}")
        if isinstance(self.model, str):
            object.__setattr__(self, "model", ModelKind(self.model))
        if isinstance(self.shape, (str, ShapeKind)):
            object.__setattr__(self, "shape", ShapeFunction.from_name(self.shape))
        if isinstance(self.sphere_mode, str):
            object.__setattr__(self, "sphere_mode", SphereMode(self.sphere_mode))
        if self.model is ModelKind.STELLAR and self.d != 2:
            raise ParameterError("the stellar model is defined for d = 2 only")
        if self.grid_per_dim == 0:
            object.__setattr__(self, "grid_per_dim", DEFAULT_GRID[self.d])
        if self.grid_per_dim < 1:
            raise ParameterError("grid_per_dim must be a positive integer")
        object.__setattr__(self, "zeta", (self.alpha - self.d) / (self.beta - 1))
        object.__setattr__(
            self, "kappa", (self.alpha - self.shape.order_n - self.d) / (self.beta - 1)
        )

    @property
    def amplitude_exponent(self) -> float:
        return self.alpha - self.d

    @property
    def cell_width(self) -> float:
        return self.D / self.grid_per_dim

    def replace(self, **changes) -> "ModelParams":
        kw = dict(
            alpha=self.alpha, beta=self.beta, D=self.D, d=self.d, shape=self.shape,
            model=self.model, grid_per_dim=self.grid_per_dim, sphere_mode=self.sphere_mode,
        )
        if "d" in changes and "grid_per_dim" not in changes:
            kw["grid_per_dim"] = 0
        kw.update(changes)
        return ModelParams(**kw)


def _coords(p, D, d):
    if isinstance(p, TorusPoint):
        return p.as_array()
    arr = np.atleast_1d(np.asarray(p, dtype=float))
    if arr.shape != (d,):
        raise ParameterError(f"expected a point with {d} coordinates, got {arr.shape}")
    return np.array([reduce_mod(c, D) for c in arr])


def torus_distance(s, y, D: float, d: int) -> float:
    """1-norm distance between s and the lattice y + D Z^d."""
    a = _coords(s, D, d)
    b = _coords(y, D, d)
    diff = np.abs(a - b)
    return float(np.sum(np.minimum(diff, D - diff)))


def torus_distance_array(s, y, D: float) -> np.ndarray:
    """Broadcasting torus distance; the last axis holds coordinates."""
    diff = np.abs(np.asarray(s, dtype=float) - np.asarray(y, dtype=float)) % D
    return np.sum(np.minimum(diff, D - diff), axis=-1)


def eval_bump(params: ModelParams, center, z: float, s) -> float:
    """Height z^(alpha-d) psi(v_center(s) / z) of one bump at the point s."""
    if z < 1:
        raise ParameterError(f"bump width must be >= 1 (Pareto support), got {z}")
    v = torus_distance(s, center, params.D, params.d)
    return z ** params.amplitude_exponent * eval_shape(params.shape, v / z)


def bump_array(params: ModelParams, centers, z, points) -> np.ndarray:
    """Vectorized bump heights; `centers` and `points` broadcast over leading axes."""
    v = torus_distance_array(points, centers, params.D)
    z = np.asarray(z, dtype=float)
    return z ** params.amplitude_exponent * shape_values(params.shape.kind, v / z)
