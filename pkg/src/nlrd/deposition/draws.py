"""Per-deposit draw layout shared by every engine.

Each deposit consumes one row of uniforms from the stream:
column 0 gives the Pareto width, the next d columns the center (rand,
stellar) or the tie-break point U (min), and for the stellar model two
more columns give the direction. Rows are drawn in blocks, and since the
generator fills arrays in order, block size never changes the outcome.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..core import ModelKind, ModelParams
from ..sampling import RngStream, pareto_from_uniform, sphere_from_uniforms


def row_width(params: ModelParams) -> int:
    return 1 + params.d + (2 if params.model is ModelKind.STELLAR else 0)


@dataclass
class DrawBlock:
    z: np.ndarray
    amp: np.ndarray
    pts: np.ndarray
    theta: np.ndarray  # (B, 3), zeros for scalar models

    def __len__(self):
        return len(self.z)


def draw_block(params: ModelParams, rng: RngStream, size: int) -> DrawBlock:
    u = rng.random((size, row_width(params)))
    z = pareto_from_uniform(1.0 - u[:, 0], params.beta)
    amp = z ** params.amplitude_exponent
    d = params.d
    pts = np.ascontiguousarray(u[:, 1:1 + d] * params.D)
    if params.model is ModelKind.STELLAR:
        theta = sphere_from_uniforms(u[:, 1 + d], u[:, 2 + d], params.sphere_mode)
    else:
        theta = np.zeros((size, 3))
    return DrawBlock(z, amp, pts, np.ascontiguousarray(theta))
