"""Growth engines for the rand, min and stellar models."""

from .draws import DrawBlock, draw_block, row_width
from .export import checkpoint_rows, deposition_log_rows, to_csv
from .profile import (
    DEFAULT_LOG_CAP,
    DEFAULT_MEMORY_LIMIT,
    DepositionRecord,
    Profile,
    StellarProfile,
    deposit_min,
    deposit_rand,
    deposit_stellar,
    grid_bytes,
    new_profile,
)
from .trajectory import (
    Checkpoint,
    geometric_schedule,
    probe_paths,
    probe_trajectory,
    run_trajectory,
)

__all__ = [
    "DEFAULT_LOG_CAP", "DEFAULT_MEMORY_LIMIT",
    "Checkpoint", "DepositionRecord", "DrawBlock", "Profile", "StellarProfile",
    "checkpoint_rows", "deposit_min", "deposit_rand", "deposit_stellar",
    "deposition_log_rows", "draw_block", "geometric_schedule", "grid_bytes",
    "new_profile", "probe_paths", "probe_trajectory", "row_width", "run_trajectory",
    "to_csv",
]
