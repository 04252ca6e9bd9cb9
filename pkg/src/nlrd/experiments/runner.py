"""Replica execution and atomic output writing."""

from __future__ import annotations

import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..core import ModelKind, ModelParams
from ..deposition import Checkpoint, DepositionRecord, new_profile, probe_trajectory, run_trajectory
from ..sampling import RngStream


@dataclass
class ReplicaResult:
    replica: int
    checkpoints: List[Checkpoint]
    log: List[DepositionRecord] = field(default_factory=list)
    grid_sum: Optional[float] = None


def resolve_engine(engine: str, params: ModelParams, need_grid: bool = False) -> str:
    if engine != "auto":
        if engine == "probe" and params.model is ModelKind.MIN:
            return "grid"
        return engine
    if need_grid or params.model is ModelKind.MIN:
        return "grid"
    return "probe"


def map_replicas(fn: Callable[[int], object], replicas: Sequence[int], threads: int = 1) -> list:
    """Apply fn to each replica index; results come back in index order
    whatever the completion order."""
    replicas = list(replicas)
    if threads <= 1 or len(replicas) <= 1:
        return [fn(r) for r in replicas]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, replicas))


def run_replicas(params: ModelParams, master_seed: int, replicas: int, checkpoint_Ns,
                 probes=(), engine: str = "probe", threads: int = 1, stream_offset: int = 0,
                 budget: Optional[int] = None, log_cap: int = 0) -> List[ReplicaResult]:
    """One independent trajectory per replica, stream id = stream_offset + replica."""
    def one(r):
        rng = RngStream(master_seed, stream_offset + r)
        if engine == "grid":
            prof = new_profile(params, log_cap=log_cap)
            cps = run_trajectory(params, rng, checkpoint_Ns, probes, budget=budget, profile=prof)
            return ReplicaResult(r, cps, prof.log, prof.grid_sum())
        return ReplicaResult(r, probe_trajectory(params, rng, checkpoint_Ns, probes, budget=budget))

    return map_replicas(one, range(replicas), threads)


def origin_matrix(results: List[ReplicaResult]) -> np.ndarray:
    """h_N(0) per (replica, checkpoint); stellar gives a trailing axis of 3."""
    return np.array([[cp.h_at_origin for cp in r.checkpoints] for r in results], dtype=float)


def probe_matrix(results: List[ReplicaResult], probe: int) -> np.ndarray:
    """f_N at one probe per (replica, checkpoint)."""
    return np.array([[cp.f_at_probes[probe][1] for cp in r.checkpoints] for r in results],
                    dtype=float)


class OutputDir:
    """Stage files in a temp directory, then rename each into place.

    On failure nothing is left behind: `abort` deletes the staging area and
    any files this session already moved.
    """

    def __init__(self, root):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._stage = Path(tempfile.mkdtemp(prefix=".staging-", dir=self.root))
        self._files: List[str] = []
        self._moved: List[Path] = []

    def write_text(self, name: str, text: str):
        p = self._stage / name
        p.parent.mkdir(parents=True, exist_ok=True)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        self._files.append(name)

    def write_json(self, name: str, obj):
        self.write_text(name, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")

    def commit(self) -> List[Path]:
        for name in self._files:
            dest = self.root / name
            dest.parent.mkdir(parents=True, exist_ok=True)
            os.replace(self._stage / name, dest)
            self._moved.append(dest)
        self._cleanup()
        return self._moved

    def abort(self):
        for p in self._moved:
            try:
                p.unlink()
            except FileNotFoundError:
                pass
        self._cleanup()

    def _cleanup(self):
        for p in sorted(self._stage.rglob("*"), reverse=True):
            p.unlink() if p.is_file() else p.rmdir()
        if self._stage.exists():
            self._stage.rmdir()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.commit()
        else:
            self.abort()
        return False


def _jsonable(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if hasattr(o, "value") and hasattr(o, "name"):  # enums
        return o.value
    if hasattr(o, "__dict__"):
        return o.__dict__
    raise TypeError(f"not JSON serializable: {type(o)}")
