"""CSV writers for deposition logs and checkpoints."""

from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence, Tuple

import numpy as np

from .profile import DepositionRecord
from .trajectory import Checkpoint


def _fmt(x) -> str:
    return repr(float(x))


def deposition_log_rows(log: Sequence[DepositionRecord], d: int):
    header = ["step"] + [f"center_{k}" for k in range(d)] + ["z", "theta_x", "theta_y", "theta_z"]
    yield header
    for rec in log:
        theta = [_fmt(t) for t in rec.theta] if rec.theta is not None else ["", "", ""]
        yield [str(rec.step)] + [_fmt(c) for c in rec.center] + [_fmt(rec.z)] + theta


def checkpoint_rows(replicas: Iterable[Tuple[int, Sequence[Checkpoint]]]):
    """Rows ordered by (replica, N). Stellar values add a component column."""
    header = ["replica", "N", "h0", "hmin", "hmax", "argmin_cell", "probe_id", "f_value"]
    rows = []
    stellar = False
    for replica, cps in replicas:
        for cp in cps:
            vec = np.ndim(cp.h_at_origin) > 0
            stellar = stellar or vec
            comps = range(3) if vec else [None]
            probes = list(enumerate(cp.f_at_probes)) or [(None, (None, None))]
            for pid, (_, f) in probes:
                for c in comps:
                    h0 = cp.h_at_origin[c] if vec else cp.h_at_origin
                    fv = "" if f is None else _fmt(f[c] if vec else f)
                    rows.append([str(replica), str(cp.N), _fmt(h0), _fmt(cp.h_min), _fmt(cp.h_max),
                                 str(cp.argmin_cell), "" if pid is None else str(pid), fv]
                                + ([str(c)] if vec else []))
    if stellar:
        header = header + ["component"]
        rows = [r if len(r) == len(header) else r + [""] for r in rows]
    yield header
    yield from rows


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r)
    return buf.getvalue()
