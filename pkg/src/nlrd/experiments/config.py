"""Versioned JSON experiment configs.

Unknown keys anywhere in the document are errors, so a typo in a sweep
fails loudly instead of silently running the default.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from ..core import ModelParams, TorusPoint
from ..deposition import geometric_schedule
from ..errors import ConfigError, ParameterError

SCHEMA_VERSION = 1
DEFAULT_SEED = 12345

_TOP_KEYS = {
    "schema_version", "name", "params", "replicas", "checkpoint_Ns", "probes", "master_seed",
    "outputs", "suite", "engine", "log_cap", "threads", "budget", "phase", "limits",
}
_PARAM_KEYS = {"alpha", "beta", "D", "d", "shape", "model", "grid_per_dim", "sphere_mode"}
_PHASE_KEYS = {"alpha_grid", "beta_grid", "margin", "allow_boundary"}
_LIMITS_KEYS = {"law", "n_samples", "tol"}
_GEOM_KEYS = {"n_max", "per_decade", "start"}
ENGINES = ("auto", "grid", "probe")


@dataclass
class PhaseSpec:
    alpha_grid: List[float]
    beta_grid: List[float]
    margin: float = 0.1
    allow_boundary: bool = False


@dataclass
class LimitsSpec:
    law: str = "stable_series"
    n_samples: int = 1000
    tol: float = 1e-3


@dataclass
class ExperimentConfig:
    name: str
    params: ModelParams
    replicas: int = 1
    checkpoint_Ns: List[int] = field(default_factory=lambda: [0])
    probes: List[TorusPoint] = field(default_factory=list)
    master_seed: int = DEFAULT_SEED
    outputs: str = "out"
    suite: Optional[object] = None
    engine: str = "auto"
    log_cap: int = 100_000
    threads: int = 1
    budget: Optional[int] = None
    phase: Optional[PhaseSpec] = None
    limits: Optional[LimitsSpec] = None
    raw: dict = field(default_factory=dict, repr=False)

    def echo(self) -> dict:
        return self.raw


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


def _int(v, where, minimum=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"{where} must be an integer")
    v = int(v)
    if minimum is not None and v < minimum:
        raise ConfigError(f"{where} must be >= {minimum}")
    return v


def parse_config(doc: dict) -> ExperimentConfig:
    _check_keys(doc, _TOP_KEYS, "config")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")
    if "params" not in doc:
        raise ConfigError("config needs a 'params' object")
    _check_keys(doc["params"], _PARAM_KEYS, "params")
    try:
        params = ModelParams(**doc["params"])
    except (ParameterError, ValueError, TypeError) as e:
        raise ConfigError(f"invalid params: {e}") from e

    replicas = _int(doc.get("replicas", 1), "replicas", 1)
    ns = doc.get("checkpoint_Ns", [0])
    if isinstance(ns, dict):
        _check_keys(ns, _GEOM_KEYS, "checkpoint_Ns")
        if "n_max" not in ns:
            raise ConfigError("geometric checkpoint_Ns needs n_max")
        ns = geometric_schedule(_int(ns["n_max"], "n_max", 1), _int(ns.get("per_decade", 4),
                                "per_decade", 1), _int(ns.get("start", 1), "start", 1))
    if not isinstance(ns, list) or not ns:
        raise ConfigError("checkpoint_Ns must be a non-empty list or a geometric schedule")
    ns = [_int(n, "checkpoint_Ns entry", 0) for n in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ConfigError("checkpoint_Ns must be sorted and strictly increasing")

    probes = []
    for p in doc.get("probes", []):
        coords = [p] if isinstance(p, (int, float)) else p
        if not isinstance(coords, list) or len(coords) != params.d:
            raise ConfigError(f"each probe needs {params.d} coordinate(s)")
        if any(not (0.0 <= float(c) <= params.D) for c in coords):
            raise ConfigError(f"probe {coords} lies outside [0, D]^d")
        probes.append(TorusPoint([float(c) for c in coords], params.D))

    engine = doc.get("engine", "auto")
    if engine not in ENGINES:
        raise ConfigError(f"engine must be one of {ENGINES}")
    phase = None
    if "phase" in doc:
        _check_keys(doc["phase"], _PHASE_KEYS, "phase")
        ph = doc["phase"]
        if "alpha_grid" not in ph or "beta_grid" not in ph:
            raise ConfigError("phase needs alpha_grid and beta_grid")
        phase = PhaseSpec([float(a) for a in ph["alpha_grid"]], [float(b) for b in ph["beta_grid"]],
                          float(ph.get("margin", 0.1)), bool(ph.get("allow_boundary", False)))
    limits = None
    if "limits" in doc:
        _check_keys(doc["limits"], _LIMITS_KEYS, "limits")
        lm = doc["limits"]
        limits = LimitsSpec(str(lm.get("law", "stable_series")),
                            _int(lm.get("n_samples", 1000), "n_samples", 1), float(lm.get("tol", 1e-3)))
    budget = doc.get("budget")
    return ExperimentConfig(
        name=str(doc.get("name", "experiment")),
        params=params,
        replicas=replicas,
        checkpoint_Ns=ns,
        probes=probes,
        master_seed=_int(doc.get("master_seed", DEFAULT_SEED), "master_seed", 0),
        outputs=str(doc.get("outputs", "out")),
        suite=doc.get("suite"),
        engine=engine,
        log_cap=_int(doc.get("log_cap", 100_000), "log_cap", 0),
        threads=_int(doc.get("threads", 1), "threads", 1),
        budget=None if budget is None else _int(budget, "budget", 0),
        phase=phase,
        limits=limits,
        raw=doc,
    )


def load_config(path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    return parse_config(doc)
