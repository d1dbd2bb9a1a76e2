"""Run configuration: a TOML file with a ``[model]`` table and a ``[task]`` table.

Example::

    [model]
    d = 1
    p = [3]
    values = [0, 1, 2]

    [task]
    mu = "geometric:10:1000:8"
    grid = 64
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .lattice import LatticeModel, build_model

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised only on 3.10
    import tomli as tomllib

MODEL_KEYS = {"d", "p", "values"}

# key -> (kind, default); a default of ``...`` marks a required key
TASK_SCHEMAS = {
    "bands": {"mu": ("positive", ...), "grid": ("counts", 64)},
    "perturb": {"order": ("nonneg_int", ...), "z": ("zvec", None)},
    "velocity": {"mu": ("positive", ...), "grid": ("counts", 64)},
    "sweep": {"mu": ("mu_grid", ...), "grid": ("counts", 64), "rho0": ("positive", None)},
    "evolve": {
        "mu": ("positive", ...),
        "t": ("nonneg", ...),
        "source": ("ivec", None),
        "window": ("nonneg_int", 10),
        "method": ("choice:quadrature,box", "quadrature"),
    },
    "lightcone": {
        "mu": ("mu_grid", ...),
        "times": ("times", "auto"),
        "eta": ("threshold", 1e-6),
        "distance": ("positive", 60.0),
    },
    "lrcheck": {
        "mu": ("mu_grid", ...),
        "rho0": ("positive", 0.5),
        "max_distance": ("nonneg_int", 40),
        "tau_max": ("positive", 5.0),
        "ntimes": ("nonneg_int", 21),
    },
}


@dataclass
class RunConfig:
    command: str
    model: LatticeModel
    task: dict
    raw: dict

    def echo(self) -> dict:
        return self.raw


def parse_mu_grid(spec) -> np.ndarray:
    """A number, a list of numbers, or ``"geometric:start:stop:count"``."""
    if isinstance(spec, str):
        parts = spec.split(":")
        if parts[0] != "geometric" or len(parts) != 4:
            raise ConfigError(f"bad grid {spec!r}; expected 'geometric:start:stop:count'")
        try:
            start, stop, count = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError as exc:
            raise ConfigError(f"bad grid {spec!r}") from exc
        if start <= 0 or stop <= 0 or count < 1:
            raise ConfigError(f"grid {spec!r} needs positive bounds and count")
        return np.geomspace(start, stop, count)
    vals = np.atleast_1d(np.asarray(spec, dtype=float))
    if vals.ndim != 1 or vals.size == 0 or np.any(vals <= 0) or not np.all(np.isfinite(vals)):
        raise ConfigError(f"bad coupling list {spec!r}")
    return vals


def parse_times(spec):
    """``"auto"``, a list of times, or ``"linear:start:stop:count"``."""
    if spec == "auto":
        return None
    if isinstance(spec, str):
        parts = spec.split(":")
        if parts[0] != "linear" or len(parts) != 4:
            raise ConfigError(f"bad times {spec!r}; expected 'linear:start:stop:count' or 'auto'")
        try:
            return np.linspace(float(parts[1]), float(parts[2]), int(parts[3]))
        except ValueError as exc:
            raise ConfigError(f"bad times {spec!r}") from exc
    vals = np.asarray(spec, dtype=float)
    if vals.ndim != 1 or np.any(vals < 0):
        raise ConfigError("times must be a list of nonnegative numbers")
    return vals


def _number(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{key} must be a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigError(f"{key} must be finite")
    return float(v)


def _coerce(key, kind, v, d):
    if kind == "positive":
        x = _number(key, v)
        if x <= 0:
            raise ConfigError(f"{key} must be positive")
        return x
    if kind == "nonneg":
        x = _number(key, v)
        if x < 0:
            raise ConfigError(f"{key} must be nonnegative")
        return x
    if kind == "nonneg_int":
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ConfigError(f"{key} must be a nonnegative integer")
        return v
    if kind == "threshold":
        x = _number(key, v)
        if not 1e-12 < x < 1e-2:
            raise ConfigError(f"{key} must lie in (1e-12, 1e-2)")
        return x
    if kind == "counts":
        vals = [v] * d if isinstance(v, int) and not isinstance(v, bool) else v
        if not isinstance(vals, list) or len(vals) != d or any(
            isinstance(n, bool) or not isinstance(n, int) or n < 2 for n in vals
        ):
            raise ConfigError(f"{key} must be an integer >= 2 or {d} of them")
        return tuple(vals)
    if kind == "ivec":
        if v is None:
            return None
        if not isinstance(v, list) or len(v) != d or any(
            isinstance(n, bool) or not isinstance(n, int) for n in v
        ):
            raise ConfigError(f"{key} must be a list of {d} integers")
        return tuple(v)
    if kind == "zvec":
        if v is None:
            return None
        if not isinstance(v, list) or len(v) != d:
            raise ConfigError(f"{key} must be a list of {d} numbers")
        return tuple(_number(key, x) for x in v)
    if kind == "mu_grid":
        return parse_mu_grid(v)
    if kind == "times":
        return parse_times(v)
    if kind.startswith("choice:"):
        options = kind.split(":", 1)[1].split(",")
        if v not in options:
            raise ConfigError(f"{key} must be one of {options}")
        return v
    raise AssertionError(kind)


def parse_config(raw: dict, command: str) -> RunConfig:
    if command not in TASK_SCHEMAS:
        raise ConfigError(f"unknown command {command!r}")
    extra = set(raw) - {"model", "task"}
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")
    mraw = raw.get("model")
    if not isinstance(mraw, dict):
        raise ConfigError("missing [model] table")
    bad = set(mraw) - MODEL_KEYS
    missing = MODEL_KEYS - set(mraw)
    if bad:
        raise ConfigError(f"unknown model keys: {sorted(bad)}")
    if missing:
        raise ConfigError(f"missing model keys: {sorted(missing)}")
    d, p, values = mraw["d"], mraw["p"], mraw["values"]
    if isinstance(d, bool) or not isinstance(d, int) or d < 1:
        raise ConfigError("model.d must be a positive integer")
    if isinstance(p, int) and not isinstance(p, bool):
        p = [p]
    if not isinstance(p, list) or any(isinstance(x, bool) or not isinstance(x, int) or x < 1
                                      for x in p):
        raise ConfigError("model.p must be a list of positive integers")
    if not isinstance(values, list):
        raise ConfigError("model.values must be a list")
    model = build_model(d, p, values)

    schema = TASK_SCHEMAS[command]
    traw = raw.get("task", {})
    if not isinstance(traw, dict):
        raise ConfigError("[task] must be a table")
    bad = set(traw) - set(schema)
    if bad:
        raise ConfigError(f"unknown task keys for {command}: {sorted(bad)}")
    task = {}
    for key, (kind, default) in schema.items():
        if key in traw:
            task[key] = _coerce(key, kind, traw[key], model.d)
        elif default is ...:
            raise ConfigError(f"missing task key {key!r} for {command}")
        else:
            task[key] = _coerce(key, kind, default, model.d) if default is not None else None
    return RunConfig(command, model, task, raw)


def load_config(path, command: str) -> RunConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file {path} not found") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(raw, command)
