"""Run profiles and JSON run configurations."""

from __future__ import annotations

import copy
import json
from importlib import metadata
from pathlib import Path

import numpy as np

COMMANDS = ("tabulate-g", "estimate-E", "verify")


def version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _fast_b_grid():
    return [float(b) for b in np.round(np.arange(1, 21) * 0.05, 10)]


def _paper_b_grid():
    fine = np.round(np.arange(1, 9) * 0.025, 10)
    coarse = np.round(0.2 + np.arange(1, 17) * 0.05, 10)
    return [float(b) for b in np.concatenate([fine, coarse])]


# "fast" drops restarts and thins the b grid; "paper" adds seeded random
# starts and the smallest L.  Grid spacing follows the resolution rules in
# both, since coarser grids would break the solver invariants.
PROFILES = {
    "fast": {
        "tabulate-g": {"b_grid": _fast_b_grid(), "r_list": [6.0, 9.0, 12.0], "seed": 0,
                       "n_random": 0, "n_starts": 2, "resolution": None, "levels": 1,
                       "check_snapped": False, "strict": False},
        "estimate-E": {"L_list": [0.2, 0.1], "R_list": [4.0, 8.0, 12.0], "seed": 0,
                       "n_random": 0, "n_starts": 2, "resolution": None, "levels": 3},
        "verify": {"suite": "all", "seed": 0, "L_list": [0.2, 0.1, 0.05],
                   "lattice_b": [0.3, 0.6, 0.9, 1.2], "lattice_r": [4.0, 6.0, 8.0],
                   "frontier_b": [1.0, 1.5, 2.0, 4.0, 8.0], "frontier_r": 8.0,
                   "eigen_h": [0.2, 0.1, 0.05], "kappas": [100.0, 1000.0, 10000.0],
                   "b_scale": 0.575, "field": {"builtin": "tilted", "params": {"slope": 0.3}}},
    },
    "paper": {
        "tabulate-g": {"b_grid": _paper_b_grid(), "r_list": [6.0, 9.0, 12.0], "seed": 0,
                       "n_random": 2, "n_starts": None, "resolution": None, "levels": 1,
                       "check_snapped": True, "strict": True},
        "estimate-E": {"L_list": [0.2, 0.1, 0.05], "R_list": [4.0, 8.0, 12.0], "seed": 0,
                       "n_random": 1, "n_starts": None, "resolution": None, "levels": 3},
        "verify": {"suite": "all", "seed": 0, "L_list": [0.2, 0.1, 0.05],
                   "lattice_b": [0.3, 0.6, 0.9, 1.2], "lattice_r": [4.0, 6.0, 8.0],
                   "frontier_b": [1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0], "frontier_r": 8.0,
                   "eigen_h": [0.2, 0.1, 0.05], "kappas": [100.0, 1000.0, 10000.0],
                   "b_scale": 0.575, "field": {"builtin": "tilted", "params": {"slope": 0.3}}},
    },
}

DEFAULT_PROFILE = "paper"


class ConfigError(ValueError):
    pass


def profile(name: str, command: str) -> dict:
    if name not in PROFILES:
        raise ConfigError(f"unknown profile {name!r}")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    return copy.deepcopy(PROFILES[name][command])


def load_config_file(path) -> dict:
    """Read a JSON config: ``{"profile": ..., "<command>": {...overrides}}``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config file must hold a JSON object")
    unknown = set(doc) - {"profile", *COMMANDS}
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    return doc


def resolve(command: str, profile_name=None, file_doc=None, overrides=None) -> dict:
    """Profile defaults, then the config file, then command-line overrides."""
    file_doc = file_doc or {}
    name = profile_name or file_doc.get("profile") or DEFAULT_PROFILE
    cfg = profile(name, command)
    for src in (file_doc.get(command, {}), overrides or {}):
        for k, v in src.items():
            if v is None:
                continue
            if k not in cfg:
                raise ConfigError(f"unknown option {k!r} for {command}")
            cfg[k] = v
    cfg["profile"] = name
    return cfg


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, repr floats, no timing fields."""
    return json.dumps(scrub(obj), indent=1, sort_keys=True) + "\n"


def scrub(obj):
    if isinstance(obj, dict):
        return {k: scrub(v) for k, v in obj.items() if k not in ("wall_time", "trace")}
    if isinstance(obj, (list, tuple)):
        return [scrub(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def load_field_descriptor(path) -> dict:
    """Field descriptor JSON; a relative ``grid_csv`` is resolved against the file's directory."""
    try:
        with open(path) as fh:
            desc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read field descriptor {path}: {exc}") from exc
    if not isinstance(desc, dict) or not ({"builtin", "grid_csv"} & set(desc)):
        raise ConfigError("field descriptor needs 'builtin' or 'grid_csv'")
    if "grid_csv" in desc:
        desc["grid_csv"] = str((Path(path).parent / desc["grid_csv"]).resolve())
    return desc
