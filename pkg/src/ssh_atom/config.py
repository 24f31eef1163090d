"""Experiment configuration: flat dotted keys, typed, with per-experiment defaults."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional

import numpy as np

from .errors import ParameterError

EXPERIMENTS = {
    "spectrum_vs_theta": "bare-chain (or chain + emitter) spectrum and eigenvectors over theta",
    "detuning_spectrum": "chain + emitter spectrum versus emitter detuning at fixed theta",
    "rabi_evolution": "static evolution from the excited emitter at fixed theta",
    "effective_model_sweep": "effective couplings G, G_L, G_R and three-level roots versus theta",
    "adiabatic_transfer": "time-dependent theta ramp starting from the excited emitter",
    "fidelity_vs_p": "end-site transfer fidelity versus coupling cell and ramp rate",
    "nonadiabatic_transfer": "three-level closed form versus full dynamics at fixed theta",
    "disorder_sweep": "spectra under one disorder realization plus ensemble statistics",
}

GRID = "grid"  # [start, stop, count] -> inclusive linspace

# key -> (type, default). Angles carry a _pi suffix and are in units of pi.
SCHEMA: Dict[str, tuple] = {
    "experiment": (str, None),
    "chain.n_cells": (int, 8),
    "chain.j": (float, 1.0),
    "chain.omega_o": (float, 0.0),
    "atom.g": (float, 0.01),
    "atom.delta": (float, 0.0),
    "atom.site": (int, 6),
    "atom.sublattice": (str, "B"),
    "theta_pi": (float, 0.65),
    "theta_grid_pi": (GRID, [0.0, 2.0, 400]),
    "thetas_pi": (list, [0.8]),
    "include_g_equal": (bool, True),
    "delta_grid": (GRID, [-0.05, 0.05, 201]),
    "with_atom": (bool, False),
    "t_max": (float, 20000.0),
    "n_times": (int, 2001),
    "periods": (float, 1.0),
    "sweep.omega_rate": (float, 1e-5),
    "sweep.theta_start_pi": (float, 0.5),
    "sweep.theta_end_pi": (float, 0.95),
    "sweep.dt": (float, None),
    "sweep.max_samples": (int, 10_000),
    "p_values": (list, [2, 4, 6, 8]),
    "omega_values": (list, [1e-4, 3e-5, 1e-5]),
    "target": (str, "leftmost"),
    "disorder.xi": (float, 0.2),
    "disorder.channel": (str, "off_diagonal"),
    "disorder.seed": (int, 42),
    "disorder.n_realizations": (int, 100),
    "jobs": (int, 1),
}

EXPERIMENT_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "spectrum_vs_theta": {},
    "detuning_spectrum": {"atom.site": 5, "theta_pi": 0.65},
    "rabi_evolution": {"atom.site": 5, "theta_pi": 0.65},
    "effective_model_sweep": {"theta_grid_pi": [0.51, 0.99, 97], "p_values": [2, 3, 4, 5, 6, 7, 8]},
    "adiabatic_transfer": {"atom.site": 6},
    "fidelity_vs_p": {},
    "nonadiabatic_transfer": {"atom.site": 7},
    "disorder_sweep": {"theta_grid_pi": [0.0, 2.0, 201]},
}

CHOICES = {
    "atom.sublattice": ("A", "B"),
    "target": ("leftmost", "rightmost"),
    "disorder.channel": ("diagonal", "off_diagonal", "both"),
    "experiment": tuple(EXPERIMENTS),
}


def flatten(d: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, Mapping):
            out.update(flatten(v, key + "."))
        else:
            out[key] = v
    return out


def _coerce(key: str, value: Any) -> Any:
    kind, default = SCHEMA[key]
    if value is None:
        if default is None:
            return None
        raise ParameterError(f"{key}: null is not allowed")
    if kind is bool:
        if not isinstance(value, bool):
            raise ParameterError(f"{key}: expected a boolean, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ParameterError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ParameterError(f"{key}: expected a finite number, got {value!r}")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ParameterError(f"{key}: expected a string, got {value!r}")
        if key in CHOICES and value not in CHOICES[key]:
            raise ParameterError(f"{key}: must be one of {', '.join(CHOICES[key])}, got {value!r}")
        return value
    if kind is GRID:
        if (not isinstance(value, (list, tuple)) or len(value) != 3
                or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in value)):
            raise ParameterError(f"{key}: expected [start, stop, count], got {value!r}")
        start, stop, count = value
        if int(count) != count or count < 2:
            raise ParameterError(f"{key}: count must be an integer >= 2, got {count!r}")
        return [float(start), float(stop), int(count)]
    if kind is list:
        if not isinstance(value, (list, tuple)) or not value:
            raise ParameterError(f"{key}: expected a non-empty list, got {value!r}")
        elem = type(default[0])
        out = []
        for i, x in enumerate(value):
            try:
                out.append(_coerce_scalar(elem, x))
            except ParameterError:
                raise ParameterError(f"{key}[{i}]: expected {elem.__name__}, got {x!r}") from None
        return out
    raise AssertionError(kind)


def _coerce_scalar(elem, x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParameterError("bad element")
    if elem is int:
        if int(x) != x:
            raise ParameterError("bad element")
        return int(x)
    return float(x)


def parse_assignment(text: str) -> tuple:
    """``key=value`` with a JSON value; bare words are taken as strings."""
    if "=" not in text:
        raise ParameterError(f"--set expects key=value, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Optional[str]
    values: Dict[str, Any]
    out_dir: Optional[Path] = None

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def grid(self, key: str) -> np.ndarray:
        start, stop, count = self.values[key]
        return np.linspace(start, stop, count)

    def resolved(self) -> Dict[str, Any]:
        return dict(sorted(self.values.items()))


def parse_config(path: Optional[Path] = None, overrides: Iterable = (), experiment: Optional[str] = None,
                 out_dir: Optional[Path] = None) -> ExperimentConfig:
    """Merge defaults, a JSON file, ``--set`` overrides and the experiment flag, in that order."""
    raw: Dict[str, Any] = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ParameterError(f"cannot read config {path}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ParameterError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(data, Mapping):
            raise ParameterError("config must be a JSON object")
        raw.update(flatten(data))
    for item in overrides:
        key, value = parse_assignment(item) if isinstance(item, str) else item
        raw[key] = value
    if experiment is not None:
        raw["experiment"] = experiment

    unknown = sorted(set(raw) - set(SCHEMA))
    if unknown:
        raise ParameterError(f"unknown config key(s): {', '.join(unknown)}")
    exp = _coerce("experiment", raw.get("experiment"))
    values = {k: default for k, (_, default) in SCHEMA.items()}
    if exp is not None:
        values.update(EXPERIMENT_DEFAULTS[exp])
    for k, v in raw.items():
        values[k] = _coerce(k, v)
    values["experiment"] = exp
    if values["jobs"] < 1:
        raise ParameterError("jobs: must be >= 1")
    return ExperimentConfig(exp, values, None if out_dir is None else Path(out_dir))
