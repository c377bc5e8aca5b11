"""Experiment configuration: defaults, parsing and validation.

Config files are flat JSON objects whose keys match the fields of
:class:`ExperimentConfig`. Angles are in radians; strings such as
``"0.6*pi/2"`` or ``"pi/2"`` are accepted wherever an angle is expected.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Optional

import numpy as np

from .model import (
    Collective,
    Consecutive,
    CouplingConfig,
    EnvModel,
    ModelError,
    Separate,
    parse_env_model,
)

DEFAULT_G_SE = 0.05
DEFAULT_COLLISIONS_SEPARATE = 3000
DEFAULT_COLLISIONS_COLLECTIVE = 20000

BOUND_MODES = ("post_erasure", "pre_erasure")
MI_HOOKS = ("pre_ee", "post_ee")
NORMS = ("trace", "operator")
FORMATS = ("csv", "json")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` lists every violated field."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("invalid configuration: " + "; ".join(self.errors))


_ANGLE = re.compile(
    r"^\s*(?P<sign>[-+])?\s*(?:(?P<coef>(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*\*?\s*)?"
    r"(?P<pi>pi)?\s*(?:/\s*(?P<div>\d+\.?\d*))?\s*$"
)


def parse_angle(value: Any) -> float:
    """Float, or a string like ``0.6*pi/2``, ``pi/2``, ``0.43pi/2``, ``1.2``."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    text = str(value).strip().lower()
    m = _ANGLE.match(text)
    if not text or not m or (m.group("coef") is None and m.group("pi") is None):
        raise ValueError(f"cannot parse angle {value!r}")
    x = float(m.group("coef")) if m.group("coef") is not None else 1.0
    if m.group("pi"):
        x *= math.pi
    if m.group("div"):
        x /= float(m.group("div"))
    return -x if m.group("sign") == "-" else x


_NAMED_KETS = {
    "0": (1, 0),
    "1": (0, 1),
    "+": (1, 1),
    "-": (1, -1),
    "+i": (1, 1j),
    "-i": (1, -1j),
}


def qubit_ket(state: Any) -> np.ndarray:
    """Normalized qubit ket from ``'0' '1' '+' '-' '+i' '-i'``, ``'bloch:THETA,PHI'`` or a 2-vector."""
    if isinstance(state, str):
        s = state.strip().lower()
        if s in _NAMED_KETS:
            v = np.array(_NAMED_KETS[s], dtype=complex)
        elif s.startswith("bloch:"):
            theta, phi = (parse_angle(p) for p in s[6:].split(","))
            v = np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)])
        else:
            raise ValueError(f"unknown qubit state {state!r}")
    else:
        v = np.asarray(state, dtype=complex).reshape(-1)
        if v.shape != (2,):
            raise ValueError(f"qubit ket must have 2 amplitudes, got {v.shape}")
    nrm = np.linalg.norm(v)
    if not np.isfinite(nrm) or nrm == 0:
        raise ValueError(f"qubit state {state!r} has zero or non-finite norm")
    return v / nrm


def _state_name(state: Any) -> str:
    if isinstance(state, str):
        return state
    return "[" + ",".join(repr(complex(x)) for x in np.asarray(state).reshape(-1)) + "]"


@dataclass(frozen=True)
class Sweep:
    g_ee_min: float
    g_ee_max: float
    steps: int

    def grid(self) -> np.ndarray:
        return np.linspace(self.g_ee_min, self.g_ee_max, self.steps)


@dataclass(frozen=True)
class ExperimentConfig:
    g_ee: float = 0.0
    env_model: EnvModel = Separate(1)
    g_se: float = DEFAULT_G_SE
    collisions: Optional[int] = None
    initial_pair: tuple[Any, Any] = ("+", "-")
    env_init: Any = "0"
    bound_mode: str = "post_erasure"
    mi_hook: str = "pre_ee"
    norm: str = "trace"
    sweep: Optional[Sweep] = None
    output: Optional[str] = None
    format: str = "csv"
    workers: Optional[int] = None
    extra: Mapping[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        errors = []
        if self.collisions is None:
            n = (
                DEFAULT_COLLISIONS_COLLECTIVE
                if isinstance(self.env_model, Collective)
                else DEFAULT_COLLISIONS_SEPARATE
            )
            object.__setattr__(self, "collisions", n)
        if not isinstance(self.collisions, (int, np.integer)) or self.collisions < 1:
            errors.append(f"collisions: must be an integer >= 1, got {self.collisions!r}")
        for name in ("g_se", "g_ee"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                errors.append(f"{name}: must be a finite real, got {v!r}")
        if not isinstance(self.env_model, (Separate, Collective, Consecutive)):
            errors.append(f"env_model: unsupported value {self.env_model!r}")
        if len(self.initial_pair) != 2:
            errors.append("initial_pair: needs exactly two states")
        else:
            for s in self.initial_pair:
                try:
                    qubit_ket(s)
                except ValueError as exc:
                    errors.append(f"initial_pair: {exc}")
        try:
            qubit_ket(self.env_init)
        except ValueError as exc:
            errors.append(f"env_init: {exc}")
        if self.bound_mode not in BOUND_MODES:
            errors.append(f"bound_mode: must be one of {BOUND_MODES}, got {self.bound_mode!r}")
        if self.mi_hook not in MI_HOOKS:
            errors.append(f"mi_hook: must be one of {MI_HOOKS}, got {self.mi_hook!r}")
        if self.norm not in NORMS:
            errors.append(f"norm: must be one of {NORMS}, got {self.norm!r}")
        if self.format not in FORMATS:
            errors.append(f"format: must be one of {FORMATS}, got {self.format!r}")
        if self.sweep is not None:
            if self.sweep.steps < 2:
                errors.append(f"sweep.steps: must be >= 2, got {self.sweep.steps}")
            if not (math.isfinite(self.sweep.g_ee_min) and math.isfinite(self.sweep.g_ee_max)):
                errors.append("sweep: bounds must be finite")
        if errors:
            raise ConfigError(errors)

    @property
    def coupling(self) -> CouplingConfig:
        return CouplingConfig(float(self.g_se), float(self.g_ee), self.env_model)

    @property
    def window(self) -> int:
        """Number of environment qubits held in the sliding window."""
        return self.env_model.max_range + 1

    def kets(self) -> tuple[np.ndarray, np.ndarray]:
        return qubit_ket(self.initial_pair[0]), qubit_ket(self.initial_pair[1])

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = {
            "g_se": self.g_se,
            "g_ee": self.g_ee,
            "env_model": str(self.env_model),
            "collisions": int(self.collisions),
            "initial_pair": ",".join(_state_name(s) for s in self.initial_pair),
            "env_init": _state_name(self.env_init),
            "bound_mode": self.bound_mode,
            "mi_hook": self.mi_hook,
            "norm": self.norm,
            "format": self.format,
        }
        if self.sweep is not None:
            d.update(g_ee_min=self.sweep.g_ee_min, g_ee_max=self.sweep.g_ee_max,
                     sweep_steps=self.sweep.steps)
        if self.output is not None:
            d["output"] = self.output
        return d


_KEYS = {f.name for f in fields(ExperimentConfig)} - {"extra", "sweep"} | {
    "g_ee_min",
    "g_ee_max",
    "sweep_steps",
}


def config_from_mapping(data: Mapping[str, Any], *, require_g_ee: bool = True) -> ExperimentConfig:
    """Build a validated config from flat key-value data, reporting every bad field at once."""
    errors = []
    unknown = sorted(set(data) - _KEYS)
    if unknown:
        errors.append(f"unknown keys: {', '.join(unknown)}")
    kw: dict[str, Any] = {}

    model = data.get("env_model", "separate:1")
    try:
        kw["env_model"] = model if not isinstance(model, str) else parse_env_model(model)
    except ModelError as exc:
        errors.append(f"env_model: {exc}")

    sweep_keys = [k for k in ("g_ee_min", "g_ee_max", "sweep_steps") if data.get(k) is not None]
    if sweep_keys:
        missing = {"g_ee_min", "g_ee_max", "sweep_steps"} - set(sweep_keys)
        if missing:
            errors.append(f"sweep: missing {', '.join(sorted(missing))}")
        else:
            try:
                kw["sweep"] = Sweep(
                    parse_angle(data["g_ee_min"]),
                    parse_angle(data["g_ee_max"]),
                    int(data["sweep_steps"]),
                )
            except (TypeError, ValueError) as exc:
                errors.append(f"sweep: {exc}")

    needs_g_ee = (
        require_g_ee
        and not sweep_keys
        and "env_model" in kw
        and not isinstance(kw["env_model"], Consecutive)
    )
    if data.get("g_ee") is None:
        if needs_g_ee:
            errors.append("g_ee: missing required field")
    else:
        try:
            kw["g_ee"] = parse_angle(data["g_ee"])
        except ValueError as exc:
            errors.append(f"g_ee: {exc}")
    if data.get("g_se") is not None:
        try:
            kw["g_se"] = parse_angle(data["g_se"])
        except ValueError as exc:
            errors.append(f"g_se: {exc}")
    if data.get("collisions") is not None:
        try:
            kw["collisions"] = int(data["collisions"])
        except (TypeError, ValueError):
            errors.append(f"collisions: not an integer: {data['collisions']!r}")
    if data.get("initial_pair") is not None:
        pair = data["initial_pair"]
        if isinstance(pair, str):
            pair = [p.strip() for p in pair.split(",")]
        if len(pair) != 2:
            errors.append(f"initial_pair: needs two states, got {pair!r}")
        else:
            kw["initial_pair"] = tuple(pair)
    for key in ("env_init", "bound_mode", "mi_hook", "norm", "output", "format"):
        if data.get(key) is not None:
            kw[key] = data[key]
    if data.get("workers") is not None:
        try:
            kw["workers"] = int(data["workers"])
        except (TypeError, ValueError):
            errors.append(f"workers: not an integer: {data['workers']!r}")

    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(**kw)


def load_config_file(path: str | Path) -> dict[str, Any]:
    """Read a flat JSON object from ``path``."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError([f"config file {path}: {exc.strerror or exc}"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file {path}: invalid JSON ({exc})"]) from None
    if not isinstance(data, dict):
        raise ConfigError([f"config file {path}: top level must be an object"])
    nested = [k for k, v in data.items() if isinstance(v, (dict, list)) and k != "initial_pair"]
    if nested:
        raise ConfigError([f"config file {path}: keys must be flat, nested values for {nested}"])
    return data
