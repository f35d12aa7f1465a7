"""Flat ``key = value`` configuration files and named presets.

One assignment per line, ``#`` starts a comment, SI units throughout. Keys
are the field names of :class:`FluidPair` and :class:`RunConfig`, plus a
few aliases (``lambda``, ``strategy``, ``seed_preset``).
"""

from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .properties import FluidPair, PropertyError
from .timeloop import RunConfig

STRATEGY_ALIASES = {"none": "none", "max": "max_threshold", "max_threshold": "max_threshold", "doerfler": "doerfler"}
KEY_ALIASES = {"lambda": "lam", "strategy": "amr_strategy", "preset": "seed_preset"}

FLUID_KEYS = tuple(f.name for f in dataclasses.fields(FluidPair))
RUN_KEYS = RunConfig.field_names()
EXTRA_KEYS = ("seed_preset",)

# 85 % glycerol/water against air. Flow geometry is the documented scenario;
# the material constants are handbook approximations at about 20 C.
PRESETS: dict[str, dict[str, object]] = {
    "glycerol85": {
        "u_in": 5e-3,
        "u_c": 1.0,
        "h_in": 2.5e-3,
        "R_tube": 2.5e-2,
        "rho_d": 1222.0,
        "mu_d": 0.109,
        "gamma": 0.066,
        "rho_c": 1.2,
        "mu_c": 1.8e-5,
        "C_shear": 1.5,
        "dpdz_c": 0.0,
        "g": 9.81,
    },
}


class ConfigError(ValueError):
    """Bad configuration text or values; carries the offending line if known."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip() if where else message)


@dataclass(frozen=True)
class Settings:
    fluid: FluidPair
    run: RunConfig
    preset: Optional[str] = None


def _field_types() -> dict[str, object]:
    out = {}
    for cls in (FluidPair, RunConfig):
        hints = typing.get_type_hints(cls)
        for f in dataclasses.fields(cls):
            out[f.name] = hints[f.name]
    out["seed_preset"] = Optional[str]
    return out


_TYPES = _field_types()


def _convert(key: str, raw: str):
    tp = _TYPES[key]
    optional = typing.get_origin(tp) is typing.Union and type(None) in typing.get_args(tp)
    if optional:
        if raw.lower() in ("none", ""):
            return None
        tp = next(a for a in typing.get_args(tp) if a is not type(None))
    if tp is bool:
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if tp is int:
        return int(raw)
    if tp is float:
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return value
    if key == "amr_strategy":
        if raw not in STRATEGY_ALIASES:
            raise ValueError(f"unknown strategy {raw!r}")
        return STRATEGY_ALIASES[raw]
    return raw


def parse_text(text: str, path: Optional[str] = None) -> dict[str, object]:
    """Parse configuration text into typed values keyed by canonical names."""
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", lineno, path)
        key, raw = (part.strip() for part in body.split("=", 1))
        key = KEY_ALIASES.get(key, key)
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}", lineno, path)
        if key in lines:
            raise ConfigError(f"duplicate key {key!r} (first set on line {lines[key]})", lineno, path)
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno, path) from None
        lines[key] = lineno
    return values


def load_file(path) -> dict[str, object]:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}", path=str(p)) from None
    return parse_text(text, str(p))


def preset_values(name: str) -> dict[str, object]:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return dict(PRESETS[name])


def build_settings(values: dict[str, object], preset: Optional[str] = None) -> Settings:
    """Merge preset and explicit values (explicit wins) and validate."""
    preset = preset if preset is not None else values.get("seed_preset")  # type: ignore[assignment]
    merged: dict[str, object] = {}
    if preset is not None:
        merged.update(preset_values(str(preset)))
    merged.update({k: v for k, v in values.items() if k != "seed_preset"})
    required = [f.name for f in dataclasses.fields(FluidPair) if f.default is dataclasses.MISSING]
    missing = [k for k in required if k not in merged]
    if missing:
        raise ConfigError(f"missing required key(s): {', '.join(missing)}")
    try:
        fluid = FluidPair(**{k: merged[k] for k in FLUID_KEYS if k in merged})
    except PropertyError as exc:
        raise ConfigError(str(exc)) from None
    try:
        run = RunConfig(**{k: merged[k] for k in RUN_KEYS if k in merged})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return Settings(fluid, run, None if preset is None else str(preset))


def _fmt(value) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    return repr(value)


def dump_settings(settings: Settings) -> str:
    """Every key with its effective value; floats use ``repr`` so re-parsing is exact."""
    out = ["# effective configuration", "# fluid"]
    for key in FLUID_KEYS:
        out.append(f"{key} = {_fmt(getattr(settings.fluid, key))}")
    out.append("# run")
    for key in RUN_KEYS:
        out.append(f"{key} = {_fmt(getattr(settings.run, key))}")
    return "\n".join(out) + "\n"
