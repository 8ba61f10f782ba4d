"""Strict JSON configuration files mapping one-to-one onto Scenario.

Unknown keys are rejected, constraint violations name the offending key,
and serialization round-trips losslessly; the scenario hash is computed
from the canonical JSON form, so it is stable across platforms.
"""

from __future__ import annotations

import json

from .distributions import TimeDistribution
from .errors import ConfigError, InvalidParameterError
from .experiments import Scenario
from .mobility import SpeedDistribution

_SCALARS = {
    "generator": str,
    "gamma": float,
    "window_side": float,
    "buffer": float,
    "lam": float,
    "lam_knight": float,
    "kernel_radius": float,
    "r": float,
    "b": float,
    "rho": float,
    "horizon": float,
    "reach_radius": float,
    "engine": str,
    "master_seed": int,
}
_NULLABLE = {"buffer", "horizon", "reach_radius"}
_NESTED = {"speed", "dist_infect", "dist_patch"}
KNOWN_KEYS = set(_SCALARS) | _NESTED


def _coerce_scalar(key: str, value):
    want = _SCALARS[key]
    if value is None:
        if key in _NULLABLE:
            return None
        raise ConfigError(f"key {key!r}: null is not allowed")
    if want is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if want is int and isinstance(value, int) and not isinstance(value, bool):
        return int(value)
    if want is str and isinstance(value, str):
        return value
    raise ConfigError(
        f"key {key!r}: expected {want.__name__}, got {type(value).__name__}"
    )


def _parse_speed(value) -> SpeedDistribution:
    if not isinstance(value, dict):
        raise ConfigError("key 'speed': expected an object with kind/v_min/v_max")
    unknown = set(value) - {"kind", "v_min", "v_max"}
    if unknown:
        raise ConfigError(f"key 'speed': unknown keys {sorted(unknown)}")
    try:
        return SpeedDistribution(
            str(value.get("kind", "dirac")),
            float(value["v_min"]),
            float(value["v_max"]),
        )
    except KeyError as exc:
        raise ConfigError(f"key 'speed': missing {exc.args[0]!r}") from exc
    except InvalidParameterError as exc:
        raise ConfigError(f"key 'speed': {exc}") from exc


def _parse_time_dist(key: str, value) -> TimeDistribution:
    if not isinstance(value, dict):
        raise ConfigError(f"key {key!r}: expected an object with kind/a/b")
    unknown = set(value) - {"kind", "a", "b"}
    if unknown:
        raise ConfigError(f"key {key!r}: unknown keys {sorted(unknown)}")
    try:
        return TimeDistribution(
            str(value.get("kind", "dirac")),
            float(value.get("a", 0.0)),
            float(value.get("b", 0.0)),
        )
    except InvalidParameterError as exc:
        raise ConfigError(f"key {key!r}: {exc}") from exc


def scenario_from_dict(doc: dict) -> Scenario:
    if not isinstance(doc, dict):
        raise ConfigError("configuration root must be an object")
    unknown = set(doc) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in doc.items():
        if key == "speed":
            kwargs[key] = _parse_speed(value)
        elif key in ("dist_infect", "dist_patch"):
            kwargs[key] = _parse_time_dist(key, value)
        else:
            coerced = _coerce_scalar(key, value)
            if coerced is not None or key in _NULLABLE:
                kwargs[key] = coerced
    try:
        return Scenario(**kwargs)
    except InvalidParameterError as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(path) -> Scenario:
    """Read and validate a scenario configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def echo_config(scenario: Scenario) -> dict:
    """Full configuration with every default materialized, plus the
    resolved derived values and the scenario hash."""
    doc = scenario.to_json_dict()
    doc["resolved"] = {
        "buffer": scenario.resolved_buffer(),
        "horizon": scenario.resolved_horizon(),
        "reach_radius": scenario.resolved_reach_radius(),
    }
    doc["scenario_hash"] = scenario.hash()
    return doc


def write_config(scenario: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario.to_json_dict(), fh, indent=1, sort_keys=True)
