"""Experiment configuration: defaults, JSON files, and dotted-path overrides.

A configuration is a plain nested dict. Defaults reproduce the acceptance
runs without edits; a JSON file (``--config``) is deep-merged over the
defaults, and any leaf is overridable from the command line by its dotted
name (e.g. ``--nominal.gain 1500`` or ``--texture.jitter_sigma 0.002``).
"""

from __future__ import annotations

import copy
import json
from pathlib import Path
from typing import Any, Iterable

from .core import TdeParams, TdeVariant
from .events import TextureConfig
from .mismatch import DEFAULT_SIGMAS_NEW, DEFAULT_SIGMAS_OLD, MismatchSpec

__all__ = [
    "DEFAULT_CONFIG",
    "ConfigError",
    "load_config",
    "apply_overrides",
    "nominal_params",
    "mismatch_specs",
    "texture_config",
    "variant_from_name",
]


class ConfigError(ValueError):
    """Invalid configuration file or override."""


DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 12345,
    "out": "out",
    "threads": 0,  # 0 = all cores
    "variant": "new",
    "figures": True,
    "nominal": {
        "tau_fac": 0.010,
        "tau_trg": 0.005,
        "w_fac": 1.0,
        "fac_max": 4.0,
        "gain": 2000.0,
        "i_leak": 20.0,
        "v_thresh": 1.0,
        "v_reset": 0.0,
        "t_refr": 0.001,
    },
    "mismatch": {
        "old": dict(DEFAULT_SIGMAS_OLD),
        "new": dict(DEFAULT_SIGMAS_NEW),
    },
    "delta_ts_ms": [1.0, 2.0, 5.0, 10.0, 20.0, 50.0],
    "n_trials": 2000,
    "step": {
        "delta_t_ms": 12.0,
        "t_end_ms": 60.0,
    },
    "texture": {
        "width": 64,
        "height": 64,
        "n_features": 40,
        "feature_radius": [2.0, 4.0],
        "velocity": [0.0, -150.0],
        "duration": 0.5,
        "event_rate_per_crossing": 1.0,
        "jitter_sigma": 0.001,
    },
    "network": {
        "n_units": 100,
        "n_seeds": 1,
    },
    "gen_events": {
        "format": "csv",
    },
}


def _deep_merge(base: dict, overlay: dict, path: str = "") -> dict:
    out = dict(base)
    for key, value in overlay.items():
        here = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config field {here!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{here!r} must be an object")
            out[key] = _deep_merge(base[key], value, here)
        else:
            out[key] = value
    return out


def load_config(path: str | Path | None = None) -> dict[str, Any]:
    """Defaults, optionally overlaid with a JSON config file."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        try:
            with open(path) as fh:
                overlay = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}")
        if not isinstance(overlay, dict):
            raise ConfigError(f"config root in {path} must be an object")
        cfg = _deep_merge(cfg, overlay)
    return cfg


def _coerce(raw: str, like: Any, name: str) -> Any:
    if isinstance(like, bool):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{name!r} expects a boolean, got {raw!r}")
    try:
        if isinstance(like, int):
            return int(raw)
        if isinstance(like, float):
            return float(raw)
        if isinstance(like, list):
            value = json.loads(raw)
            if not isinstance(value, list):
                raise ValueError("not a list")
            return value
    except ValueError:
        raise ConfigError(f"cannot parse {raw!r} for {name!r}")
    return raw


def apply_overrides(cfg: dict[str, Any],
                    overrides: Iterable[tuple[str, str]]) -> dict[str, Any]:
    """Apply (dotted-name, raw-value) pairs, coercing to the default's type."""
    cfg = copy.deepcopy(cfg)
    for dotted, raw in overrides:
        node = cfg
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config field {dotted!r}")
            node = node[part]
        leaf = parts[-1]
        if not isinstance(node, dict) or leaf not in node:
            raise ConfigError(f"unknown config field {dotted!r}")
        if isinstance(node[leaf], dict):
            raise ConfigError(f"{dotted!r} is not a leaf field")
        node[leaf] = _coerce(raw, node[leaf], dotted)
    return cfg


def nominal_params(cfg: dict[str, Any]) -> TdeParams:
    try:
        return TdeParams(**cfg["nominal"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid nominal parameters: {exc}")


def mismatch_specs(cfg: dict[str, Any]) -> tuple[MismatchSpec, MismatchSpec]:
    try:
        old = MismatchSpec(sigmas=cfg["mismatch"]["old"],
                           variant=TdeVariant.OLD_SINGLE_BRANCH)
        new = MismatchSpec(sigmas=cfg["mismatch"]["new"],
                           variant=TdeVariant.NEW_DUAL_DPI)
    except ValueError as exc:
        raise ConfigError(f"invalid mismatch spec: {exc}")
    return old, new


def texture_config(cfg: dict[str, Any], seed: int) -> TextureConfig:
    t = cfg["texture"]
    try:
        return TextureConfig(
            width=t["width"], height=t["height"], n_features=t["n_features"],
            feature_radius=tuple(t["feature_radius"]),
            velocity=tuple(t["velocity"]), duration=t["duration"],
            event_rate_per_crossing=t["event_rate_per_crossing"],
            jitter_sigma=t["jitter_sigma"], seed=seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid texture config: {exc}")


def variant_from_name(name: str) -> TdeVariant:
    try:
        return TdeVariant(name)
    except ValueError:
        raise ConfigError(f"variant must be 'old' or 'new', got {name!r}")
