"""Run configuration: a single YAML file with units spelled out in the key names.

Unknown keys are hard errors and every violation is reported at once, so a
typo cannot silently fall back to a default.  parse -> dump -> parse is
lossless for every documented key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import yaml

from .params import PhysicalParams


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("invalid configuration:\n  " + "\n  ".join(errors))
        self.errors = errors


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


# key -> (default, checker, description)
_SCHEMA: dict[str, dict[str, tuple]] = {
    "physical": {
        "wavelength_m": (780e-9, lambda v: _is_number(v) and v > 0, "pump wavelength"),
        "cavity_length_m": (0.1, lambda v: _is_number(v) and v > 0, "cavity length"),
        "diffractive_length_m": (100e-6, lambda v: _is_number(v) and v > 0, "effective diffractive length"),
        "mirror_reflectivity": (math.exp(-0.01), lambda v: _is_number(v) and 0 < v < 1, "effective round-trip reflectivity"),
        "incoupling_transmission": (0.006, lambda v: _is_number(v) and v > 0, "incoupling mirror transmission"),
        "atom_detuning": (50.0, lambda v: _is_number(v), "atom-light detuning, units of Gamma/2"),
        "cavity_detuning": (-2.0, lambda v: _is_number(v), "bare cavity detuning Theta (used when sim.theta_eff is null)"),
        "optical_density": (1.0, lambda v: _is_number(v) and v >= 0, "on-resonance optical density b0"),
        "temperature_uK": (150.0, lambda v: _is_number(v) and v > 0, "cloud temperature, microkelvin"),
        "diffusivity_m2_s": (None, lambda v: v is None or (_is_number(v) and v > 0), "cloud diffusivity; null means dimensionless d = 0.01"),
    },
    "sim": {
        "nx": (256, lambda v: isinstance(v, int) and v >= 16 and v & (v - 1) == 0, "grid points in x (power of two)"),
        "ny": (256, lambda v: isinstance(v, int) and v >= 16 and v & (v - 1) == 0, "grid points in y (power of two)"),
        "domain_periods": (16.0, lambda v: _is_number(v) and v > 0, "domain size in pattern periods 2 pi / k_c"),
        "domain_size_scaled": (None, lambda v: v is None or (_is_number(v) and v > 0), "domain size in units of sqrt(a); overrides domain_periods"),
        "dt_scaled": (0.05, lambda v: _is_number(v) and v > 0, "time step in units of 1/kappa"),
        "t_end_scaled": (2000.0, lambda v: _is_number(v) and v >= 0, "simulated duration in units of 1/kappa"),
        "theta_eff": (-1.0, lambda v: v is None or _is_number(v), "effective cavity detuning pinned at threshold; null uses physical.cavity_detuning"),
        "pump_kind": ("plane", lambda v: v in ("plane", "supergaussian"), "pump profile"),
        "pump_relative": (1.2, lambda v: v is None or (_is_number(v) and v >= 0), "pump intensity relative to threshold intensity"),
        "pump_amplitude_scaled": (None, lambda v: v is None or (_is_number(v) and v >= 0), "absolute scaled pump amplitude |A_I/kappa|; overrides pump_relative"),
        "pump_width_fraction": (0.7, lambda v: _is_number(v) and 0 < v <= 1, "supergaussian width as fraction of the half-domain"),
        "pump_order": (4, lambda v: isinstance(v, int) and v >= 1, "supergaussian order m"),
        "noise_amplitude": (1e-3, lambda v: _is_number(v) and v >= 0, "initial density noise amplitude"),
        "rng_seed": (1, lambda v: isinstance(v, int) and 0 <= v < 2**64, "seed for the density noise"),
        "field_mode": ("dynamic", lambda v: v in ("dynamic", "adiabatic"), "field integration mode"),
        "snapshot_stride": (2000, lambda v: isinstance(v, int) and v >= 1, "steps between snapshots"),
    },
    "scan": {
        "b0_min": (0.1, lambda v: _is_number(v) and v > 0, "lowest optical density"),
        "b0_max": (100.0, lambda v: _is_number(v) and v > 0, "highest optical density"),
        "points": (20, lambda v: isinstance(v, int) and v >= 1, "number of log-spaced scan points"),
        "theta_eff": ([-1.0, -5.0], lambda v: isinstance(v, list) and len(v) >= 2 and all(_is_number(x) for x in v), "effective detunings for the intensity columns"),
    },
    "output": {
        "directory": ("runs", lambda v: isinstance(v, str) and len(v) > 0, "output directory"),
        "write_pgm": (True, lambda v: isinstance(v, bool), "write grayscale PGM renders of |E|^2 and n"),
    },
}


@dataclass
class RunConfig:
    """Validated configuration; data stores the full canonical key tree."""

    data: dict = field(default_factory=dict)

    def __getitem__(self, section: str) -> dict:
        return self.data[section]

    def to_dict(self) -> dict:
        return {sec: dict(keys) for sec, keys in self.data.items()}

    def physical_params(self) -> PhysicalParams:
        p = self.data["physical"]
        return PhysicalParams(
            lambda0=p["wavelength_m"],
            L_cav=p["cavity_length_m"],
            l_eff=p["diffractive_length_m"],
            R_eff=p["mirror_reflectivity"],
            T1=p["incoupling_transmission"],
            Delta=p["atom_detuning"],
            Theta=p["cavity_detuning"],
            b0=p["optical_density"],
            temperature=p["temperature_uK"] * 1e-6,
            D_diff=p["diffusivity_m2_s"],
        )


def default_config() -> RunConfig:
    data = {sec: {k: _copy(v[0]) for k, v in keys.items()} for sec, keys in _SCHEMA.items()}
    return RunConfig(data=data)


def _copy(v):
    return list(v) if isinstance(v, list) else v


def config_from_dict(raw: dict) -> RunConfig:
    """Validate a nested dict against the schema, collecting every violation."""
    errors: list[str] = []
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a mapping of sections"])
    for sec in raw:
        if sec not in _SCHEMA:
            errors.append(f"unknown section {sec!r}")
    data: dict = {}
    for sec, keys in _SCHEMA.items():
        given = raw.get(sec, {})
        if given is None:
            given = {}
        if not isinstance(given, dict):
            errors.append(f"section {sec!r} must be a mapping")
            given = {}
        for key in given:
            if key not in keys:
                errors.append(f"unknown key {sec}.{key}")
        out = {}
        for key, (default, check, _desc) in keys.items():
            value = given.get(key, _copy(default))
            if isinstance(value, int) and not isinstance(value, bool) and isinstance(default, float):
                value = float(value)
            if not check(value):
                errors.append(f"invalid value for {sec}.{key}: {value!r}")
            out[key] = value
        data[sec] = out
    if errors:
        raise ConfigError(sorted(errors))
    return RunConfig(data=data)


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    return config_from_dict(raw)


def dump_config(cfg: RunConfig) -> str:
    """Canonical YAML text; load(dump(cfg)) reproduces cfg exactly."""
    lines: list[str] = []
    for sec, keys in _SCHEMA.items():
        lines.append(f"{sec}:")
        for key in keys:
            value = cfg.data[sec][key]
            lines.append(f"  {key}: {_yaml_scalar(value)}")
    return "\n".join(lines) + "\n"


def _yaml_scalar(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return "[" + ", ".join(_yaml_scalar(x) for x in v) + "]"
    if isinstance(v, str):
        return json.dumps(v)  # JSON string quoting is valid YAML
    return str(v)


def set_by_path(raw: dict, dotted: str, value) -> None:
    """Assign section.key in a raw config dict (used by the sweep runner)."""
    parts = dotted.split(".")
    if len(parts) != 2:
        raise ValueError(f"sweep parameter must look like 'section.key', got {dotted!r}")
    sec, key = parts
    if sec not in _SCHEMA or key not in _SCHEMA[sec]:
        raise ValueError(f"unknown config key {dotted!r}")
    raw.setdefault(sec, {})[key] = value


def describe_keys() -> str:
    """Documented key listing for --help output."""
    lines = []
    for sec, keys in _SCHEMA.items():
        for key, (default, _check, desc) in keys.items():
            lines.append(f"{sec}.{key} (default {default!r}): {desc}")
    return "\n".join(lines)
