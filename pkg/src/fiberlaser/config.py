"""Flat key = value configuration files with explicit unit suffixes.

Unspecified keys take the stretched-pulse defaults; unknown keys, malformed
values, and physical-constraint violations are reported with line numbers.
The same key set is the canonical dictionary form used by parameter sweeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import components as comp
from . import fiber
from .cavity import LaserConfig
from .grid import FastTimeGrid


class ConfigError(ValueError):
    """Malformed or physically invalid configuration input."""


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


#: key -> (default value, converter)
KEY_TABLE: dict[str, tuple[object, type | object]] = {
    "l_x_ps": (10.0, float),
    "n_samples": (512, int),
    "l0": (0.2, float),
    "p_sat_w": (50.0, float),
    "smf1_beta_ps2_per_m": (0.01, float),
    "smf1_gamma_per_wm": (2.0e-3, float),
    "smf1_length_m": (0.32, float),
    "fa_beta_ps2_per_m": (0.025, float),
    "fa_gamma_per_wm": (4.4e-3, float),
    "fa_length_m": (0.22, float),
    "g0_per_m": (6.0, float),
    "e_sat_pj": (200.0, float),
    "omega_g_radps": (50.0, float),
    "smf2_beta_ps2_per_m": (0.01, float),
    "smf2_gamma_per_wm": (2.0e-3, float),
    "smf2_length_m": (0.11, float),
    "beta_rt_ps2": (-1.0e-3, float),
    "l_oc": (math.sqrt(0.5), float),
    "step_h_m": (1.0e-2, float),
    "richardson": (True, _parse_bool),
    "seed_peak_power_w": (400.0, float),
    "seed_fwhm_ps": (0.3, float),
    "seed_roundtrips": (10, int),
}


@dataclass(frozen=True)
class Settings:
    """A laser configuration plus the seeding recipe for the two-stage search."""

    config: LaserConfig
    seed_peak_power_w: float
    seed_fwhm_ps: float
    seed_roundtrips: int
    values: tuple  # canonical (key, value) pairs, for emitting and sweeping

    def value_dict(self) -> dict:
        return dict(self.values)


def default_values() -> dict:
    return {key: default for key, (default, _) in KEY_TABLE.items()}


def build_settings(values: dict) -> Settings:
    """Construct validated objects from a full key -> value dictionary."""
    v = values
    try:
        grid = FastTimeGrid(v["l_x_ps"], v["n_samples"])
        config = LaserConfig(
            grid=grid,
            sa=comp.SaturableAbsorberParams(l0=v["l0"], p_sat_w=v["p_sat_w"]),
            smf1=fiber.FiberParams(v["smf1_beta_ps2_per_m"], v["smf1_gamma_per_wm"],
                                   v["smf1_length_m"]),
            fa=fiber.FiberParams(v["fa_beta_ps2_per_m"], v["fa_gamma_per_wm"],
                                 v["fa_length_m"], g0_per_m=v["g0_per_m"],
                                 e_sat_pj=v["e_sat_pj"],
                                 omega_g_radps=v["omega_g_radps"]),
            smf2=fiber.FiberParams(v["smf2_beta_ps2_per_m"], v["smf2_gamma_per_wm"],
                                   v["smf2_length_m"]),
            beta_rt_ps2=v["beta_rt_ps2"],
            oc=comp.OutputCouplerParams(l_oc=v["l_oc"]),
            policy=fiber.StepPolicy(h_m=v["step_h_m"], richardson=v["richardson"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if v["seed_peak_power_w"] <= 0 or v["seed_fwhm_ps"] <= 0:
        raise ConfigError("seed peak power and width must be positive")
    if v["seed_roundtrips"] < 0:
        raise ConfigError("seed round-trip count must be non-negative")
    ordered = tuple((key, v[key]) for key in KEY_TABLE)
    return Settings(config, v["seed_peak_power_w"], v["seed_fwhm_ps"],
                    v["seed_roundtrips"], ordered)


def parse_values(path) -> dict:
    """Read a key = value file into a full value dictionary."""
    values = default_values()
    seen = set()
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.rstrip()!r}")
            key, _, text = line.partition("=")
            key = key.strip()
            if key not in KEY_TABLE:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in seen:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            seen.add(key)
            convert = KEY_TABLE[key][1]
            try:
                values[key] = convert(text.strip())
            except ValueError as exc:
                raise ConfigError(f"{path}:{lineno}: {exc}") from exc
    return values


def parse_settings(path) -> Settings:
    try:
        return build_settings(parse_values(path))
    except ConfigError as exc:
        if str(exc).startswith(str(path)):
            raise
        raise ConfigError(f"{path}: {exc}") from exc


def parse_config(path) -> LaserConfig:
    """Typed laser configuration from a file; unspecified keys take defaults."""
    return parse_settings(path).config


def default_settings() -> Settings:
    return build_settings(default_values())


def emit_config(settings: Settings, path) -> None:
    """Write the canonical key = value form (round-trips through parse)."""
    with open(path, "w") as fh:
        for key, value in settings.values:
            fh.write(f"{key} = {value!r}\n" if isinstance(value, bool)
                     else f"{key} = {value}\n")


def settings_with(settings: Settings, **overrides) -> Settings:
    """New settings with some keys replaced (used by parameter sweeps)."""
    values = settings.value_dict()
    for key, val in overrides.items():
        if key not in KEY_TABLE:
            raise ConfigError(f"unknown configuration key {key!r}")
        values[key] = val
    return build_settings(values)
