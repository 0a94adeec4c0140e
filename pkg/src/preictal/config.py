"""Flat key=value run configuration shared by the CLI subcommands.

Precedence is flag > config file > built-in default; the merge happens
in make_config, so RunConfig itself always holds fully resolved values.
Unknown keys and out-of-range values are rejected at load time with the
offending key named.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Mapping, Optional

from .despike import DespikeConfig
from .errors import E_CONFIG, E_IO, PipelineError
from .swt import MaskSpec, wavelet_filters

__all__ = ["RunConfig", "parse_config_text", "load_config", "make_config",
           "config_text"]


@dataclass(frozen=True)
class RunConfig:
    """Every tunable default, resolvable from flags and config files."""
    wavelet: str = "sym5"
    levels: int = 6
    mask_threshold: float = 0.5
    detector_k: float = 4.0
    min_separation_s: float = 0.08
    window_half_s: float = 0.15
    b_min_s2: float = 1e-6
    b_max_s2: float = 1.0
    gamma_max_s: float = 0.1
    amplitude_factor_max: float = 10.0
    omega_tf: float = 7.0
    omega_st: float = 5.0
    gamma_low_hz: float = 65.0
    gamma_high_hz: float = 85.0
    norm_low_hz: float = 8.0
    norm_high_hz: float = 30.0
    smooth_ms: float = 500.0
    k_sigma: float = 3.0
    min_duration_ms: float = 300.0

    def __post_init__(self):
        wavelet_filters(self.wavelet)
        if not 1 <= int(self.levels):
            raise ValueError("levels: must be at least 1")
        if not 0 < self.mask_threshold <= 1:
            raise ValueError("mask_threshold: must be in (0, 1]")
        self.despike_config()  # validates the detector/fit fields
        for name in ("omega_tf", "omega_st"):
            if not getattr(self, name) >= 1:
                raise ValueError(f"{name}: must be >= 1")
        for low, high in (self.gamma_band, self.norm_band):
            if not 0 < low < high:
                raise ValueError("band edges: need 0 < low < high")
        if self.smooth_ms < 0:
            raise ValueError("smooth_ms: must be nonnegative")
        if self.k_sigma <= 0:
            raise ValueError("k_sigma: must be positive")
        if self.min_duration_ms < 0:
            raise ValueError("min_duration_ms: must be nonnegative")

    @property
    def gamma_band(self) -> tuple[float, float]:
        return (self.gamma_low_hz, self.gamma_high_hz)

    @property
    def norm_band(self) -> tuple[float, float]:
        return (self.norm_low_hz, self.norm_high_hz)

    def mask_spec(self) -> MaskSpec:
        return MaskSpec.auto(self.mask_threshold)

    def despike_config(self) -> DespikeConfig:
        return DespikeConfig(
            k=self.detector_k,
            min_separation_s=self.min_separation_s,
            window_half_s=self.window_half_s,
            b_bounds_s2=(self.b_min_s2, self.b_max_s2),
            gamma_max_s=self.gamma_max_s,
            amplitude_factor_max=self.amplitude_factor_max)


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _convert(key: str, raw: str, where: str):
    kind = _FIELDS[key].type
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise PipelineError(
            E_CONFIG, f"{where}: key '{key}' needs a {kind}, got '{raw}'")


def parse_config_text(text: str, source: str = "config") -> dict:
    """Parse `key = value` lines; '#' comments and blank lines ignored."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        where = f"{source} line {lineno}"
        if "=" not in stripped:
            raise PipelineError(E_CONFIG, f"{where}: expected key=value")
        key, _, raw = stripped.partition("=")
        key, raw = key.strip(), raw.strip()
        if key not in _FIELDS:
            raise PipelineError(E_CONFIG, f"{where}: unknown key '{key}'")
        if key in values:
            raise PipelineError(E_CONFIG, f"{where}: duplicate key '{key}'")
        values[key] = _convert(key, raw, where)
    return values


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise PipelineError(E_IO, f"cannot read config '{path}': {exc}")
    return parse_config_text(text, source=path)


def make_config(file_values: Optional[Mapping] = None,
                flag_values: Optional[Mapping] = None) -> RunConfig:
    """Resolve flag > file > default into a validated RunConfig."""
    merged: dict = {}
    for source in (file_values or {}, flag_values or {}):
        for key, value in source.items():
            if key not in _FIELDS:
                raise PipelineError(E_CONFIG, f"unknown key '{key}'")
            if value is not None:
                merged[key] = value
    try:
        return RunConfig(**merged)
    except ValueError as exc:
        raise PipelineError(E_CONFIG, str(exc))


def config_text(cfg: RunConfig) -> str:
    """Serialize as the flat key=value format parse_config_text reads."""
    lines = [f"{f.name} = {getattr(cfg, f.name)}"
             for f in dataclasses.fields(RunConfig)]
    return "\n".join(lines) + "\n"
