"""Experiment configuration: flat key-value files plus flag overrides.

Config files hold one ``key = value`` pair per line (``#`` comments allowed).
Grids are written either as ``start:stop:count`` (inclusive linear grid) or
as a comma list. Flag overrides win over the file, which wins over preset
defaults. The fully resolved configuration is echoed into every output
directory for provenance.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from math import comb

import numpy as np

from .lattice import MAX_DENSE_DIM, SHAPE_NAMES

METHODS = ("exact", "ks", "both")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse ``start:stop:count`` or a comma list into a float tuple."""
    text = text.strip()
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) != 3:
                raise ValueError
            start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
            if count < 1:
                raise ValueError
            return tuple(float(x) for x in np.linspace(start, stop, count))
        return tuple(float(x) for x in text.split(","))
    except ValueError as err:
        raise ConfigError(
            f"cannot parse grid {text!r}: expected start:stop:count or a comma list"
        ) from err


def _format_grid(grid: tuple[float, ...]) -> str:
    return ",".join(format(v, ".17g") for v in grid)


@dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment parameters (half-filled chains, zero total spin)."""

    preset: str | None = None
    n_sites: int = 2
    l_list: tuple[int, ...] | None = None
    shape: str = "linear"
    beta: float = 1.0
    beta_grid: tuple[float, ...] | None = None
    dv0: float = 0.05
    u_grid: tuple[float, ...] = (0.0,)
    v0_grid: tuple[float, ...] = (0.0,)
    method: str = "exact"
    out_dir: str = "out"
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    scf_alpha: float = 0.3
    scf_tol: float = 1e-8
    scf_max_iter: int = 5000
    fd_step: float = 1e-4
    merge_tol: float = 1e-12

    def validate(self) -> "ExperimentConfig":
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.shape not in SHAPE_NAMES:
            raise ConfigError(f"shape must be one of {SHAPE_NAMES}, got {self.shape!r}")
        for name, grid in (("u_grid", self.u_grid), ("v0_grid", self.v0_grid)):
            if len(grid) == 0:
                raise ConfigError(f"{name} is empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ConfigError(f"{name} must be strictly increasing")
        if self.beta_grid is not None:
            if len(self.beta_grid) == 0 or any(
                    b <= a for a, b in zip(self.beta_grid, self.beta_grid[1:])):
                raise ConfigError("beta_grid must be non-empty and strictly increasing")
        if self.beta <= 0:
            raise ConfigError("beta must be > 0")
        for n_sites in self.site_counts():
            if n_sites < 2 or n_sites % 2:
                raise ConfigError("chains must have an even number of sites >= 2")
            if self.method in ("exact", "both"):
                dim = comb(n_sites, n_sites // 2) ** 2
                if dim > MAX_DENSE_DIM:
                    raise ConfigError(
                        f"method={self.method} needs exact diagonalization, which is "
                        f"limited to half-filled chains of at most 8 sites "
                        f"(L={n_sites} has sector dimension {dim} > {MAX_DENSE_DIM}); "
                        "use method=ks"
                    )
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.scf_tol <= 0 or self.fd_step <= 0 or self.merge_tol < 0:
            raise ConfigError("tolerances and steps must be positive")
        if not 0 < self.scf_alpha <= 1:
            raise ConfigError("scf_alpha must be in (0, 1]")
        if self.scf_max_iter < 1:
            raise ConfigError("scf_max_iter must be >= 1")
        return self

    def site_counts(self) -> tuple[int, ...]:
        return self.l_list if self.l_list is not None else (self.n_sites,)

    def resolved_text(self, version: str) -> str:
        """Canonical key=value echo of this configuration."""
        lines = [f"version = {version}"]
        if self.preset:
            lines.append(f"preset = {self.preset}")
        lines.append(f"n_sites = {self.n_sites}")
        if self.l_list is not None:
            lines.append("l_list = " + ",".join(str(x) for x in self.l_list))
        lines.append(f"shape = {self.shape}")
        lines.append(f"beta = {self.beta:.17g}")
        if self.beta_grid is not None:
            lines.append("beta_grid = " + _format_grid(self.beta_grid))
        lines.append(f"dv0 = {self.dv0:.17g}")
        lines.append("u_grid = " + _format_grid(self.u_grid))
        lines.append("v0_grid = " + _format_grid(self.v0_grid))
        lines.append(f"method = {self.method}")
        lines.append(f"threads = {self.threads}")
        lines.append(f"scf_alpha = {self.scf_alpha:.17g}")
        lines.append(f"scf_tol = {self.scf_tol:.17g}")
        lines.append(f"scf_max_iter = {self.scf_max_iter}")
        lines.append(f"fd_step = {self.fd_step:.17g}")
        lines.append(f"merge_tol = {self.merge_tol:.17g}")
        return "\n".join(lines) + "\n"


_KEY_PARSERS = {
    "preset": str,
    "n_sites": int,
    "L": int,
    "shape": str,
    "beta": float,
    "dv0": float,
    "u_grid": parse_grid,
    "v0_grid": parse_grid,
    "beta_grid": parse_grid,
    "method": str,
    "out": str,
    "threads": int,
    "scf_alpha": float,
    "scf_tol": float,
    "scf_max_iter": int,
    "fd_step": float,
    "merge_tol": float,
}

_KEY_TO_FIELD = {
    "L": "n_sites",
    "out": "out_dir",
}


def read_config_file(path: str) -> dict:
    """Parse a flat key-value config file into override values."""
    overrides: dict = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _KEY_PARSERS:
                raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                parsed = _KEY_PARSERS[key](value)
            except ConfigError:
                raise
            except ValueError as err:
                raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from err
            overrides[_KEY_TO_FIELD.get(key, key)] = parsed
    return overrides


def build_config(preset_defaults: "ExperimentConfig | None" = None,
                 file_path: str | None = None,
                 flag_overrides: dict | None = None) -> ExperimentConfig:
    """Merge preset defaults, a config file, and flag overrides, then validate."""
    config = preset_defaults if preset_defaults is not None else ExperimentConfig()
    merged: dict = {}
    if file_path:
        merged.update(read_config_file(file_path))
    if flag_overrides:
        merged.update({k: v for k, v in flag_overrides.items() if v is not None})
    if merged:
        unknown = set(merged) - {f for f in config.__dataclass_fields__}
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        config = replace(config, **merged)
    return config.validate()


def parse_config(path: str | None = None,
                 flags: dict | None = None) -> ExperimentConfig:
    """Resolve an experiment configuration from a file and/or flag values."""
    return build_config(None, path, flags)
