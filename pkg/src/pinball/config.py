"""Run configuration: defaults, INI-style config files and flag overrides.

A config file holds a single ``[run]`` section with keys mirroring
:class:`RunConfig`::

    [run]
    d_over_r = 6
    representation = A2
    maslov = on
    max_len = 8
    bands = 1
    region = 9999.5,10001.5,-0.5,0
    density = 2
    grid = 400x200
    sigma = auto
    out = out
    cache = cache
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError

CACHE_ENV = "PINBALL_CACHE"


@dataclass(frozen=True)
class RunConfig:
    d_over_r: float = 6.0
    representation: str = "A2"
    maslov: bool = True
    max_len: int = 8
    bands: int = 1
    region: tuple = (9999.5, 10001.5, -0.5, 0.0)
    density: float = 2.0
    grid: tuple = (400, 200)
    sigma: float | None = None  # None means 1/Re(k)
    out: str = "out"
    cache: str | None = None

    def validate(self) -> "RunConfig":
        if not self.d_over_r > 2:
            raise ConfigError(f"d_over_r = {self.d_over_r}: disks overlap, need d_over_r > 2")
        if self.representation not in ("A1", "A2"):
            raise ConfigError(f"representation {self.representation!r}: choose A1 or A2")
        if self.max_len < 1:
            raise ConfigError(f"max_len = {self.max_len}: need at least 1")
        if self.bands < 1:
            raise ConfigError(f"bands = {self.bands}: need at least 1")
        re0, re1, im0, im1 = self.region
        if not (re1 > re0 and im1 > im0):
            raise ConfigError(f"region {self.region}: need re0 < re1 and im0 < im1")
        if not self.density > 0:
            raise ConfigError(f"density = {self.density}: must be positive")
        if min(self.grid) < 1:
            raise ConfigError(f"grid {self.grid}: dimensions must be >= 1")
        if self.sigma is not None and not self.sigma > 0:
            raise ConfigError(f"sigma = {self.sigma}: must be positive, or 'auto'")
        return self

    @property
    def cache_dir(self) -> Path | None:
        root = os.environ.get(CACHE_ENV) or self.cache
        return Path(root) if root else None


def parse_bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"expected on/off, got {text!r}")


def parse_region(text: str) -> tuple:
    parts = str(text).split(",")
    if len(parts) != 4:
        raise ConfigError(f"region {text!r}: expected re0,re1,im0,im1")
    try:
        return tuple(float(x) for x in parts)
    except ValueError as exc:
        raise ConfigError(f"region {text!r}: {exc}") from exc


def parse_grid(text: str) -> tuple:
    parts = str(text).lower().split("x")
    if len(parts) != 2:
        raise ConfigError(f"grid {text!r}: expected NQxNP")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"grid {text!r}: {exc}") from exc


def parse_sigma(text) -> float | None:
    if text is None or str(text).strip().lower() == "auto":
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise ConfigError(f"sigma {text!r}: expected auto or a number") from exc


def _number(kind):
    def conv(text):
        try:
            return kind(text)
        except ValueError as exc:
            raise ConfigError(f"cannot read {text!r} as {kind.__name__}") from exc

    return conv


PARSERS = {
    "d_over_r": _number(float),
    "representation": lambda s: s.strip().upper(),
    "maslov": parse_bool,
    "max_len": _number(int),
    "bands": _number(int),
    "region": parse_region,
    "density": _number(float),
    "grid": parse_grid,
    "sigma": parse_sigma,
    "out": str,
    "cache": lambda s: s or None,
}


def read_config_file(path) -> dict:
    """Parsed key/value overrides from the ``[run]`` section of ``path``."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} not found")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not parser.has_section("run"):
        raise ConfigError(f"{path}: missing [run] section")
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in parser.items("run"):
        if key not in known:
            raise ConfigError(f"{path}: unknown key {key!r}")
        out[key] = PARSERS[key](value)
    return out


def resolve_config(file_path=None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then file values, then explicit overrides (None values ignored)."""
    values = {}
    if file_path is not None:
        values.update(read_config_file(file_path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        values[key] = parse_sigma(value) if key == "sigma" else value
    return replace(RunConfig(), **values).validate()
