"""Experiment configuration: INI files with bracketed sections and flat keys.

Sections are only for readability; every key lives in one flat namespace.
Lists are comma separated.  Regions use ``kind:numbers``, for example
``interval:-1,1``, ``halfline:0`` (the set (0, inf)), ``leftline:0``,
``intervals:-1,0;0.5,1``, ``rectangle:-1,-1,1,1`` or ``disk:0,0,1``.
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, fields, replace

from ..domain import RegionSpec
from ..energy import ForcingSpec

__all__ = ["ConfigError", "ExperimentConfig", "parse_region", "parse_forcing", "load_config"]

EXPERIMENTS = ("sweep-s", "sweep-eps", "neumann-check", "curvature-check",
               "counterexample-classical", "counterexample-fractional", "minimize")


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse numbers in {text!r}") from exc


def parse_region(text: str) -> RegionSpec:
    kind, _, body = text.strip().partition(":")
    kind = kind.strip().lower()
    if kind == "intervals":
        pairs = [_floats(p) for p in body.split(";") if p.strip()]
        if any(len(p) != 2 for p in pairs):
            raise ConfigError(f"bad interval list {text!r}")
        return RegionSpec.intervals(*pairs)
    nums = _floats(body)
    shapes = {
        "interval": (2, lambda a, b: RegionSpec.interval(a, b)),
        "halfline": (1, lambda a: RegionSpec.interval(a, math.inf)),
        "leftline": (1, lambda a: RegionSpec.interval(-math.inf, a)),
        "rectangle": (4, RegionSpec.rectangle),
        "disk": (3, RegionSpec.disk),
    }
    if kind == "empty":
        return RegionSpec.empty(int(nums[0]) if nums else 1)
    if kind not in shapes:
        raise ConfigError(f"unknown region kind {kind!r}")
    n, make = shapes[kind]
    if len(nums) != n:
        raise ConfigError(f"{kind} takes {n} numbers, got {text!r}")
    return make(*nums)


def parse_forcing(text: str) -> ForcingSpec:
    """``-0.75`` for a constant, ``oscillatory:-0.75,1`` for H + a eps sin(x/eps)."""
    text = text.strip()
    if text.lower().startswith("oscillatory:"):
        nums = _floats(text.split(":", 1)[1])
        if len(nums) != 2:
            raise ConfigError("oscillatory forcing takes value,amplitude")
        return ForcingSpec.oscillatory(*nums)
    try:
        return ForcingSpec.constant(float(text))
    except ValueError as exc:
        raise ConfigError(f"cannot parse forcing {text!r}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "sweep-eps"
    omega: str = "interval:-1,1"
    exterior: str = "halfline:0"
    compact: str = "interval:-0.95,0.95"
    s: float = 0.25
    s_list: tuple = (0.30, 0.40, 0.45, 0.49)
    eps: float = 0.1
    eps_list: tuple = (0.1, 0.05, 0.025, 0.0125)
    m: float = 0.3
    M: float = 2.0
    H: str = "0"
    h: float = 0.0
    R: float = 4.0
    init: str = "indicator"
    tol: float = 1e-9
    max_iter: int = 50000
    seed: int = 0
    profile: str = ""
    profile_L: float = 40.0
    profile_h: float = 0.05
    curvature_h: float = 0.00125
    eta_list: tuple = (0.05, 0.2)
    slope_min: float = -10.0
    slope_max: float = 10.0
    slope_step: float = 1e-3
    refinements: int = 3
    margin: float = 0.05
    ode_steps: int = 1000
    out: str = "results"
    format: str = "csv"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if not self.M > 1:
            raise ConfigError("M must exceed 1")
        for name in ("s_list", "eps_list", "eta_list"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        if list(self.s_list) != sorted(self.s_list):
            raise ConfigError("s_list must be increasing")
        if list(self.eps_list) != sorted(self.eps_list, reverse=True):
            raise ConfigError("eps_list must be decreasing")
        if self.profile and not os.path.exists(self.profile):
            raise ConfigError(f"profile table {self.profile!r} does not exist")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        for text in (self.omega, self.exterior) + ((self.compact,) if self.compact else ()):
            parse_region(text)
        parse_forcing(self.H)

    # typed views
    @property
    def omega_region(self) -> RegionSpec:
        return parse_region(self.omega)

    @property
    def exterior_region(self) -> RegionSpec:
        return parse_region(self.exterior)

    @property
    def compact_region(self) -> RegionSpec | None:
        return parse_region(self.compact) if self.compact else None

    @property
    def forcing(self) -> ForcingSpec:
        return parse_forcing(self.H)

    @property
    def grid_h(self) -> float | None:
        return self.h if self.h > 0 else None

    def with_(self, **changes) -> "ExperimentConfig":
        return replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs, extra = {}, {}
        for key, raw in data.items():
            key = key.strip()
            if key == "name":
                key = "experiment"
            if key not in known:
                extra[key] = raw
                continue
            default = known[key].default
            try:
                if isinstance(default, tuple):
                    kwargs[key] = _floats(raw) if isinstance(raw, str) else tuple(float(v) for v in raw)
                elif isinstance(default, bool):
                    kwargs[key] = str(raw).lower() in ("1", "true", "yes")
                elif isinstance(default, int):
                    kwargs[key] = int(raw)
                elif isinstance(default, float):
                    kwargs[key] = float(raw)
                else:
                    kwargs[key] = str(raw).strip()
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        if extra:
            raise ConfigError(f"unknown keys: {', '.join(sorted(extra))}")
        return cls(**kwargs)


def load_config(path: str, experiment: str | None = None) -> ExperimentConfig:
    """Read an INI file; ``experiment`` overrides the file's own name."""
    if not os.path.exists(path):
        raise ConfigError(f"config file {path!r} not found")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    data = {}
    for section in parser.sections():
        data.update(parser[section])
    if experiment is not None:
        data["experiment"] = experiment
    return ExperimentConfig.from_mapping(data)
