"""Experiment configuration: scalar parameters, geometry, EH constants, seeding.

Configs are read from YAML (JSON is accepted, being a YAML subset).  Powers may
be given either in dBm (``*_dbm`` keys) or watts (``*_w`` keys); everything is
stored in watts.  See ``configs/default.yaml`` for the full schema.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import yaml


class ConfigError(ValueError):
    """Raised when a config fails to parse or violates an invariant."""


class Scheme(str, enum.Enum):
    RSMA = "RSMA"
    SDMA = "SDMA"
    NOMA = "NOMA"


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt) + 30.0


@dataclass(frozen=True)
class EhConstants:
    """Logistic harvester ``phi / (k1p (1 + exp(-b0 (x - b1)))) - k2p``."""

    phi: float
    k1p: float
    k2p: float
    b0: float
    b1: float

    def __post_init__(self):
        for name in ("phi", "k1p", "k2p", "b0", "b1"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ConfigError(f"eh.{name} > 0 violated (got {value})")
        if not self.phi / self.k1p > self.k2p:
            raise ConfigError("eh.phi / eh.k1p > eh.k2p violated")

    @classmethod
    def from_saturation(cls, saturation_w: float, b0: float, b1: float) -> "EhConstants":
        """Constants with ``Omega(0) = 0`` and output saturating at ``saturation_w``.

        Uses ``phi = saturation_w``, ``k1p = 1 / (1 + exp(-b0 b1))`` and
        ``k2p = saturation_w * exp(-b0 b1)``.
        """
        e = math.exp(-b0 * b1)
        return cls(phi=saturation_w, k1p=1.0 / (1.0 + e), k2p=saturation_w * e, b0=b0, b1=b1)

    @property
    def saturation(self) -> float:
        return self.phi / self.k1p - self.k2p


@dataclass(frozen=True)
class Geometry:
    """Flat 2-D layout plus UAV altitude.

    Terminal positions are either explicit (``user_xy`` / ``uehr_xy``) or,
    when those are ``None``, dropped uniformly per channel realization in a
    disk of the given center and radius.
    """

    bs_xy: tuple[float, float] = (0.0, 0.0)
    uav_xy: tuple[float, float] = (1000.0, 0.0)
    uav_height_m: float = 100.0
    user_center_xy: tuple[float, float] = (-1000.0, 1000.0)
    user_radius_m: float = 500.0
    uehr_center_xy: tuple[float, float] = (-1000.0, -1000.0)
    uehr_radius_m: float = 500.0
    user_xy: tuple[tuple[float, float], ...] | None = None
    uehr_xy: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if not (math.isfinite(self.uav_height_m) and self.uav_height_m > 0):
            raise ConfigError(f"geometry.uav_height_m > 0 violated (got {self.uav_height_m})")
        for name in ("user_radius_m", "uehr_radius_m"):
            if not getattr(self, name) >= 0:
                raise ConfigError(f"geometry.{name} >= 0 violated")
        points = [self.bs_xy, self.uav_xy, self.user_center_xy, self.uehr_center_xy]
        points += list(self.user_xy or ()) + list(self.uehr_xy or ())
        for p in points:
            if len(p) != 2 or not all(math.isfinite(c) for c in p):
                raise ConfigError(f"geometry coordinates must be finite 2-vectors (got {p})")


@dataclass(frozen=True)
class SystemConfig:
    n_t: int = 4
    m_ris: int = 16
    k_users: int = 2
    j_uehrs: int = 2
    p_max_w: float = dbm_to_watt(10.0)
    p0_w: float = 1.0
    varrho: float = 1.0
    sigma2_w: float = dbm_to_watt(0.0)
    e_h_joule: float = 0.01
    r_c_min: float = 0.5
    alpha: float = 2.5
    pathloss_ref_m: float = 1000.0
    rician_k_ris_link: float = 3.0
    rician_k_direct: float = 0.0
    eh: EhConstants = field(default_factory=lambda: EhConstants.from_saturation(0.024, 150.0, 0.014))
    geometry: Geometry = field(default_factory=Geometry)
    tol_inner: float = 0.01
    tol_outer: float = 0.01
    max_iters_inner: int = 20
    max_iters_outer: int = 10
    penalty_c0: float = 0.1
    penalty_growth: float = 10.0
    scheme: Scheme = Scheme.RSMA
    master_seed: int = 2024

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        for name in ("n_t", "m_ris", "k_users", "j_uehrs", "max_iters_inner", "max_iters_outer"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} >= 1 violated (got {value!r})")
        checks = [
            ("p_max_w", self.p_max_w > 0, "p_max_w > 0"),
            ("sigma2_w", self.sigma2_w > 0, "sigma2_w > 0"),
            ("p0_w", self.p0_w >= 0, "p0_w >= 0"),
            ("varrho", self.varrho >= 0, "varrho >= 0"),
            ("alpha", self.alpha >= 2, "alpha >= 2"),
            ("e_h_joule", self.e_h_joule >= 0, "e_h_joule >= 0"),
            ("r_c_min", self.r_c_min >= 0, "r_c_min >= 0"),
            ("pathloss_ref_m", self.pathloss_ref_m > 0, "pathloss_ref_m > 0"),
            ("rician_k_ris_link", self.rician_k_ris_link >= 0, "rician_k_ris_link >= 0"),
            ("rician_k_direct", self.rician_k_direct >= 0, "rician_k_direct >= 0"),
            ("tol_inner", self.tol_inner > 0, "tol_inner > 0"),
            ("tol_outer", self.tol_outer > 0, "tol_outer > 0"),
            ("penalty_c0", self.penalty_c0 > 0, "penalty_c0 > 0"),
            ("penalty_growth", self.penalty_growth > 1, "penalty_growth > 1"),
        ]
        for name, ok, text in checks:
            value = getattr(self, name)
            if isinstance(value, float) and math.isnan(value) or not ok:
                raise ConfigError(f"{text} violated (got {value})")
        if not self.e_h_joule < self.eh.saturation:
            raise ConfigError(
                f"e_h_joule < EH saturation violated ({self.e_h_joule} >= {self.eh.saturation})"
            )
        g = self.geometry
        if g.user_xy is not None and len(g.user_xy) != self.k_users:
            raise ConfigError("geometry.user_xy must list k_users positions")
        if g.uehr_xy is not None and len(g.uehr_xy) != self.j_uehrs:
            raise ConfigError("geometry.uehr_xy must list j_uehrs positions")

    def replace(self, **changes) -> "SystemConfig":
        """Copy with changed fields; explicit positions are dropped when K or J changes."""
        geometry = changes.get("geometry", self.geometry)
        if "k_users" in changes and geometry.user_xy is not None and len(geometry.user_xy) != changes["k_users"]:
            geometry = dataclasses.replace(geometry, user_xy=None)
        if "j_uehrs" in changes and geometry.uehr_xy is not None and len(geometry.uehr_xy) != changes["j_uehrs"]:
            geometry = dataclasses.replace(geometry, uehr_xy=None)
        changes["geometry"] = geometry
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["scheme"] = self.scheme.value
        d["master_seed"] = int(self.master_seed)
        geo = d["geometry"]
        for key, value in geo.items():
            if isinstance(value, tuple):
                geo[key] = [list(v) if isinstance(v, tuple) else v for v in value]
        return d


def default_config() -> SystemConfig:
    return SystemConfig()


_POWER_KEYS = {"p_max": "p_max_w", "sigma2": "sigma2_w", "p0": "p0_w"}


def _as_pair(value, name):
    try:
        x, y = (float(v) for v in value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name} must be a pair of numbers") from exc
    return (x, y)


def _parse_geometry(raw: Mapping[str, Any]) -> Geometry:
    raw = dict(raw)
    known = {f.name for f in dataclasses.fields(Geometry)}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown geometry field(s): {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        if key in ("user_xy", "uehr_xy"):
            kwargs[key] = None if value is None else tuple(_as_pair(v, f"geometry.{key}") for v in value)
        elif key.endswith("_xy"):
            kwargs[key] = _as_pair(value, f"geometry.{key}")
        else:
            kwargs[key] = float(value)
    return Geometry(**kwargs)


def _parse_eh(raw: Mapping[str, Any]) -> EhConstants:
    raw = {k: float(v) for k, v in raw.items()}
    if "saturation_w" in raw:
        extra = set(raw) - {"saturation_w", "b0", "b1"}
        if extra:
            raise ConfigError(f"eh: saturation_w form takes only b0, b1 (got {sorted(extra)})")
        try:
            return EhConstants.from_saturation(raw["saturation_w"], raw["b0"], raw["b1"])
        except KeyError as exc:
            raise ConfigError(f"eh.{exc.args[0]} missing") from exc
    try:
        return EhConstants(**raw)
    except TypeError as exc:
        raise ConfigError(f"eh block: {exc}") from exc


def config_from_dict(raw: Mapping[str, Any]) -> SystemConfig:
    """Build a validated config from a parsed mapping; omitted fields take defaults."""
    if not isinstance(raw, Mapping):
        raise ConfigError("config root must be a mapping")
    raw = dict(raw)
    kwargs: dict[str, Any] = {}
    for stem, target in _POWER_KEYS.items():
        dbm_key = f"{stem}_dbm"
        if dbm_key in raw and target in raw:
            raise ConfigError(f"give only one of {dbm_key} / {target}")
        if dbm_key in raw:
            kwargs[target] = dbm_to_watt(float(raw.pop(dbm_key)))
    if "eh" in raw:
        kwargs["eh"] = _parse_eh(raw.pop("eh"))
    if "geometry" in raw:
        kwargs["geometry"] = _parse_geometry(raw.pop("geometry"))
    fields = {f.name: f for f in dataclasses.fields(SystemConfig)}
    for key, value in raw.items():
        if key not in fields:
            raise ConfigError(f"unknown config field: {key}")
        if key in ("n_t", "m_ris", "k_users", "j_uehrs", "max_iters_inner", "max_iters_outer", "master_seed"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer (got {value!r})")
            kwargs[key] = value
        elif key == "scheme":
            try:
                kwargs[key] = Scheme(str(value).upper())
            except ValueError as exc:
                raise ConfigError(f"unknown scheme: {value}") from exc
        else:
            try:
                kwargs[key] = float(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key} must be a number (got {value!r})") from exc
    return SystemConfig(**kwargs)


def load_config(path: str | Path) -> SystemConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(raw or {})


def save_config(cfg: SystemConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False))


def derive_trial_seed(master_seed: int, trial_index: int) -> int:
    """Per-trial 64-bit seed; a pure function of ``(master_seed, trial_index)``."""
    if trial_index < 0:
        raise ValueError("trial_index must be >= 0")
    ss = np.random.SeedSequence([int(master_seed) & (2**64 - 1), int(trial_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def parse_sweep(items: Sequence[str]) -> dict[str, list]:
    """Parse ``field=v1,v2,...`` strings into a sweep mapping."""
    sweep: dict[str, list] = {}
    fields = {f.name for f in dataclasses.fields(SystemConfig)} | {"p_max_dbm"}
    for item in items:
        name, _, values = item.partition("=")
        name = name.strip()
        if name not in fields or not values:
            raise ConfigError(f"bad sweep spec: {item!r}")
        parsed = []
        for v in values.split(","):
            v = v.strip()
            parsed.append(int(v) if v.lstrip("-").isdigit() else float(v))
        sweep[name] = parsed
    return sweep
