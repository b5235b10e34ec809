"""Simulation configuration: validated parameter set plus flat-TOML I/O.

All queue sizes, arrivals, and service rates in the simulator are expressed
in Mbits; distances in meters; the slot length ``tau`` (seconds) is only used
to convert slot-denominated delays to physical time at reporting time.
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class ConfigError(ValueError):
    """Raised when a configuration violates a model invariant."""


RATE_MODES = ("full-rate", "shared")
PLACEMENT_MODES = ("random", "top-popularity")
LINK_MODES = ("complete", "radius")
ERROR_SCHEDULES = ("fixed", "time-varying")


@dataclass(frozen=True)
class SimConfig:
    # population
    U: int = 100            # users
    H: int = 9              # access points
    F: int = 4              # file types
    N: int = 3              # cached types per AP (N < F)
    M: int = 12             # max users per AP per slot
    # control
    V: float = 1000.0       # throughput/backlog control parameter
    D: int = 20             # lookahead window size (slots), uniform across users
    # traffic
    A_max: float = 100.0    # max per-slot request size (Mbits)
    eta_r: float = 0.56     # Zipf exponent for requested file types
    # radio
    tau: float = 0.01       # slot length (seconds)
    B: float = 1.8e9        # effective AP bandwidth (Hz); see data/default.toml
    P: float = 1e8          # AP transmit power, linear and noise-normalized
    area_side: float = 50.0  # deployment square side (meters)
    # run control
    T: int = 50000          # horizon (slots)
    seed: int = 1
    n_fading_samples: int = 64
    # modes
    rate_mode: str = "full-rate"
    placement_mode: str = "random"
    link_mode: str = "complete"
    link_radius: float = 30.0   # only used when link_mode == "radius"
    freeze_channel: bool = False  # draw path-loss gains once per run
    capacity_log_base: float = 2.0  # 2.0 -> Shannon bits; math.e also accepted
    # prediction errors
    e_type: float = 0.0
    e_size: float = 0.0
    error_schedule: str = "fixed"
    error_constant: float = 60.0  # C in the time-varying rate d / (d + C)
    # bandwidth sharing
    xi: float = 0.05        # minimum per-user bandwidth ratio (shared mode)
    # reporting
    warmup_frac: float = 0.1  # slots excluded from windowed time averages

    def validate(self) -> "SimConfig":
        err = []
        if self.U < 1:
            err.append("U >= 1")
        if self.H < 1:
            err.append("H >= 1")
        if self.F < 1:
            err.append("F >= 1")
        # each AP caches a strict subset of the catalog; the single-type
        # degenerate case (F = N = 1) is allowed for reduced scenarios
        if self.N < 1:
            err.append("N >= 1")
        elif self.F > 1 and self.N >= self.F:
            err.append("N < F")
        elif self.N > self.F:
            err.append("N < F")
        if not (1 <= self.M <= self.U):
            err.append("1 <= M <= U")
        if not self.V > 0:
            err.append("V > 0")
        if self.D < 0:
            err.append("D >= 0")
        if not self.A_max > 0:
            err.append("A_max > 0")
        if self.eta_r < 0:
            err.append("eta_r >= 0")
        if self.T < 0:
            err.append("T >= 0")
        if not (self.tau > 0 and self.B > 0 and self.P >= 0):
            err.append("tau > 0, B > 0, P >= 0")
        if not self.area_side > 0:
            err.append("area_side > 0")
        if self.n_fading_samples < 1:
            err.append("n_fading_samples >= 1")
        if not (0.0 <= self.e_type <= 1.0 and 0.0 <= self.e_size <= 1.0):
            err.append("e_type, e_size in [0, 1]")
        if self.rate_mode not in RATE_MODES:
            err.append(f"rate_mode in {RATE_MODES}")
        if self.placement_mode not in PLACEMENT_MODES:
            err.append(f"placement_mode in {PLACEMENT_MODES}")
        if self.link_mode not in LINK_MODES:
            err.append(f"link_mode in {LINK_MODES}")
        if self.link_mode == "radius" and not self.link_radius > 0:
            err.append("link_radius > 0")
        if self.error_schedule not in ERROR_SCHEDULES:
            err.append(f"error_schedule in {ERROR_SCHEDULES}")
        if self.error_schedule == "time-varying" and not self.error_constant > 0:
            err.append("error_constant > 0")
        if not (0.0 < self.xi <= 1.0):
            err.append("xi in (0, 1]")
        if self.rate_mode == "shared" and self.M > math.floor(1.0 / self.xi):
            err.append("M <= floor(1/xi) in shared rate mode")
        if self.capacity_log_base <= 1.0:
            err.append("capacity_log_base > 1")
        if not (0.0 <= self.warmup_frac < 1.0):
            err.append("warmup_frac in [0, 1)")
        if err:
            raise ConfigError("invalid config: " + "; ".join(err))
        return self

    def replace(self, **kw) -> "SimConfig":
        return dataclasses.replace(self, **kw).validate()

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def capacity_scale(self) -> float:
        """tau * B / 1e6: spectral efficiency -> Mbits per slot."""
        return self.tau * self.B / 1e6


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(SimConfig)}
_BOOL_FIELDS = {f.name for f in dataclasses.fields(SimConfig) if f.type in (bool, "bool")}
_INT_FIELDS = {f.name for f in dataclasses.fields(SimConfig) if f.type in (int, "int")}
_FLOAT_FIELDS = {f.name for f in dataclasses.fields(SimConfig) if f.type in (float, "float")}


def coerce_value(key: str, raw):
    """Coerce a raw (string or TOML-typed) value to the field's type."""
    if key not in _FIELD_TYPES:
        raise ConfigError(f"unknown config key: {key!r}")
    if key in _BOOL_FIELDS:
        if isinstance(raw, bool):
            return raw
        s = str(raw).strip().lower()
        if s in ("true", "1", "yes"):
            return True
        if s in ("false", "0", "no"):
            return False
        raise ConfigError(f"cannot parse boolean for {key}: {raw!r}")
    if key in _INT_FIELDS:
        v = float(raw)
        if v != int(v):
            raise ConfigError(f"{key} must be an integer, got {raw!r}")
        return int(v)
    if key in _FLOAT_FIELDS:
        return float(raw)
    return str(raw)


def from_dict(d: dict) -> SimConfig:
    kv = {k: coerce_value(k, v) for k, v in d.items()}
    return SimConfig(**kv).validate()


def load_config(path: str) -> SimConfig:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    return from_dict(data)


def apply_overrides(cfg: SimConfig, pairs) -> SimConfig:
    """Apply 'key=value' override strings on top of an existing config."""
    d = cfg.to_dict()
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"override must look like key=value, got {pair!r}")
        key, _, raw = pair.partition("=")
        key = key.strip()
        d[key] = coerce_value(key, raw.strip())
    return from_dict(d)


def dump_toml(cfg: SimConfig) -> str:
    lines = []
    for f in dataclasses.fields(SimConfig):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            s = "true" if v else "false"
        elif isinstance(v, str):
            s = f'"{v}"'
        elif isinstance(v, float) and (math.isinf(v) or math.isnan(v)):
            raise ConfigError(f"cannot serialize {f.name}={v}")
        else:
            s = repr(v)
        lines.append(f"{f.name} = {s}")
    return "\n".join(lines) + "\n"


def save_config(cfg: SimConfig, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(dump_toml(cfg))


def default_config() -> SimConfig:
    return SimConfig().validate()
