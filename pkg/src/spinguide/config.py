"""Experiment configuration: dataclasses, strict loading, echo and sweeps.

Config files are YAML (JSON is accepted too, so a run's ``config.json`` echo
re-parses directly).  Unknown keys are errors, never silently dropped.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import typing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .lattice import ConfigError


def _require(cond: bool, name: str, bound: str, value) -> None:
    if not cond:
        raise ConfigError(f"{name} must be {bound}, got {value!r}")


@dataclass
class GuideParams:
    wg: float = 20.0
    d: float = 20.0
    eps_min: float = 0.1

    def __post_init__(self):
        _require(self.wg > 0, "guide.wg", "> 0", self.wg)
        _require(self.d > 0, "guide.d", "> 0", self.d)
        _require(self.eps_min >= 0, "guide.eps_min", ">= 0", self.eps_min)


@dataclass
class PacketParams:
    phi_x: float = 6.0
    phi_y: float = 6.0
    kx: float = 0.0
    ky: float = math.pi / 2
    x0: float | None = None
    y0: float | None = None
    mode_index: int = 0

    def __post_init__(self):
        _require(self.phi_x > 0, "packet.phi_x", "> 0", self.phi_x)
        _require(self.phi_y > 0, "packet.phi_y", "> 0", self.phi_y)
        _require(self.mode_index >= 0, "packet.mode_index", ">= 0", self.mode_index)


@dataclass
class PropagationParams:
    method: str = "chebyshev_expansion"
    t_step: float = 10.0
    tol: float = 1e-12

    def __post_init__(self):
        _require(self.method in ("chebyshev_expansion", "krylov_step", "exact_small"),
                 "propagation.method", "one of chebyshev_expansion, krylov_step, exact_small",
                 self.method)
        _require(self.t_step > 0, "propagation.t_step", "> 0", self.t_step)
        _require(0 < self.tol <= 1e-8, "propagation.tol", "in (0, 1e-8]", self.tol)


@dataclass
class OutputParams:
    frames: bool = True
    frame_every: int = 1
    frame_threshold: float = 1e-4

    def __post_init__(self):
        _require(self.frame_every >= 1, "output.frame_every", ">= 1", self.frame_every)
        _require(0 <= self.frame_threshold < 1, "output.frame_threshold", "in [0, 1)",
                 self.frame_threshold)


@dataclass
class DMCParams:
    n_periods: int = 10
    period: float = 20.0
    d_dmc: float | None = None
    model: str = "wells"

    def __post_init__(self):
        _require(self.n_periods >= 1, "dmc.n_periods", ">= 1", self.n_periods)
        _require(self.period > 0, "dmc.period", "> 0", self.period)
        _require(self.d_dmc is None or self.d_dmc > 0, "dmc.d_dmc", "> 0", self.d_dmc)
        _require(self.model in ("wells", "wires"), "dmc.model", "'wells' or 'wires'", self.model)


@dataclass
class PropagationConfig:
    """Free and guided straight-line propagation."""

    nx: int = 161
    ny: int = 521
    Je: float = 1.0
    Jd: float = 0.0
    distance: float = 420.0   # nominal travel at v = 2; the packet itself is a little slower
    guide: GuideParams = field(default_factory=GuideParams)
    packet: PacketParams = field(default_factory=PacketParams)
    propagation: PropagationParams = field(default_factory=PropagationParams)
    output: OutputParams = field(default_factory=OutputParams)

    def __post_init__(self):
        _require(self.nx >= 2, "nx", ">= 2", self.nx)
        _require(self.ny >= 2, "ny", ">= 2", self.ny)
        _require(self.Je > 0, "Je", "> 0", self.Je)
        _require(self.Jd >= 0, "Jd", ">= 0", self.Jd)
        _require(self.distance > 0, "distance", "> 0", self.distance)


@dataclass
class BendConfig:
    guide: GuideParams = field(default_factory=GuideParams)
    radii: list[float] = field(default_factory=lambda: [50.0, 500.0, 1000.0, 2000.0])
    angle: float = 45.0
    straight_before: float = 100.0
    straight_after: float = 150.0
    margin: float = 60.0
    # half-width of the capture tube for the loss; None -> wg + 2d
    loss_halfwidth: float | None = None
    packet: PacketParams = field(default_factory=lambda: PacketParams(phi_y=10.0))
    propagation: PropagationParams = field(default_factory=PropagationParams)
    output: OutputParams = field(default_factory=lambda: OutputParams(frames=False))

    def __post_init__(self):
        _require(len(self.radii) > 0, "radii", "a nonempty list", self.radii)
        for r in self.radii:
            _require(r > 0, "radii[]", "> 0", r)
        _require(0 < abs(self.angle) <= 90, "angle", "in (0, 90] degrees", self.angle)
        _require(self.straight_before >= 0, "straight_before", ">= 0", self.straight_before)
        _require(self.straight_after > 0, "straight_after", "> 0", self.straight_after)
        _require(self.loss_halfwidth is None or self.loss_halfwidth >= self.guide.wg,
                 "loss_halfwidth", f">= wg = {self.guide.wg}", self.loss_halfwidth)


@dataclass
class CouplerConfig:
    guide: GuideParams = field(default_factory=lambda: GuideParams(6.0, 6.0, 0.3))
    # (eps_min, centre-to-centre separation) operating points
    points: list[list[float]] = field(default_factory=lambda: [[0.3, 14.0], [0.3, 15.0],
                                                                [0.5, 14.0]])
    method: str = "splitting"
    # spectral-only J_omega grid written alongside the dynamics (may be empty)
    grid_eps: list[float] = field(default_factory=lambda: [0.3, 0.5, 1.0])
    grid_separations: list[float] = field(default_factory=lambda: [13.0, 14.0, 15.0, 16.0, 18.0])
    margin: float = 40.0
    packet: PacketParams = field(default_factory=lambda: PacketParams(phi_y=12.0))
    propagation: PropagationParams = field(default_factory=lambda: PropagationParams(t_step=2.0))
    output: OutputParams = field(default_factory=lambda: OutputParams(frames=False))

    def __post_init__(self):
        from .spectral import COUPLING_METHODS

        _require(len(self.points) > 0, "points", "a nonempty list", self.points)
        for p in self.points:
            _require(len(p) == 2 and p[0] > 0, "points[]", "[eps_min > 0, separation]", p)
            _require(p[1] > 2 * self.guide.wg, "points[].separation",
                     f"> 2*wg = {2 * self.guide.wg} (guides overlap)", p[1])
        _require(self.method in COUPLING_METHODS, "method", f"one of {COUPLING_METHODS}",
                 self.method)


@dataclass
class DMCConfig:
    guide: GuideParams = field(default_factory=lambda: GuideParams(10.0, 10.0, 0.5))
    dmc: DMCParams = field(default_factory=DMCParams)
    eps_dmc: list[float] = field(default_factory=lambda: [round(0.01 * i, 10) for i in range(11)])
    nx: int = 61
    gap: float = 60.0
    packet: PacketParams = field(default_factory=lambda: PacketParams(phi_y=20.0))
    propagation: PropagationParams = field(default_factory=PropagationParams)
    output: OutputParams = field(default_factory=lambda: OutputParams(frames=False))

    def __post_init__(self):
        _require(len(self.eps_dmc) > 0, "eps_dmc", "a nonempty list", self.eps_dmc)
        for e in self.eps_dmc:
            _require(e >= 0, "eps_dmc[]", ">= 0", e)
        _require(self.nx >= 3, "nx", ">= 3", self.nx)
        _require(self.gap >= 0, "gap", ">= 0", self.gap)


@dataclass
class MichelsonConfig:
    guide: GuideParams = field(default_factory=lambda: GuideParams(6.0, 6.0, 0.5))
    sep_far: float = 30.0
    sep_close: float = 13.5
    taper: float = 150.0
    coupling_length: float | None = None
    arm_length: float = 320.0
    dmc: DMCParams = field(default_factory=DMCParams)
    dmc_gap: float = 20.0
    dmc_both_arms: bool = False
    eps_dmc: list[float] = field(default_factory=lambda: [round(0.002 * i, 10) for i in range(26)])
    margin: float = 24.0
    full_scale: bool = False
    packet: PacketParams = field(default_factory=lambda: PacketParams(phi_y=15.0))
    propagation: PropagationParams = field(default_factory=lambda: PropagationParams(t_step=50.0))
    output: OutputParams = field(default_factory=lambda: OutputParams(frames=False))

    def __post_init__(self):
        _require(self.sep_close > 2 * self.guide.wg, "sep_close", f"> 2*wg = {2 * self.guide.wg}",
                 self.sep_close)
        _require(self.sep_far >= self.sep_close, "sep_far", f">= sep_close = {self.sep_close}",
                 self.sep_far)
        _require(self.taper > 0, "taper", "> 0", self.taper)
        _require(self.coupling_length is None or self.coupling_length >= 0, "coupling_length",
                 ">= 0", self.coupling_length)
        _require(self.arm_length > self.dmc.n_periods * self.dmc.period + self.dmc_gap,
                 "arm_length", "longer than the DMC plus its gap", self.arm_length)
        _require(len(self.eps_dmc) > 0, "eps_dmc", "a nonempty list", self.eps_dmc)
        for e in self.eps_dmc:
            _require(e >= 0, "eps_dmc[]", ">= 0", e)


@dataclass
class ModesConfig:
    guide: GuideParams = field(default_factory=lambda: GuideParams(150.0, 150.0, 0.1))
    eps_min: list[float] = field(default_factory=lambda: [0.0, 1e-4, 3e-4, 1e-3, 3e-3, 1e-2])
    n_sites: int = 1200
    n_modes: int = 10
    threshold: float = 0.9

    def __post_init__(self):
        _require(len(self.eps_min) > 0, "eps_min", "a nonempty list", self.eps_min)
        for e in self.eps_min:
            _require(e >= 0, "eps_min[]", ">= 0", e)
        _require(self.n_sites >= 3, "n_sites", ">= 3", self.n_sites)
        _require(self.n_modes >= 1, "n_modes", ">= 1", self.n_modes)
        _require(0 < self.threshold <= 1, "threshold", "in (0, 1]", self.threshold)


@dataclass
class DispersionConfig:
    points: int = 100
    Je: float = 1.0
    Jd: float = 0.0

    def __post_init__(self):
        _require(self.points >= 2, "points", ">= 2", self.points)
        _require(self.Je > 0, "Je", "> 0", self.Je)
        _require(self.Jd >= 0, "Jd", ">= 0", self.Jd)


@dataclass
class UnitsConfig:
    material: str = "P:Si"
    J_ueV: float | None = None
    a_nm: float | None = None
    gamma: float | None = None
    mu: float | None = None
    d: float = 100.0
    eps_min: list[float] = field(default_factory=lambda: [1e-4, 1e-3])
    device_length_um: float = 5.0

    def __post_init__(self):
        _require(self.material in ("P:Si", "custom"), "material", "'P:Si' or 'custom'",
                 self.material)
        for name in ("J_ueV", "a_nm", "gamma", "mu"):
            v = getattr(self, name)
            _require(v is None or v > 0, name, "> 0", v)
        _require(self.d > 0, "d", "> 0", self.d)
        _require(self.device_length_um > 0, "device_length_um", "> 0", self.device_length_um)


CONFIGS = {
    "dispersion": DispersionConfig,
    "modes": ModesConfig,
    "free": PropagationConfig,
    "guide": PropagationConfig,
    "bend": BendConfig,
    "coupler": CouplerConfig,
    "dmc": DMCConfig,
    "michelson": MichelsonConfig,
    "units": UnitsConfig,
}


# ---------------------------------------------------------------------------
# dict <-> dataclass
# ---------------------------------------------------------------------------

def _coerce(tp, value, name):
    origin = typing.get_origin(tp)
    args = typing.get_args(tp)
    if origin in (typing.Union, getattr(__import__("types"), "UnionType", None)):
        if value is None and type(None) in args:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(inner[0], value, name)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{name} must be a mapping, got {value!r}")
        return from_dict(tp, value, name)
    if origin is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{name} must be a list, got {value!r}")
        return [_coerce(args[0], v, f"{name}[]") for v in value]
    if tp is float:
        if isinstance(value, str):
            # YAML 1.1 reads exponent forms without a dot (1e-12) as strings
            try:
                value = float(value)
            except ValueError:
                pass
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name} must be a number, got {value!r}")
        return float(value)
    if tp is int:
        if isinstance(value, bool) or not (isinstance(value, int)
                                           or (isinstance(value, float) and value.is_integer())):
            raise ConfigError(f"{name} must be an integer, got {value!r}")
        return int(value)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{name} must be true/false, got {value!r}")
        return value
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{name} must be a string, got {value!r}")
        return value
    return value


def from_dict(cls, data: dict, prefix: str = ""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = f" in {prefix}" if prefix else ""
        raise ConfigError(f"unknown config key(s){where}: {', '.join(map(str, unknown))}")
    kw = {k: _coerce(hints[k], v, f"{prefix}.{k}" if prefix else k) for k, v in data.items()}
    return cls(**kw)


def to_dict(cfg) -> dict:
    return dataclasses.asdict(cfg)


def echo(cfg) -> str:
    """Canonical JSON text of a resolved config (all defaults filled in)."""
    return json.dumps(to_dict(cfg), indent=2, sort_keys=True) + "\n"


def digest(text: str | bytes) -> str:
    if isinstance(text, str):
        text = text.encode("utf-8")
    return hashlib.sha256(text).hexdigest()


def load_config(kind: str, data: dict | None = None):
    if kind not in CONFIGS:
        raise ConfigError(f"unknown subcommand {kind!r}")
    return from_dict(CONFIGS[kind], data or {})


def parse_config(path, kind: str):
    """Read, validate and default-fill the config file at ``path`` for ``kind``."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not well-formed YAML/JSON: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return load_config(kind, data)


def parse_sweep(spec: str) -> tuple[str, list[float]]:
    """``KEY=START:STOP:STEP`` -> (KEY, values), STOP included when on the grid."""
    try:
        key, rng = spec.split("=", 1)
        start, stop, step = (float(v) for v in rng.split(":"))
    except ValueError as exc:
        raise ConfigError(f"sweep must look like KEY=START:STOP:STEP, got {spec!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigError(f"sweep {spec!r} needs STEP > 0 and STOP >= START")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    vals = [float(round(v, 12)) for v in start + step * np.arange(n)]
    return key.strip(), vals


def apply_sweep(cfg, key: str, values: list[float]):
    """Replace the list-valued top-level field ``key`` (e.g. eps_dmc, radii)."""
    names = {f.name: f for f in dataclasses.fields(cfg)}
    hints = typing.get_type_hints(type(cfg))
    if key not in names or typing.get_origin(hints[key]) is not list:
        lists = [n for n in names if typing.get_origin(hints[n]) is list]
        raise ConfigError(f"cannot sweep {key!r}; sweepable keys: {', '.join(lists)}")
    return dataclasses.replace(cfg, **{key: list(values)})
