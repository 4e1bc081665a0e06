"""Scenario and sweep configuration, read from and written to TOML."""
from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
import tomli_w

from ..compliance import ComplianceParams, get_law
from ..contact_model import BodyParams, RodCoefficients
from ..integrator import HybridState, Tolerances

OUTPUTS = ("trajectory", "events", "summary")
SWEEP_PARAMETERS = ("theta0", "delta", "epsilon")
SWEEP_QUANTITIES = ("e",)


class ConfigError(ValueError):
    pass


def _check_finite(section: str, obj) -> None:
    for f in fields(obj):
        val = getattr(obj, f.name)
        if isinstance(val, float) and not math.isfinite(val):
            raise ConfigError(f"[{section}] {f.name} must be finite, got {val}")


def _build(cls, section: str, data: dict[str, Any] | None):
    data = dict(data or {})
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"[{section}] unknown keys: {sorted(unknown)}")
    kwargs = {}
    for name, val in data.items():
        ftype = known[name].type
        if ftype in ("float", float) and isinstance(val, int) and not isinstance(val, bool):
            val = float(val)
        kwargs[name] = val
    try:
        obj = cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {exc}") from None
    _check_finite(section, obj)
    return obj


@dataclass(frozen=True)
class BodyConfig:
    alpha: float = 3.0
    mu: float = 1.4

    def params(self) -> BodyParams:
        return BodyParams(self.alpha, self.mu)

    def coeffs(self) -> RodCoefficients:
        return RodCoefficients(self.params())


@dataclass(frozen=True)
class ComplianceConfig:
    epsilon: float = 1e-3
    delta: float = 1.0
    law: str = "linear"

    def params(self) -> ComplianceParams:
        return ComplianceParams(self.epsilon, self.delta)


@dataclass(frozen=True)
class InitialConfig:
    y: float = 0.0
    w: float = 0.0
    theta: float = 1.0
    phi: float = 0.5
    v: float = 1.0
    x: float = 0.0

    def state(self) -> HybridState:
        return HybridState(self.y, self.w, self.theta, self.phi, self.v, self.x)


@dataclass(frozen=True)
class ToleranceConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    event_tol: float = 1e-12
    stick_band: float = 1e-10
    max_steps: int = 200_000

    def tolerances(self) -> Tolerances:
        return Tolerances(rtol=self.rtol, atol=self.atol, event_tol=self.event_tol,
                          stick_band=self.stick_band, max_steps=self.max_steps)


@dataclass(frozen=True)
class TwoRodConfig:
    """Two rods aimed at grazing states that differ only in ``w1 = w / eps``."""
    t_graze: float = 0.5
    theta: float = 0.9463
    phi: float = 1.6654
    v: float = 1.0
    w1_green: float = -1.0
    w1_blue: float = -0.2


@dataclass(frozen=True)
class Scenario:
    name: str = "scenario"
    kind: str = "simulate"
    t_end: float = 1.0
    stop_on_return: bool = False
    outputs: tuple[str, ...] = OUTPUTS
    body: BodyConfig = field(default_factory=BodyConfig)
    compliance: ComplianceConfig = field(default_factory=ComplianceConfig)
    initial: InitialConfig = field(default_factory=InitialConfig)
    tolerances: ToleranceConfig = field(default_factory=ToleranceConfig)
    two_rod: TwoRodConfig | None = None

    def __post_init__(self):
        if self.kind not in ("simulate", "two_rod"):
            raise ConfigError(f"kind must be 'simulate' or 'two_rod', got {self.kind!r}")
        if self.kind == "two_rod" and self.two_rod is None:
            raise ConfigError("kind = 'two_rod' needs a [two_rod] section")
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ConfigError(f"t_end must be positive, got {self.t_end}")
        bad = set(self.outputs) - set(OUTPUTS)
        if bad:
            raise ConfigError(f"unknown outputs {sorted(bad)}; known: {list(OUTPUTS)}")

    def validate(self) -> "Scenario":
        """Check the parameter preconditions of the underlying modules."""
        try:
            self.body.params()
            self.compliance.params()
            get_law(self.compliance.law)
            self.tolerances.tolerances()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["outputs"] = list(self.outputs)
        if self.two_rod is None:
            del out["two_rod"]
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Scenario":
        data = dict(data)
        sections = {
            "body": BodyConfig, "compliance": ComplianceConfig, "initial": InitialConfig,
            "tolerances": ToleranceConfig, "two_rod": TwoRodConfig,
        }
        kwargs: dict[str, Any] = {}
        for key, sub in sections.items():
            if key in data:
                kwargs[key] = _build(sub, key, data.pop(key))
        top = {f.name for f in fields(cls)} - set(sections)
        unknown = set(data) - top
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        if "outputs" in data:
            data["outputs"] = tuple(data["outputs"])
        if "t_end" in data and isinstance(data["t_end"], int):
            data["t_end"] = float(data["t_end"])
        try:
            return cls(**data, **kwargs).validate()
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def from_toml(cls, text: str) -> "Scenario":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_toml(Path(path).read_text())

    def save(self, path) -> None:
        Path(path).write_text(self.to_toml())


@dataclass(frozen=True)
class SweepSpec:
    """One swept parameter over ``grid`` with everything else held at ``fixed``."""
    parameter: str = "delta"
    grid: tuple[float, ...] = (0.0, 1.0)
    quantity: str = "e"
    theta0: float = 1.0
    delta: float = 0.0
    alpha: float = 3.0
    mu: float = 1.4

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ConfigError(f"parameter must be one of {SWEEP_PARAMETERS}, got {self.parameter!r}")
        if self.quantity not in SWEEP_QUANTITIES:
            raise ConfigError(f"quantity must be one of {SWEEP_QUANTITIES}")
        g = tuple(float(x) for x in self.grid)
        object.__setattr__(self, "grid", g)
        if not g:
            raise ConfigError("sweep grid is empty")
        if not all(math.isfinite(x) for x in g):
            raise ConfigError("sweep grid has non-finite values")
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ConfigError("sweep grid must be strictly increasing")

    def coeffs(self) -> RodCoefficients:
        return RodCoefficients(BodyParams(self.alpha, self.mu))

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["grid"] = list(self.grid)
        return out

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "SweepSpec":
        return _build(cls, "sweep", data)

    def to_toml(self) -> str:
        return tomli_w.dumps({"sweep": self.to_dict()})

    @classmethod
    def from_toml(cls, text: str) -> "SweepSpec":
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from None
        return cls.from_dict(data.get("sweep", data))
