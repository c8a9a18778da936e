"""Parameter schema for two optically coupled optomechanical oscillators.

Every frequency and rate is measured in units of the left mechanical
frequency, so ``left.omega_m == 1.0`` and times are in units of its inverse.
The optical propagation delay between the cavities is fixed to zero.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, fields, replace
from typing import Any, Union

import numpy as np

from .errors import ConfigError

__all__ = [
    "ConfigError",
    "OscillatorParams",
    "Bidirectional",
    "Unidirectional",
    "Topology",
    "DriveParams",
    "BathParams",
    "NumericsParams",
    "SystemConfig",
    "Violation",
    "ValidationReport",
    "validate",
    "standard_config",
    "PRESETS",
    "apply_overrides",
    "with_topology",
    "kernel_params",
]


@dataclass(frozen=True)
class OscillatorParams:
    omega_m: float
    gamma: float
    kappa: float
    g: float
    # None tracks omega_m (drive detuned one mechanical frequency to the blue)
    delta0: float | None = None

    @property
    def detuning(self) -> float:
        return self.omega_m if self.delta0 is None else self.delta0


@dataclass(frozen=True)
class Bidirectional:
    lam: float
    kind: str = field(default="bidirectional", init=False)


@dataclass(frozen=True)
class Unidirectional:
    eta: float
    vacuum_topup: bool = False
    kind: str = field(default="unidirectional", init=False)


Topology = Union[Bidirectional, Unidirectional]


@dataclass(frozen=True)
class DriveParams:
    amplitude: float


@dataclass(frozen=True)
class BathParams:
    n_th: float = 0.0


@dataclass(frozen=True)
class NumericsParams:
    dt: float = 1e-3
    t_transient: float = 1000.0
    t_average: float = 2000.0
    phase_epsilon: float = 1e-6
    convergence_tol: float = 1e-6
    sample_stride: int = 100
    discord_mode: int = 2


@dataclass(frozen=True)
class SystemConfig:
    left: OscillatorParams
    right: OscillatorParams
    topology: Topology
    drive: DriveParams
    bath: BathParams = BathParams()
    numerics: NumericsParams = NumericsParams()

    @property
    def delta(self) -> float:
        """Mechanical frequency detuning, right minus left."""
        return self.right.omega_m - self.left.omega_m

    @property
    def is_unidirectional(self) -> bool:
        return isinstance(self.topology, Unidirectional)

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        topo = self.topology
        if isinstance(topo, Bidirectional):
            tdict = {"kind": "bidirectional", "lambda": topo.lam}
        else:
            tdict = {"kind": "unidirectional", "eta": topo.eta, "vacuum_topup": topo.vacuum_topup}
        return {
            "left": _plain(self.left),
            "right": _plain(self.right),
            "topology": tdict,
            "drive": _plain(self.drive),
            "bath": _plain(self.bath),
            "numerics": _plain(self.numerics),
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "SystemConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a mapping")
        try:
            tdoc = dict(doc["topology"])
            kind = tdoc.pop("kind")
            if kind == "bidirectional":
                topo: Topology = Bidirectional(lam=_num(tdoc.pop("lambda"), "topology.lambda"))
            elif kind == "unidirectional":
                topo = Unidirectional(
                    eta=_num(tdoc.pop("eta"), "topology.eta"),
                    vacuum_topup=bool(tdoc.pop("vacuum_topup", False)),
                )
            else:
                raise ConfigError(f"topology.kind must be 'bidirectional' or 'unidirectional', got {kind!r}")
            if tdoc:
                raise ConfigError(f"unknown topology keys: {sorted(tdoc)}")
            return cls(
                left=_build(OscillatorParams, doc["left"], "left"),
                right=_build(OscillatorParams, doc["right"], "right"),
                topology=topo,
                drive=_build(DriveParams, doc["drive"], "drive"),
                bath=_build(BathParams, doc.get("bath", {}), "bath"),
                numerics=_build(NumericsParams, doc.get("numerics", {}), "numerics"),
            )
        except KeyError as exc:
            raise ConfigError(f"missing config key: {exc.args[0]}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SystemConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(doc)


def _plain(obj) -> dict[str, Any]:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}


def _num(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path} must be a number, got {value!r}")
    return float(value)


def _build(cls, doc, path):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path} must be a mapping")
    known = {f.name: f for f in fields(cls) if f.init}
    unknown = set(doc) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in {path}: {sorted(unknown)}")
    kwargs = {}
    for name, value in doc.items():
        if value is None and name == "delta0":
            kwargs[name] = None
        elif name in ("sample_stride", "discord_mode"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{path}.{name} must be an integer")
            kwargs[name] = value
        else:
            kwargs[name] = _num(value, f"{path}.{name}")
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# -- validation --------------------------------------------------------
@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass
class ValidationReport:
    violations: list[Violation]
    derived: dict[str, float]

    @property
    def ok(self) -> bool:
        return not self.violations

    def messages(self) -> list[str]:
        return [v.message for v in self.violations]


def validate(config: SystemConfig) -> ValidationReport:
    """Check every invariant; failures are returned, never raised."""
    bad: list[Violation] = []

    def positive(path, value):
        if not (math.isfinite(value) and value > 0):
            name = path.rsplit(".", 1)[-1]
            bad.append(Violation(path, f"{name} must be > 0"))

    for side in ("left", "right"):
        osc = getattr(config, side)
        for name in ("omega_m", "gamma", "kappa"):
            positive(f"{side}.{name}", getattr(osc, name))
        # g = 0 is the decoupled optical/mechanical limit, kept legal
        if not (math.isfinite(osc.g) and osc.g >= 0):
            bad.append(Violation(f"{side}.g", "g must be >= 0"))
        if osc.delta0 is not None and not math.isfinite(osc.delta0):
            bad.append(Violation(f"{side}.delta0", "delta0 must be finite"))

    topo = config.topology
    if isinstance(topo, Bidirectional):
        if not (math.isfinite(topo.lam) and topo.lam >= 0):
            bad.append(Violation("topology.lambda", "lambda must be >= 0"))
    elif isinstance(topo, Unidirectional):
        if not (math.isfinite(topo.eta) and 0 < topo.eta <= 1):
            bad.append(Violation("topology.eta", "eta must lie in (0,1]"))
    else:
        bad.append(Violation("topology", "unknown topology"))

    if not (math.isfinite(config.drive.amplitude) and config.drive.amplitude >= 0):
        bad.append(Violation("drive.amplitude", "amplitude must be >= 0"))
    if not (math.isfinite(config.bath.n_th) and config.bath.n_th >= 0):
        bad.append(Violation("bath.n_th", "n_th must be >= 0"))

    num = config.numerics
    for name in ("dt", "t_average", "phase_epsilon", "convergence_tol"):
        positive(f"numerics.{name}", getattr(num, name))
    if not (math.isfinite(num.t_transient) and num.t_transient >= 0):
        bad.append(Violation("numerics.t_transient", "t_transient must be >= 0"))
    if num.sample_stride < 1:
        bad.append(Violation("numerics.sample_stride", "sample_stride must be >= 1"))
    if num.discord_mode not in (1, 2):
        bad.append(Violation("numerics.discord_mode", "discord_mode must be 1 or 2"))

    derived: dict[str, float] = {}
    delta = config.delta
    if not math.isfinite(delta):
        bad.append(Violation("right.omega_m", "detuning delta must be finite"))
    if not bad:
        derived["delta"] = delta
        if isinstance(topo, Bidirectional):
            derived["lambda_over_kappa"] = topo.lam / config.left.kappa
        else:
            derived["eta"] = topo.eta
    return ValidationReport(bad, derived)


# -- presets -----------------------------------------------------------
def _fig2(topology: Topology, n_th: float = 0.0) -> SystemConfig:
    kappa = 0.15
    return SystemConfig(
        left=OscillatorParams(omega_m=1.0, gamma=0.005, kappa=kappa, g=0.005),
        right=OscillatorParams(omega_m=1.005, gamma=0.005, kappa=kappa, g=0.005),
        topology=topology,
        drive=DriveParams(amplitude=52.0),
        bath=BathParams(n_th=n_th),
    )


PRESETS = {
    "fig2_bidirectional": lambda: _fig2(Bidirectional(lam=0.15 / 2)),
    "fig2_unidirectional": lambda: _fig2(Unidirectional(eta=1.0)),
    "fig5_thermal": lambda: _fig2(Bidirectional(lam=0.15 / 2), n_th=10.0),
}


def standard_config(preset: str) -> SystemConfig:
    """Return one of the named reference parameter sets."""
    try:
        return PRESETS[preset]()
    except KeyError:
        raise ConfigError(f"unknown preset {preset!r}; valid presets: {', '.join(PRESETS)}") from None


# -- overrides ---------------------------------------------------------
def apply_overrides(doc: dict[str, Any], overrides: dict[str, Any]) -> dict[str, Any]:
    """Set dotted-path keys (``bath.n_th``) in a config document copy."""
    out = json.loads(json.dumps(doc))
    for path, value in overrides.items():
        keys = path.split(".")
        node = out
        for key in keys[:-1]:
            if not isinstance(node.get(key), dict):
                raise ConfigError(f"override path {path!r} does not name a config field")
            node = node[key]
        if keys[-1] not in node and not (keys[-1] == "delta0" and node is not out):
            raise ConfigError(f"override path {path!r} does not name a config field")
        node[keys[-1]] = value
    return out


def with_topology(config: SystemConfig, **changes) -> SystemConfig:
    return replace(config, topology=replace(config.topology, **changes))


def kernel_params(config: SystemConfig) -> np.ndarray:
    """Pack a config into the flat vector the integration kernels expect."""
    left, right, topo = config.left, config.right, config.topology
    uni = isinstance(topo, Unidirectional)
    return np.array(
        [
            left.omega_m, right.omega_m,
            left.gamma, right.gamma,
            left.kappa, right.kappa,
            left.g, right.g,
            left.detuning, right.detuning,
            config.drive.amplitude,
            0.0 if uni else topo.lam,
            topo.eta if uni else 1.0,
            1.0 if uni else 0.0,
        ],
        dtype=np.float64,
    )
