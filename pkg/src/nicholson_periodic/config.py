"""YAML system configuration: coefficients, named scalars and simulation settings.

Coefficients are ``{offset, harmonics: [{amp, k, phase, waveform}]}`` or a
bare number.  Any coefficient may carry ``scale: <name>`` to be multiplied by
the named scalar declared under ``scalars``.
"""

from __future__ import annotations

import copy
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable

import yaml

from .coeffs import PeriodicCoefficient, coefficient_from_dict
from .dde import HistorySegment
from .model import BirthTerm, MortalityTerm, NicholsonSystem

MORTALITY_KEYS = ("m11", "m12", "m21", "m22")


class ConfigError(ValueError):
    pass


@dataclass
class SimulationSettings:
    history: tuple[float, float] = (1.0, 1.0)
    step: float | None = None
    t_final: float | None = None
    tol: float = 1e-4
    defect_tol: float = 1e-2
    max_periods: int = 200

    def history_segment(self, sys: NicholsonSystem, t0: float = 0.0) -> HistorySegment:
        return HistorySegment.constant(self.history, t0, sys.max_delay)


@dataclass
class SystemConfig:
    omega: float
    mortality: dict[str, dict[str, Any]]
    births: dict[str, list[dict[str, Any]]]
    scalars: dict[str, float] = field(default_factory=dict)
    simulation: SimulationSettings = field(default_factory=SimulationSettings)

    @classmethod
    def from_dict(cls, d: dict) -> SystemConfig:
        if not isinstance(d, dict):
            raise ConfigError("config must be a mapping")
        try:
            omega = _number(d["omega"])
            mortality = {k: dict(d["mortality"][k]) for k in MORTALITY_KEYS}
            births = {p: [dict(bt) for bt in d["births"][p]] for p in ("patch1", "patch2")}
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"missing or malformed config entry: {exc}") from exc
        scalars = {str(k): float(v) for k, v in (d.get("scalars") or {}).items()}
        sim = d.get("simulation") or {}
        try:
            simulation = SimulationSettings(
                history=tuple(float(v) for v in sim.get("history", (1.0, 1.0))),
                step=None if sim.get("step") is None else float(sim["step"]),
                t_final=None if sim.get("t_final") is None else _number(sim["t_final"]),
                tol=float(sim.get("tol", 1e-4)),
                defect_tol=float(sim.get("defect_tol", 1e-2)),
                max_periods=int(sim.get("max_periods", 200)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad simulation block: {exc}") from exc
        if len(simulation.history) != 2:
            raise ConfigError("simulation.history needs two values")
        cfg = cls(omega, mortality, births, scalars, simulation)
        cfg.build()  # validates coefficients, positivity and scalar names
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> SystemConfig:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        sim = asdict(self.simulation)
        sim["history"] = list(sim["history"])
        return {
            "omega": self.omega,
            "scalars": dict(self.scalars),
            "mortality": copy.deepcopy(self.mortality),
            "births": copy.deepcopy(self.births),
            "simulation": sim,
        }

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))

    def with_scalars(self, **values: float) -> SystemConfig:
        unknown = set(values) - set(self.scalars)
        if unknown:
            raise ConfigError(f"unknown scalar(s): {', '.join(sorted(unknown))}")
        new = copy.deepcopy(self)
        new.scalars.update({k: float(v) for k, v in values.items()})
        return new

    def _coef(self, desc, scalars: dict[str, float]) -> PeriodicCoefficient:
        try:
            coef = coefficient_from_dict(desc, self.omega)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad coefficient {desc!r}: {exc}") from exc
        if isinstance(desc, dict) and desc.get("scale") is not None:
            name = desc["scale"]
            if name not in scalars:
                raise ConfigError(f"coefficient refers to undeclared scalar {name!r}")
            coef = coef.scaled(scalars[name])
        return coef

    def build(self, overrides: dict[str, float] | None = None) -> NicholsonSystem:
        scalars = dict(self.scalars)
        if overrides:
            unknown = set(overrides) - set(scalars)
            if unknown:
                raise ConfigError(f"unknown scalar(s): {', '.join(sorted(unknown))}")
            scalars.update(overrides)
        try:
            m = {
                k: MortalityTerm(self._coef(v["delta"], scalars), self._coef(v["c"], scalars))
                for k, v in self.mortality.items()
            }
            births = [
                tuple(
                    BirthTerm(self._coef(bt["b"], scalars), self._coef(bt["tau"], scalars))
                    for bt in self.births[p]
                )
                for p in ("patch1", "patch2")
            ]
            return NicholsonSystem(
                m["m11"], m["m12"], m["m21"], m["m22"], births[0], births[1], self.omega
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"invalid system: {exc}") from exc

    def template(self, name: str) -> Callable[[float], NicholsonSystem]:
        if name not in self.scalars:
            raise ConfigError(f"unknown scalar {name!r}")
        return lambda s: self.build({name: s})


def _number(v) -> float:
    """Numbers, or strings like ``2*pi`` / ``40*pi``."""
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        s = v.replace(" ", "")
        if s == "pi":
            return math.pi
        if s.endswith("*pi"):
            return float(s[:-3]) * math.pi
        return float(s)
    raise ConfigError(f"not a number: {v!r}")
