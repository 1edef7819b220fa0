"""Declarative scenario description and its JSON config schema.

A config is one JSON object with one sub-object per section (``source``,
``transformer``, ``rectifier``, ``filter``, ``load``, ``controller``,
``solver``) plus ``name`` and ``model``. Unknown keys are rejected; missing
keys take the baseline defaults.
"""

from __future__ import annotations

import copy
import json
import math
import numbers
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Mapping

from .control import ControllerConfig
from .powertrain import (
    Battery,
    ConstantPower,
    LCFilter,
    Plant,
    Resistive,
    ThreePhaseSource,
    Transformer,
    ViennaRectifier,
)
from .simcore import SolverConfig

MODELS = ("switched", "averaged")
LOAD_KINDS = {"resistive": Resistive, "constant_power": ConstantPower, "battery": Battery}
_LOAD_NAMES = {cls: name for name, cls in LOAD_KINDS.items()}

_SECTIONS = {
    "source": ThreePhaseSource,
    "transformer": Transformer,
    "rectifier": ViennaRectifier,
    "filter": LCFilter,
    "controller": ControllerConfig,
    "solver": SolverConfig,
}


class ConfigError(ValueError):
    """Invalid scenario config; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Scenario:
    name: str = "baseline"
    model: str = "switched"
    plant: Plant = Plant()
    controller: ControllerConfig = ControllerConfig()
    solver: SolverConfig = SolverConfig()

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError("model", f"must be one of {MODELS}, got {self.model!r}")

    @property
    def f_fundamental(self) -> float:
        return self.plant.source.freq

    def to_dict(self) -> dict:
        p = self.plant
        load = asdict(p.load)
        load = {"kind": _LOAD_NAMES[type(p.load)], **load}
        return {
            "name": self.name,
            "model": self.model,
            "source": asdict(p.source),
            "transformer": asdict(p.transformer),
            "rectifier": asdict(p.rectifier),
            "filter": asdict(p.filter),
            "load": load,
            "controller": asdict(self.controller),
            "solver": asdict(self.solver),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _check_value(path: str, value: Any, default: Any) -> Any:
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, bool) or not isinstance(value, numbers.Real) or int(value) != value:
            raise ConfigError(path, f"expected an integer, got {value!r}")
        return int(value)
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, numbers.Real):
            raise ConfigError(path, f"expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(path, f"expected a finite number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(path, f"expected a string, got {value!r}")
        return value
    return value


def _build(path: str, cls, data: Any):
    if not isinstance(data, Mapping):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")
    defaults = cls()
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", "unknown key")
    kwargs = {k: _check_value(f"{path}.{k}", v, getattr(defaults, k)) for k, v in data.items()}
    try:
        return cls(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(path, str(exc)) from None


def _build_load(data: Any):
    if not isinstance(data, Mapping):
        raise ConfigError("load", "expected an object")
    data = dict(data)
    kind = data.pop("kind", "resistive")
    if kind not in LOAD_KINDS:
        raise ConfigError("load.kind", f"must be one of {sorted(LOAD_KINDS)}, got {kind!r}")
    return _build("load", LOAD_KINDS[kind], data)


def scenario_from_dict(doc: Any) -> Scenario:
    if not isinstance(doc, Mapping):
        raise ConfigError("", "config must be a JSON object")
    allowed = set(_SECTIONS) | {"name", "model", "load"}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise ConfigError(unknown[0], "unknown key")
    name = _check_value("name", doc.get("name", "baseline"), "")
    model = _check_value("model", doc.get("model", "switched"), "")
    built = {s: _build(s, cls, doc.get(s, {})) for s, cls in _SECTIONS.items()}
    load = _build_load(doc.get("load", {"kind": "resistive"}))
    plant = Plant(built["source"], built["transformer"], built["rectifier"], built["filter"], load)
    return Scenario(name, model, plant, built["controller"], built["solver"])


def apply_overrides(doc: Mapping, overrides: Mapping[str, Any]) -> dict:
    """Set ``section.key`` (or top-level ``key``) values on a config document."""
    out = copy.deepcopy(dict(doc))
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = out
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(dotted, "cannot override inside a non-object")
        node[parts[-1]] = value
    return out


def load_scenario(path: str | Path, overrides: Mapping[str, Any] | None = None) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("", f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("", f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if overrides:
        doc = apply_overrides(doc, overrides)
    return scenario_from_dict(doc)


def baseline() -> Scenario:
    """11 kV grid, 315 V peak line-to-line secondary, 400 V / 1.3337 ohm load."""
    return Scenario()


def constant_power() -> Scenario:
    """120 kW constant-power load.

    A constant-power load is a negative incremental resistance; the output
    filter here is re-sized (small L_f, large C_f) so that its series
    resistance satisfies the stability bound r_lf > L_f / (R_neg * C_f).
    """
    return Scenario(
        name="constant_power",
        plant=Plant(load=ConstantPower(120e3, 200.0), filter=LCFilter(25e-6, 0.005, 4700e-6)),
    )


def lossless() -> Scenario:
    """Baseline with every series resistance set to zero."""
    return Scenario(
        name="lossless",
        plant=Plant(
            transformer=Transformer(series_resistance=0.0),
            rectifier=ViennaRectifier(r_boost=0.0),
            filter=LCFilter(r_lf=0.0),
        ),
    )


BUILTIN = {"baseline": baseline, "constant_power": constant_power, "lossless": lossless}
