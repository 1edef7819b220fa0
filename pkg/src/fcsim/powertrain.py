"""Electrical model of the station: grid, transformer, Vienna rectifier,
LC output filter and DC load.

State layout (see ``STATE_NAMES``): three boost-inductor phase currents,
upper and lower DC-link capacitor voltages, filter inductor current,
output capacitor voltage and battery state of charge. The transformer's
secondary-referred series impedance is merged into the boost branch, so
one R-L pair per phase carries both.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from ._layout import STATE_NAMES, STATE_UNITS

LAYOUT = {name: i for i, name in enumerate(STATE_NAMES)}
PHASE_SHIFTS = np.array([0.0, 2.0 * math.pi / 3.0, 4.0 * math.pi / 3.0])


class Node(enum.IntEnum):
    """DC-link node a phase leg is attached to; the value is its bus sign."""

    N = -1
    M = 0
    P = 1


@dataclass(frozen=True)
class ThreePhaseSource:
    v_ll_rms: float = 11_000.0
    freq: float = 50.0
    phase_offset: float = 0.0

    def __post_init__(self):
        if self.v_ll_rms < 0:
            raise ValueError("v_ll_rms must be >= 0")
        if not self.freq > 0:
            raise ValueError("freq must be > 0")

    @property
    def v_phase_peak(self) -> float:
        return math.sqrt(2.0) * self.v_ll_rms / math.sqrt(3.0)

    @property
    def omega(self) -> float:
        return 2.0 * math.pi * self.freq


@dataclass(frozen=True)
class Transformer:
    """Ideal ratio plus a secondary-referred series R-L."""

    ratio: float = 315.0 / (math.sqrt(2.0) * 11_000.0)
    series_resistance: float = 0.01
    leakage_inductance: float = 0.0

    def __post_init__(self):
        if not self.ratio > 0:
            raise ValueError("ratio must be > 0")
        if self.series_resistance < 0 or self.leakage_inductance < 0:
            raise ValueError("series impedance must be >= 0")

    @property
    def step_down(self) -> bool:
        return self.ratio < 1.0


@dataclass(frozen=True)
class ViennaRectifier:
    l_boost: float = 250e-6
    r_boost: float = 0.0
    c_dc_upper: float = 4700e-6
    c_dc_lower: float = 4700e-6

    def __post_init__(self):
        if not self.l_boost > 0:
            raise ValueError("l_boost must be > 0")
        if self.r_boost < 0:
            raise ValueError("r_boost must be >= 0")
        if not (self.c_dc_upper > 0 and self.c_dc_lower > 0):
            raise ValueError("DC-link capacitances must be > 0")


@dataclass(frozen=True)
class LCFilter:
    l_f: float = 250e-6
    r_lf: float = 0.005
    c_f: float = 1000e-6

    def __post_init__(self):
        if not (self.l_f > 0 and self.c_f > 0):
            raise ValueError("l_f and c_f must be > 0")
        if self.r_lf < 0:
            raise ValueError("r_lf must be >= 0")


@dataclass(frozen=True)
class Resistive:
    r: float = 1.3337

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("r must be > 0")


@dataclass(frozen=True)
class ConstantPower:
    p: float = 120e3
    v_min: float = 200.0

    def __post_init__(self):
        if self.p < 0:
            raise ValueError("p must be >= 0")
        if not self.v_min > 0:
            raise ValueError("v_min must be > 0")


@dataclass(frozen=True)
class Battery:
    """Linear-OCV battery behind an internal resistance.

    ``capacity`` is in kWh, ``max_power`` in W (the vehicle acceptance rate).
    """

    capacity: float = 74.0
    v_ocv_min: float = 330.0
    v_ocv_max: float = 400.0
    r_internal: float = 0.05
    soc: float = 0.2
    max_power: float = 155e3

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError("capacity must be > 0")
        if not 0.0 <= self.soc <= 1.0:
            raise ValueError("soc must lie in [0, 1]")
        if not self.r_internal > 0:
            raise ValueError("r_internal must be > 0")
        if not 0 < self.v_ocv_min <= self.v_ocv_max:
            raise ValueError("need 0 < v_ocv_min <= v_ocv_max")
        if not self.max_power > 0:
            raise ValueError("max_power must be > 0")

    def v_ocv(self, soc: float) -> float:
        return self.v_ocv_min + soc * (self.v_ocv_max - self.v_ocv_min)


Load = Union[Resistive, ConstantPower, Battery]


@dataclass(frozen=True)
class Plant:
    """The full power chain of one scenario."""

    source: ThreePhaseSource = ThreePhaseSource()
    transformer: Transformer = Transformer()
    rectifier: ViennaRectifier = ViennaRectifier()
    filter: LCFilter = LCFilter()
    load: Load = Resistive()

    @property
    def l_phase(self) -> float:
        return self.rectifier.l_boost + self.transformer.leakage_inductance

    @property
    def r_phase(self) -> float:
        return self.rectifier.r_boost + self.transformer.series_resistance

    @property
    def v_secondary_peak(self) -> float:
        return self.source.v_phase_peak * self.transformer.ratio

    def initial_state(self) -> np.ndarray:
        """Link pre-charged to the secondary phase peak on each half, inductors empty."""
        v0 = self.v_secondary_peak
        soc = self.load.soc if isinstance(self.load, Battery) else 0.0
        return np.array([0.0, 0.0, 0.0, v0, v0, 0.0, 2.0 * v0, soc])


def source_voltages(src: ThreePhaseSource, t: float) -> np.ndarray:
    """Phase-to-neutral grid voltages at time ``t``."""
    return src.v_phase_peak * np.sin(src.omega * t + src.phase_offset - PHASE_SHIFTS)


def transform(tr: Transformer, primary: Sequence[float]) -> np.ndarray:
    return tr.ratio * np.asarray(primary, dtype=float)


def secondary_voltages(plant: Plant, t: float) -> np.ndarray:
    return transform(plant.transformer, source_voltages(plant.source, t))


def vienna_node_attachment(gate_on: bool, current_sign_ref: float) -> Node:
    """Node a phase leg connects to.

    A conducting switch clamps the leg to the midpoint; otherwise the
    freewheeling diode follows the current direction. A zero reference
    counts as positive.
    """
    if gate_on:
        return Node.M
    return Node.P if current_sign_ref >= 0 else Node.N


def load_current(load: Load, v_out: float, soc: float | None = None) -> float:
    if isinstance(load, Resistive):
        return v_out / load.r
    if isinstance(load, ConstantPower):
        return load.p / max(v_out, load.v_min)
    if isinstance(load, Battery):
        soc = load.soc if soc is None else soc
        i = (v_out - load.v_ocv(soc)) / load.r_internal
        if i < 0.0:
            return 0.0
        if v_out > 0.0:
            i = min(i, load.max_power / v_out)
        return i
    raise TypeError(f"unsupported load {load!r}")


def node_voltages(attach: np.ndarray, v_c1: float, v_c2: float) -> np.ndarray:
    """Leg voltages relative to the midpoint.

    ``attach`` holds a value in [-1, 1] per phase: +1/0/-1 for P/M/N, or a
    duty-averaged fraction of time spent on the outer bus.
    """
    attach = np.asarray(attach, dtype=float)
    return np.where(attach > 0.0, attach * v_c1, attach * v_c2)


def assemble_derivatives(plant: Plant, x: np.ndarray, attach: Sequence[float], t: float) -> np.ndarray:
    """State rates for the whole chain with leg attachments held fixed."""
    attach = np.asarray(attach, dtype=float)
    i_ph = x[0:3]
    v_c1, v_c2, i_f, v_out, soc = x[3], x[4], x[5], x[6], x[7]
    v_src = secondary_voltages(plant, t)
    u = node_voltages(attach, v_c1, v_c2)
    v_cm = u.sum() / 3.0
    di = (v_src - (u - v_cm) - plant.r_phase * i_ph) / plant.l_phase
    i_pos = float(np.sum(np.where(attach > 0.0, i_ph * attach, 0.0)))
    i_neg = float(np.sum(np.where(attach > 0.0, 0.0, -i_ph * attach)))
    i_load = load_current(plant.load, v_out, soc)
    rect, filt = plant.rectifier, plant.filter
    if isinstance(plant.load, Battery):
        dsoc = i_load * plant.load.v_ocv(soc) / (plant.load.capacity * 3.6e6)
    else:
        dsoc = 0.0
    return np.array([
        di[0], di[1], di[2],
        (i_pos - i_f) / rect.c_dc_upper,
        (-i_neg - i_f) / rect.c_dc_lower,
        ((v_c1 + v_c2) - v_out - filt.r_lf * i_f) / filt.l_f,
        (i_f - i_load) / filt.c_f,
        dsoc,
    ])


def stored_energy(plant: Plant, x: np.ndarray) -> float:
    """Energy held in all inductors and capacitors [J]."""
    L = plant.l_phase
    rect, filt = plant.rectifier, plant.filter
    return 0.5 * (
        L * float(np.sum(x[0:3] ** 2))
        + rect.c_dc_upper * x[3] ** 2
        + rect.c_dc_lower * x[4] ** 2
        + filt.l_f * x[5] ** 2
        + filt.c_f * x[6] ** 2
    )


__all__ = [
    "Battery", "ConstantPower", "LCFilter", "LAYOUT", "Load", "Node", "Plant",
    "Resistive", "STATE_NAMES", "STATE_UNITS", "ThreePhaseSource", "Transformer",
    "ViennaRectifier", "assemble_derivatives", "load_current", "node_voltages",
    "secondary_voltages", "source_voltages", "stored_energy", "transform",
    "vienna_node_attachment",
]
