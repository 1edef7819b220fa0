"""Closed-loop control of the Vienna rectifier.

Outer PI loop on the DC-link voltage sets the amplitude of three
unity-power-factor current references; an inner loop (hysteresis or
sine-triangle PWM) turns the reference error into gate states. A
zero-sequence reference offset keeps the split DC link balanced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .powertrain import PHASE_SHIFTS, Node, Plant, secondary_voltages, vienna_node_attachment

MODES = ("hysteresis", "spwm")


@dataclass(frozen=True)
class ControllerConfig:
    v_ref: float = 400.0
    kp_v: float = 2.0
    ki_v: float = 400.0
    i_amp_max: float = 600.0
    hysteresis_band: float = 5.0
    k_balance: float = 2.0
    mode: str = "hysteresis"
    f_carrier: float = 10e3
    kp_i: float = 5.0
    zero_current_band: float = 0.5

    def __post_init__(self):
        if not self.v_ref > 0:
            raise ValueError("v_ref must be > 0")
        if not self.i_amp_max > 0:
            raise ValueError("i_amp_max must be > 0")
        if not self.hysteresis_band > 0:
            raise ValueError("hysteresis_band must be > 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "spwm" and not self.f_carrier > 0:
            raise ValueError("f_carrier must be > 0 in spwm mode")
        if self.zero_current_band < 0:
            raise ValueError("zero_current_band must be >= 0")


@dataclass(frozen=True)
class ControllerState:
    integrator: float = 0.0
    gates: tuple = (False, False, False)
    theta: float = 0.0


def grid_angle(src, t: float) -> float:
    """Ideal synchronisation: the exact source angle."""
    return src.omega * t + src.phase_offset


def outer_voltage_loop(
    cfg: ControllerConfig, state: ControllerState, v_dc_measured: float, dt: float
) -> tuple:
    """PI with conditional-integration anti-windup.

    Returns ``(i_amp, new_state)``. The output is computed from the
    integrator value on entry; integration halts while the output is held
    at a limit and the error pushes further into it.
    """
    if not dt > 0:
        raise ValueError("dt must be > 0")
    e = cfg.v_ref - v_dc_measured
    u = cfg.kp_v * e + cfg.ki_v * state.integrator
    i_amp = min(max(u, 0.0), cfg.i_amp_max)
    integ = state.integrator
    if not ((u > cfg.i_amp_max and e > 0.0) or (u < 0.0 and e < 0.0)):
        integ = integ + e * dt
    return i_amp, replace(state, integrator=integ)


def current_references(i_amp: float, theta: float) -> np.ndarray:
    if i_amp < 0:
        raise ValueError("i_amp must be >= 0")
    return i_amp * np.sin(theta - PHASE_SHIFTS)


def midpoint_balance(v_c1: float, v_c2: float, k_balance: float, i_amp: float) -> float:
    """Zero-sequence offset added to all three current references.

    A positive offset pushes positive-current legs toward the midpoint and
    negative-current legs toward the negative bus, which charges the lower
    capacitor. The offset is therefore proportional to ``v_c1 - v_c2``,
    normalised by the link voltage and scaled by the reference amplitude;
    clamped to 10 % of ``i_amp``.
    """
    v_sum = v_c1 + v_c2
    if v_sum <= 0.0:
        return 0.0
    off = k_balance * (v_c1 - v_c2) / v_sum * i_amp
    lim = 0.1 * i_amp
    return min(max(off, -lim), lim)


def hysteresis_gates(
    band: float,
    i_ref: Sequence[float],
    i_meas: Sequence[float],
    offset: float,
    v_src: Sequence[float],
    previous: Sequence[bool],
) -> tuple:
    """Bang-bang gate decision per phase.

    Turning a gate on clamps its leg to the midpoint, letting the full source
    voltage drive ``|i|`` up; turning it off hands the current to a diode
    and the opposing bus drives it back down.
    """
    gates = []
    for k in range(3):
        err = (i_ref[k] + offset) - i_meas[k]
        q = err * float(np.sign(v_src[k]))
        if q > band:
            gates.append(True)
        elif q < -band:
            gates.append(False)
        else:
            gates.append(bool(previous[k]))
    return tuple(gates)


def carrier(t: float, f_carrier: float) -> float:
    """Unit triangular carrier, 0 at the start of each period, 1 at mid-period."""
    ph = f_carrier * t
    ph = ph - math.floor(ph)
    return 1.0 - abs(2.0 * ph - 1.0)


def sign_reference(i: float, i_ref: float, v: float, zero_band: float) -> float:
    """Current direction used for diode selection.

    Inside the zero-current band the reference sign stands in for the
    measured one, falling back to the source voltage sign when both vanish.
    """
    s = i if abs(i) >= zero_band else i_ref
    if s == 0.0:
        s = v
    return 1.0 if s >= 0.0 else -1.0


def outer_bus_fractions(
    cfg: ControllerConfig,
    i_ref: np.ndarray,
    i_meas: np.ndarray,
    offset: float,
    v_src: np.ndarray,
    signs: np.ndarray,
    theta: float,
    omega_l_iamp: float,
    v_c1: float,
    v_c2: float,
) -> np.ndarray:
    """Fraction of each period a leg should spend on its outer bus.

    Proportional current control with inductive feed-forward gives the
    wanted leg voltage; a common zero-sequence shift (min-max injection plus
    the balance term) is then pulled into the range every leg can realise
    given its current direction.
    """
    c = (
        v_src
        - omega_l_iamp * np.cos(theta - PHASE_SHIFTS)
        - cfg.kp_i * (i_ref - i_meas)
    )
    z = -0.5 * (c.max() + c.min()) - cfg.kp_i * offset
    lo = np.where(signs > 0, -c, -v_c2 - c).max()
    hi = np.where(signs > 0, v_c1 - c, -c).min()
    if lo <= hi:
        z = min(max(z, lo), hi)
    u = c + z
    with np.errstate(divide="ignore", invalid="ignore"):
        f = np.where(
            signs > 0,
            u / v_c1 if v_c1 > 0 else 1.0,
            -u / v_c2 if v_c2 > 0 else 1.0,
        )
    return np.clip(f, 0.0, 1.0)


def inner_current_control(
    cfg: ControllerConfig,
    i_ref: np.ndarray,
    i_meas: np.ndarray,
    balance_offset: float,
    v_src: np.ndarray,
    previous: Sequence[bool],
    fractions: Optional[np.ndarray] = None,
    t: float = 0.0,
) -> tuple:
    """Gate states for this step.

    Hysteresis mode needs only the error; spwm mode compares the outer-bus
    ``fractions`` against the carrier at ``t``: a gate is on while the
    carrier exceeds its fraction.
    """
    if cfg.mode == "hysteresis":
        return hysteresis_gates(cfg.hysteresis_band, i_ref, i_meas, balance_offset, v_src, previous)
    if fractions is None:
        raise ValueError("spwm mode needs outer-bus fractions")
    car = carrier(t, cfg.f_carrier)
    return tuple(bool(car > f) for f in fractions)


class Controller:
    """Per-step controller for the reference (non-kernel) simulation path.

    ``update`` is meant as the ``on_step`` hook of :func:`fcsim.simcore.run`;
    it refreshes :attr:`attach`, which the plant derivative reads.
    ``averaged`` selects duty-averaged leg attachments instead of gates.
    """

    def __init__(self, cfg: ControllerConfig, plant: Plant, dt: float, averaged: bool = False):
        self.cfg = cfg
        self.plant = plant
        self.dt = dt
        self.averaged = averaged
        self.state = ControllerState()
        self.attach = np.zeros(3)
        self.switches = 0

    def update(self, sim_state) -> None:
        cfg = self.cfg
        t = sim_state.t
        x = sim_state.x
        theta = grid_angle(self.plant.source, t)
        v_src = secondary_voltages(self.plant, t)
        v_c1, v_c2 = float(x[3]), float(x[4])
        i_amp, st = outer_voltage_loop(cfg, self.state, v_c1 + v_c2, self.dt)
        offset = midpoint_balance(v_c1, v_c2, cfg.k_balance, i_amp)
        i_ref = current_references(i_amp, theta)
        i_meas = x[0:3]
        signs = np.array([
            sign_reference(float(i_meas[k]), float(i_ref[k]), float(v_src[k]), cfg.zero_current_band)
            for k in range(3)
        ])
        if cfg.mode == "hysteresis" and not self.averaged:
            gates = hysteresis_gates(
                cfg.hysteresis_band, i_ref, i_meas, offset, v_src, st.gates
            )
        else:
            frac = outer_bus_fractions(
                cfg, i_ref, i_meas, offset, v_src, signs, theta,
                self.plant.source.omega * self.plant.l_phase * i_amp, v_c1, v_c2,
            )
            if self.averaged:
                self.attach = signs * frac
                self.state = replace(st, theta=theta)
                return
            gates = inner_current_control(cfg, i_ref, i_meas, offset, v_src, st.gates, frac, t)
        self.switches += sum(a != b for a, b in zip(gates, st.gates))
        self.state = replace(st, gates=gates, theta=theta)
        self.attach = np.array([
            float(vienna_node_attachment(g, s)) for g, s in zip(gates, signs)
        ])

    def nodes(self) -> tuple:
        return tuple(Node(int(a)) for a in self.attach)
