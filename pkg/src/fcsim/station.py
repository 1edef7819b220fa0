"""Run a :class:`~fcsim.scenario.Scenario` through the station kernel."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _backend
from . import _layout as lay
from .analysis import SummaryReport, summarize
from .control import Controller, ControllerState
from .powertrain import (
    LAYOUT,
    Battery,
    ConstantPower,
    Plant,
    Resistive,
    assemble_derivatives,
    load_current,
    secondary_voltages,
)
from .scenario import Scenario
from .simcore import SimState, TimeSeries, run


@dataclass
class SimulationResult:
    scenario: Scenario
    series: TimeSeries
    final: SimState
    controller_state: ControllerState
    backend: str
    elapsed: float
    steps: int
    switches: int = 0
    cp_clamps: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def diverged(self) -> bool:
        return self.series.diverged

    def summary(self) -> SummaryReport:
        return summarize_scenario(self.series, self.scenario)


def summarize_scenario(series: TimeSeries, scenario: Scenario) -> SummaryReport:
    p = scenario.plant
    return summarize(series, scenario.f_fundamental, p.r_phase, p.filter.r_lf)


def kernel_params(scenario: Scenario) -> np.ndarray:
    p: Plant = scenario.plant
    c = scenario.controller
    P = np.zeros(lay.N_PARAMS)
    P[lay.P_VPK] = p.v_secondary_peak
    P[lay.P_OMEGA] = p.source.omega
    P[lay.P_PHI] = p.source.phase_offset
    P[lay.P_L] = p.l_phase
    P[lay.P_R] = p.r_phase
    P[lay.P_C1] = p.rectifier.c_dc_upper
    P[lay.P_C2] = p.rectifier.c_dc_lower
    P[lay.P_LF] = p.filter.l_f
    P[lay.P_RLF] = p.filter.r_lf
    P[lay.P_CF] = p.filter.c_f
    load = p.load
    if isinstance(load, Resistive):
        P[lay.P_LOAD_KIND] = lay.LOAD_RESISTIVE
        P[lay.P_LOAD_A] = load.r
    elif isinstance(load, ConstantPower):
        P[lay.P_LOAD_KIND] = lay.LOAD_CONSTANT_POWER
        P[lay.P_LOAD_A] = load.p
        P[lay.P_LOAD_B] = load.v_min
    elif isinstance(load, Battery):
        P[lay.P_LOAD_KIND] = lay.LOAD_BATTERY
        P[lay.P_LOAD_A] = load.capacity
        P[lay.P_LOAD_B] = load.v_ocv_min
        P[lay.P_LOAD_C] = load.v_ocv_max
        P[lay.P_LOAD_D] = load.r_internal
        P[lay.P_LOAD_E] = load.max_power
    else:
        raise TypeError(f"unsupported load {load!r}")
    P[lay.P_VREF] = c.v_ref
    P[lay.P_KPV] = c.kp_v
    P[lay.P_KIV] = c.ki_v
    P[lay.P_IMAX] = c.i_amp_max
    P[lay.P_BAND] = c.hysteresis_band
    P[lay.P_KBAL] = c.k_balance
    P[lay.P_FCAR] = c.f_carrier
    P[lay.P_KPI] = c.kp_i
    P[lay.P_ZBAND] = c.zero_current_band
    P[lay.P_DT] = scenario.solver.dt
    return P


def kernel_mode(scenario: Scenario) -> int:
    if scenario.model == "averaged":
        return lay.MODE_AVERAGED
    return lay.MODE_HYSTERESIS if scenario.controller.mode == "hysteresis" else lay.MODE_SPWM


def _series_from_records(rec: np.ndarray, sample_period: float, diverged: bool, message: str) -> TimeSeries:
    values = {name: rec[:, j].copy() for j, name in enumerate(lay.CHANNELS) if name != "t"}
    units = dict(zip(lay.CHANNELS[1:], lay.UNITS[1:]))
    return TimeSeries(rec[:, 0].copy(), values, units, sample_period, diverged, message)


def simulate(scenario: Scenario, backend: str = "auto") -> SimulationResult:
    """Run one scenario on the chosen kernel."""
    kernel = _backend.get(backend)
    name = _backend.DEFAULT if backend == "auto" else backend
    solver = scenario.solver
    x0 = scenario.plant.initial_state()
    ctrl0 = np.zeros(lay.N_CTRL)
    method = lay.METHOD_RK4 if solver.method == "rk4" else lay.METHOD_EULER
    t0 = time.perf_counter()
    rec, x, ctrl, info = kernel.run(
        kernel_params(scenario), x0, ctrl0, solver.n_steps,
        int(solver.record_decimation), method, kernel_mode(scenario),
    )
    elapsed = time.perf_counter() - t0
    steps = int(info[lay.INFO_STEPS])
    diverged = bool(info[lay.INFO_STATUS])
    message = ""
    if diverged:
        bad = int(info[lay.INFO_BAD_INDEX])
        message = (
            f"non-finite value in state index {bad} ({lay.STATE_NAMES[bad]}) "
            f"at t={(steps + 1) * solver.dt:.9g} s"
        )
    elif solver.actual_t_end != solver.t_end:
        message = f"t_end rounded down to {solver.actual_t_end:.9g} s"
    series = _series_from_records(rec, solver.sample_period, diverged, message)
    return SimulationResult(
        scenario=scenario,
        series=series,
        final=SimState(steps * solver.dt, x, LAYOUT),
        controller_state=ControllerState(
            float(ctrl[0]), tuple(bool(g) for g in ctrl[1:4]),
            scenario.plant.source.omega * steps * solver.dt + scenario.plant.source.phase_offset,
        ),
        backend=name,
        elapsed=elapsed,
        steps=steps,
        switches=int(info[lay.INFO_SWITCHES]),
        cp_clamps=int(info[lay.INFO_CP_CLAMPS]),
    )


def simulate_many(scenarios: Sequence[Scenario], workers: int = 0, backend: str = "auto") -> list:
    """Independent scenarios on worker threads; results keep input order."""
    if workers == 1 or len(scenarios) <= 1:
        return [simulate(s, backend) for s in scenarios]
    with ThreadPoolExecutor(max_workers=workers or None) as pool:
        return list(pool.map(lambda s: simulate(s, backend), scenarios))


def standard_probes(plant: Plant) -> dict:
    """Channel extractors matching the waveform CSV columns."""
    def v_src(k):
        return lambda s: float(secondary_voltages(plant, s.t)[k])

    def i_load(s):
        return load_current(plant.load, s.x[6], s.x[7])

    def p_src(s):
        return float(np.dot(secondary_voltages(plant, s.t), s.x[0:3]))

    return {
        "v_src_a": v_src(0), "v_src_b": v_src(1), "v_src_c": v_src(2),
        "i_ph_a": lambda s: float(s.x[0]),
        "i_ph_b": lambda s: float(s.x[1]),
        "i_ph_c": lambda s: float(s.x[2]),
        "v_c1": lambda s: float(s.x[3]),
        "v_c2": lambda s: float(s.x[4]),
        "v_out": lambda s: float(s.x[6]),
        "i_f": lambda s: float(s.x[5]),
        "i_load": i_load,
        "p_src": p_src,
        "p_out": lambda s: float(s.x[6]) * i_load(s),
    }


def simulate_reference(scenario: Scenario) -> SimulationResult:
    """Same run composed from the library pieces (simcore + powertrain + control).

    Orders of magnitude slower than the kernels; used to cross-check them.
    """
    plant = scenario.plant
    solver = scenario.solver
    ctl = Controller(scenario.controller, plant, solver.dt, averaged=scenario.model == "averaged")

    def f(t, x):
        return assemble_derivatives(plant, x, ctl.attach, t)

    init = SimState(0.0, plant.initial_state(), LAYOUT)
    last = [init]
    t0 = time.perf_counter()
    series = run(f, init, solver, standard_probes(plant),
                 dict(zip(lay.CHANNELS[1:], lay.UNITS[1:])), on_step=ctl.update,
                 on_finish=last.append)
    elapsed = time.perf_counter() - t0
    final = last[-1]
    return SimulationResult(
        scenario=scenario,
        series=series,
        final=final,
        controller_state=ctl.state,
        backend="reference",
        elapsed=elapsed,
        steps=int(round(final.t / solver.dt)),
        switches=ctl.switches,
    )
