"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary section at
the end lists every criterion's outcome.
"""

import json
import math
import time
from importlib import resources

import numpy as np
import pytest

from _registry import record
from fcsim.analysis import avg_power, rms, thd
from fcsim.cli import main
from fcsim.planner import (
    DEFAULT_MINUTES,
    DEFAULT_ROUTE_KM,
    DEFAULT_FLEET,
    StationSpec,
    corridor_table,
)
from fcsim.powertrain import Resistive
from fcsim.scenario import baseline, lossless, load_scenario
from fcsim.simcore import SimState, SolverConfig, convergence_ratio, run
from fcsim.station import simulate


@pytest.fixture(scope="module")
def base_run():
    sc = baseline()
    t0 = time.perf_counter()
    res = simulate(sc)
    wall = time.perf_counter() - t0
    return sc, res, res.summary(), wall


def test_1_baseline_operating_point(base_run):
    sc, res, rep, wall = base_run
    assert sc.model == "switched" and sc.solver.dt == 1e-6 and sc.solver.t_end == 0.5
    assert sc.plant.load == Resistive(1.3337)
    checks = {
        "v": 392.0 <= rep.v_dc_steady_mean <= 408.0,
        "i": 294.0 <= rep.i_dc_steady_mean <= 306.0,
        "p": 114e3 <= rep.p_dc_steady_mean <= 126e3,
        "overshoot": rep.v_dc_peak <= 1.05 * 400.0,
        "runtime": wall <= 60.0,
        "finite": not res.diverged,
    }
    detail = (f"v={rep.v_dc_steady_mean:.2f} V, i={rep.i_dc_steady_mean:.2f} A, "
              f"p={rep.p_dc_steady_mean / 1e3:.2f} kW, peak={rep.v_dc_peak:.2f} V, "
              f"runtime={wall:.2f} s ({res.backend})")
    assert record(1, "baseline operating point", all(checks.values()), detail), checks


def test_2_power_quality(base_run):
    _, _, rep, _ = base_run
    ok = rep.phase_current_thd < 5.0 and rep.displacement_power_factor > 0.99
    detail = f"THD={rep.phase_current_thd:.2f} %, DPF={rep.displacement_power_factor:.5f}"
    assert record(2, "power quality", ok, detail)


def test_3_midpoint_balance(base_run):
    _, res, rep, _ = base_run
    n = int(round(rep.window_duration / res.series.sample_period))
    v1 = res.series["v_c1"][-n:]
    v2 = res.series["v_c2"][-n:]
    worst = float(np.max(np.abs(v1 - v2) / (v1 + v2))) * 100.0
    ok = worst < 2.0 and rep.midpoint_imbalance < 2.0
    detail = f"max |vC1-vC2| = {worst:.3f} % of link, mean {rep.midpoint_imbalance:.4f} %"
    assert record(3, "midpoint balance", ok, detail)


def test_4_energy_conservation(base_run):
    _, _, rep, _ = base_run
    rep_ll = simulate(lossless()).summary()
    ok = rep_ll.power_balance_residual < 1.0 and rep.power_balance_residual < 2.0
    detail = (f"lossless residual {rep_ll.power_balance_residual:.4f} %, "
              f"baseline residual {rep.power_balance_residual:.4f} %")
    assert record(4, "energy conservation", ok, detail)


def test_5_planner_ground_truth():
    t0 = time.perf_counter()
    plans = corridor_table(StationSpec(), DEFAULT_FLEET, DEFAULT_MINUTES, DEFAULT_ROUTE_KM)
    elapsed = time.perf_counter() - t0
    ix3 = {r.charge_minutes: r for r in next(p for p in plans if p.vehicle == "BMW iX3").rows}
    ok = (ix3[5].stations == 7 and ix3[10].stations == 4
          and 39.0 <= ix3[5].distance_km <= 42.0 and elapsed < 1.0)
    detail = (f"iX3 5 min -> {ix3[5].stations} stations ({ix3[5].distance_km:.2f} km), "
              f"10 min -> {ix3[10].stations} stations, {elapsed * 1e3:.2f} ms")
    assert record(5, "planner ground truth", ok, detail)


def test_6_solver_oracle():
    R, L, C = 1.0, 1e-3, 1e-3

    def f(t, x):
        return np.array([(1.0 - R * x[0] - x[1]) / L, x[0] / C])

    series = run(f, SimState(0.0, np.zeros(2)), SolverConfig(1e-6, 0.02, 10), {"vc": lambda s: s.x[1]})
    a = R / (2 * L)
    wd = math.sqrt(1 / (L * C) - a * a)
    t = series.t
    exact = 1 - np.exp(-a * t) * (np.cos(wd * t) + a / wd * np.sin(wd * t))
    err = float(np.max(np.abs(series["vc"] - exact)) / np.max(np.abs(exact)))
    ratio = convergence_ratio(lambda t, x: -x, [1.0], 1.0, 0.1, np.array([math.exp(-1.0)]))
    ok = err < 1e-3 and 14.0 <= ratio <= 18.0
    assert record(6, "solver oracle", ok, f"RLC max rel error {err:.2e}, RK4 ratio {ratio:.3f}")


def test_7_analysis_oracles():
    f = 50.0
    dt = 1e-6
    t = (np.arange(int(round(2 / (f * dt)))) + 0.5) * dt
    r = rms(np.sin(2 * np.pi * f * t))
    sq = thd(np.sign(np.sin(2 * np.pi * f * t)), dt, f, 40)
    p = avg_power(np.full(1000, 400.0), np.full(1000, 300.0))
    checks = {
        "rms": abs(r - 0.70711) <= 1e-5,
        "thd_square": abs(sq - 48.3) <= 0.3,
        "avg_power": p == 120_000.0,
    }
    detail = f"rms={r:.6f}, thd(square, 40)={sq:.3f} % (target 48.3 +/- 0.3), avg_power={p:.1f} W"
    assert record(7, "analysis oracles", all(checks.values()), detail), checks


def test_8_determinism_and_round_trip(base_run, tmp_path):
    sc, res, _, _ = base_run
    again = simulate(sc)
    identical = all(np.array_equal(res.series[c], again.series[c]) for c in res.series.channels)
    identical = identical and np.array_equal(res.series.t, again.series.t)

    cfg = resources.files("fcsim") / "configs" / "baseline.json"
    assert load_scenario(cfg) == sc
    out = tmp_path / "run1"
    rc_sim = main(["simulate", "--config", str(cfg), "--out", str(out)])
    rc_ana = main(["analyze", str(out / "waveforms.csv"), "--out", str(tmp_path / "ana")])
    sim = json.loads((out / "summary.json").read_text())["summary"]
    ana = json.loads((tmp_path / "ana" / "analysis.json").read_text())["summary"]
    same = sim == ana
    ok = identical and same and rc_sim == 0 and rc_ana == 0
    detail = f"repeat bit-identical={identical}, round-trip fields equal={same} ({len(sim)} fields)"
    assert record(8, "determinism and round-trip", ok, detail)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
