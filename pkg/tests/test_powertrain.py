import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fcsim import _pykernel
from fcsim.powertrain import (
    Battery,
    ConstantPower,
    LCFilter,
    Node,
    Plant,
    Resistive,
    ThreePhaseSource,
    Transformer,
    ViennaRectifier,
    assemble_derivatives,
    load_current,
    node_voltages,
    secondary_voltages,
    source_voltages,
    stored_energy,
    transform,
)
from fcsim.scenario import baseline
from fcsim.station import kernel_params

GRID = ThreePhaseSource(11_000.0, 50.0, 0.0)


def test_source_at_zero():
    v = source_voltages(GRID, 0.0)
    assert v[0] == pytest.approx(0.0, abs=1e-9)
    assert v[1] == pytest.approx(-7778.2, abs=0.05)
    assert v[2] == pytest.approx(7778.2, abs=0.05)


def test_source_quarter_period_peak():
    assert source_voltages(GRID, 0.005)[0] == pytest.approx(8981.5, abs=0.05)
    assert GRID.v_phase_peak == pytest.approx(math.sqrt(2) * 11000 / math.sqrt(3))


def test_zero_source():
    assert np.all(source_voltages(ThreePhaseSource(0.0), 0.0123) == 0.0)


@given(st.floats(0, 1, allow_nan=False), st.floats(0, 2 * math.pi))
def test_source_sums_to_zero(t, phi):
    v = source_voltages(ThreePhaseSource(11_000.0, 50.0, phi), t)
    assert abs(v.sum()) < 1e-9 * 8981.5


def test_transform_baseline_ratio():
    tr = Transformer()
    out = transform(tr, [8981.5, 0.0, -8981.5])
    assert out[0] == pytest.approx(181.9, abs=0.05)
    # line-to-line RMS carried through the same ratio
    assert 11_000 * tr.ratio == pytest.approx(222.7, abs=0.05)
    assert tr.step_down


def test_transform_unit_ratio_identity():
    v = np.array([1.0, -2.0, 1.0])
    assert np.array_equal(transform(Transformer(ratio=1.0), v), v)


def test_secondary_peak_meets_boost_margin():
    p = Plant()
    assert p.v_secondary_peak == pytest.approx(315 / math.sqrt(3))
    assert 400.0 / 2 > p.v_secondary_peak


@pytest.mark.parametrize("gate, sign, node", [
    (True, 1.0, Node.M), (True, -1.0, Node.M),
    (False, 1.0, Node.P), (False, -1.0, Node.N),
])
def test_node_attachment_table(gate, sign, node):
    from fcsim.powertrain import vienna_node_attachment

    assert vienna_node_attachment(gate, sign) is node


def test_all_on_drives_current_from_source():
    p = Plant()
    x = np.array([0.0, 0.0, 0.0, 200.0, 200.0, 50.0, 400.0, 0.0])
    t = 0.003
    d = assemble_derivatives(p, x, [0, 0, 0], t)
    assert np.allclose(d[0:3], secondary_voltages(p, t) / p.l_phase)
    assert d[3] == pytest.approx(-50.0 / p.rectifier.c_dc_upper)
    assert d[4] == pytest.approx(-50.0 / p.rectifier.c_dc_lower)


def test_inflow_equals_outflow():
    p = Plant()
    x = np.array([300.0, -150.0, -150.0, 200.0, 200.0, 300.0, 399.0, 0.0])
    d = assemble_derivatives(p, x, [Node.P, Node.M, Node.M], 0.0)
    assert d[3] == 0.0


def test_lower_capacitor_sees_negative_bus():
    p = Plant()
    x = np.array([150.0, 150.0, -300.0, 200.0, 200.0, 300.0, 399.0, 0.0])
    d = assemble_derivatives(p, x, [Node.M, Node.M, Node.N], 0.0)
    assert d[4] == 0.0
    assert d[3] == pytest.approx(-300.0 / p.rectifier.c_dc_upper)


def test_averaged_attachment_is_duty_weighted_mean():
    # half the period on P, half on M: averaged rates equal the mean of both
    p = Plant()
    x = np.array([120.0, -80.0, -40.0, 210.0, 190.0, 100.0, 395.0, 0.0])
    on_p = assemble_derivatives(p, x, [1, 0, -1], 0.001)
    on_m = assemble_derivatives(p, x, [0, 0, -1], 0.001)
    avg = assemble_derivatives(p, x, [0.5, 0, -1], 0.001)
    assert np.allclose(avg, 0.5 * (on_p + on_m), rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("d_mid", [0.1, 0.3, 0.5])
def test_averaged_boost_relation(d_mid):
    # legs spend a fraction d_mid at the midpoint; the currents hold still when
    # each leg's averaged voltage equals its source voltage, i.e. v_C = v/(1 - d)
    p = Plant(transformer=Transformer(series_resistance=0.0))
    t = 0.0021
    v = secondary_voltages(p, t)
    k = int(np.argmax(np.abs(v)))
    vc = abs(v[k]) / (1.0 - d_mid)
    attach = v / vc
    assert abs(attach[k]) == pytest.approx(1.0 - d_mid)
    x = np.array([0.0, 0.0, 0.0, vc, vc, 0.0, 2 * vc, 0.0])
    d = assemble_derivatives(p, x, attach, t)
    assert np.allclose(d[0:3], 0.0, atol=1e-6)


def test_node_voltages():
    u = node_voltages(np.array([1.0, 0.0, -1.0]), 210.0, 190.0)
    assert np.array_equal(u, [210.0, 0.0, -190.0])


def test_load_laws():
    assert load_current(Resistive(1.3337), 400.0) == pytest.approx(400.0 / 1.3337, rel=1e-15)
    assert load_current(Resistive(1.3337), 400.0) == pytest.approx(299.92, abs=5e-3)
    assert load_current(ConstantPower(120e3, 200.0), 400.0) == pytest.approx(300.0)
    assert load_current(ConstantPower(120e3, 200.0), 100.0) == pytest.approx(600.0)
    b = Battery()
    assert load_current(b, b.v_ocv(b.soc)) == 0.0
    assert load_current(b, b.v_ocv(b.soc) - 5.0) == 0.0
    assert load_current(b, 1000.0) == pytest.approx(b.max_power / 1000.0)


@pytest.mark.parametrize("ctor", [
    lambda: Resistive(0.0), lambda: ConstantPower(-1.0), lambda: ConstantPower(1.0, 0.0),
    lambda: Battery(soc=1.5), lambda: Battery(capacity=0.0), lambda: ViennaRectifier(l_boost=0.0),
    lambda: LCFilter(c_f=0.0), lambda: ThreePhaseSource(freq=0.0), lambda: Transformer(ratio=0.0),
])
def test_invariants_enforced(ctor):
    with pytest.raises(ValueError):
        ctor()


state_vec = st.tuples(
    *[st.floats(-800, 800) for _ in range(3)],
    st.floats(1, 400), st.floats(1, 400), st.floats(-500, 500), st.floats(1, 600),
)
attach_vec = st.tuples(*[st.sampled_from([-1.0, 0.0, 1.0]) | st.floats(-1, 1) for _ in range(3)])


@settings(max_examples=200, deadline=None)
@given(state_vec, attach_vec, st.floats(0, 0.1))
def test_phase_rates_sum_to_zero(xs, attach, t):
    # no neutral conductor: currents start balanced and their rates stay so
    i = np.array(xs[0:3])
    x = np.array([*(i - i.mean()), *xs[3:], 0.0])
    d = assemble_derivatives(Plant(), x, attach, t)
    assert abs(d[0:3].sum()) <= 1e-9 * max(1.0, np.max(np.abs(d[0:3])))


@settings(max_examples=200, deadline=None)
@given(state_vec, attach_vec, st.floats(0, 0.1))
def test_energy_rate_identity(xs, attach, t):
    # dE/dt = source power - resistive losses - load power, whenever sum(i) = 0
    i = np.array(xs[0:3])
    i = i - i.mean()
    x = np.array([*i, *xs[3:], 0.0])
    p = Plant()
    d = assemble_derivatives(p, x, attach, t)
    r, f = p.rectifier, p.filter
    de = (p.l_phase * np.dot(x[0:3], d[0:3]) + r.c_dc_upper * x[3] * d[3]
          + r.c_dc_lower * x[4] * d[4] + f.l_f * x[5] * d[5] + f.c_f * x[6] * d[6])
    il = load_current(p.load, x[6])
    expected = (np.dot(secondary_voltages(p, t), x[0:3]) - p.r_phase * np.sum(x[0:3] ** 2)
                - f.r_lf * x[5] ** 2 - x[6] * il)
    scale = 1.0 + np.sum(np.abs(x[0:3])) * 400 + abs(x[5]) * 400 + abs(x[6] * il)
    assert de == pytest.approx(expected, abs=1e-9 * scale)


@settings(max_examples=200, deadline=None)
@given(state_vec, attach_vec, st.floats(0, 0.1),
       st.sampled_from(["resistive", "cp", "battery"]))
def test_kernel_derivative_matches_library(xs, attach, t, load_kind):
    load = {"resistive": Resistive(), "cp": ConstantPower(), "battery": Battery()}[load_kind]
    from dataclasses import replace

    sc = baseline()
    sc = replace(sc, plant=replace(sc.plant, load=load))
    x = np.array([*xs, 0.3])
    ref = assemble_derivatives(sc.plant, x, attach, t)
    got = _pykernel.derivative(t, list(x), *attach, list(kernel_params(sc)))
    assert np.allclose(got, ref, rtol=1e-12, atol=1e-9)


def test_stored_energy_initial_state():
    p = Plant()
    x = p.initial_state()
    v0 = p.v_secondary_peak
    expected = 0.5 * (4700e-6 * v0**2 * 2 + 1000e-6 * (2 * v0) ** 2)
    assert stored_energy(p, x) == pytest.approx(expected)
    assert np.array_equal(x[0:3], [0, 0, 0])
