import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from fcsim._layout import CHANNELS
from fcsim.cli import main
from fcsim.scenario import baseline

SHORT = ["--t-end", "0.1"]


@pytest.fixture
def cfg(tmp_path):
    path = tmp_path / "baseline.json"
    path.write_text(baseline().to_json())
    return path


def test_simulate_writes_outputs(cfg, tmp_path, capsys):
    out = tmp_path / "run1"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), *SHORT]) == 0
    for name in ("waveforms.csv", "summary.json", "summary.txt", "scenario.json"):
        assert (out / name).is_file()
    header = (out / "waveforms.csv").read_text().splitlines()[0]
    assert header == ",".join(CHANNELS)
    doc = json.loads((out / "summary.json").read_text())
    assert set(doc) == {"summary", "metadata"}
    assert doc["metadata"]["diverged"] is False
    assert "DC output voltage" in capsys.readouterr().out


def test_simulate_then_analyze_round_trip(cfg, tmp_path):
    out = tmp_path / "run"
    assert main(["simulate", "--config", str(cfg), "--out", str(out), *SHORT]) == 0
    assert main(["analyze", str(out / "waveforms.csv"), "--out", str(tmp_path / "ana")]) == 0
    sim = json.loads((out / "summary.json").read_text())["summary"]
    ana = json.loads((tmp_path / "ana" / "analysis.json").read_text())["summary"]
    assert sim == ana


def test_overrides_echoed_in_metadata(cfg, tmp_path):
    out = tmp_path / "o"
    rc = main(["simulate", "--config", str(cfg), "--out", str(out), "--dt", "2e-6", "--t-end", "0.06",
               "--set", "controller.kp_v=3.0", "--set", "load.r=1.5"])
    assert rc == 0
    meta = json.loads((out / "summary.json").read_text())["metadata"]
    sc = meta["scenario"]
    assert sc["solver"]["dt"] == 2e-6
    assert sc["solver"]["t_end"] == 0.06
    assert sc["controller"]["kp_v"] == 3.0
    assert sc["load"] == {"kind": "resistive", "r": 1.5}
    assert meta["steps"] == 30_000


def test_missing_config_names_path(tmp_path, capsys):
    missing = tmp_path / "nope.json"
    assert main(["simulate", "--config", str(missing), "--out", str(tmp_path / "x")]) == 2
    assert str(missing) in capsys.readouterr().err


@pytest.mark.parametrize("doc, field", [
    ({"solver": {"dt": "fast"}}, "solver.dt"),
    ({"rectifier": {"l_bost": 1e-4}}, "rectifier.l_bost"),
    ({"load": {"kind": "flywheel"}}, "load.kind"),
    ({"controller": {"mode": "deadbeat"}}, "controller"),
    ({"extra": 1}, "extra"),
])
def test_invalid_config_names_field(tmp_path, capsys, doc, field):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path / "x")]) == 2
    assert field in capsys.readouterr().err


def test_diverged_run_exits_3(cfg, tmp_path, capsys):
    out = tmp_path / "dv"
    rc = main(["simulate", "--config", str(cfg), "--out", str(out), "--t-end", "0.02",
               "--set", "filter.c_f=1e-9"])
    assert rc == 3
    assert "diverged" in capsys.readouterr().err
    meta = json.loads((out / "summary.json").read_text())["metadata"]
    assert meta["diverged"] is True
    lines = (out / "waveforms.csv").read_text().splitlines()
    assert len(lines) >= 2


def write_synthetic(path, n=10_000, dt=1e-5, **cols):
    t = np.arange(n) * dt
    data = {c: np.zeros(n) for c in CHANNELS[1:]}
    data.update({k: np.full(n, v) for k, v in cols.items()})
    arr = np.column_stack([t] + [data[c] for c in CHANNELS[1:]])
    with open(path, "w") as fh:
        fh.write(",".join(CHANNELS) + "\n")
        np.savetxt(fh, arr, fmt="%.17g", delimiter=",")


def test_analyze_synthetic_dc(tmp_path):
    csv = tmp_path / "w.csv"
    write_synthetic(csv, v_out=400.0, i_load=300.0, p_out=120_000.0, p_src=120_000.0)
    assert main(["analyze", str(csv)]) == 0
    rep = json.loads((tmp_path / "analysis.json").read_text())["summary"]
    assert rep["p_dc_steady_mean"] == 120_000.0
    assert rep["v_dc_steady_mean"] == 400.0


def test_analyze_missing_channel(tmp_path, capsys):
    csv = tmp_path / "w.csv"
    write_synthetic(csv)
    lines = csv.read_text().splitlines()
    lines = [",".join(line.split(",")[:-1]) for line in lines]
    csv.write_text("\n".join(lines) + "\n")
    assert main(["analyze", str(csv)]) == 2
    err = capsys.readouterr().err
    assert "p_out" in err and "line 1" in err


def test_analyze_malformed_row_names_line(tmp_path, capsys):
    csv = tmp_path / "w.csv"
    write_synthetic(csv, n=5000)
    lines = csv.read_text().splitlines()
    lines[42] = lines[42].replace(",", ",x", 1)
    csv.write_text("\n".join(lines) + "\n")
    assert main(["analyze", str(csv)]) == 2
    assert "line 43" in capsys.readouterr().err


def test_analyze_short_row(tmp_path, capsys):
    csv = tmp_path / "w.csv"
    write_synthetic(csv, n=5000)
    lines = csv.read_text().splitlines()
    lines[7] = "0.1,2"
    csv.write_text("\n".join(lines) + "\n")
    assert main(["analyze", str(csv)]) == 2
    assert "line 8" in capsys.readouterr().err


def test_analyze_missing_file(tmp_path):
    assert main(["analyze", str(tmp_path / "none.csv")]) == 2


def test_plan_defaults(tmp_path, capsys):
    assert main(["plan", "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "plan.csv").read_text().splitlines()
    assert len(rows) == 1 + 5 * 6
    ix3 = [r.split(",") for r in rows if r.startswith("BMW iX3,")]
    by_min = {float(r[2]): int(r[5]) for r in ix3}
    assert by_min[5.0] == 7 and by_min[10.0] == 4
    assert "BMW iX3" in capsys.readouterr().out


def test_plan_zero_route(capsys):
    assert main(["plan", "--route-km", "0"]) == 2
    assert "route" in capsys.readouterr().err


def test_plan_custom_fleet(tmp_path):
    fleet = tmp_path / "fleet.csv"
    fleet.write_text("name,capacity_kwh,consumption_wh_per_km,nominal_v,acceptance_kw\nMy EV,60,150,400,100\n")
    assert main(["plan", "--fleet", str(fleet), "--out", str(tmp_path)]) == 0
    rows = (tmp_path / "plan.csv").read_text().splitlines()[1:]
    assert {r.split(",")[0] for r in rows} == {"My EV"}
    assert len(rows) == 6


def test_plan_bad_fleet_names_row(tmp_path, capsys):
    fleet = tmp_path / "fleet.csv"
    fleet.write_text("name,capacity_kwh,consumption_wh_per_km,nominal_v,acceptance_kw\nA,60,150,400,100\nB,,150,400,100\n")
    assert main(["plan", "--fleet", str(fleet)]) == 2
    assert "row 3" in capsys.readouterr().err


def test_plan_station_limits(capsys):
    assert main(["plan", "--station-kw", "500"]) == 2
    assert main(["plan", "--minutes", "-5"]) == 2


def test_scenario_command_round_trips(tmp_path):
    out = tmp_path / "cp.json"
    assert main(["scenario", "constant_power", "-o", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["load"]["kind"] == "constant_power"


def test_sweep_writes_subdirectories(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    a.write_text(baseline().to_json())
    doc = json.loads(baseline().to_json())
    doc["model"] = "averaged"
    b.write_text(json.dumps(doc))
    out = tmp_path / "sweep"
    assert main(["simulate", "--sweep", str(a), str(b), "--out", str(out), "--t-end", "0.06",
                 "--workers", "2"]) == 0
    assert (out / "a" / "summary.json").is_file()
    assert (out / "b" / "summary.json").is_file()
    sc = json.loads((out / "b" / "scenario.json").read_text())
    assert sc["model"] == "averaged"


def test_console_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "fcsim.cli", "plan", "--minutes", "5"],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert "BMW iX3" in proc.stdout
