"""``fcsim`` command line: simulate, analyze, plan, scenario.

Exit status 0 on success, 2 for invalid input (config, CSV, arguments),
3 when a simulation diverges.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, _backend
from .analysis import AnalysisError, SummaryReport
from .planner import (
    DEFAULT_EFFICIENCY,
    DEFAULT_MINUTES,
    DEFAULT_ROUTE_KM,
    DEFAULT_STATION_KW,
    DEFAULT_FLEET,
    FleetError,
    StationSpec,
    corridor_table,
    load_fleet,
    plan_csv,
    plan_text,
)
from .scenario import BUILTIN, ConfigError, Scenario, load_scenario
from .station import SimulationResult, simulate_many, summarize_scenario
from .waveforms import WaveformFormatError, read_csv, write_csv

log = logging.getLogger("fcsim")

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_DIVERGED = 3


class UsageError(Exception):
    pass


def _parse_set(items) -> dict:
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like section.key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        out[key.strip()] = value
    return out


def _overrides(args) -> dict:
    ov = _parse_set(args.set)
    if args.dt is not None:
        ov["solver.dt"] = args.dt
    if args.t_end is not None:
        ov["solver.t_end"] = args.t_end
    if args.decimation is not None:
        ov["solver.record_decimation"] = args.decimation
    if args.method is not None:
        ov["solver.method"] = args.method
    if args.mode is not None:
        ov["model"] = args.mode
    if args.control is not None:
        ov["controller.mode"] = args.control
    return ov


def _write_outputs(result: SimulationResult, out: Path) -> SummaryReport | None:
    out.mkdir(parents=True, exist_ok=True)
    write_csv(result.series, out / "waveforms.csv")
    (out / "scenario.json").write_text(result.scenario.to_json())
    solver = result.scenario.solver
    metadata = {
        "scenario": result.scenario.to_dict(),
        "backend": result.backend,
        "elapsed_s": result.elapsed,
        "steps": result.steps,
        "actual_t_end": result.steps * solver.dt,
        "diverged": result.diverged,
        "message": result.series.message,
        "switches": result.switches,
        "cp_load_clamps": result.cp_clamps,
        "version": __version__,
    }
    try:
        report = result.summary()
    except AnalysisError as exc:
        metadata["analysis_error"] = str(exc)
        (out / "summary.json").write_text(json.dumps({"summary": None, "metadata": metadata}, indent=2) + "\n")
        return None
    (out / "summary.json").write_text(report.to_json(metadata))
    (out / "summary.txt").write_text(report.to_table() + "\n" + report.to_text())
    return report


def cmd_simulate(args) -> int:
    overrides = _overrides(args)
    paths = [args.config] if args.config else []
    paths += args.sweep or []
    if not paths:
        raise UsageError("simulate needs --config or --sweep")
    scenarios = [load_scenario(p, overrides) for p in paths]
    results = simulate_many(scenarios, workers=args.workers, backend=args.backend)
    out = Path(args.out)
    status = EXIT_OK
    for path, res in zip(paths, results):
        target = out if len(results) == 1 else out / Path(path).stem
        report = _write_outputs(res, target)
        print(f"[{res.scenario.name}] {res.steps} steps in {res.elapsed:.2f} s ({res.backend} kernel) -> {target}")
        if report is not None:
            print(report.to_table())
        if res.diverged:
            print(f"error: diverged: {res.series.message}", file=sys.stderr)
            status = EXIT_DIVERGED
    return status


def cmd_analyze(args) -> int:
    csv_path = Path(args.csv)
    if not csv_path.is_file():
        raise UsageError(f"waveform file not found: {csv_path}")
    cfg = Path(args.config) if args.config else csv_path.with_name("scenario.json")
    if cfg.is_file():
        scenario = load_scenario(cfg)
    else:
        log.warning("no scenario config next to %s; assuming baseline resistances and 50 Hz", csv_path)
        scenario = Scenario()
    diverged = False
    sibling = csv_path.with_name("summary.json")
    if sibling.is_file():
        try:
            diverged = bool(json.loads(sibling.read_text()).get("metadata", {}).get("diverged", False))
        except (json.JSONDecodeError, AttributeError):
            diverged = False
    series = read_csv(csv_path, diverged=diverged)
    report = summarize_scenario(series, scenario)
    out = Path(args.out) if args.out else csv_path.parent
    out.mkdir(parents=True, exist_ok=True)
    meta = {"source_csv": str(csv_path), "samples": len(series), "scenario": scenario.to_dict()}
    (out / "analysis.json").write_text(report.to_json(meta))
    (out / "analysis.txt").write_text(report.to_table() + "\n" + report.to_text())
    print(report.to_table())
    return EXIT_OK


def cmd_plan(args) -> int:
    if not args.route_km > 0:
        raise UsageError(f"--route-km must be > 0, got {args.route_km}")
    if not args.minutes:
        raise UsageError("--minutes must list at least one interval")
    if any(m < 0 for m in args.minutes):
        raise UsageError("--minutes values must be >= 0")
    try:
        station = StationSpec(power=args.station_kw, efficiency=args.efficiency, level=args.level,
                              voltage=args.station_v)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    fleet = load_fleet(args.fleet) if args.fleet else list(DEFAULT_FLEET)
    plans = corridor_table(station, fleet, args.minutes, args.route_km, args.cap_fraction)
    text = plan_text(plans)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "plan.csv").write_text(plan_csv(plans))
        (out / "plan.txt").write_text(text)
    print(text, end="")
    return EXIT_OK


def cmd_scenario(args) -> int:
    text = BUILTIN[args.name]().to_json()
    if args.output:
        Path(args.output).write_text(text)
    else:
        print(text, end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fcsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"fcsim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a scenario and write waveforms + summary")
    s.add_argument("--config", help="scenario JSON file")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--dt", type=float)
    s.add_argument("--t-end", type=float)
    s.add_argument("--decimation", type=int, help="record every k-th step")
    s.add_argument("--method", choices=("rk4", "euler"))
    s.add_argument("--mode", choices=("switched", "averaged"), help="rectifier model")
    s.add_argument("--control", choices=("hysteresis", "spwm"), help="inner current loop")
    s.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="override any config value (repeatable)")
    s.add_argument("--sweep", nargs="+", metavar="CONFIG", help="several scenarios, one subdirectory each")
    s.add_argument("--workers", type=int, default=0, help="threads for --sweep (0 = auto)")
    s.add_argument("--backend", choices=("auto", "compiled", "python"), default="auto")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="summarise an existing waveform CSV")
    a.add_argument("csv")
    a.add_argument("--config", help="scenario JSON (default: scenario.json beside the CSV)")
    a.add_argument("--out", help="output directory (default: the CSV's directory)")
    a.set_defaults(func=cmd_analyze)

    pl = sub.add_parser("plan", help="corridor charging-stop plan")
    pl.add_argument("--route-km", type=float, default=DEFAULT_ROUTE_KM)
    pl.add_argument("--station-kw", type=float, default=DEFAULT_STATION_KW)
    pl.add_argument("--station-v", type=float, default=400.0)
    pl.add_argument("--level", type=int, default=3, choices=(1, 2, 3))
    pl.add_argument("--efficiency", type=float, default=DEFAULT_EFFICIENCY)
    pl.add_argument("--cap-fraction", type=float, default=1.0)
    pl.add_argument("--minutes", type=float, nargs="+", default=list(DEFAULT_MINUTES))
    pl.add_argument("--fleet", help="fleet CSV (default: built-in five-vehicle table)")
    pl.add_argument("--out", help="directory for plan.csv and plan.txt")
    pl.set_defaults(func=cmd_plan)

    sc = sub.add_parser("scenario", help="print a built-in scenario config")
    sc.add_argument("name", choices=sorted(BUILTIN))
    sc.add_argument("-o", "--output")
    sc.set_defaults(func=cmd_scenario)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
    except (WaveformFormatError, FleetError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (AnalysisError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
