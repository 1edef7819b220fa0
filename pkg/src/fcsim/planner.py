"""Corridor feasibility: charging time to energy, travel distance and the
number of charging stops a route needs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

DEFAULT_ROUTE_KM = 250.0
DEFAULT_STATION_KW = 120.0
DEFAULT_EFFICIENCY = 0.85
DEFAULT_MINUTES = (5, 10, 15, 20, 25, 30)

# nominal supply voltage per charging level; level 3 is the DC fast-charge class
LEVEL_VOLTAGE = {1: 120.0, 2: 240.0, 3: 400.0}
LEVEL3_POWER_KW = (15.0, 350.0)
LEVEL3_VOLTAGE = (200.0, 1000.0)

FLEET_COLUMNS = ("name", "capacity_kwh", "consumption_wh_per_km", "nominal_v", "acceptance_kw")


class FleetError(ValueError):
    pass


@dataclass(frozen=True)
class Vehicle:
    name: str
    battery_capacity: float  # kWh
    consumption: float  # Wh/km
    nominal_voltage: float  # V
    acceptance_rate: float  # kW, DC fast charging

    def __post_init__(self):
        for attr in ("battery_capacity", "consumption", "nominal_voltage", "acceptance_rate"):
            value = getattr(self, attr)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValueError(f"{self.name}: {attr} must be a positive number, got {value!r}")


DEFAULT_FLEET = (
    Vehicle("BMW iX3", 74.0, 211.0, 400.0, 155.0),
    Vehicle("Ford Mustang Mach-E", 91.0, 207.0, 400.0, 150.0),
    Vehicle("Tesla Model 3", 57.5, 144.0, 400.0, 170.0),
    Vehicle("Tesla Model Y", 75.0, 185.0, 357.0, 250.0),
    Vehicle("Volkswagen ID.4 Pro", 77.0, 193.0, 400.0, 135.0),
)


@dataclass(frozen=True)
class StationSpec:
    power: float = DEFAULT_STATION_KW  # kW
    level: int = 3
    efficiency: float = DEFAULT_EFFICIENCY
    voltage: float = 400.0

    def __post_init__(self):
        if not self.power > 0:
            raise ValueError(f"station power must be > 0, got {self.power}")
        if self.level not in LEVEL_VOLTAGE:
            raise ValueError(f"level must be 1, 2 or 3, got {self.level}")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"efficiency must lie in (0, 1], got {self.efficiency}")
        if self.level == 3:
            lo, hi = LEVEL3_POWER_KW
            if not lo <= self.power <= hi:
                raise ValueError(f"level-3 power must lie in [{lo}, {hi}] kW, got {self.power}")
            lo, hi = LEVEL3_VOLTAGE
            if not lo <= self.voltage <= hi:
                raise ValueError(f"level-3 voltage must lie in [{lo}, {hi}] V, got {self.voltage}")


@dataclass(frozen=True)
class PlanRow:
    charge_minutes: float
    energy_kwh: float
    distance_km: float
    stations: int


@dataclass
class CorridorPlan:
    vehicle: str
    route_length: float
    rows: list = field(default_factory=list)


def charge_energy(station: StationSpec, vehicle: Vehicle, minutes: float, cap_fraction: float = 1.0) -> float:
    """Energy delivered to the battery in kWh.

    The lower of station power and vehicle acceptance rate, times the
    charging time and station efficiency, capped at ``cap_fraction`` of the
    battery capacity.
    """
    if minutes < 0:
        raise ValueError("minutes must be >= 0")
    if not 0.0 < cap_fraction <= 1.0:
        raise ValueError("cap_fraction must lie in (0, 1]")
    p = min(station.power, vehicle.acceptance_rate)
    return min(p * (minutes / 60.0) * station.efficiency, cap_fraction * vehicle.battery_capacity)


def distance_from_charge(energy: float, vehicle: Vehicle) -> float:
    """Range in km bought by ``energy`` kWh."""
    if energy < 0:
        raise ValueError("energy must be >= 0")
    return energy * 1000.0 / vehicle.consumption


def stations_required(route_length: float, distance_per_charge: float) -> int:
    """Smallest N with N * distance_per_charge >= route_length."""
    if not distance_per_charge > 0:
        raise ValueError("distance per charge must be > 0")
    if not route_length > 0:
        raise ValueError("route length must be > 0")
    n = math.ceil(route_length / distance_per_charge)
    # float division can land one past the true ceiling, or one short of it
    if n > 1 and (n - 1) * distance_per_charge >= route_length:
        n -= 1
    elif n * distance_per_charge < route_length:
        n += 1
    return int(n)


def corridor_table(
    station: StationSpec,
    vehicles: Iterable[Vehicle],
    minutes_list: Sequence[float],
    route_length: float = DEFAULT_ROUTE_KM,
    cap_fraction: float = 1.0,
) -> list:
    """One :class:`CorridorPlan` per vehicle, sorted by name then minutes.

    Rows with zero range (0-minute charges) report ``stations = 0``.
    """
    plans = []
    for v in sorted(vehicles, key=lambda v: v.name):
        plan = CorridorPlan(v.name, route_length)
        for m in sorted(minutes_list):
            e = charge_energy(station, v, m, cap_fraction)
            d = distance_from_charge(e, v)
            n = stations_required(route_length, d) if d > 0 else 0
            plan.rows.append(PlanRow(float(m), e, d, n))
        plans.append(plan)
    return plans


def load_fleet(path: str | Path) -> list:
    """Read a fleet CSV with columns ``FLEET_COLUMNS``."""
    text = Path(path).read_text()
    return parse_fleet(text, str(path))


def parse_fleet(text: str, source: str = "<fleet>") -> list:
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    missing = [c for c in FLEET_COLUMNS if c not in header]
    if missing:
        raise FleetError(f"{source}: missing column(s) {', '.join(missing)}")
    fleet = []
    for row_no, row in enumerate(reader, start=2):
        try:
            fleet.append(
                Vehicle(
                    row["name"].strip(),
                    float(row["capacity_kwh"]),
                    float(row["consumption_wh_per_km"]),
                    float(row["nominal_v"]),
                    float(row["acceptance_kw"]),
                )
            )
        except (TypeError, ValueError, AttributeError) as exc:
            raise FleetError(f"{source}: row {row_no}: {exc}") from None
    if not fleet:
        raise FleetError(f"{source}: no vehicles")
    return fleet


def plan_csv(plans: Sequence[CorridorPlan]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["vehicle", "route_km", "charge_minutes", "energy_kwh", "distance_km", "stations"])
    for p in plans:
        for r in p.rows:
            w.writerow([p.vehicle, f"{p.route_length:g}", f"{r.charge_minutes:g}",
                        f"{r.energy_kwh:.4f}", f"{r.distance_km:.4f}", r.stations])
    return buf.getvalue()


def plan_text(plans: Sequence[CorridorPlan]) -> str:
    out = []
    for p in plans:
        out.append(f"{p.vehicle}  (route {p.route_length:g} km)")
        out.append(f"  {'min':>5} {'kWh':>9} {'km':>9} {'stations':>9}")
        for r in p.rows:
            out.append(f"  {r.charge_minutes:5g} {r.energy_kwh:9.2f} {r.distance_km:9.2f} {r.stations:9d}")
    return "\n".join(out) + "\n"
