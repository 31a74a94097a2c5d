"""Core data types shared by every other module.

Unit discipline, used everywhere without exception: powers in kW, energies in
kWh, prices in cents/kWh, state of charge in percent of capacity, costs in
cents. Dollar figures appear only in reports as cents/100.

All types are frozen dataclasses; numpy arrays they hold are marked
read-only, so validated objects are safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ValidationError

Violation = tuple[str, str]


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.asarray(arr, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class TimeGrid:
    """Day discretization: `steps_per_day` steps of `step_hours` hours each,
    with prices given at a coarser `hours_per_price_point` resolution."""

    step_hours: float = 0.25
    steps_per_day: int = 96
    hours_per_price_point: int = 1

    @property
    def price_points_per_day(self) -> int:
        return 24 // self.hours_per_price_point

    def price_index(self, step: int) -> int:
        # exact for any steps_per_day dividing 24*steps; avoids float round-off
        return (step * 24 // self.steps_per_day) // self.hours_per_price_point

    def broadcast_prices(self, hourly: np.ndarray) -> np.ndarray:
        """Piecewise-constant expansion of a price vector to step resolution."""
        idx = [self.price_index(t) for t in range(self.steps_per_day)]
        return np.asarray(hourly, dtype=float)[idx]

    def step_of_clock(self, hh: int, mm: int) -> int:
        minutes = hh * 60 + mm
        step = minutes / (self.step_hours * 60.0)
        if abs(step - round(step)) > 1e-9:
            raise ValidationError(
                [("time", f"{hh:02d}:{mm:02d} is not aligned to the {self.step_hours} h grid")]
            )
        return int(round(step))


@dataclass(frozen=True)
class GridConfig:
    """Grid tie limits and the load-shedding penalty price."""

    import_limit_kw: float = 500.0
    export_limit_kw: float = 100.0
    shed_price_cents_per_kwh: float = 100.0


@dataclass(frozen=True)
class EssConfig:
    """Stationary storage: capacity, efficiencies, power limit, SoC window."""

    capacity_kwh: float = 600.0
    charge_eff: float = 0.95
    discharge_eff: float = 0.95
    power_limit_kw: float = 120.0
    soc_min_pct: float = 30.0
    soc_max_pct: float = 90.0
    soc_init_pct: float = 55.0


@dataclass(frozen=True)
class FleetConfig:
    """Bus fleet and charger parameters. `fleet_load_max_kw=None` defaults to
    bus_count * charger_limit_kw (every charger at rated power)."""

    bus_count: int = 20
    battery_kwh: float = 400.0
    charge_eff: float = 0.95
    charger_limit_kw: float = 60.0
    fleet_load_min_kw: float = 0.0
    fleet_load_max_kw: float | None = None

    @property
    def fleet_load_max_resolved_kw(self) -> float:
        if self.fleet_load_max_kw is None:
            return self.bus_count * self.charger_limit_kw
        return self.fleet_load_max_kw


@dataclass(frozen=True)
class PvConfig:
    """Solar array parameters used to convert irradiance to AC power."""

    panel_area_m2: float = 1000.0
    panel_efficiency: float = 0.15


@dataclass(frozen=True)
class StationConfig:
    """All deterministic physics and limits of one charging station."""

    time_grid: TimeGrid = field(default_factory=TimeGrid)
    grid: GridConfig = field(default_factory=GridConfig)
    ess: EssConfig = field(default_factory=EssConfig)
    fleet: FleetConfig = field(default_factory=FleetConfig)
    pv: PvConfig = field(default_factory=PvConfig)


@dataclass(frozen=True)
class ParkingWindow:
    """One arrival-departure interval of a bus, in step indices.

    `departure_step <= arrival_step` means the window wraps past midnight;
    `steps()` then yields the tail segment first and the head segment of the
    same operational day after it, so the SoC chain stays contiguous.
    """

    arrival_step: int
    departure_step: int
    arrival_soc_pct: float = 40.0
    departure_target_soc_pct: float = 90.0

    @property
    def wraps(self) -> bool:
        return self.departure_step <= self.arrival_step

    def steps(self, steps_per_day: int) -> list[int]:
        if self.wraps:
            return list(range(self.arrival_step, steps_per_day)) + list(
                range(0, self.departure_step)
            )
        return list(range(self.arrival_step, self.departure_step))

    def segments(self, steps_per_day: int) -> list[tuple[int, int]]:
        """Half-open [start, end) segments in absolute step indices."""
        if self.wraps:
            segs = []
            if self.arrival_step < steps_per_day:
                segs.append((self.arrival_step, steps_per_day))
            if self.departure_step > 0:
                segs.append((0, self.departure_step))
            return segs
        return [(self.arrival_step, self.departure_step)]


@dataclass(frozen=True)
class ParkingSchedule:
    """Per-bus ordered parking windows. Bus names are the mapping keys."""

    windows: dict[str, tuple[ParkingWindow, ...]]

    @property
    def bus_names(self) -> list[str]:
        return sorted(self.windows)

    def parked_steps(self, bus: str, steps_per_day: int) -> set[int]:
        out: set[int] = set()
        for w in self.windows.get(bus, ()):
            out.update(w.steps(steps_per_day))
        return out


@dataclass(frozen=True)
class ScenarioInput:
    """One day's uncertain inputs: a solar power trajectory at step
    resolution and import/export price trajectories at price resolution."""

    solar_kw: np.ndarray
    import_price_cents_per_kwh: np.ndarray
    export_price_cents_per_kwh: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "solar_kw", _freeze(self.solar_kw))
        object.__setattr__(
            self, "import_price_cents_per_kwh", _freeze(self.import_price_cents_per_kwh)
        )
        object.__setattr__(
            self, "export_price_cents_per_kwh", _freeze(self.export_price_cents_per_kwh)
        )


@dataclass(frozen=True)
class DaySchedule:
    """Full solution of one day: every power series, mode binaries, SoC
    trajectories, departure slacks and the minimum cost."""

    status: str
    objective_cents: float
    import_kw: np.ndarray
    export_kw: np.ndarray
    ess_charge_kw: np.ndarray
    ess_discharge_kw: np.ndarray
    shed_kw: np.ndarray
    grid_import_mode: np.ndarray  # u: 1 buying allowed, 0 selling allowed
    ess_charge_mode: np.ndarray  # 1 charging allowed, 0 discharging allowed
    ess_soc_pct: np.ndarray  # SoC after each step
    bus_charge_kw: dict[str, np.ndarray]
    bus_soc_pct: dict[str, np.ndarray]  # NaN outside parking windows
    window_slack_pct: dict[tuple[str, int], float]
    label: str = ""
    solver_nodes: int = 0
    solver_iterations: int = 0

    @property
    def objective_dollars(self) -> float:
        return self.objective_cents / 100.0

    @property
    def fleet_load_kw(self) -> np.ndarray:
        total = np.zeros_like(self.import_kw)
        for p in self.bus_charge_kw.values():
            total = total + p
        return total


def _check_finite(violations: list[Violation], path: str, value: float) -> bool:
    if not (isinstance(value, (int, float)) and math.isfinite(value)):
        violations.append((path, f"must be a finite number, got {value!r}"))
        return False
    return True


def collect_violations(config: StationConfig) -> list[Violation]:
    """Every invariant violation in `config`, with a field path each."""
    v: list[Violation] = []
    tg = config.time_grid
    if _check_finite(v, "time_grid.step_hours", tg.step_hours) and tg.step_hours <= 0:
        v.append(("time_grid.step_hours", "must be > 0"))
    if not isinstance(tg.steps_per_day, int) or tg.steps_per_day <= 0:
        v.append(("time_grid.steps_per_day", "must be a positive integer"))
    elif tg.step_hours > 0 and abs(tg.steps_per_day * tg.step_hours - 24.0) > 1e-9:
        v.append(
            ("time_grid", f"steps_per_day*step_hours must equal 24, got {tg.steps_per_day * tg.step_hours}")
        )
    if not isinstance(tg.hours_per_price_point, int) or tg.hours_per_price_point <= 0:
        v.append(("time_grid.hours_per_price_point", "must be a positive integer"))
    elif 24 % tg.hours_per_price_point != 0:
        v.append(("time_grid.hours_per_price_point", "must divide 24"))

    g = config.grid
    for name in ("import_limit_kw", "export_limit_kw", "shed_price_cents_per_kwh"):
        val = getattr(g, name)
        if _check_finite(v, f"grid.{name}", val) and val < 0:
            v.append((f"grid.{name}", "must be >= 0"))

    e = config.ess
    if _check_finite(v, "ess.capacity_kwh", e.capacity_kwh) and e.capacity_kwh <= 0:
        v.append(("ess.capacity_kwh", "must be > 0"))
    for name in ("charge_eff", "discharge_eff"):
        val = getattr(e, name)
        if _check_finite(v, f"ess.{name}", val) and not (0.0 < val <= 1.0):
            v.append((f"ess.{name}", "must be in (0, 1]"))
    if _check_finite(v, "ess.power_limit_kw", e.power_limit_kw) and e.power_limit_kw < 0:
        v.append(("ess.power_limit_kw", "must be >= 0"))
    soc_ok = all(
        _check_finite(v, f"ess.{n}", getattr(e, n))
        for n in ("soc_min_pct", "soc_max_pct", "soc_init_pct")
    )
    if soc_ok:
        if not (0.0 <= e.soc_min_pct < e.soc_max_pct <= 100.0):
            v.append(("ess.soc_min_pct/soc_max_pct", "need 0 <= min < max <= 100"))
        elif not (e.soc_min_pct <= e.soc_init_pct <= e.soc_max_pct):
            v.append(("ess.soc_init_pct", "must lie within [soc_min_pct, soc_max_pct]"))

    f = config.fleet
    if not isinstance(f.bus_count, int) or f.bus_count < 0:
        v.append(("fleet.bus_count", "must be an integer >= 0"))
    if _check_finite(v, "fleet.battery_kwh", f.battery_kwh) and f.battery_kwh <= 0:
        v.append(("fleet.battery_kwh", "must be > 0"))
    if _check_finite(v, "fleet.charge_eff", f.charge_eff) and not (0.0 < f.charge_eff <= 1.0):
        v.append(("fleet.charge_eff", "must be in (0, 1]"))
    if _check_finite(v, "fleet.charger_limit_kw", f.charger_limit_kw) and f.charger_limit_kw < 0:
        v.append(("fleet.charger_limit_kw", "must be >= 0"))
    fmax = f.fleet_load_max_kw
    if fmax is not None:
        _check_finite(v, "fleet.fleet_load_max_kw", fmax)
    if _check_finite(v, "fleet.fleet_load_min_kw", f.fleet_load_min_kw):
        if f.fleet_load_min_kw < 0:
            v.append(("fleet.fleet_load_min_kw", "must be >= 0"))
        elif fmax is not None and math.isfinite(fmax) and f.fleet_load_min_kw > fmax:
            v.append(("fleet.fleet_load_min_kw", "must be <= fleet_load_max_kw"))

    p = config.pv
    if _check_finite(v, "pv.panel_area_m2", p.panel_area_m2) and p.panel_area_m2 < 0:
        v.append(("pv.panel_area_m2", "must be >= 0"))
    if _check_finite(v, "pv.panel_efficiency", p.panel_efficiency) and not (
        0.0 <= p.panel_efficiency <= 1.0
    ):
        v.append(("pv.panel_efficiency", "must be in [0, 1]"))
    return v


def validate_config(config: StationConfig) -> StationConfig:
    """Return `config` unchanged if valid, else raise ValidationError listing
    every violation."""
    violations = collect_violations(config)
    if violations:
        raise ValidationError(violations)
    return config


def validate_schedule(schedule: ParkingSchedule, grid: TimeGrid) -> ParkingSchedule:
    """Check window ranges, per-bus disjointness and SoC ordering."""
    v: list[Violation] = []
    T = grid.steps_per_day
    for bus in schedule.bus_names:
        seen: set[int] = set()
        for k, w in enumerate(schedule.windows[bus]):
            path = f"{bus}.window[{k}]"
            if not (0 <= w.arrival_step < T) or not (0 <= w.departure_step <= T):
                v.append((path, f"steps must lie in [0, {T}]"))
                continue
            steps = w.steps(T)
            if not steps:
                v.append((path, "window is empty"))
            if seen & set(steps):
                v.append((path, "overlaps an earlier window of the same bus"))
            seen.update(steps)
            if not (0.0 <= w.arrival_soc_pct <= w.departure_target_soc_pct <= 100.0):
                v.append(
                    (path, "need 0 <= arrival_soc_pct <= departure_target_soc_pct <= 100")
                )
    if v:
        raise ValidationError(v)
    return schedule


def validate_scenario(scenario: ScenarioInput, grid: TimeGrid) -> ScenarioInput:
    """Check vector shapes against the time grid and solar nonnegativity."""
    v: list[Violation] = []
    if scenario.solar_kw.shape != (grid.steps_per_day,):
        v.append(
            ("solar_kw", f"length must be {grid.steps_per_day}, got {scenario.solar_kw.shape}")
        )
    npp = grid.price_points_per_day
    for name in ("import_price_cents_per_kwh", "export_price_cents_per_kwh"):
        arr = getattr(scenario, name)
        if arr.shape != (npp,):
            v.append((name, f"length must be {npp}, got {arr.shape}"))
    if not np.all(np.isfinite(scenario.solar_kw)):
        v.append(("solar_kw", "must be finite"))
    elif np.any(scenario.solar_kw < 0):
        v.append(("solar_kw", "must be >= 0 elementwise"))
    for name in ("import_price_cents_per_kwh", "export_price_cents_per_kwh"):
        if not np.all(np.isfinite(getattr(scenario, name))):
            v.append((name, "must be finite"))
    if v:
        raise ValidationError(v)
    return scenario


# --- plain-dict (de)serialization used by the CLI's JSON config file ---------


def station_config_to_dict(config: StationConfig) -> dict:
    tg, g, e, f, p = config.time_grid, config.grid, config.ess, config.fleet, config.pv
    return {
        "time_grid": {
            "step_hours": tg.step_hours,
            "steps_per_day": tg.steps_per_day,
            "hours_per_price_point": tg.hours_per_price_point,
        },
        "grid": {
            "import_limit_kw": g.import_limit_kw,
            "export_limit_kw": g.export_limit_kw,
            "shed_price_cents_per_kwh": g.shed_price_cents_per_kwh,
        },
        "ess": {
            "capacity_kwh": e.capacity_kwh,
            "charge_eff": e.charge_eff,
            "discharge_eff": e.discharge_eff,
            "power_limit_kw": e.power_limit_kw,
            "soc_min_pct": e.soc_min_pct,
            "soc_max_pct": e.soc_max_pct,
            "soc_init_pct": e.soc_init_pct,
        },
        "fleet": {
            "bus_count": f.bus_count,
            "battery_kwh": f.battery_kwh,
            "charge_eff": f.charge_eff,
            "charger_limit_kw": f.charger_limit_kw,
            "fleet_load_min_kw": f.fleet_load_min_kw,
            "fleet_load_max_kw": f.fleet_load_max_kw,
        },
        "pv": {
            "panel_area_m2": p.panel_area_m2,
            "panel_efficiency": p.panel_efficiency,
        },
    }


def station_config_from_dict(data: dict) -> StationConfig:
    def build(cls, key):
        section = dict(data.get(key, {}))
        if key == "time_grid":
            for int_field in ("steps_per_day", "hours_per_price_point"):
                if int_field in section:
                    section[int_field] = int(section[int_field])
        if key == "fleet" and "bus_count" in section:
            section["bus_count"] = int(section["bus_count"])
        return cls(**section)

    return StationConfig(
        time_grid=build(TimeGrid, "time_grid"),
        grid=build(GridConfig, "grid"),
        ess=build(EssConfig, "ess"),
        fleet=build(FleetConfig, "fleet"),
        pv=build(PvConfig, "pv"),
    )


def with_scenario_label(scenario: ScenarioInput, label: str) -> ScenarioInput:
    return replace(scenario, label=label)
