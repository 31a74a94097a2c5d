"""Bundled synthetic inputs: a seasonal solar year, noisy day-ahead prices,
and reference parking plans.

The generator exists so the whole workflow runs out of the box without any
proprietary market or irradiance datasets. Solar days follow a smooth
seasonal envelope with multiplicative cloud noise; prices follow a
double-peak daily shape with seasonal drift, lognormal noise and occasional
spikes. Everything is deterministic in (config, days, seed).
"""

from __future__ import annotations

import datetime as _dt
import math
from pathlib import Path

import numpy as np

from .domain import (
    EssConfig,
    FleetConfig,
    GridConfig,
    ParkingSchedule,
    ParkingWindow,
    PvConfig,
    ScenarioInput,
    StationConfig,
    TimeGrid,
)
from .ingest import DaySeries, write_prices_csv, write_schedule_csv, write_solar_csv
from .util import write_csv, write_json
from .domain import station_config_to_dict

# two parking windows per bus, clock hours (end 24 = midnight); groups follow
# a realistic depot rotation and keep each bus's windows disjoint
_BUS_PLAN: list[tuple[str, tuple[int, int], tuple[int, int]]] = [
    ("A", (0, 6), (14, 18)),
    ("B", (6, 14), (18, 24)),
    ("C", (9, 13), (21, 3)),
    ("D", (3, 9), (14, 21)),
    ("E", (6, 12), (20, 24)),
    ("F", (0, 6), (12, 20)),
    ("G", (0, 6), (14, 18)),
    ("H", (6, 14), (18, 24)),
    ("I", (9, 13), (21, 3)),
    ("J", (3, 9), (14, 21)),
    ("K", (6, 12), (20, 24)),
    ("L", (0, 6), (12, 20)),
    ("M", (0, 6), (14, 18)),
    ("N", (6, 14), (18, 24)),
    ("O", (9, 13), (21, 3)),
    ("P", (3, 9), (14, 21)),
    ("Q", (6, 12), (20, 24)),
    ("R", (0, 6), (12, 20)),
    ("S", (0, 6), (14, 18)),
    ("T", (6, 14), (18, 24)),
]


def reference_station_config() -> StationConfig:
    """Full-scale reference station: 15-minute grid, 20 buses."""
    return StationConfig()


def desk_station_config() -> StationConfig:
    """Small hourly-grid station for fast experiments and tests. Sized so the
    fleet plus grid export can always absorb peak solar."""
    return StationConfig(
        time_grid=TimeGrid(step_hours=1.0, steps_per_day=24, hours_per_price_point=1),
        grid=GridConfig(),
        ess=EssConfig(),
        fleet=FleetConfig(bus_count=8, battery_kwh=300.0, charger_limit_kw=60.0),
        pv=PvConfig(),
    )


def default_parking_schedule(
    config: StationConfig, seed: int = 0
) -> ParkingSchedule:
    """Two windows per bus from the reference rotation, arrival SoC drawn
    once per window, departure target 90%."""
    tg = config.time_grid
    T = tg.steps_per_day
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 77]))
    windows: dict[str, tuple[ParkingWindow, ...]] = {}
    for name, (s1, e1), (s2, e2) in _BUS_PLAN[: config.fleet.bus_count]:
        ws = []
        for s, e in ((s1, e1), (s2, e2)):
            start = tg.step_of_clock(s, 0)
            end = T if e == 24 else tg.step_of_clock(e, 0)
            arrival = float(rng.uniform(35.0, 55.0))
            ws.append(
                ParkingWindow(
                    arrival_step=start,
                    departure_step=end,
                    arrival_soc_pct=round(arrival, 2),
                    departure_target_soc_pct=90.0,
                )
            )
        windows[name] = tuple(ws)
    return ParkingSchedule(windows=windows)


def _dates(days: int) -> list[str]:
    start = _dt.date(2023, 1, 1)
    return [(start + _dt.timedelta(days=i)).isoformat() for i in range(days)]


def synthetic_solar_year(
    config: StationConfig, days: int, seed: int
) -> list[DaySeries]:
    """Seasonal clear-sky envelope x daily cloud factor x smooth intra-day
    noise, converted through the configured panel area/efficiency."""
    tg, pv = config.time_grid, config.pv
    T = tg.steps_per_day
    t_hours = (np.arange(T) + 0.5) * tg.step_hours
    factor = pv.panel_area_m2 * pv.panel_efficiency / 1000.0
    out = []
    for i, date in enumerate(_dates(days)):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 101, i]))
        season = math.cos(2.0 * math.pi * (i - 172) / 365.25)  # +1 midsummer
        daylight = 6.0 + 3.0 * season  # half-length of the bright window
        peak_ghi = 1000.0 * (0.62 + 0.38 * season)
        up = (t_hours - (12.0 - daylight)) / (2.0 * daylight)
        shape = np.clip(np.sin(np.pi * np.clip(up, 0.0, 1.0)), 0.0, None) ** 1.3
        cloud = float(np.clip(rng.beta(4.0, 1.6), 0.05, 1.0))
        wobble = 1.0 + 0.1 * np.sin(
            2.0 * np.pi * t_hours / 24.0 * rng.uniform(1.0, 3.0) + rng.uniform(0, 6.28)
        )
        ghi = np.clip(peak_ghi * shape * cloud * wobble, 0.0, None)
        ghi[ghi < 1e-9] = 0.0  # keep night steps exactly dark
        out.append(DaySeries(date=date, values=ghi * factor))
    return out


def synthetic_price_year(config: StationConfig, days: int, seed: int) -> list[DaySeries]:
    """Hourly pool-price-like series in cents/kWh: double-peak daily shape,
    seasonal drift, lognormal noise, rare spikes."""
    npp = config.time_grid.price_points_per_day
    hours = (np.arange(npp) + 0.5) * config.time_grid.hours_per_price_point
    out = []
    for i, date in enumerate(_dates(days)):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), 202, i]))
        base = 5.5 + 1.2 * math.cos(2.0 * math.pi * (i - 15) / 365.25)
        shape = (
            1.0
            + 0.35 * np.exp(-0.5 * ((hours - 8.0) / 2.0) ** 2)
            + 0.45 * np.exp(-0.5 * ((hours - 19.0) / 2.5) ** 2)
            - 0.25 * np.exp(-0.5 * ((hours - 3.5) / 2.5) ** 2)
        )
        noise = np.exp(rng.normal(0.0, 0.16, npp))
        price = base * shape * noise
        if rng.random() < 0.05:
            spikes = rng.choice(npp, size=rng.integers(1, 3), replace=False)
            price[spikes] *= rng.uniform(2.0, 5.0, size=len(spikes))
        out.append(DaySeries(date=date, values=price))
    return out


def synthetic_scenarios(
    config: StationConfig, days: int, seed: int
) -> list[ScenarioInput]:
    solar = synthetic_solar_year(config, days, seed)
    price = synthetic_price_year(config, days, seed)
    return [
        ScenarioInput(
            solar_kw=s.values,
            import_price_cents_per_kwh=p.values,
            export_price_cents_per_kwh=p.values,
            label=p.date,
        )
        for p, s in zip(price, solar)
    ]


def write_bundle(
    out_dir: str | Path, config: StationConfig, days: int, seed: int
) -> dict[str, str]:
    """Emit station.json plus prices/solar/schedule/SoC-record CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    solar = synthetic_solar_year(config, days, seed)
    price = synthetic_price_year(config, days, seed)
    schedule = default_parking_schedule(config, seed)

    write_json(out / "station.json", station_config_to_dict(config))
    write_prices_csv(out / "prices.csv", price)
    write_solar_csv(out / "solar.csv", solar, config.pv.panel_area_m2, config.pv.panel_efficiency)
    write_schedule_csv(out / "schedule.csv", schedule, config.time_grid)
    rows = []
    for bus in schedule.bus_names:
        for k, w in enumerate(schedule.windows[bus]):
            rows.append([bus, k, w.arrival_soc_pct, w.departure_target_soc_pct])
    write_csv(out / "soc_records.csv", ["bus", "window", "arrival_soc_pct", "departure_soc_pct"], rows)
    return {
        "station": str(out / "station.json"),
        "prices": str(out / "prices.csv"),
        "solar": str(out / "solar.csv"),
        "schedule": str(out / "schedule.csv"),
        "soc_records": str(out / "soc_records.csv"),
    }
