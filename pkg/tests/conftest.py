"""Shared builders for randomized station instances and tiny grids."""

from __future__ import annotations

import numpy as np
import pytest

from depot_ems.domain import (
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


def tiny_grid(steps: int) -> TimeGrid:
    assert 24 % steps == 0
    return TimeGrid(
        step_hours=24.0 / steps, steps_per_day=steps, hours_per_price_point=24 // steps
    )


def make_random_instance(
    rng: np.random.Generator,
    steps: int = 4,
    buses: int = 1,
    identical_prices: bool = False,
):
    """A random, always-feasible station day: peak solar stays below the
    export limit so every scenario can be absorbed."""
    grid = GridConfig(
        import_limit_kw=float(rng.uniform(50, 500)),
        export_limit_kw=float(rng.uniform(20, 200)),
        shed_price_cents_per_kwh=float(rng.uniform(10, 200)),
    )
    soc_min = float(rng.uniform(0, 40))
    soc_max = float(rng.uniform(60, 100))
    ess = EssConfig(
        capacity_kwh=float(rng.uniform(50, 800)),
        charge_eff=float(rng.uniform(0.7, 1.0)),
        discharge_eff=float(rng.uniform(0.7, 1.0)),
        power_limit_kw=float(rng.uniform(0, 150)),
        soc_min_pct=soc_min,
        soc_max_pct=soc_max,
        soc_init_pct=float(rng.uniform(soc_min, soc_max)),
    )
    fleet = FleetConfig(
        bus_count=buses,
        battery_kwh=float(rng.uniform(100, 500)),
        charge_eff=float(rng.uniform(0.7, 1.0)),
        charger_limit_kw=float(rng.uniform(20, 100)),
    )
    config = StationConfig(
        time_grid=tiny_grid(steps), grid=grid, ess=ess, fleet=fleet, pv=PvConfig()
    )

    windows = {}
    for b in range(buses):
        a = int(rng.integers(0, steps))
        length = int(rng.integers(1, steps))
        d = (a + length) % steps
        arrival = float(rng.uniform(10, 60))
        target = float(rng.uniform(arrival, 95))
        windows[f"bus{b}"] = (ParkingWindow(a, d, arrival, target),)
    schedule = ParkingSchedule(windows=windows)

    solar = rng.uniform(0, 0.9 * grid.export_limit_kw, steps)
    import_price = rng.normal(5.0, 4.0, steps)
    if identical_prices:
        export_price = import_price.copy()
    else:
        export_price = import_price * rng.uniform(0.5, 1.0, steps)
    scenario = ScenarioInput(
        solar_kw=solar,
        import_price_cents_per_kwh=import_price,
        export_price_cents_per_kwh=export_price,
    )
    return config, schedule, scenario


@pytest.fixture(scope="session")
def desk_bundle(tmp_path_factory):
    """A small synthetic bundle on disk, shared by pipeline/CLI tests."""
    from depot_ems import synth

    out = tmp_path_factory.mktemp("bundle")
    config = synth.desk_station_config()
    files = synth.write_bundle(out, config, days=25, seed=3)
    return files
