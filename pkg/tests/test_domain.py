"""Domain types: validation totality, time grid arithmetic, window geometry."""

import math

import numpy as np
import pytest

from depot_ems.domain import (
    EssConfig,
    FleetConfig,
    GridConfig,
    ParkingSchedule,
    ParkingWindow,
    ScenarioInput,
    StationConfig,
    TimeGrid,
    collect_violations,
    station_config_from_dict,
    station_config_to_dict,
    validate_config,
    validate_scenario,
    validate_schedule,
)
from depot_ems.errors import ValidationError


def test_reference_defaults_are_valid():
    # 500/100 kW grid, 600 kWh ESS at 30-90%, 20 buses with 60 kW chargers
    config = StationConfig()
    assert validate_config(config) is config
    assert config.grid.import_limit_kw == 500.0
    assert config.grid.export_limit_kw == 100.0
    assert config.grid.shed_price_cents_per_kwh == 100.0
    assert config.ess.capacity_kwh == 600.0
    assert config.ess.soc_init_pct == pytest.approx(55.0)  # 330 kWh of 600
    assert config.fleet.bus_count == 20
    assert config.fleet.charger_limit_kw == 60.0


def test_equal_soc_bounds_rejected():
    config = StationConfig(ess=EssConfig(soc_min_pct=50.0, soc_max_pct=50.0))
    with pytest.raises(ValidationError) as err:
        validate_config(config)
    assert any("soc" in path.lower() for path, _ in err.value.violations)


def test_zero_bus_station_is_valid():
    config = StationConfig(fleet=FleetConfig(bus_count=0))
    assert validate_config(config) is config


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_validation_total_on_nonfinite(bad):
    config = StationConfig(grid=GridConfig(import_limit_kw=bad))
    violations = collect_violations(config)
    assert violations, "non-finite input must be reported, not crash"


def test_all_violations_collected_at_once():
    config = StationConfig(
        grid=GridConfig(import_limit_kw=-1.0),
        ess=EssConfig(capacity_kwh=-5.0),
        fleet=FleetConfig(charger_limit_kw=-3.0),
    )
    violations = collect_violations(config)
    assert len(violations) >= 3


def test_time_grid_defaults_and_price_broadcast():
    tg = TimeGrid()
    assert tg.steps_per_day * tg.step_hours == pytest.approx(24.0)
    assert tg.price_points_per_day == 24
    hourly = np.arange(24.0)
    steps = tg.broadcast_prices(hourly)
    assert steps.shape == (96,)
    assert steps[0] == steps[3] == 0.0
    assert steps[4] == 1.0  # 01:00
    assert steps[95] == 23.0


def test_time_grid_invariants_enforced():
    with pytest.raises(ValidationError):
        validate_config(StationConfig(time_grid=TimeGrid(step_hours=0.3)))
    with pytest.raises(ValidationError):
        validate_config(StationConfig(time_grid=TimeGrid(hours_per_price_point=5)))


def test_step_of_clock():
    tg = TimeGrid()
    assert tg.step_of_clock(0, 0) == 0
    assert tg.step_of_clock(6, 0) == 24
    assert tg.step_of_clock(21, 15) == 85
    with pytest.raises(ValidationError):
        tg.step_of_clock(6, 7)  # not on the 15-minute lattice


def test_window_wrap_segments_and_steps():
    w = ParkingWindow(84, 12, 40.0, 90.0)
    assert w.wraps
    assert w.segments(96) == [(84, 96), (0, 12)]
    chain = w.steps(96)
    assert chain[0] == 84 and chain[-1] == 11 and len(chain) == 24


def test_schedule_overlap_rejected():
    sched = ParkingSchedule(
        windows={"A": (ParkingWindow(0, 10, 40, 90), ParkingWindow(8, 12, 40, 90))}
    )
    with pytest.raises(ValidationError):
        validate_schedule(sched, TimeGrid())


def test_schedule_soc_ordering_enforced():
    sched = ParkingSchedule(windows={"A": (ParkingWindow(0, 10, 80.0, 50.0),)})
    with pytest.raises(ValidationError):
        validate_schedule(sched, TimeGrid())


def test_scenario_shape_and_sign_checks():
    tg = TimeGrid()
    good = ScenarioInput(np.zeros(96), np.zeros(24), np.zeros(24))
    assert validate_scenario(good, tg) is good
    with pytest.raises(ValidationError):
        validate_scenario(ScenarioInput(np.zeros(95), np.zeros(24), np.zeros(24)), tg)
    with pytest.raises(ValidationError):
        validate_scenario(ScenarioInput(-np.ones(96), np.zeros(24), np.zeros(24)), tg)
    # negative prices are allowed
    neg = ScenarioInput(np.zeros(96), -np.ones(24), -np.ones(24))
    assert validate_scenario(neg, tg) is neg


def test_scenario_arrays_read_only():
    scen = ScenarioInput(np.zeros(96), np.zeros(24), np.zeros(24))
    with pytest.raises(ValueError):
        scen.solar_kw[0] = 1.0


def test_config_dict_round_trip():
    config = StationConfig(fleet=FleetConfig(bus_count=7, fleet_load_max_kw=250.0))
    doc = station_config_to_dict(config)
    assert station_config_from_dict(doc) == config


def test_fleet_load_max_default_resolves_to_all_chargers():
    fleet = FleetConfig(bus_count=12, charger_limit_kw=60.0)
    assert fleet.fleet_load_max_resolved_kw == pytest.approx(720.0)
