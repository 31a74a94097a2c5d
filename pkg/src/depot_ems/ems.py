"""Station day-ahead model: build the MILP, solve it, verify the result.

Variable blocks per step t: grid import/export (kW), ESS charge/discharge
(kW), shed load (kW), ESS SoC (%), plus the two mode binaries (grid
buy/sell, ESS charge/discharge). Per parked bus and step: charging power and
SoC. Per parking window: a departure-shortfall slack in SoC percent,
penalized at the shed price per kWh of unmet energy.

The feasibility checker re-evaluates every constraint family from the raw
schedule numbers without consulting the solver, so a schedule can be audited
independently of how it was produced.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .domain import (
    DaySchedule,
    ParkingSchedule,
    ScenarioInput,
    StationConfig,
    validate_config,
    validate_scenario,
    validate_schedule,
)
from .errors import SolverError
from .milp import (
    INFEASIBLE,
    OPTIMAL,
    MilpProblem,
    MilpSolution,
    SolveOptions,
    brute_force_milp,
    solve_milp,
)


@dataclass
class EmsModelHandle:
    """Assembled problem plus the (quantity, step, bus) -> column map."""

    problem: MilpProblem
    config: StationConfig
    scenario: ScenarioInput
    schedule: ParkingSchedule
    col: dict[tuple, int]
    window_chains: dict[tuple[str, int], list[int]]  # ordered steps per window
    step_import_price: np.ndarray
    step_export_price: np.ndarray


@dataclass(frozen=True)
class FeasibilityReport:
    violations: list[tuple[str, str, float]]  # (family, location, magnitude)
    max_violation: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return not self.violations


def build_day_model(
    scenario: ScenarioInput,
    config: StationConfig,
    schedule: ParkingSchedule,
) -> EmsModelHandle:
    """Assemble the day MILP for one scenario.

    Raises SCHEDULE_MISMATCH when a parking window lies outside the time
    grid, VALIDATION when any input violates its invariants.
    """
    validate_config(config)
    tg = config.time_grid
    T = tg.steps_per_day
    for bus, windows in schedule.windows.items():
        for k, w in enumerate(windows):
            if not (0 <= w.arrival_step < T and 0 <= w.departure_step <= T):
                raise SolverError(
                    "SCHEDULE_MISMATCH",
                    f"{bus} window {k} [{w.arrival_step}, {w.departure_step}) "
                    f"outside the {T}-step grid",
                )
    validate_schedule(schedule, tg)
    validate_scenario(scenario, tg)

    grid, ess, fleet = config.grid, config.ess, config.fleet
    dt = tg.step_hours
    c_im = tg.broadcast_prices(scenario.import_price_cents_per_kwh)
    c_ex = tg.broadcast_prices(scenario.export_price_cents_per_kwh)
    c_shed = grid.shed_price_cents_per_kwh

    p = MilpProblem()
    col: dict[tuple, int] = {}

    for t in range(T):
        col["im", t] = p.add_variable(f"P_im[{t}]", 0.0, grid.import_limit_kw, cost=c_im[t] * dt)
        col["ex", t] = p.add_variable(f"P_ex[{t}]", 0.0, grid.export_limit_kw, cost=-c_ex[t] * dt)
        col["ch", t] = p.add_variable(f"P_ch[{t}]", 0.0, ess.power_limit_kw)
        col["dis", t] = p.add_variable(f"P_dis[{t}]", 0.0, ess.power_limit_kw)
        col["shed", t] = p.add_variable(
            f"P_shed[{t}]", 0.0, fleet.fleet_load_max_resolved_kw, cost=c_shed * dt
        )
        col["soc", t] = p.add_variable(f"SoC_ESS[{t}]", ess.soc_min_pct, ess.soc_max_pct)
    for t in range(T):
        col["uG", t] = p.add_variable(f"u_G[{t}]", 0.0, 1.0, binary=True)
    for t in range(T):
        col["uE", t] = p.add_variable(f"U_ESS[{t}]", 0.0, 1.0, binary=True)

    # bus charging power and SoC only exist on parked steps
    window_chains: dict[tuple[str, int], list[int]] = {}
    parked: dict[int, list[tuple[str, int]]] = {t: [] for t in range(T)}
    slack_penalty = c_shed * fleet.battery_kwh / 100.0  # cents per SoC-percent
    for bus in schedule.bus_names:
        for k, w in enumerate(schedule.windows[bus]):
            chain = w.steps(T)
            window_chains[bus, k] = chain
            for s in chain:
                parked[s].append((bus, k))
                col["p", bus, s] = p.add_variable(
                    f"p[{bus},{s}]", 0.0, fleet.charger_limit_kw
                )
                col["bsoc", bus, s] = p.add_variable(f"SoC[{bus},{s}]", 0.0, 100.0)
            col["slack", bus, k] = p.add_variable(
                f"slack[{bus},{k}]", 0.0, 100.0, cost=slack_penalty
            )

    # power balance: im + dis + shed - ex - ch - sum(p) = -pv
    for t in range(T):
        coeffs = {
            col["im", t]: 1.0,
            col["dis", t]: 1.0,
            col["shed", t]: 1.0,
            col["ex", t]: -1.0,
            col["ch", t]: -1.0,
        }
        for bus, _k in parked[t]:
            coeffs[col["p", bus, t]] = -1.0
        p.add_constraint(coeffs, "=", -float(scenario.solar_kw[t]))

    # grid direction coupling
    for t in range(T):
        p.add_constraint({col["im", t]: 1.0, col["uG", t]: -grid.import_limit_kw}, "<=", 0.0)
        p.add_constraint(
            {col["ex", t]: 1.0, col["uG", t]: grid.export_limit_kw}, "<=", grid.export_limit_kw
        )
        p.exclusive_pairs.append((col["uG", t], col["im", t], col["ex", t]))

    # ESS direction coupling and SoC recursion
    ch_gain = 100.0 * ess.charge_eff * dt / ess.capacity_kwh
    dis_gain = 100.0 * dt / (ess.discharge_eff * ess.capacity_kwh)
    for t in range(T):
        p.add_constraint({col["ch", t]: 1.0, col["uE", t]: -ess.power_limit_kw}, "<=", 0.0)
        p.add_constraint(
            {col["dis", t]: 1.0, col["uE", t]: ess.power_limit_kw}, "<=", ess.power_limit_kw
        )
        p.exclusive_pairs.append((col["uE", t], col["ch", t], col["dis", t]))
        coeffs = {col["soc", t]: 1.0, col["ch", t]: -ch_gain, col["dis", t]: dis_gain}
        rhs = 0.0
        if t == 0:
            rhs = ess.soc_init_pct
        else:
            coeffs[col["soc", t - 1]] = -1.0
        p.add_constraint(coeffs, "=", rhs)
    # daily cycle: terminal SoC returns to the initial value
    p.add_constraint({col["soc", T - 1]: 1.0}, "=", ess.soc_init_pct)

    # fleet envelope and shed cap
    fleet_max = fleet.fleet_load_max_resolved_kw
    for t in range(T):
        members = parked[t]
        if members:
            load = {col["p", bus, t]: 1.0 for bus, _k in members}
            if fleet.fleet_load_min_kw > 0.0:
                p.add_constraint(load, ">=", fleet.fleet_load_min_kw)
            p.add_constraint(load, "<=", fleet_max)
            shed_cap = dict(load)
            shed_cap[col["shed", t]] = -1.0
            p.add_constraint(shed_cap, ">=", 0.0)
        else:
            if fleet.fleet_load_min_kw > 0.0:
                p.add_constraint({}, ">=", fleet.fleet_load_min_kw)  # infeasible by design
            p.add_constraint({col["shed", t]: 1.0}, "<=", 0.0)

    # per-bus SoC chains and departure requirements
    eb_gain = 100.0 * fleet.charge_eff * dt / fleet.battery_kwh
    for bus in schedule.bus_names:
        for k, w in enumerate(schedule.windows[bus]):
            chain = window_chains[bus, k]
            prev = None
            for s in chain:
                coeffs = {col["bsoc", bus, s]: 1.0, col["p", bus, s]: -eb_gain}
                rhs = 0.0
                if prev is None:
                    rhs = w.arrival_soc_pct
                else:
                    coeffs[col["bsoc", bus, prev]] = -1.0
                p.add_constraint(coeffs, "=", rhs)
                prev = s
            p.add_constraint(
                {col["bsoc", bus, chain[-1]]: 1.0, col["slack", bus, k]: 1.0},
                ">=",
                w.departure_target_soc_pct,
            )

    p.validate()
    return EmsModelHandle(
        problem=p,
        config=config,
        scenario=scenario,
        schedule=schedule,
        col=col,
        window_chains=window_chains,
        step_import_price=c_im,
        step_export_price=c_ex,
    )


def _round_binary(v: float) -> int:
    return int(round(v))


def extract_schedule(handle: EmsModelHandle, sol: MilpSolution) -> DaySchedule:
    """Turn a solver solution into a DaySchedule, replaying both SoC
    recursions from the power flows and cross-checking the solver values."""
    cfg = handle.config
    T = cfg.time_grid.steps_per_day
    dt = cfg.time_grid.step_hours
    x = sol.x
    col = handle.col

    def series(key: str) -> np.ndarray:
        return np.array([x[col[key, t]] for t in range(T)])

    im, ex = series("im"), series("ex")
    ch, dis = series("ch"), series("dis")
    shed = series("shed")
    soc_solver = series("soc")
    u_g = np.array([_round_binary(x[col["uG", t]]) for t in range(T)])
    u_e = np.array([_round_binary(x[col["uE", t]]) for t in range(T)])

    ess = cfg.ess
    soc_replay = np.empty(T)
    prev = ess.soc_init_pct
    for t in range(T):
        prev = (
            prev
            + 100.0 * ess.charge_eff * ch[t] * dt / ess.capacity_kwh
            - 100.0 * dis[t] * dt / (ess.discharge_eff * ess.capacity_kwh)
        )
        soc_replay[t] = prev
    drift = float(np.max(np.abs(soc_replay - soc_solver), initial=0.0))
    if drift > 1e-6:
        raise SolverError(
            "VALIDATION", f"ESS SoC recursion drifts from solver values by {drift:.2e}"
        )

    bus_p: dict[str, np.ndarray] = {}
    bus_soc: dict[str, np.ndarray] = {}
    slacks: dict[tuple[str, int], float] = {}
    eb_gain = 100.0 * cfg.fleet.charge_eff * dt / cfg.fleet.battery_kwh
    for bus in handle.schedule.bus_names:
        pvec = np.zeros(T)
        svec = np.full(T, np.nan)
        for k, w in enumerate(handle.schedule.windows[bus]):
            chain = handle.window_chains[bus, k]
            level = w.arrival_soc_pct
            for s in chain:
                pvec[s] = x[col["p", bus, s]]
                level = level + eb_gain * pvec[s]
                svec[s] = level
                got = x[col["bsoc", bus, s]]
                if abs(got - level) > 1e-6:
                    raise SolverError(
                        "VALIDATION",
                        f"bus {bus} SoC recursion drifts from solver value at step {s}",
                    )
            slacks[bus, k] = float(x[col["slack", bus, k]])
        bus_p[bus] = pvec
        bus_soc[bus] = svec

    return DaySchedule(
        status=sol.status,
        objective_cents=float(sol.objective),
        import_kw=im,
        export_kw=ex,
        ess_charge_kw=ch,
        ess_discharge_kw=dis,
        shed_kw=shed,
        grid_import_mode=u_g,
        ess_charge_mode=u_e,
        ess_soc_pct=soc_solver,
        bus_charge_kw=bus_p,
        bus_soc_pct=bus_soc,
        window_slack_pct=slacks,
        label=handle.scenario.label,
        solver_nodes=sol.node_count,
        solver_iterations=sol.iterations,
    )


def solve_day(handle: EmsModelHandle, options: SolveOptions | None = None) -> DaySchedule:
    """Solve the assembled day model and extract the schedule."""
    sol = solve_milp(handle.problem, options)
    if sol.status == INFEASIBLE:
        raise SolverError(
            "INFEASIBLE",
            "day model infeasible; with departure slacks this indicates solar "
            "power the station cannot absorb (check export/ESS limits) or a "
            "fleet_load_min_kw no parked fleet can meet",
        )
    if sol.status != OPTIMAL:
        raise SolverError(sol.status, f"solver stopped with status {sol.status}")
    return extract_schedule(handle, sol)


def solve_day_brute_force(handle: EmsModelHandle, max_binaries: int = 20) -> DaySchedule:
    """Oracle path for tests: exhaustive enumeration over the binaries."""
    sol = brute_force_milp(handle.problem, max_binaries=max_binaries)
    if sol.status != OPTIMAL:
        raise SolverError(sol.status, f"oracle stopped with status {sol.status}")
    return extract_schedule(handle, sol)


def check_feasibility(
    schedule: DaySchedule,
    scenario: ScenarioInput,
    config: StationConfig,
    parking: ParkingSchedule,
    tol: float = 1e-6,
) -> FeasibilityReport:
    """Re-evaluate every constraint family from raw schedule numbers."""
    v: list[tuple[str, str, float]] = []

    def flag(family: str, where: str, magnitude: float):
        if magnitude > tol:
            v.append((family, where, float(magnitude)))

    tg, grid, ess, fleet = config.time_grid, config.grid, config.ess, config.fleet
    T = tg.steps_per_day
    dt = tg.step_hours
    load = schedule.fleet_load_kw

    for t in range(T):
        balance = (
            schedule.import_kw[t]
            + schedule.ess_discharge_kw[t]
            + scenario.solar_kw[t]
            + schedule.shed_kw[t]
            - schedule.export_kw[t]
            - schedule.ess_charge_kw[t]
            - load[t]
        )
        flag("balance", f"t={t}", abs(balance))

        u = schedule.grid_import_mode[t]
        flag("grid_mode_binary", f"t={t}", abs(u - round(u)) + (0.0 if 0 <= u <= 1 else 1.0))
        flag("grid_import_cap", f"t={t}", schedule.import_kw[t] - grid.import_limit_kw * u)
        flag("grid_export_cap", f"t={t}", schedule.export_kw[t] - grid.export_limit_kw * (1 - u))
        flag("grid_import_nonneg", f"t={t}", -schedule.import_kw[t])
        flag("grid_export_nonneg", f"t={t}", -schedule.export_kw[t])

        ue = schedule.ess_charge_mode[t]
        flag("ess_mode_binary", f"t={t}", abs(ue - round(ue)) + (0.0 if 0 <= ue <= 1 else 1.0))
        flag("ess_charge_cap", f"t={t}", schedule.ess_charge_kw[t] - ess.power_limit_kw * ue)
        flag(
            "ess_discharge_cap",
            f"t={t}",
            schedule.ess_discharge_kw[t] - ess.power_limit_kw * (1 - ue),
        )
        flag("ess_charge_nonneg", f"t={t}", -schedule.ess_charge_kw[t])
        flag("ess_discharge_nonneg", f"t={t}", -schedule.ess_discharge_kw[t])

        flag("shed_nonneg", f"t={t}", -schedule.shed_kw[t])
        flag("shed_cap", f"t={t}", schedule.shed_kw[t] - load[t])

        if load[t] > 0 or fleet.fleet_load_min_kw > 0:
            parked_any = any(
                t in parking.parked_steps(bus, T) for bus in parking.bus_names
            )
            if parked_any:
                flag("fleet_min", f"t={t}", fleet.fleet_load_min_kw - load[t])
            flag("fleet_max", f"t={t}", load[t] - fleet.fleet_load_max_resolved_kw)

    # ESS SoC recursion, bounds, daily cycle
    prev = ess.soc_init_pct
    for t in range(T):
        expect = (
            prev
            + 100.0 * ess.charge_eff * schedule.ess_charge_kw[t] * dt / ess.capacity_kwh
            - 100.0 * schedule.ess_discharge_kw[t] * dt / (ess.discharge_eff * ess.capacity_kwh)
        )
        flag("ess_soc_recursion", f"t={t}", abs(schedule.ess_soc_pct[t] - expect))
        flag("ess_soc_lower", f"t={t}", ess.soc_min_pct - schedule.ess_soc_pct[t])
        flag("ess_soc_upper", f"t={t}", schedule.ess_soc_pct[t] - ess.soc_max_pct)
        prev = expect
    flag("ess_cyclic", "t=end", abs(schedule.ess_soc_pct[T - 1] - ess.soc_init_pct))

    # per-bus windows
    eb_gain = 100.0 * fleet.charge_eff * dt / fleet.battery_kwh
    for bus in parking.bus_names:
        p_vec = schedule.bus_charge_kw.get(bus)
        soc_vec = schedule.bus_soc_pct.get(bus)
        if p_vec is None or soc_vec is None:
            v.append(("eb_missing_series", bus, 1.0))
            continue
        allowed = parking.parked_steps(bus, T)
        for t in range(T):
            if t not in allowed:
                flag("eb_outside_window", f"{bus},t={t}", abs(p_vec[t]))
        for k, w in enumerate(parking.windows[bus]):
            chain = w.steps(T)
            level = w.arrival_soc_pct
            for s in chain:
                flag("eb_charge_nonneg", f"{bus},t={s}", -p_vec[s])
                flag("eb_charge_cap", f"{bus},t={s}", p_vec[s] - fleet.charger_limit_kw)
                level = level + eb_gain * p_vec[s]
                flag("eb_soc_recursion", f"{bus},t={s}", abs(soc_vec[s] - level))
                flag("eb_soc_cap", f"{bus},t={s}", soc_vec[s] - 100.0)
            slack = schedule.window_slack_pct.get((bus, k), 0.0)
            flag("eb_slack_nonneg", f"{bus},w={k}", -slack)
            flag(
                "eb_departure",
                f"{bus},w={k}",
                w.departure_target_soc_pct - (soc_vec[chain[-1]] + slack),
            )

    max_v = max((mag for _f, _w, mag in v), default=0.0)
    return FeasibilityReport(violations=v, max_violation=max_v, tolerance=tol)


# --- serialization consumed by the pipeline ---------------------------------


def schedule_to_csv(schedule: DaySchedule) -> str:
    """One row per step, one column per power/SoC series."""
    buses = sorted(schedule.bus_charge_kw)
    header = [
        "step",
        "import_kw",
        "export_kw",
        "ess_charge_kw",
        "ess_discharge_kw",
        "shed_kw",
        "grid_import_mode",
        "ess_charge_mode",
        "ess_soc_pct",
        "fleet_load_kw",
    ]
    header += [f"p_{b}_kw" for b in buses] + [f"soc_{b}_pct" for b in buses]
    out = io.StringIO()
    out.write(",".join(header) + "\n")
    load = schedule.fleet_load_kw
    T = len(schedule.import_kw)
    for t in range(T):
        row = [
            str(t),
            f"{schedule.import_kw[t]:.9g}",
            f"{schedule.export_kw[t]:.9g}",
            f"{schedule.ess_charge_kw[t]:.9g}",
            f"{schedule.ess_discharge_kw[t]:.9g}",
            f"{schedule.shed_kw[t]:.9g}",
            str(int(schedule.grid_import_mode[t])),
            str(int(schedule.ess_charge_mode[t])),
            f"{schedule.ess_soc_pct[t]:.9g}",
            f"{load[t]:.9g}",
        ]
        for b in buses:
            row.append(f"{schedule.bus_charge_kw[b][t]:.9g}")
        for b in buses:
            s = schedule.bus_soc_pct[b][t]
            row.append("" if np.isnan(s) else f"{s:.9g}")
        out.write(",".join(row) + "\n")
    return out.getvalue()


def schedule_summary(schedule: DaySchedule) -> dict:
    slacks = {
        f"{bus}#{k}": round(val, 9)
        for (bus, k), val in sorted(schedule.window_slack_pct.items())
    }
    return {
        "label": schedule.label,
        "status": schedule.status,
        "objective_cents": round(schedule.objective_cents, 6),
        "objective_dollars": round(schedule.objective_dollars, 8),
        "departure_slack_pct": slacks,
        "total_slack_pct": round(sum(schedule.window_slack_pct.values()), 9),
        "solver_nodes": schedule.solver_nodes,
        "solver_iterations": schedule.solver_iterations,
    }


def schedule_summary_json(schedule: DaySchedule) -> str:
    return json.dumps(schedule_summary(schedule), indent=2, sort_keys=True) + "\n"
