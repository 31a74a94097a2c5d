"""LP/MILP solvers: worked examples, the enumeration oracle, certificates,
determinism, and validation."""

import numpy as np
import pytest

from depot_ems.errors import SolverError, ValidationError
from depot_ems.milp import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    MilpProblem,
    SolveOptions,
    brute_force_milp,
    solve_lp,
    solve_milp,
)


def test_lp_single_variable_floor():
    p = MilpProblem()
    x = p.add_variable("x", 0, 10, cost=1.0)
    p.add_constraint({x: 1.0}, ">=", 3.0)
    sol = solve_lp(p)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(3.0, abs=1e-9)
    assert sol.x[0] == pytest.approx(3.0, abs=1e-9)


def test_lp_simplex_vertex():
    # minimize -x-y over x+y<=1, x,y in [0,1]: the three vertices give 0, -1, -1
    p = MilpProblem()
    x = p.add_variable("x", 0, 1, cost=-1.0)
    y = p.add_variable("y", 0, 1, cost=-1.0)
    p.add_constraint({x: 1.0, y: 1.0}, "<=", 1.0)
    sol = solve_lp(p)
    assert sol.objective == pytest.approx(-1.0, abs=1e-9)


def test_lp_no_constraints_zero_objective():
    p = MilpProblem()
    p.add_variable("x", 0, 1)
    sol = solve_lp(p)
    assert sol.status == OPTIMAL
    assert sol.objective == 0.0
    assert 0.0 <= sol.x[0] <= 1.0


def test_lp_infeasible_detected():
    p = MilpProblem()
    x = p.add_variable("x", 0, 1, cost=1.0)
    p.add_constraint({x: 1.0}, ">=", 2.0)
    assert solve_lp(p).status == INFEASIBLE


def test_lp_unbounded_detected():
    # only reachable through infinite bounds, which validate() forbids;
    # solve_lp takes the problem as given
    p = MilpProblem()
    p.add_variable("x", 0, np.inf, cost=-1.0)
    assert solve_lp(p).status == UNBOUNDED


def test_lp_certificate_reduced_costs_sign_consistent():
    rng = np.random.default_rng(9)
    for _ in range(40):
        n, m = int(rng.integers(2, 15)), int(rng.integers(1, 20))
        p = MilpProblem()
        los = rng.uniform(-3, 0, n)
        his = rng.uniform(0.5, 3, n)
        for j in range(n):
            p.add_variable(f"x{j}", los[j], his[j], cost=float(rng.normal()))
        for i in range(m):
            cols = rng.choice(n, min(n, 3), replace=False)
            p.add_constraint(
                {int(j): float(rng.normal()) for j in cols},
                str(rng.choice(["<=", "=", ">="])),
                float(rng.normal()),
            )
        sol = solve_lp(p)
        if sol.status != OPTIMAL:
            continue
        scale = 1e-6 * (1.0 + float(np.abs(sol.reduced_costs).max()))
        for j in range(n):
            at_lower = abs(sol.x[j] - los[j]) <= 1e-7
            at_upper = abs(sol.x[j] - his[j]) <= 1e-7
            if at_lower and not at_upper:
                assert sol.reduced_costs[j] >= -scale
            elif at_upper and not at_lower:
                assert sol.reduced_costs[j] <= scale
            elif not at_lower and not at_upper:
                assert abs(sol.reduced_costs[j]) <= scale


def test_milp_fixed_binaries_equal_lp():
    p = MilpProblem()
    b = p.add_variable("b", 1, 1, binary=True, cost=2.0)
    x = p.add_variable("x", 0, 5, cost=1.0)
    p.add_constraint({x: 1.0, b: -2.0}, ">=", 0.0)
    lp = solve_lp(p)
    milp = solve_milp(p)
    assert milp.status == OPTIMAL
    assert milp.objective == pytest.approx(lp.objective, abs=1e-9)


def test_milp_knapsack_pair():
    p = MilpProblem()
    b1 = p.add_variable("b1", 0, 1, binary=True, cost=-3.0)
    b2 = p.add_variable("b2", 0, 1, binary=True, cost=-2.0)
    p.add_constraint({b1: 1.0, b2: 1.0}, "<=", 1.0)
    sol = solve_milp(p)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-3.0, abs=1e-9)
    assert sol.x[b1] == pytest.approx(1.0, abs=1e-6)
    assert sol.x[b2] == pytest.approx(0.0, abs=1e-6)
    oracle = brute_force_milp(p)
    assert oracle.objective == pytest.approx(sol.objective, abs=1e-9)


def test_small_ems_instance_matches_oracle():
    from conftest import make_random_instance
    from depot_ems.ems import build_day_model

    rng = np.random.default_rng(123)
    config, schedule, scenario = make_random_instance(rng, steps=4, buses=1)
    handle = build_day_model(scenario, config, schedule)
    exact = solve_milp(handle.problem)
    oracle = brute_force_milp(handle.problem)
    assert exact.status == oracle.status == OPTIMAL
    assert exact.objective == pytest.approx(oracle.objective, abs=1e-6)


def test_brute_force_no_binaries_equals_lp():
    p = MilpProblem()
    x = p.add_variable("x", 0, 4, cost=1.0)
    p.add_constraint({x: 1.0}, ">=", 1.5)
    assert brute_force_milp(p).objective == pytest.approx(solve_lp(p).objective)


def test_brute_force_binary_cap():
    p = MilpProblem()
    for j in range(21):
        p.add_variable(f"b{j}", 0, 1, binary=True, cost=-1.0)
    with pytest.raises(SolverError) as err:
        brute_force_milp(p)
    assert err.value.code == "TOO_MANY_BINARIES"


def test_brute_force_all_assignments_infeasible():
    p = MilpProblem()
    b = p.add_variable("b", 0, 1, binary=True)
    x = p.add_variable("x", 0, 1, cost=1.0)
    p.add_constraint({x: 1.0, b: 1.0}, ">=", 3.0)
    assert brute_force_milp(p).status == INFEASIBLE


def test_oracle_equivalence_on_random_instances():
    # >= 200 random instances with <= 12 binaries, <= 30 continuous,
    # <= 40 constraints: branch-and-bound == enumeration within 1e-6.
    # Rows are anchored at a random integral point so instances stay feasible.
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(200):
        nb = int(rng.integers(1, 13))
        nc = int(rng.integers(0, 31))
        m = int(rng.integers(1, 41))
        n = nb + nc
        p = MilpProblem()
        anchor = np.empty(n)
        for j in range(nb):
            p.add_variable(f"b{j}", 0, 1, binary=True, cost=float(rng.normal()))
            anchor[j] = float(rng.integers(0, 2))
        for j in range(nc):
            lo = float(rng.uniform(-4, 0))
            hi = float(rng.uniform(0, 4))
            p.add_variable(f"x{j}", lo, hi, cost=float(rng.normal()))
            anchor[nb + j] = float(rng.uniform(lo, hi))
        for _i in range(m):
            nnz = int(rng.integers(1, min(6, n) + 1))
            cols = rng.choice(n, nnz, replace=False)
            coeffs = {int(j): float(rng.normal() * rng.choice([0.1, 1.0, 10.0])) for j in cols}
            at_anchor = sum(v * anchor[j] for j, v in coeffs.items())
            sense = str(rng.choice(["<=", "=", ">="], p=[0.6, 0.1, 0.3]))
            slack = abs(float(rng.normal()))
            rhs = {"<=": at_anchor + slack, ">=": at_anchor - slack, "=": at_anchor}[sense]
            p.add_constraint(coeffs, sense, rhs)
        exact = solve_milp(p)
        oracle = brute_force_milp(p, max_binaries=12)
        assert exact.status == oracle.status == OPTIMAL
        assert exact.objective == pytest.approx(oracle.objective, abs=1e-6)
        checked += 1
    assert checked == 200


def test_solver_determinism():
    rng = np.random.default_rng(8)
    p = MilpProblem()
    for j in range(8):
        p.add_variable(f"b{j}", 0, 1, binary=True, cost=float(rng.normal()))
    for j in range(6):
        p.add_variable(f"x{j}", -1, 2, cost=float(rng.normal()))
    for i in range(10):
        cols = rng.choice(14, 4, replace=False)
        p.add_constraint(
            {int(j): float(rng.normal()) for j in cols},
            str(rng.choice(["<=", ">="])),
            float(rng.normal()),
        )
    a = solve_milp(p)
    b = solve_milp(p)
    assert a.objective == b.objective
    assert np.array_equal(a.x, b.x)
    assert a.node_count == b.node_count


def test_relax_repair_matches_exact_on_ems_instance():
    from conftest import make_random_instance
    from depot_ems.ems import build_day_model

    rng = np.random.default_rng(77)
    for k in range(14):
        config, schedule, scenario = make_random_instance(
            rng, steps=4, buses=1, identical_prices=bool(k % 2)
        )
        handle = build_day_model(scenario, config, schedule)
        exact = solve_milp(handle.problem, SolveOptions(mode="exact"))
        fast = solve_milp(handle.problem, SolveOptions(mode="relax-repair"))
        assert fast.status == OPTIMAL
        assert fast.objective == pytest.approx(exact.objective, abs=1e-6)


def test_lp_relaxation_matches_scipy_on_ems_instances():
    # independent cross-check of the LP layer: the station model's relaxation
    # solved by an external solver must agree with the bounded simplex
    linprog = pytest.importorskip("scipy.optimize").linprog
    from conftest import make_random_instance
    from depot_ems.ems import build_day_model

    rng = np.random.default_rng(4242)
    for k in range(25):
        config, schedule, scenario = make_random_instance(
            rng, steps=int(rng.choice([4, 6])), buses=int(rng.integers(0, 3))
        )
        problem = build_day_model(scenario, config, schedule).problem
        mine = solve_lp(problem)
        n = problem.num_vars
        c = problem.cost_vector()
        a_ub, b_ub, a_eq, b_eq = [], [], [], []
        for coeffs, sense, rhs in problem.rows:
            row = np.zeros(n)
            for j, v in coeffs.items():
                row[j] = v
            if sense == "<=":
                a_ub.append(row), b_ub.append(rhs)
            elif sense == ">=":
                a_ub.append(-row), b_ub.append(-rhs)
            else:
                a_eq.append(row), b_eq.append(rhs)
        ref = linprog(
            c,
            A_ub=np.array(a_ub) if a_ub else None,
            b_ub=np.array(b_ub) if b_ub else None,
            A_eq=np.array(a_eq) if a_eq else None,
            b_eq=np.array(b_eq) if b_eq else None,
            bounds=list(zip(problem.lower, problem.upper)),
            method="highs",
        )
        assert ref.status == 0 and mine.status == OPTIMAL, f"instance {k}"
        assert mine.objective == pytest.approx(ref.fun, abs=1e-6 * (1 + abs(ref.fun)))


def test_validation_rejects_bad_problems():
    p = MilpProblem()
    p.add_variable("x", 0, np.inf)
    with pytest.raises(ValidationError):
        p.validate()

    p2 = MilpProblem()
    p2.add_variable("b", 0, 2, binary=True)
    with pytest.raises(ValidationError):
        p2.validate()

    p3 = MilpProblem()
    p3.add_variable("x", 0, 1)
    p3.add_constraint({5: 1.0}, "<=", 1.0)
    with pytest.raises(ValidationError):
        p3.validate()


def test_lp_text_dump():
    p = MilpProblem()
    x = p.add_variable("x", 0, 10, cost=1.5)
    b = p.add_variable("b", 0, 1, binary=True, cost=-2.0)
    p.add_constraint({x: 1.0, b: -3.0}, ">=", 0.5)
    text = p.to_lp_text()
    assert "Minimize" in text and "Subject To" in text
    assert "Binary" in text and " b" in text
    assert ">= 0.5" in text


def test_iteration_limit_status():
    p = MilpProblem()
    x = p.add_variable("x", 0, 10, cost=1.0)
    y = p.add_variable("y", 0, 10, cost=-2.0)
    p.add_constraint({x: 1.0, y: 1.0}, "<=", 8.0)
    p.add_constraint({x: 1.0, y: -1.0}, ">=", -5.0)
    sol = solve_lp(p, SolveOptions(max_iterations=1))
    assert sol.status == "ITER_LIMIT"
