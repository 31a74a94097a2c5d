"""LP front end, best-bound branch-and-bound, and the enumeration oracle."""

from __future__ import annotations

import heapq
import itertools

import numpy as np

from ..errors import SolverError
from .problem import (
    INFEASIBLE,
    ITER_LIMIT,
    NODE_LIMIT,
    OPTIMAL,
    UNBOUNDED,
    LpSolution,
    MilpProblem,
    MilpSolution,
    SolveOptions,
)
from .simplex import CanonicalLp, canonical_bounds, canonicalize, solve_canonical


def solve_lp(
    problem: MilpProblem,
    options: SolveOptions | None = None,
    lower: np.ndarray | None = None,
    upper: np.ndarray | None = None,
) -> LpSolution:
    """Solve the LP relaxation (binaries relaxed to their [0,1] bounds)."""
    opt = options or SolveOptions()
    canon = canonicalize(problem)
    lo = np.asarray(problem.lower if lower is None else lower, dtype=float)
    hi = np.asarray(problem.upper if upper is None else upper, dtype=float)
    lb, ub = canonical_bounds(canon, lo, hi)
    return solve_canonical(
        canon,
        lb,
        ub,
        feas_tol=opt.feas_tol,
        max_iterations=opt.max_iterations,
        bland_threshold=opt.bland_threshold,
    )


def _node_lp(canon: CanonicalLp, lo, hi, opt: SolveOptions) -> LpSolution:
    lb, ub = canonical_bounds(canon, lo, hi)
    return solve_canonical(
        canon,
        lb,
        ub,
        feas_tol=opt.feas_tol,
        max_iterations=opt.max_iterations,
        bland_threshold=opt.bland_threshold,
    )


def _fractional(x: np.ndarray, bins: np.ndarray, int_tol: float) -> np.ndarray:
    frac = np.abs(x[bins] - np.round(x[bins]))
    return bins[frac > int_tol]


def _repair_assignment(problem: MilpProblem, x: np.ndarray, int_tol: float) -> dict[int, float]:
    """Integral binary assignment suggested by the relaxation: exclusive
    pairs pick the dominant flow direction, everything else rounds."""
    fix: dict[int, float] = {}
    for u, on_var, off_var in problem.exclusive_pairs:
        fix[u] = 1.0 if x[on_var] >= x[off_var] else 0.0
    for j in problem.binary_indices:
        if j not in fix:
            fix[j] = float(np.round(x[j]))
    return fix


def solve_milp(problem: MilpProblem, options: SolveOptions | None = None) -> MilpSolution:
    """Exact branch-and-bound (best-bound node order, most-fractional
    branching). With options.mode == "relax-repair", first try to round the
    root relaxation via the problem's exclusive-pair structure and accept the
    result when it provably closes the gap; otherwise fall back to exact."""
    opt = options or SolveOptions()
    problem.validate()
    canon = canonicalize(problem)
    lo0 = np.asarray(problem.lower, dtype=float)
    hi0 = np.asarray(problem.upper, dtype=float)
    bins = np.asarray(problem.binary_indices, dtype=np.int64)

    root = _node_lp(canon, lo0, hi0, opt)
    if root.status in (INFEASIBLE, UNBOUNDED, ITER_LIMIT):
        return MilpSolution(root.status, np.nan, root.x, np.nan, 1, root.iterations)

    iterations = root.iterations
    nodes = 1

    def gap(value: float) -> float:
        return opt.gap_abs + opt.gap_rel * abs(value)

    frac = _fractional(root.x, bins, opt.int_tol)
    if frac.size == 0:
        return MilpSolution(OPTIMAL, root.objective, root.x, root.objective, nodes, iterations)

    # primal heuristic: fix binaries per the relaxation and re-solve
    incumbent: LpSolution | None = None
    fix = _repair_assignment(problem, root.x, opt.int_tol)
    lo_fix, hi_fix = lo0.copy(), hi0.copy()
    ok = True
    for j, v in fix.items():
        if v < lo0[j] - 0.5 or v > hi0[j] + 0.5:
            ok = False
            break
        lo_fix[j] = hi_fix[j] = v
    if ok:
        rep = _node_lp(canon, lo_fix, hi_fix, opt)
        nodes += 1
        iterations += rep.iterations
        if rep.status == OPTIMAL:
            incumbent = rep
            if rep.objective - root.objective <= gap(rep.objective):
                return MilpSolution(
                    OPTIMAL, rep.objective, rep.x, root.objective, nodes, iterations
                )
    if opt.mode == "relax-repair" and incumbent is not None:
        # accepted only when the proof above closed the gap; otherwise exact
        pass

    counter = itertools.count()
    heap: list[tuple[float, int, np.ndarray, np.ndarray, np.ndarray]] = []
    heapq.heappush(heap, (root.objective, next(counter), lo0, hi0, root.x))
    best = incumbent
    best_obj = incumbent.objective if incumbent is not None else np.inf

    while heap:
        bound, _, lo, hi, xrel = heapq.heappop(heap)
        if best is not None and bound >= best_obj - gap(best_obj):
            return MilpSolution(OPTIMAL, best_obj, best.x, bound, nodes, iterations)
        if nodes >= opt.node_limit:
            obj = best_obj if best is not None else np.nan
            x = best.x if best is not None else np.full(problem.num_vars, np.nan)
            return MilpSolution(NODE_LIMIT, obj, x, bound, nodes, iterations)

        frac = _fractional(xrel, bins, opt.int_tol)
        j = int(frac[np.argmax(np.abs(xrel[frac] - np.round(xrel[frac])))]) if frac.size else -1
        if j < 0:
            continue
        for v in (0.0, 1.0):
            lo_c, hi_c = lo.copy(), hi.copy()
            lo_c[j] = hi_c[j] = v
            child = _node_lp(canon, lo_c, hi_c, opt)
            nodes += 1
            iterations += child.iterations
            if child.status == ITER_LIMIT:
                # an unresolved node cannot be pruned; give up honestly
                obj = best_obj if best is not None else np.nan
                x = best.x if best is not None else np.full(problem.num_vars, np.nan)
                return MilpSolution(ITER_LIMIT, obj, x, bound, nodes, iterations)
            if child.status != OPTIMAL:
                continue
            if best is not None and child.objective >= best_obj - gap(best_obj):
                continue
            cfrac = _fractional(child.x, bins, opt.int_tol)
            if cfrac.size == 0:
                if best is None or child.objective < best_obj:
                    best = child
                    best_obj = child.objective
            else:
                heapq.heappush(
                    heap, (child.objective, next(counter), lo_c, hi_c, child.x)
                )

    if best is None:
        return MilpSolution(INFEASIBLE, np.nan, np.full(problem.num_vars, np.nan), np.nan, nodes, iterations)
    return MilpSolution(OPTIMAL, best_obj, best.x, best_obj, nodes, iterations)


def brute_force_milp(problem: MilpProblem, max_binaries: int = 20) -> MilpSolution:
    """Test oracle: enumerate every binary assignment, solve each LP, return
    the best. Only meant for small instances."""
    problem.validate()
    bins = problem.binary_indices
    if len(bins) > max_binaries:
        raise SolverError(
            "TOO_MANY_BINARIES",
            f"{len(bins)} binaries exceed the enumeration limit {max_binaries}",
        )
    canon = canonicalize(problem)
    lo0 = np.asarray(problem.lower, dtype=float)
    hi0 = np.asarray(problem.upper, dtype=float)
    opt = SolveOptions()

    best: LpSolution | None = None
    iterations = 0
    count = 0
    for assignment in itertools.product((0.0, 1.0), repeat=len(bins)):
        if any(v < lo0[j] or v > hi0[j] for j, v in zip(bins, assignment)):
            continue
        lo, hi = lo0.copy(), hi0.copy()
        for j, v in zip(bins, assignment):
            lo[j] = hi[j] = v
        sol = _node_lp(canon, lo, hi, opt)
        count += 1
        iterations += sol.iterations
        if sol.status == OPTIMAL and (best is None or sol.objective < best.objective - 1e-12):
            best = sol
    if best is None:
        return MilpSolution(
            INFEASIBLE, np.nan, np.full(problem.num_vars, np.nan), np.nan, count, iterations
        )
    return MilpSolution(OPTIMAL, best.objective, best.x, best.objective, count, iterations)
