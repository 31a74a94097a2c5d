"""Bounded-variable two-phase primal simplex.

The LP is canonicalized once per problem: rows scaled to unit max-abs,
inequalities given slack columns, and the matrix stored column-sparse.
Branch-and-bound nodes reuse the canonical form and only swap bound vectors.

Phase 1 starts from a slack basis where the slack is feasible and an
artificial column elsewhere; artificial columns are implicit (a signed unit
column per row) and never re-enter the basis. The working basis inverse is
kept dense and updated per pivot, with periodic refactorization. Dantzig
pricing switches to Bland's rule after a run of degenerate pivots, which
guarantees termination on the highly degenerate scheduling LPs.

The whole solve runs inside one nopython-compiled driver so that tiny LPs
(the brute-force oracle grinds through tens of thousands of them) cost tens
of microseconds each.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .problem import (
    EQ,
    GE,
    INFEASIBLE,
    ITER_LIMIT,
    LE,
    OPTIMAL,
    UNBOUNDED,
    LpSolution,
    MilpProblem,
)

INF = np.inf

# vstat codes
_NB_LO, _NB_UP, _BASIC, _NB_FIX = 0, 1, 2, 3

# driver return codes
_CODE_OPT, _CODE_INFEAS, _CODE_ITER, _CODE_UNBOUNDED = 0, 1, 3, 4

_STATUS_OF_CODE = {
    _CODE_OPT: OPTIMAL,
    _CODE_INFEAS: INFEASIBLE,
    _CODE_ITER: ITER_LIMIT,
    _CODE_UNBOUNDED: UNBOUNDED,
}


@dataclass
class CanonicalLp:
    """Scaled column-sparse standard form shared across bound variations."""

    n_struct: int
    n_cols: int  # structural + slack columns
    m: int
    colptr: np.ndarray
    colrows: np.ndarray
    colvals: np.ndarray
    b: np.ndarray  # scaled rhs
    row_scale: np.ndarray
    senses: np.ndarray  # 0 '<=', 1 '=', 2 '>='
    slack_col_of_row: np.ndarray  # -1 for equality rows
    cost: np.ndarray  # structural costs padded with zeros for slacks


def canonicalize(problem: MilpProblem) -> CanonicalLp:
    m = problem.num_rows
    n = problem.num_vars
    sense_code = {LE: 0, EQ: 1, GE: 2}

    entries_per_col: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    b = np.zeros(m)
    senses = np.zeros(m, dtype=np.int8)
    scale = np.ones(m)
    for i, (coeffs, sense, rhs) in enumerate(problem.rows):
        senses[i] = sense_code[sense]
        mx = max((abs(v) for v in coeffs.values()), default=0.0)
        s = mx if mx > 0 else 1.0
        scale[i] = s
        b[i] = rhs / s
        for j, v in coeffs.items():
            if v != 0.0:
                entries_per_col[j].append((i, v / s))

    slack_col_of_row = np.full(m, -1, dtype=np.int64)
    slack_entries: list[tuple[int, float]] = []
    for i in range(m):
        if senses[i] == 0:
            slack_entries.append((i, 1.0))
        elif senses[i] == 2:
            slack_entries.append((i, -1.0))
    n_cols = n + len(slack_entries)

    colptr = np.zeros(n_cols + 1, dtype=np.int64)
    rows_list: list[int] = []
    vals_list: list[float] = []
    for j in range(n):
        ents = sorted(entries_per_col[j])
        colptr[j + 1] = colptr[j] + len(ents)
        rows_list.extend(e[0] for e in ents)
        vals_list.extend(e[1] for e in ents)
    for k, (i, v) in enumerate(slack_entries):
        col = n + k
        slack_col_of_row[i] = col
        colptr[col + 1] = colptr[col] + 1
        rows_list.append(i)
        vals_list.append(v)

    cost = np.zeros(n_cols)
    for j, v in problem.cost.items():
        cost[j] = v

    return CanonicalLp(
        n_struct=n,
        n_cols=n_cols,
        m=m,
        colptr=colptr,
        colrows=np.asarray(rows_list, dtype=np.int64),
        colvals=np.asarray(vals_list, dtype=np.float64),
        b=b,
        row_scale=scale,
        senses=senses,
        slack_col_of_row=slack_col_of_row,
        cost=cost,
    )


def canonical_bounds(canon: CanonicalLp, lower, upper) -> tuple[np.ndarray, np.ndarray]:
    """Full lb/ub vectors: structural bounds followed by slack [0, inf)."""
    lb = np.zeros(canon.n_cols)
    ub = np.full(canon.n_cols, INF)
    lb[: canon.n_struct] = lower
    ub[: canon.n_struct] = upper
    return lb, ub


@njit(cache=True, nogil=True)
def _build_binv(colptr, colrows, colvals, art_sign, basis, n_cols, m):
    B = np.zeros((m, m))
    for k in range(m):
        col = basis[k]
        if col >= n_cols:
            i = col - n_cols
            B[i, k] = art_sign[i]
        else:
            for p in range(colptr[col], colptr[col + 1]):
                B[colrows[p], k] = colvals[p]
    return np.linalg.inv(B)


@njit(cache=True, nogil=True)
def _recompute_xb(colptr, colrows, colvals, b, lb, ub, vstat, basis, binv, n_cols, m):
    beff = b.copy()
    for j in range(n_cols):
        st = vstat[j]
        if st == _BASIC:
            continue
        xj = ub[j] if st == _NB_UP else lb[j]
        if xj != 0.0:
            for p in range(colptr[j], colptr[j + 1]):
                beff[colrows[p]] -= colvals[p] * xj
    # nonbasic artificials always sit at zero, so they contribute nothing
    xb = np.zeros(m)
    for i in range(m):
        acc = 0.0
        for k in range(m):
            acc += binv[i, k] * beff[k]
        xb[i] = acc
    return xb


@njit(cache=True, nogil=True)
def _phase(
    colptr,
    colrows,
    colvals,
    art_sign,
    b,
    c,
    lb,
    ub,
    vstat,
    basis,
    xb,
    binv,
    n_cols,
    m,
    dj_tol,
    maxiter,
    bland_after,
    refactor_every,
):
    """Run simplex iterations until the phase converges. Mutates vstat,
    basis, xb, binv in place. Returns (code, iterations)."""
    piv_tol = 1e-9
    degen_tol = 1e-10
    it = 0
    degen_run = 0
    pivots_since_refactor = 0
    y = np.zeros(m)
    r = np.zeros(n_cols)

    while True:
        if it >= maxiter:
            return _CODE_ITER, it
        it += 1

        # BTRAN: y = c_B @ binv, skipping zero basic costs
        for k in range(m):
            y[k] = 0.0
        for i in range(m):
            cbi = c[basis[i]]
            if cbi != 0.0:
                for k in range(m):
                    y[k] += cbi * binv[i, k]

        # reduced costs on structural + slack columns via sparse dot
        for j in range(n_cols):
            acc = 0.0
            for p in range(colptr[j], colptr[j + 1]):
                acc += y[colrows[p]] * colvals[p]
            r[j] = c[j] - acc

        use_bland = degen_run > bland_after

        # entering variable
        q = -1
        best = dj_tol
        for j in range(n_cols):
            st = vstat[j]
            if st == _NB_LO:
                viol = -r[j]
            elif st == _NB_UP:
                viol = r[j]
            else:
                continue
            if viol > best:
                q = j
                if use_bland:
                    break
                best = viol
        if q < 0:
            return _CODE_OPT, it

        dirn = 1.0 if vstat[q] == _NB_LO else -1.0

        # FTRAN: w = binv @ A[:, q]
        w = np.zeros(m)
        for k in range(m):
            acc = 0.0
            for p in range(colptr[q], colptr[q + 1]):
                acc += binv[k, colrows[p]] * colvals[p]
            w[k] = acc

        # ratio test
        t_best = ub[q] - lb[q]  # bound-flip distance (may be inf)
        leave = -1
        leave_to_upper = False
        best_piv = 0.0
        for i in range(m):
            delta = -dirn * w[i]
            bi = basis[i]
            if delta < -piv_tol:
                num = xb[i] - lb[bi]
                if num < 0.0:
                    num = 0.0
                t = num / (-delta)
                hit_upper = False
            elif delta > piv_tol:
                u = ub[bi]
                if u == INF:
                    continue
                num = u - xb[i]
                if num < 0.0:
                    num = 0.0
                t = num / delta
                hit_upper = True
            else:
                continue
            if t < t_best - 1e-10:
                t_best = t
                leave = i
                leave_to_upper = hit_upper
                best_piv = abs(w[i])
            elif t <= t_best + 1e-10 and leave >= 0:
                if use_bland:
                    if basis[i] < basis[leave]:
                        leave = i
                        leave_to_upper = hit_upper
                        best_piv = abs(w[i])
                elif abs(w[i]) > best_piv:
                    leave = i
                    leave_to_upper = hit_upper
                    best_piv = abs(w[i])

        if t_best == INF:
            return _CODE_UNBOUNDED, it

        t = t_best
        if t <= degen_tol:
            degen_run += 1
            t = 0.0
        else:
            degen_run = 0

        if t != 0.0:
            for i in range(m):
                if w[i] != 0.0:
                    xb[i] -= dirn * w[i] * t

        if leave < 0:
            # bound flip, no basis change
            vstat[q] = _NB_UP if vstat[q] == _NB_LO else _NB_LO
            continue

        piv = w[leave]
        if abs(piv) < 1e-11:
            # pivot too small to trust: refactor and retry the iteration
            binv[:, :] = _build_binv(colptr, colrows, colvals, art_sign, basis, n_cols, m)
            xb[:] = _recompute_xb(
                colptr, colrows, colvals, b, lb, ub, vstat, basis, binv, n_cols, m
            )
            pivots_since_refactor = 0
            continue

        out_col = basis[leave]
        if lb[out_col] == ub[out_col]:
            vstat[out_col] = _NB_FIX
        else:
            vstat[out_col] = _NB_UP if leave_to_upper else _NB_LO

        xq = (lb[q] + t) if dirn > 0.0 else (ub[q] - t)
        basis[leave] = q
        vstat[q] = _BASIC
        xb[leave] = xq

        # eta update of the explicit inverse
        inv_piv = 1.0 / piv
        for k in range(m):
            binv[leave, k] *= inv_piv
        for i in range(m):
            if i == leave:
                continue
            wi = w[i]
            if wi != 0.0:
                for k in range(m):
                    binv[i, k] -= wi * binv[leave, k]

        pivots_since_refactor += 1
        if pivots_since_refactor >= refactor_every:
            binv[:, :] = _build_binv(colptr, colrows, colvals, art_sign, basis, n_cols, m)
            xb[:] = _recompute_xb(
                colptr, colrows, colvals, b, lb, ub, vstat, basis, binv, n_cols, m
            )
            pivots_since_refactor = 0


@njit(cache=True, nogil=True)
def _solve_two_phase(
    colptr,
    colrows,
    colvals,
    b,
    senses,
    slack_col_of_row,
    cost,
    lb_in,
    ub_in,
    n_cols,
    m,
    maxiter,
    bland_after,
):
    """Full two-phase driver. Returns (code, x_full, y_scaled, iterations)."""
    refactor_every = max(150, min(2000, m))

    # bounds for structural + slack + artificial columns
    lb = np.zeros(n_cols + m)
    ub = np.full(n_cols + m, INF)
    for j in range(n_cols):
        lb[j] = lb_in[j]
        ub[j] = ub_in[j]

    vstat = np.zeros(n_cols + m, dtype=np.int8)
    for j in range(n_cols):
        if lb[j] == ub[j]:
            vstat[j] = _NB_FIX
        elif np.isfinite(ub[j]) and abs(ub[j]) < abs(lb[j]):
            vstat[j] = _NB_UP
        else:
            vstat[j] = _NB_LO

    # residual of each row at the nonbasic point
    resid = b.copy()
    for j in range(n_cols):
        xj = ub[j] if vstat[j] == _NB_UP else lb[j]
        if xj != 0.0:
            for p in range(colptr[j], colptr[j + 1]):
                resid[colrows[p]] -= colvals[p] * xj

    art_sign = np.ones(m)
    basis = np.empty(m, dtype=np.int64)
    xb = np.empty(m)
    c1 = np.zeros(n_cols + m)
    need_art = 0.0
    for i in range(m):
        if resid[i] < 0.0:
            art_sign[i] = -1.0
        scol = slack_col_of_row[i]
        use_slack = False
        val = 0.0
        if scol >= 0:
            if senses[i] == 0 and resid[i] >= 0.0:
                use_slack = True
                val = resid[i]
            elif senses[i] == 2 and resid[i] <= 0.0:
                use_slack = True
                val = -resid[i]
        if use_slack:
            basis[i] = scol
            vstat[scol] = _BASIC
            xb[i] = val
        else:
            basis[i] = n_cols + i
            vstat[n_cols + i] = _BASIC
            xb[i] = abs(resid[i])
            c1[n_cols + i] = 1.0
            need_art += abs(resid[i])

    binv = _build_binv(colptr, colrows, colvals, art_sign, basis, n_cols, m)

    iters = 0
    bmax = 0.0
    for i in range(m):
        if abs(b[i]) > bmax:
            bmax = abs(b[i])

    if need_art > 0.0:
        code, it1 = _phase(
            colptr, colrows, colvals, art_sign, b, c1, lb, ub,
            vstat, basis, xb, binv, n_cols, m,
            1e-9, maxiter, bland_after, refactor_every,
        )
        iters += it1
        if code == _CODE_ITER:
            return _CODE_ITER, np.zeros(n_cols), np.zeros(m), np.zeros(n_cols), iters
        phase1_obj = 0.0
        for i in range(m):
            if basis[i] >= n_cols and xb[i] > 0.0:
                phase1_obj += xb[i]
        if phase1_obj > 1e-7 * (1.0 + bmax):
            return _CODE_INFEAS, np.zeros(n_cols), np.zeros(m), np.zeros(n_cols), iters

    # pin artificials to zero for phase 2
    for i in range(m):
        ub[n_cols + i] = 0.0
        if vstat[n_cols + i] != _BASIC:
            vstat[n_cols + i] = _NB_FIX
    c2 = np.zeros(n_cols + m)
    cmax = 0.0
    for j in range(n_cols):
        c2[j] = cost[j]
        if abs(cost[j]) > cmax:
            cmax = abs(cost[j])
    dj_tol2 = 1e-9 * (cmax if cmax > 1.0 else 1.0)

    code, it2 = _phase(
        colptr, colrows, colvals, art_sign, b, c2, lb, ub,
        vstat, basis, xb, binv, n_cols, m,
        dj_tol2, maxiter, bland_after, refactor_every,
    )
    iters += it2
    if code != _CODE_OPT:
        return code, np.zeros(n_cols), np.zeros(m), np.zeros(n_cols), iters

    # clean final values against a fresh factorization
    binv = _build_binv(colptr, colrows, colvals, art_sign, basis, n_cols, m)
    xb = _recompute_xb(colptr, colrows, colvals, b, lb, ub, vstat, basis, binv, n_cols, m)

    x_full = np.empty(n_cols)
    for j in range(n_cols):
        x_full[j] = ub[j] if vstat[j] == _NB_UP else lb[j]
    for i in range(m):
        if basis[i] < n_cols:
            xj = xb[i]
            col = basis[i]
            if xj < lb[col]:
                xj = lb[col]
            elif xj > ub[col]:
                xj = ub[col]
            x_full[col] = xj

    y_scaled = np.zeros(m)
    for i in range(m):
        cbi = c2[basis[i]]
        if cbi != 0.0:
            for k in range(m):
                y_scaled[k] += cbi * binv[i, k]

    red = np.empty(n_cols)
    for j in range(n_cols):
        acc = 0.0
        for p in range(colptr[j], colptr[j + 1]):
            acc += y_scaled[colrows[p]] * colvals[p]
        red[j] = cost[j] - acc

    return _CODE_OPT, x_full, y_scaled, red, iters


def solve_canonical(
    canon: CanonicalLp,
    lb: np.ndarray,
    ub: np.ndarray,
    *,
    feas_tol: float = 1e-6,
    max_iterations: int = 0,
    bland_threshold: int = 1000,
) -> LpSolution:
    """Two-phase solve of the canonical LP under the given bound vectors."""
    m, n_cols, n = canon.m, canon.n_cols, canon.n_struct
    if max_iterations <= 0:
        max_iterations = max(2000, 50 * (n_cols + m))

    try:
        code, x_full, y_scaled, red_full, iters = _solve_two_phase(
            canon.colptr,
            canon.colrows,
            canon.colvals,
            canon.b,
            canon.senses,
            canon.slack_col_of_row,
            canon.cost,
            np.asarray(lb, dtype=float),
            np.asarray(ub, dtype=float),
            n_cols,
            m,
            max_iterations,
            bland_threshold,
        )
    except np.linalg.LinAlgError:
        return _failed(ITER_LIMIT, canon, 0)

    if code != _CODE_OPT:
        return _failed(_STATUS_OF_CODE[code], canon, iters)

    x = x_full[:n]
    duals = y_scaled / canon.row_scale
    obj = float(np.dot(canon.cost[:n], x))
    return LpSolution(
        status=OPTIMAL,
        objective=obj,
        x=x,
        duals=duals,
        reduced_costs=red_full[:n],
        iterations=iters,
    )


def _failed(status: str, canon: CanonicalLp, iters: int) -> LpSolution:
    n = canon.n_struct
    nan = np.full(n, np.nan)
    return LpSolution(
        status=status,
        objective=np.nan,
        x=nan,
        duals=np.full(canon.m, np.nan),
        reduced_costs=nan.copy(),
        iterations=iters,
    )


def residuals(problem: MilpProblem, x: np.ndarray) -> np.ndarray:
    """Signed constraint violations in original units (positive = violated)."""
    out = np.zeros(problem.num_rows)
    for i, (coeffs, sense, rhs) in enumerate(problem.rows):
        lhs = sum(v * x[j] for j, v in coeffs.items())
        if sense == LE:
            out[i] = lhs - rhs
        elif sense == GE:
            out[i] = rhs - lhs
        else:
            out[i] = abs(lhs - rhs)
    return out
