"""Mixed-integer linear program container.

A `MilpProblem` is built incrementally (variables, then constraint rows) and
is the only interface between model builders and the solvers. Binary
variables are continuous [0,1] columns flagged binary; the branch-and-bound
layer enforces integrality.

`exclusive_pairs` is optional structure metadata: (binary, on_var, off_var)
triples meaning `on_var` is capped by the binary being 1 and `off_var` by it
being 0. The relax-and-repair mode uses it to round a fractional relaxation
to a candidate integral solution; solvers work fine without it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

LE, EQ, GE = "<=", "=", ">="

# solution statuses
OPTIMAL = "OPTIMAL"
INFEASIBLE = "INFEASIBLE"
UNBOUNDED = "UNBOUNDED"
ITER_LIMIT = "ITER_LIMIT"
NODE_LIMIT = "NODE_LIMIT"


@dataclass
class MilpProblem:
    """Minimization problem over bounded variables with sparse rows."""

    names: list[str] = field(default_factory=list)
    lower: list[float] = field(default_factory=list)
    upper: list[float] = field(default_factory=list)
    is_binary: list[bool] = field(default_factory=list)
    cost: dict[int, float] = field(default_factory=dict)
    rows: list[tuple[dict[int, float], str, float]] = field(default_factory=list)
    exclusive_pairs: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def num_vars(self) -> int:
        return len(self.names)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def binary_indices(self) -> list[int]:
        return [j for j, b in enumerate(self.is_binary) if b]

    def add_variable(
        self,
        name: str,
        lower: float,
        upper: float,
        *,
        binary: bool = False,
        cost: float = 0.0,
    ) -> int:
        j = len(self.names)
        self.names.append(name)
        self.lower.append(float(lower))
        self.upper.append(float(upper))
        self.is_binary.append(bool(binary))
        if cost != 0.0:
            self.cost[j] = float(cost)
        return j

    def add_constraint(self, coeffs: dict[int, float], sense: str, rhs: float) -> int:
        if sense not in (LE, EQ, GE):
            raise ValidationError([(f"row[{len(self.rows)}].sense", f"unknown sense {sense!r}")])
        self.rows.append(({int(k): float(v) for k, v in coeffs.items()}, sense, float(rhs)))
        return len(self.rows) - 1

    def add_cost(self, var: int, coeff: float) -> None:
        self.cost[var] = self.cost.get(var, 0.0) + float(coeff)

    def validate(self) -> "MilpProblem":
        """Raise ValidationError listing every invariant violation."""
        v: list[tuple[str, str]] = []
        n = self.num_vars
        for j in range(n):
            lo, hi = self.lower[j], self.upper[j]
            if not (math.isfinite(lo) and math.isfinite(hi)):
                v.append((f"var[{self.names[j]}]", "bounds must be finite"))
                continue
            if lo > hi:
                v.append((f"var[{self.names[j]}]", f"lower {lo} exceeds upper {hi}"))
            if self.is_binary[j] and not (lo >= 0.0 and hi <= 1.0):
                v.append((f"var[{self.names[j]}]", "binary bounds must lie within [0, 1]"))
        for i, (coeffs, _sense, rhs) in enumerate(self.rows):
            if not math.isfinite(rhs):
                v.append((f"row[{i}]", "rhs must be finite"))
            for k, val in coeffs.items():
                if not (0 <= k < n):
                    v.append((f"row[{i}]", f"coefficient references unknown variable {k}"))
                elif not math.isfinite(val):
                    v.append((f"row[{i}]", f"coefficient on {self.names[k]} not finite"))
        for k in self.cost:
            if not (0 <= k < n):
                v.append(("objective", f"cost references unknown variable {k}"))
        if v:
            raise ValidationError(v)
        return self

    def cost_vector(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, val in self.cost.items():
            c[j] = val
        return c

    def objective_value(self, x: np.ndarray) -> float:
        return float(sum(val * x[j] for j, val in sorted(self.cost.items())))

    def to_lp_text(self) -> str:
        """Debug dump in LP-file-style plain text (write-only format)."""
        out = ["Minimize", " obj:"]
        terms = [f" {v:+.12g} {self.names[j]}" for j, v in sorted(self.cost.items())]
        out[-1] += "".join(terms) if terms else " 0"
        out.append("Subject To")
        for i, (coeffs, sense, rhs) in enumerate(self.rows):
            body = "".join(
                f" {v:+.12g} {self.names[j]}" for j, v in sorted(coeffs.items())
            )
            op = {LE: "<=", EQ: "=", GE: ">="}[sense]
            out.append(f" r{i}:{body or ' 0'} {op} {rhs:.12g}")
        out.append("Bounds")
        for j in range(self.num_vars):
            out.append(f" {self.lower[j]:.12g} <= {self.names[j]} <= {self.upper[j]:.12g}")
        bins = [self.names[j] for j in self.binary_indices]
        if bins:
            out.append("Binary")
            out.append(" " + " ".join(bins))
        out.append("End")
        return "\n".join(out) + "\n"


@dataclass(frozen=True)
class LpSolution:
    status: str
    objective: float
    x: np.ndarray
    duals: np.ndarray
    reduced_costs: np.ndarray
    iterations: int


@dataclass(frozen=True)
class MilpSolution:
    status: str
    objective: float
    x: np.ndarray
    best_bound: float
    node_count: int
    iterations: int


@dataclass(frozen=True)
class SolveOptions:
    """Tolerances and limits shared by the LP and MILP layers."""

    feas_tol: float = 1e-6
    int_tol: float = 1e-6
    gap_abs: float = 1e-6
    gap_rel: float = 1e-6
    node_limit: int = 20000
    max_iterations: int = 0  # 0 -> 50 * variable count
    bland_threshold: int = 1000
    mode: str = "exact"  # "exact" | "relax-repair"
