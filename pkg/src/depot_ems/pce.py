"""Moment-based polynomial-chaos surrogate built from input/response samples.

Per input dimension, monic orthogonal polynomials come from a linear system
over the raw sample moments (Hankel-type rows forcing orthogonality to all
lower monomials, last row forcing a unit leading coefficient). Multivariate
basis functions are tensor products restricted to a q-norm-truncated
multi-index set, and coefficients are fitted sparsely with orthogonal
matching pursuit.

Inputs are standardized per dimension before moment computation; the moment
systems are severely ill-conditioned at raw price/power scales. Dimensions
with (near-)zero variance are frozen: excluded from the basis and reinserted
as constants on evaluation.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PceError

_FROZEN_STD = 1e-12


# --- standardization ---------------------------------------------------------


@dataclass(frozen=True)
class Standardization:
    mean: np.ndarray  # per original dimension
    std: np.ndarray  # per original dimension (1.0 for frozen dims)
    frozen: np.ndarray  # bool mask over original dimensions

    @property
    def retained(self) -> np.ndarray:
        return np.nonzero(~self.frozen)[0]

    def apply(self, samples: np.ndarray) -> np.ndarray:
        """Standardize and drop frozen dimensions."""
        z = (samples - self.mean) / self.std
        return z[:, ~self.frozen]


def standardize(samples: np.ndarray) -> tuple[np.ndarray, Standardization]:
    """Center/scale each dimension to sample mean 0, sample std 1.

    Returns the standardized matrix (frozen columns dropped) and the
    transform. Raises ALL_FROZEN when every dimension is constant.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] < 2:
        raise PceError("DEGENERATE", "need a 2-D sample matrix with at least 2 rows")
    mean = samples.mean(axis=0)
    std = samples.std(axis=0, ddof=1)
    frozen = std < _FROZEN_STD
    if np.all(frozen):
        raise PceError("ALL_FROZEN", "every input dimension is constant")
    std_safe = np.where(frozen, 1.0, std)
    tr = Standardization(mean=mean, std=std_safe, frozen=frozen)
    return tr.apply(samples), tr


# --- raw moments -------------------------------------------------------------


@dataclass(frozen=True)
class MomentTable:
    """Raw moments per retained dimension, orders 0 .. 2H-1, plus one guard
    moment (order 2H) so zero-norm degeneracies are detectable."""

    moments: np.ndarray  # (dims, 2H+1)
    order: int  # H

    def for_dim(self, j: int) -> np.ndarray:
        return self.moments[j]


def raw_moments(z: np.ndarray, order: int) -> MomentTable:
    """Empirical raw moments mu_s = mean(z^s), s = 0 .. 2*order,
    accumulated with compensated (exact) summation per column."""
    z = np.asarray(z, dtype=float)
    m_rows, dims = z.shape
    n_moments = 2 * order + 1
    out = np.empty((dims, n_moments))
    for j in range(dims):
        power = np.ones(m_rows)
        col = z[:, j]
        for s in range(n_moments):
            out[j, s] = math.fsum(power) / m_rows if s > 0 else 1.0
            power = power * col
    return MomentTable(moments=out, order=order)


# --- univariate monic orthogonal bases ---------------------------------------


def univariate_basis(moments: np.ndarray, degree: int) -> np.ndarray:
    """Coefficients (ascending powers, monic) of the degree-`degree`
    polynomial orthogonal to all lower powers under the given raw moments."""
    if degree == 0:
        return np.array([1.0])
    if len(moments) < 2 * degree:
        raise PceError(
            "SINGULAR_MOMENT_MATRIX",
            f"need moments up to order {2 * degree - 1}, got {len(moments) - 1}",
        )
    size = degree + 1
    a = np.zeros((size, size))
    for i in range(degree):
        a[i, :] = moments[i : i + size]
    a[degree, degree] = 1.0
    rhs = np.zeros(size)
    rhs[degree] = 1.0
    try:
        cond = np.linalg.cond(a)
        coeffs = np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError:
        raise PceError("SINGULAR_MOMENT_MATRIX", f"moment matrix singular at degree {degree}")
    if not np.all(np.isfinite(coeffs)) or cond > 1e14:
        raise PceError(
            "SINGULAR_MOMENT_MATRIX",
            f"moment matrix numerically singular at degree {degree} (cond={cond:.2e}); "
            "fewer distinct sample values than degree+1?",
        )
    coeffs[degree] = 1.0  # exact monic leading coefficient
    if len(moments) >= 2 * degree + 1:
        # zero empirical norm means the sample has <= degree distinct values:
        # the system can stay regular while the polynomial vanishes on it
        norm_sq = 0.0
        for a in range(size):
            for b in range(size):
                norm_sq += coeffs[a] * coeffs[b] * moments[a + b]
        if norm_sq <= 1e-12 * max(1.0, float(np.abs(moments).max())):
            raise PceError(
                "SINGULAR_MOMENT_MATRIX",
                f"degree-{degree} polynomial has zero empirical norm; "
                "fewer distinct sample values than degree+1",
            )
    return coeffs


def basis_tables(table: MomentTable) -> list[list[np.ndarray]]:
    """Monic orthogonal coefficients for every retained dim and degree <= H."""
    out = []
    for j in range(table.moments.shape[0]):
        out.append([univariate_basis(table.for_dim(j), d) for d in range(table.order + 1)])
    return out


def polyval_table(bases_j: list[np.ndarray], x: np.ndarray) -> np.ndarray:
    """Values of every basis degree at the points x: shape (len(x), H+1)."""
    H = len(bases_j) - 1
    out = np.empty((len(x), H + 1))
    for d, coeffs in enumerate(bases_j):
        acc = np.full(len(x), coeffs[-1])
        for c in coeffs[-2::-1]:
            acc = acc * x + c
        out[:, d] = acc
    return out


# --- q-norm truncated multi-index set ----------------------------------------

SparseIndex = tuple[tuple[int, int], ...]  # ((dim, degree>=1), ...) sorted by dim


@dataclass(frozen=True)
class IndexSet:
    dims: int
    order: int
    q: float
    indices: list[SparseIndex]

    def __len__(self) -> int:
        return len(self.indices)

    def dense(self, idx: SparseIndex) -> np.ndarray:
        out = np.zeros(self.dims, dtype=int)
        for dim, deg in idx:
            out[dim] = deg
        return out


def _degree_tuples(order: int, q: float) -> dict[int, list[tuple[int, ...]]]:
    """All positive-degree assignments with q-norm <= order, by support size."""
    budget = order**q + 1e-9
    out: dict[int, list[tuple[int, ...]]] = {}

    def rec(prefix: list[int], remaining: float):
        if prefix:
            out.setdefault(len(prefix), []).append(tuple(prefix))
        for d in range(1, order + 1):
            cost = d**q
            if cost > remaining:
                break
            prefix.append(d)
            rec(prefix, remaining - cost)
            prefix.pop()

    rec([], budget)
    return out


def build_index_set(dims: int, order: int, q: float, cap: int = 1_000_000) -> IndexSet:
    """Enumerate {beta : ||beta||_q <= order} exactly, in lexicographic order
    of the dense multi-index. Raises SIZE_LIMIT beyond `cap` indices."""
    if dims < 1:
        raise PceError("DIMENSION_MISMATCH", "need at least one dimension")
    if order < 0 or not (0.0 < q <= 1.0):
        raise PceError("DEGENERATE", f"need order >= 0 and q in (0, 1], got H={order} q={q}")
    indices: list[SparseIndex] = [()]
    by_support = _degree_tuples(order, q)
    for k, tuples in sorted(by_support.items()):
        for dims_combo in itertools.combinations(range(dims), k):
            for degs in tuples:
                indices.append(tuple(zip(dims_combo, degs)))
                if len(indices) > cap:
                    raise PceError(
                        "SIZE_LIMIT", f"index set exceeds the cap of {cap} entries"
                    )
    # lexicographic order of the dense vectors, encoded compactly as bytes
    def key(idx: SparseIndex) -> bytes:
        row = bytearray(dims)
        for dim, deg in idx:
            row[dim] = deg
        return bytes(row)

    indices.sort(key=key)
    return IndexSet(dims=dims, order=order, q=q, indices=indices)


# --- tensor-product design columns -------------------------------------------


class _MatrixColumns:
    """Adapter presenting a dense design matrix (raw, unscaled columns)
    through the column-provider interface."""

    def __init__(self, mat: np.ndarray):
        self.mat = np.asarray(mat, dtype=float)
        self.n = self.mat.shape[1]

    def rows_subset(self, rows: np.ndarray) -> "_MatrixColumns":
        return _MatrixColumns(self.mat[rows])

    def column(self, j: int) -> np.ndarray:
        return self.mat[:, j].copy()

    def correlations(self, vec: np.ndarray, chunk: int = 8192) -> np.ndarray:
        return vec @ self.mat

    def norms(self, chunk: int = 8192) -> np.ndarray:
        return np.sqrt(np.sum(self.mat**2, axis=0))


class _ColumnProvider:
    """Streams tensor-product basis columns without materializing all of
    them; groups columns by support size so blocks build with a handful of
    vectorized gathers."""

    def __init__(self, phi_flat: np.ndarray, index_set: IndexSet, width: int):
        # phi_flat: (M, dims*(H+1)); column dim*(H+1)+deg holds phi_dim^(deg)
        self.phi_flat = phi_flat
        self.index_set = index_set
        self.width = width
        self.n = len(index_set)
        flat = []
        for idx in index_set.indices:
            flat.append(tuple(dim * width + deg for dim, deg in idx))
        self._flat = flat

    def rows_subset(self, rows: np.ndarray) -> "_ColumnProvider":
        return _ColumnProvider(self.phi_flat[rows], self.index_set, self.width)

    def block(self, lo: int, hi: int) -> np.ndarray:
        m = self.phi_flat.shape[0]
        out = np.empty((m, hi - lo))
        ptr = 0
        while ptr < hi - lo:
            j = lo + ptr
            sp = self._flat[j]
            # run of columns with the same support size vectorizes together
            run_end = ptr + 1
            while run_end < hi - lo and len(self._flat[lo + run_end]) == len(sp):
                run_end += 1
            size = len(sp)
            if size == 0:
                out[:, ptr:run_end] = 1.0
            else:
                gather = np.array([self._flat[lo + c] for c in range(ptr, run_end)])
                acc = self.phi_flat[:, gather[:, 0]]
                for pos in range(1, size):
                    acc = acc * self.phi_flat[:, gather[:, pos]]
                out[:, ptr:run_end] = acc
            ptr = run_end
        return out

    def column(self, j: int) -> np.ndarray:
        sp = self._flat[j]
        m = self.phi_flat.shape[0]
        if not sp:
            return np.ones(m)
        acc = self.phi_flat[:, sp[0]].copy()
        for f in sp[1:]:
            acc *= self.phi_flat[:, f]
        return acc

    def correlations(self, vec: np.ndarray, chunk: int = 8192) -> np.ndarray:
        out = np.empty(self.n)
        for lo in range(0, self.n, chunk):
            hi = min(lo + chunk, self.n)
            out[lo:hi] = vec @ self.block(lo, hi)
        return out

    def norms(self, chunk: int = 8192) -> np.ndarray:
        out = np.empty(self.n)
        for lo in range(0, self.n, chunk):
            hi = min(lo + chunk, self.n)
            out[lo:hi] = np.sqrt(np.sum(self.block(lo, hi) ** 2, axis=0))
        return out


def _phi_flat(z: np.ndarray, bases: list[list[np.ndarray]]) -> tuple[np.ndarray, int]:
    dims = z.shape[1]
    width = len(bases[0])
    phi = np.empty((z.shape[0], dims * width))
    for j in range(dims):
        phi[:, j * width : (j + 1) * width] = polyval_table(bases[j], z[:, j])
    return phi, width


def design_matrix(
    z: np.ndarray, index_set: IndexSet, bases: list[list[np.ndarray]]
) -> tuple[np.ndarray, np.ndarray]:
    """Full design matrix with unit-norm columns; returns (matrix, norms).

    Entry (m, beta) before scaling is the tensor-product basis value
    prod_j phi_j^(beta_j)(z_mj).
    """
    if z.shape[1] != index_set.dims:
        raise PceError(
            "DIMENSION_MISMATCH",
            f"inputs have {z.shape[1]} dimensions, index set expects {index_set.dims}",
        )
    phi, width = _phi_flat(z, bases)
    provider = _ColumnProvider(phi, index_set, width)
    mat = provider.block(0, len(index_set))
    norms = np.sqrt(np.sum(mat**2, axis=0))
    norms_safe = np.where(norms > 0, norms, 1.0)
    return mat / norms_safe, norms


# --- orthogonal matching pursuit ---------------------------------------------


@dataclass(frozen=True)
class OmpOptions:
    max_terms: int | None = None  # default min(M_tr // 3, |A|)
    target_resid: float = 1e-6
    val_fraction: float = 0.2
    min_improvement: float = 1e-4
    patience: int = 10  # greedy steps without val-R2 improvement before stopping


@dataclass
class PceModel:
    """Fitted surrogate: standardization, per-dim bases, active terms."""

    input_dims: int  # original input dimensionality
    order: int
    q: float
    standardization: Standardization
    bases: list[list[np.ndarray]]  # per retained dim
    active_indices: list[SparseIndex]  # over retained dims
    coefficients: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def eval(self, samples: np.ndarray) -> np.ndarray:
        return surrogate_eval(self, samples)


def _val_split(n_rows: int, fraction: float) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic index-stride split: every round(1/fraction)-th row is
    held out."""
    if fraction <= 0.0 or n_rows < 5:
        return np.arange(n_rows), np.array([], dtype=int)
    stride = max(2, int(round(1.0 / fraction)))
    mask = (np.arange(n_rows) % stride) == (stride - 1)
    if mask.all() or not mask.any():
        return np.arange(n_rows), np.array([], dtype=int)
    return np.nonzero(~mask)[0], np.nonzero(mask)[0]


def omp_fit(
    design: np.ndarray | _ColumnProvider | _MatrixColumns,
    y: np.ndarray,
    options: OmpOptions,
) -> tuple[list[int], np.ndarray, dict]:
    """Greedy sparse least squares on the design columns (a plain matrix of
    raw, unscaled columns or a streaming provider).

    Returns (active column ids, coefficients on the raw columns, diagnostics).
    """
    provider = _MatrixColumns(design) if isinstance(design, np.ndarray) else design
    y = np.asarray(y, dtype=float)
    m_total = len(y)
    fit_rows, val_rows = _val_split(m_total, options.val_fraction)
    n_cols = provider.n

    max_terms = options.max_terms
    if max_terms is None:
        max_terms = max(1, min(m_total // 3, n_cols))
    max_terms = min(max_terms, len(fit_rows), n_cols)

    y_fit = y[fit_rows]
    y_val = y[val_rows] if len(val_rows) else np.array([])
    y_norm = float(np.linalg.norm(y_fit))
    if float(np.std(y)) < 1e-12 * (1.0 + abs(float(np.mean(y)))):
        # constant response: fall back to the constant term
        mean = float(np.mean(y))
        return [0], np.array([mean]), {
            "degenerate": True,
            "residual_norm": float(np.linalg.norm(y - mean)),
            "validation_r2": 1.0,
            "active_terms": 1,
        }

    # correlations and norms are taken over the fit rows only
    fit_provider = provider.rows_subset(fit_rows)
    norms_fit = fit_provider.norms()
    corr_scale = np.where(norms_fit > 0, norms_fit, np.inf)

    actives: list[int] = []
    cols_full: list[np.ndarray] = []  # selected raw columns over all rows
    q_mat = np.zeros((len(fit_rows), 0))
    r_mat = np.zeros((0, 0))
    resid = y_fit.copy()
    banned = np.zeros(n_cols, dtype=bool)
    val_ss = float(np.sum((y_val - y_val.mean()) ** 2)) if len(y_val) > 1 else 0.0
    val_rule = len(y_val) > 1 and val_ss > 0.0
    val_r2_path: list[float] = []
    best_val_r2 = -np.inf
    stalled = 0

    while len(actives) < max_terms:
        corr = np.abs(fit_provider.correlations(resid)) / corr_scale
        corr[banned] = -np.inf
        if actives:
            corr[np.asarray(actives)] = -np.inf
        j = int(np.argmax(corr))
        if not np.isfinite(corr[j]) or corr[j] <= 0.0:
            break

        col_full = provider.column(j)
        a = col_full[fit_rows] / norms_fit[j]
        # modified Gram-Schmidt with one reorthogonalization pass
        r_new = np.zeros(len(actives) + 1)
        v = a.copy()
        for _ in range(2):
            if len(actives):
                proj = q_mat.T @ v
                r_new[: len(actives)] += proj
                v = v - q_mat @ proj
        rho = float(np.linalg.norm(v))
        if rho < 1e-10:
            banned[j] = True
            continue
        r_new[len(actives)] = rho
        q_new = v / rho

        actives.append(j)
        cols_full.append(col_full)
        q_mat = np.column_stack([q_mat, q_new]) if q_mat.size else q_new[:, None]
        new_r = np.zeros((len(actives), len(actives)))
        new_r[:-1, :-1] = r_mat
        new_r[:, -1] = r_new
        r_mat = new_r
        resid = y_fit - q_mat @ (q_mat.T @ y_fit)
        rel = float(np.linalg.norm(resid)) / (y_norm if y_norm > 0 else 1.0)

        if val_rule:
            beta_unit = _back_substitute(r_mat, q_mat.T @ y_fit)
            coef_now = beta_unit / norms_fit[np.asarray(actives)]
            yhat_val = np.zeros(len(val_rows))
            for c, _jj in enumerate(actives):
                yhat_val += coef_now[c] * cols_full[c][val_rows]
            val_r2 = 1.0 - float(np.sum((y_val - yhat_val) ** 2)) / val_ss
            val_r2_path.append(val_r2)
            # held-out stopping: quit after `patience` greedy steps in a row
            # that fail to improve the held-out R2 by min_improvement; the
            # kept model is the best-R2 prefix of the greedy path
            if val_r2 > best_val_r2 + options.min_improvement:
                best_val_r2 = val_r2
                stalled = 0
            else:
                stalled += 1
                if stalled >= options.patience and rel > options.target_resid:
                    break

        if rel <= options.target_resid:
            break

    if val_rule and val_r2_path:
        keep = int(np.argmax(val_r2_path)) + 1
        actives = actives[:keep]
        cols_full = cols_full[:keep]
        q_mat = q_mat[:, :keep]
        r_mat = r_mat[:keep, :keep]
        resid = y_fit - q_mat @ (q_mat.T @ y_fit)

    if not actives:
        mean = float(np.mean(y))
        return [0], np.array([mean]), {
            "degenerate": False,
            "residual_norm": float(np.linalg.norm(y - mean)),
            "validation_r2": best_val_r2 if np.isfinite(best_val_r2) else 0.0,
            "active_terms": 1,
        }

    beta_unit = _back_substitute(r_mat, q_mat.T @ y_fit)
    coef = beta_unit / norms_fit[np.asarray(actives)]
    resid_final = float(np.linalg.norm(resid))
    diag = {
        "degenerate": False,
        "residual_norm": resid_final,
        "relative_residual": resid_final / (y_norm if y_norm > 0 else 1.0),
        "validation_r2": best_val_r2 if np.isfinite(best_val_r2) else None,
        "active_terms": len(actives),
        "fit_rows": int(len(fit_rows)),
        "validation_rows": int(len(val_rows)),
    }
    return actives, coef, diag


def _back_substitute(r_mat: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    k = r_mat.shape[0]
    out = np.zeros(k)
    for i in range(k - 1, -1, -1):
        out[i] = (rhs[i] - float(r_mat[i, i + 1 :] @ out[i + 1 :])) / r_mat[i, i]
    return out


def fit_pce(
    samples: np.ndarray,
    y: np.ndarray,
    order: int,
    q: float = 1.0,
    options: OmpOptions | None = None,
    index_cap: int = 1_000_000,
) -> PceModel:
    """End-to-end fit: standardize, moments, bases, index set, OMP."""
    options = options or OmpOptions()
    samples = np.asarray(samples, dtype=float)
    y = np.asarray(y, dtype=float)
    if samples.shape[0] != len(y):
        raise PceError("DIMENSION_MISMATCH", "sample rows and responses differ in length")
    z, tr = standardize(samples)
    moments = raw_moments(z, order)
    bases = basis_tables(moments)
    index_set = build_index_set(z.shape[1], order, q, cap=index_cap)
    phi, width = _phi_flat(z, bases)
    provider = _ColumnProvider(phi, index_set, width)
    actives, coef, diag = omp_fit(provider, y, options)
    model = PceModel(
        input_dims=samples.shape[1],
        order=order,
        q=q,
        standardization=tr,
        bases=bases,
        active_indices=[index_set.indices[j] for j in actives],
        coefficients=np.asarray(coef, dtype=float),
        diagnostics=diag,
    )
    yhat = surrogate_eval(model, samples)
    model.diagnostics["training_rmse"] = float(np.sqrt(np.mean((yhat - y) ** 2)))
    return model


def surrogate_eval(model: PceModel, samples: np.ndarray) -> np.ndarray:
    """Evaluate the surrogate on raw (unstandardized) inputs."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim == 1:
        samples = samples[None, :]
    if samples.shape[1] != model.input_dims:
        raise PceError(
            "DIMENSION_MISMATCH",
            f"inputs have {samples.shape[1]} dims, model expects {model.input_dims}",
        )
    z = model.standardization.apply(samples)
    width = model.order + 1
    needed: dict[int, np.ndarray] = {}
    for idx in model.active_indices:
        for dim, _deg in idx:
            if dim not in needed:
                needed[dim] = polyval_table(model.bases[dim], z[:, dim])
    out = np.zeros(samples.shape[0])
    for coef, idx in zip(model.coefficients, model.active_indices):
        term = np.full(samples.shape[0], coef)
        for dim, deg in idx:
            term = term * needed[dim][:, deg]
        out += term
    return out


# --- output statistics --------------------------------------------------------


def surrogate_stats(values: np.ndarray, bins: int = 40) -> dict:
    """Mean/std (compensated summation, sample std), interpolated percentiles
    and a plot-ready histogram."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise PceError("EMPTY", "cannot summarize an empty vector")
    n = values.size
    mean = math.fsum(values) / n
    if n > 1:
        var = math.fsum((v - mean) ** 2 for v in values.tolist()) / (n - 1)
        std = math.sqrt(max(var, 0.0))
    else:
        std = 0.0
    p5, p95 = (float(p) for p in np.percentile(values, [5.0, 95.0]))
    counts, edges = np.histogram(values, bins=bins)
    return {
        "count": int(n),
        "mean": float(mean),
        "std": float(std),
        "p5": p5,
        "p95": p95,
        "histogram": {
            "edges": [float(e) for e in edges],
            "counts": [int(c) for c in counts],
        },
    }


# --- JSON (de)serialization ---------------------------------------------------

_FORMAT_VERSION = 1


def model_to_json(model: PceModel) -> str:
    tr = model.standardization
    doc = {
        "format_version": _FORMAT_VERSION,
        "input_dims": model.input_dims,
        "order": model.order,
        "q": model.q,
        "standardization": {
            "mean": tr.mean.tolist(),
            "std": tr.std.tolist(),
            "frozen": tr.frozen.astype(int).tolist(),
        },
        "bases": [[c.tolist() for c in per_dim] for per_dim in model.bases],
        "active_indices": [list(map(list, idx)) for idx in model.active_indices],
        "coefficients": model.coefficients.tolist(),
        "diagnostics": model.diagnostics,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def model_from_json(text: str) -> PceModel:
    doc = json.loads(text)
    if doc.get("format_version") != _FORMAT_VERSION:
        raise PceError(
            "DIMENSION_MISMATCH", f"unsupported model format {doc.get('format_version')}"
        )
    tr = Standardization(
        mean=np.asarray(doc["standardization"]["mean"], dtype=float),
        std=np.asarray(doc["standardization"]["std"], dtype=float),
        frozen=np.asarray(doc["standardization"]["frozen"], dtype=bool),
    )
    return PceModel(
        input_dims=int(doc["input_dims"]),
        order=int(doc["order"]),
        q=float(doc["q"]),
        standardization=tr,
        bases=[[np.asarray(c, dtype=float) for c in per_dim] for per_dim in doc["bases"]],
        active_indices=[tuple((int(d), int(g)) for d, g in idx) for idx in doc["active_indices"]],
        coefficients=np.asarray(doc["coefficients"], dtype=float),
        diagnostics=dict(doc.get("diagnostics", {})),
    )
