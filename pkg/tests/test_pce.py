"""Surrogate machinery: standardization, moments, orthogonal bases, index
sets, design columns, matching pursuit, evaluation, statistics."""

import math

import numpy as np
import pytest

from depot_ems.errors import PceError
from depot_ems.pce import (
    OmpOptions,
    _ColumnProvider,
    _phi_flat,
    basis_tables,
    build_index_set,
    design_matrix,
    fit_pce,
    model_from_json,
    model_to_json,
    omp_fit,
    polyval_table,
    raw_moments,
    standardize,
    surrogate_eval,
    surrogate_stats,
    univariate_basis,
)

UNIFORM_MOMENTS = np.array([1.0, 0.0, 1 / 3, 0.0, 1 / 5, 0.0])
NORMAL_MOMENTS = np.array([1.0, 0.0, 1.0, 0.0, 3.0, 0.0])


# --- standardize ---------------------------------------------------------------


def test_standardize_basic_and_frozen():
    rng = np.random.default_rng(0)
    x = np.column_stack([rng.normal(3.0, 2.0, 50), np.full(50, 7.0)])
    z, tr = standardize(x)
    assert z.shape == (50, 1)
    assert tr.frozen.tolist() == [False, True]
    assert z[:, 0].mean() == pytest.approx(0.0, abs=1e-12)
    assert z[:, 0].std(ddof=1) == pytest.approx(1.0, abs=1e-12)


def test_standardize_two_point_column():
    x = np.array([[-1.0], [1.0]])
    z, _ = standardize(x)
    np.testing.assert_allclose(np.sort(z[:, 0]), [-math.sqrt(0.5), math.sqrt(0.5)] * 1, atol=1e-12)
    # with ddof=1 the std of {-1, 1} is sqrt(2), so values shrink accordingly


def test_standardize_idempotent_within_tolerance():
    rng = np.random.default_rng(1)
    x = rng.normal(0, 1, (200, 3))
    z1, _ = standardize(x)
    z2, _ = standardize(z1)
    np.testing.assert_allclose(z1, z2, atol=1e-10)


def test_standardize_all_frozen():
    with pytest.raises(PceError) as err:
        standardize(np.ones((10, 2)))
    assert err.value.code == "ALL_FROZEN"


# --- moments --------------------------------------------------------------------


def test_moments_constant_column_powers():
    z = np.full((20, 1), 2.0)
    table = raw_moments(z, 2)
    np.testing.assert_allclose(table.for_dim(0), [1.0, 2.0, 4.0, 8.0, 16.0], atol=1e-12)


def test_moments_symmetric_two_point():
    z = np.array([[-1.0], [1.0]])
    table = raw_moments(z, 2)
    np.testing.assert_allclose(table.for_dim(0), [1.0, 0.0, 1.0, 0.0, 1.0], atol=1e-12)


def test_moments_gaussian_large_sample():
    rng = np.random.default_rng(7)
    z = rng.standard_normal((1_000_000, 1))
    table = raw_moments(z, 2)
    assert table.for_dim(0)[2] == pytest.approx(1.0, rel=0.02)
    rng2 = np.random.default_rng(8)
    z4 = rng2.standard_normal((1_000_000, 1))
    table4 = raw_moments(z4, 3)
    assert table4.for_dim(0)[4] == pytest.approx(3.0, rel=0.02)


# --- univariate bases -----------------------------------------------------------


def test_basis_degree_zero_is_one():
    np.testing.assert_array_equal(univariate_basis(UNIFORM_MOMENTS, 0), [1.0])


def test_basis_monic_legendre():
    np.testing.assert_allclose(
        univariate_basis(UNIFORM_MOMENTS, 2), [-1 / 3, 0.0, 1.0], atol=1e-12
    )
    np.testing.assert_allclose(
        univariate_basis(UNIFORM_MOMENTS, 3), [0.0, -3 / 5, 0.0, 1.0], atol=1e-12
    )


def test_basis_monic_hermite():
    np.testing.assert_allclose(
        univariate_basis(NORMAL_MOMENTS, 2), [-1.0, 0.0, 1.0], atol=1e-12
    )
    np.testing.assert_allclose(
        univariate_basis(NORMAL_MOMENTS, 3), [0.0, -3.0, 0.0, 1.0], atol=1e-12
    )


def test_basis_singular_for_two_point_sample_at_degree_two():
    z = np.array([[-1.0], [1.0], [-1.0], [1.0]])
    table = raw_moments(z, 2)
    with pytest.raises(PceError) as err:
        univariate_basis(table.for_dim(0), 2)
    assert err.value.code == "SINGULAR_MOMENT_MATRIX"


def test_bases_orthogonal_under_empirical_measure():
    rng = np.random.default_rng(3)
    z, _ = standardize(rng.gamma(2.0, 1.5, (400, 1)))
    table = raw_moments(z, 3)
    bases = basis_tables(table)
    values = polyval_table(bases[0], z[:, 0])
    gram = values.T @ values / len(z)
    for a in range(4):
        for b in range(4):
            if a != b:
                bound = 1e-8 * math.sqrt(gram[a, a] * gram[b, b])
                assert abs(gram[a, b]) <= bound


def test_monic_leading_coefficient_exact():
    rng = np.random.default_rng(4)
    z, _ = standardize(rng.uniform(-3, 5, (300, 2)))
    bases = basis_tables(raw_moments(z, 3))
    for per_dim in bases:
        for deg, coeffs in enumerate(per_dim):
            assert coeffs[-1] == 1.0
            assert len(coeffs) == deg + 1


# --- index sets -----------------------------------------------------------------


def test_index_set_sizes():
    assert len(build_index_set(1, 3, 1.0)) == 4
    assert len(build_index_set(2, 2, 1.0)) == 6
    assert len(build_index_set(2, 2, 0.5)) == 5


def test_index_set_q_half_excludes_interaction():
    s = build_index_set(2, 2, 0.5)
    assert ((0, 1), (1, 1)) not in s.indices  # beta=(1,1): (1+1)^2 = 4 > 2


def test_index_set_downward_closed_and_contains_zero():
    s = build_index_set(3, 3, 0.7)
    dense = {tuple(s.dense(idx)) for idx in s.indices}
    assert (0, 0, 0) in dense
    for beta in dense:
        for j in range(3):
            if beta[j] > 0:
                lower = list(beta)
                lower[j] -= 1
                assert tuple(lower) in dense


def test_index_set_size_cap():
    with pytest.raises(PceError) as err:
        build_index_set(100, 3, 1.0, cap=1000)
    assert err.value.code == "SIZE_LIMIT"


def test_index_set_deterministic_lexicographic_order():
    s = build_index_set(2, 2, 1.0)
    dense = [tuple(s.dense(idx)) for idx in s.indices]
    assert dense == sorted(dense)


# --- design matrix ---------------------------------------------------------------


def test_design_matrix_constant_column_and_norms():
    rng = np.random.default_rng(5)
    z, _ = standardize(rng.normal(0, 1, (64, 2)))
    bases = basis_tables(raw_moments(z, 2))
    s = build_index_set(2, 2, 1.0)
    mat, norms = design_matrix(z, s, bases)
    j0 = s.indices.index(())
    # constant column before scaling is all ones -> norm sqrt(M)
    assert norms[j0] == pytest.approx(math.sqrt(64))
    np.testing.assert_allclose(mat[:, j0], np.full(64, 1 / math.sqrt(64)), atol=1e-12)
    # every column has unit Euclidean norm after scaling
    np.testing.assert_allclose(np.linalg.norm(mat, axis=0), 1.0, atol=1e-12)


def test_design_matrix_single_dim_matches_polynomial():
    rng = np.random.default_rng(6)
    z, _ = standardize(rng.normal(0, 1, (50, 2)))
    bases = basis_tables(raw_moments(z, 2))
    s = build_index_set(2, 2, 1.0)
    mat, norms = design_matrix(z, s, bases)
    j = s.indices.index(((1, 2),))
    expect = polyval_table(bases[1], z[:, 1])[:, 2]
    np.testing.assert_allclose(mat[:, j] * norms[j], expect, atol=1e-10)


def test_design_matrix_gram_near_diagonal_for_large_sample():
    rng = np.random.default_rng(7)
    z, _ = standardize(rng.normal(0, 1, (20000, 2)))
    bases = basis_tables(raw_moments(z, 2))
    s = build_index_set(2, 2, 1.0)
    mat, _ = design_matrix(z, s, bases)
    gram = mat.T @ mat
    off = np.abs(gram - np.diag(np.diag(gram))).max()
    assert off < 0.05


# --- matching pursuit -------------------------------------------------------------


def _provider(z, order):
    bases = basis_tables(raw_moments(z, order))
    index_set = build_index_set(z.shape[1], order, 1.0)
    phi, width = _phi_flat(z, bases)
    return _ColumnProvider(phi, index_set, width), index_set


def test_omp_single_column_target():
    rng = np.random.default_rng(8)
    z, _ = standardize(rng.normal(0, 1, (120, 3)))
    provider, index_set = _provider(z, 2)
    j_target = index_set.indices.index(((1, 1),))
    y = 5.0 * provider.column(j_target)
    actives, coef, diag = omp_fit(provider, y, OmpOptions())
    assert actives == [j_target]
    assert coef[0] == pytest.approx(5.0, abs=1e-9)
    assert diag["residual_norm"] < 1e-9


def test_omp_exact_support_recovery():
    rng = np.random.default_rng(9)
    z, _ = standardize(rng.normal(0, 1, (200, 5)))
    provider, index_set = _provider(z, 3)
    targets = [
        index_set.indices.index(()),
        index_set.indices.index(((0, 1),)),
        index_set.indices.index(((1, 2),)),
    ]
    coefs = [2.0, 3.0, -1.0]
    y = sum(c * provider.column(j) for c, j in zip(coefs, targets))
    actives, coef, _ = omp_fit(provider, y, OmpOptions())
    got = dict(zip(actives, coef))
    assert set(actives) == set(targets)
    for c, j in zip(coefs, targets):
        assert got[j] == pytest.approx(c, abs=1e-8)


def test_omp_constant_response_degenerate_path():
    rng = np.random.default_rng(10)
    z, _ = standardize(rng.normal(0, 1, (60, 2)))
    provider, index_set = _provider(z, 2)
    actives, coef, diag = omp_fit(provider, np.full(60, 7.0), OmpOptions())
    assert diag["degenerate"] is True
    assert actives == [index_set.indices.index(())]
    assert coef[0] == pytest.approx(7.0)


def test_omp_accepts_plain_design_matrix():
    rng = np.random.default_rng(22)
    z, _ = standardize(rng.normal(0, 1, (100, 2)))
    bases = basis_tables(raw_moments(z, 2))
    index_set = build_index_set(2, 2, 1.0)
    phi, width = _phi_flat(z, bases)
    provider = _ColumnProvider(phi, index_set, width)
    raw = np.column_stack([provider.column(j) for j in range(provider.n)])
    y = 3.0 * raw[:, 2] - 1.5 * raw[:, 4]
    a_mat, c_mat, _ = omp_fit(raw, y, OmpOptions())
    a_prov, c_prov, _ = omp_fit(provider, y, OmpOptions())
    assert a_mat == a_prov
    np.testing.assert_allclose(c_mat, c_prov, atol=1e-12)


def test_omp_residual_monotone():
    rng = np.random.default_rng(11)
    z, _ = standardize(rng.normal(0, 1, (150, 4)))
    provider, _ = _provider(z, 2)
    y = rng.normal(0, 1, 150)

    res_norms = []
    for k in range(1, 8):
        _a, _c, diag = omp_fit(
            provider, y, OmpOptions(max_terms=k, val_fraction=0.0, target_resid=0.0)
        )
        res_norms.append(diag["residual_norm"])
    assert all(res_norms[i + 1] <= res_norms[i] + 1e-12 for i in range(len(res_norms) - 1))


# --- end-to-end fit / eval ---------------------------------------------------------


def test_fit_pce_polynomial_exactness():
    rng = np.random.default_rng(12)
    x = rng.normal(0, 1, (200, 5)) * rng.uniform(0.5, 3, 5) + rng.uniform(-2, 2, 5)
    z = (x - x.mean(0)) / x.std(0, ddof=1)
    y = 2.0 + 3.0 * z[:, 0] - z[:, 1] ** 2 + 0.5 * z[:, 0] * z[:, 2]
    model = fit_pce(x, y, order=3, q=1.0)
    x_new = rng.normal(0, 1, (1000, 5)) * rng.uniform(0.5, 3, 5) + rng.uniform(-2, 2, 5)
    z_new = (x_new - x.mean(0)) / x.std(0, ddof=1)
    y_new = 2.0 + 3.0 * z_new[:, 0] - z_new[:, 1] ** 2 + 0.5 * z_new[:, 0] * z_new[:, 2]
    pred = surrogate_eval(model, x_new)
    rel = np.abs(pred - y_new).max() / np.abs(y_new).max()
    assert rel <= 1e-8


def test_eval_constant_model_and_training_reproduction():
    rng = np.random.default_rng(13)
    x = rng.normal(5, 2, (80, 3))
    y = np.full(80, 7.0)
    model = fit_pce(x, y, order=2)
    np.testing.assert_allclose(surrogate_eval(model, x), 7.0, atol=1e-12)

    y2 = 1.0 + x[:, 0] * 0.5
    model2 = fit_pce(x, y2, order=2)
    pred_train = surrogate_eval(model2, x)
    rmse = float(np.sqrt(np.mean((pred_train - y2) ** 2)))
    assert rmse == pytest.approx(model2.diagnostics["training_rmse"], abs=1e-10)


def test_eval_dimension_mismatch():
    rng = np.random.default_rng(14)
    x = rng.normal(0, 1, (50, 3))
    model = fit_pce(x, x[:, 0], order=1)
    with pytest.raises(PceError) as err:
        surrogate_eval(model, rng.normal(0, 1, (5, 4)))
    assert err.value.code == "DIMENSION_MISMATCH"


def test_mean_consistency_with_univariate_terms():
    # every non-constant univariate basis column has empirical mean zero, so
    # the surrogate's training mean equals the constant term's coefficient
    rng = np.random.default_rng(15)
    x = rng.gamma(2.0, 2.0, (300, 3))
    z = (x - x.mean(0)) / x.std(0, ddof=1)
    y = 4.0 + 2.0 * z[:, 0] + 0.7 * z[:, 1] ** 2
    model = fit_pce(x, y, order=2, options=OmpOptions(val_fraction=0.0))
    a0 = {idx: c for idx, c in zip(model.active_indices, model.coefficients)}.get((), 0.0)
    train_mean = float(np.mean(surrogate_eval(model, x)))
    assert train_mean == pytest.approx(a0, abs=1e-8)


def test_model_json_round_trip():
    rng = np.random.default_rng(16)
    x = rng.normal(0, 2, (100, 4))
    y = x[:, 0] - 2 * x[:, 1] ** 2 + rng.normal(0, 0.01, 100)
    model = fit_pce(x, y, order=2)
    clone = model_from_json(model_to_json(model))
    x_new = rng.normal(0, 2, (50, 4))
    np.testing.assert_array_equal(surrogate_eval(clone, x_new), surrogate_eval(model, x_new))


# --- statistics ---------------------------------------------------------------------


def test_stats_constant_vector():
    s = surrogate_stats(np.full(9, 3.25))
    assert s["mean"] == pytest.approx(3.25)
    assert s["std"] == 0.0
    assert s["p5"] == s["p95"] == pytest.approx(3.25)


def test_stats_uniform_grid_percentiles():
    s = surrogate_stats(np.arange(101.0))
    assert s["p5"] == pytest.approx(5.0)
    assert s["p95"] == pytest.approx(95.0)


def test_stats_two_point_sample_std():
    s = surrogate_stats(np.array([0.0, 10.0]))
    assert s["mean"] == pytest.approx(5.0)
    assert s["std"] == pytest.approx(math.sqrt(50.0))  # sample convention


def test_stats_empty_vector():
    with pytest.raises(PceError) as err:
        surrogate_stats(np.array([]))
    assert err.value.code == "EMPTY"


def test_stats_histogram_counts_total():
    rng = np.random.default_rng(17)
    v = rng.normal(0, 1, 500)
    s = surrogate_stats(v, bins=25)
    assert sum(s["histogram"]["counts"]) == 500
    assert len(s["histogram"]["edges"]) == 26
