import numpy as np
import pytest

from randspde.covariance import CovarianceSpec, ToeplitzColumn, first_column
from randspde.grf import (
    EmbeddingError,
    build_plan,
    choose_padding,
    lift_to_coefficient,
    make_plan,
    padding_diagnostic,
    sample_pair,
)
from randspde.rng import stream

from oracles import matern


def col(values, dx=1.0):
    return ToeplitzColumn(np.asarray(values, dtype=float), dx)


def test_identity_plan():
    plan = build_plan(col([1.0, 0.0]), 0)
    np.testing.assert_array_equal(plan.circ_first_col, [1.0, 0.0])
    np.testing.assert_allclose(plan.d, [1.0, 1.0])
    assert plan.rho_minus == 0.0


def test_padded_two_point_extension():
    c0, c1 = 1.0, 0.3
    plan = build_plan(col([c0, c1]), 1)
    # 3x3 Toeplitz with first column (c0, c1, 0) -> circulant of size 4
    np.testing.assert_array_equal(plan.circ_first_col, [c0, c1, 0.0, c1])
    assert plan.ext_len == 2 * (2 + 1 - 1)


def test_constant_column_concentrates_at_zero_frequency():
    plan = build_plan(col([1.0, 1.0]), 0)
    np.testing.assert_allclose(plan.d, [2.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(plan.lambda_plus, [2.0, 0.0], atol=1e-15)


def test_padded_layout_matches_formula():
    c = np.array([1.0, 0.5, 0.2, 0.1])
    M = 3
    plan = build_plan(col(c), M)
    expected = np.concatenate([c, np.zeros(M), np.zeros(M - 1), c[:0:-1]])
    np.testing.assert_array_equal(plan.circ_first_col, expected)
    assert plan.ext_len == 2 * (len(c) + M - 1)


def test_embedding_is_circulant_of_padded_toeplitz():
    spec = CovarianceSpec(2.0)
    P, M = 9, 5
    plan = make_plan(spec, P, M, rho_limit=None)
    n = plan.ext_len
    C = np.array([[plan.circ_first_col[(i - j) % n] for j in range(n)] for i in range(n)])
    np.testing.assert_allclose(C, C.T)
    lags = np.abs(np.subtract.outer(np.arange(P + M), np.arange(P + M))) / (P - 1)
    target = np.vectorize(lambda x: matern(2.0, x))(lags)
    np.testing.assert_allclose(C[:P + M, :P + M], target, atol=1e-9)


def test_plan_invariants():
    spec = CovarianceSpec(2.0)
    plan = make_plan(spec, 17, 16, rho_limit=None)
    c = plan.circ_first_col
    np.testing.assert_array_equal(c[1:], c[:0:-1])  # even sequence
    np.testing.assert_array_equal(plan.lambda_plus, np.maximum(plan.d, 0))
    assert plan.rho_minus == max(0.0, -plan.d.min())
    assert np.abs(np.fft.fft(c).imag).max() < 1e-10


def test_spectral_round_trip():
    spec = CovarianceSpec(2.0)
    plan = make_plan(spec, 33, 64, rho_limit=None)
    back = np.fft.ifft(plan.lambda_plus - np.maximum(-plan.d, 0.0)).real
    np.testing.assert_allclose(back, plan.circ_first_col, atol=1e-12)


def test_padding_values_validated():
    with pytest.raises(ValueError):
        build_plan(col([1.0, 0.5]), 2, padding_values=[0.1])
    with pytest.raises(ValueError):
        build_plan(col([1.0, 0.5]), -1)


def test_zero_noise_gives_zero_field():
    plan = build_plan(col([1.0, 0.5, 0.25]), 2)
    re, im = sample_pair(plan, None, xi=np.zeros(plan.ext_len, dtype=complex))
    assert np.all(re == 0) and np.all(im == 0)
    assert re.shape == (3,)


def test_identity_covariance_gives_white_noise():
    P = 8
    plan = build_plan(col(np.eye(P)[0]), 0)
    gen = np.random.default_rng(11)
    draws = np.array([v for _ in range(50_000) for v in sample_pair(plan, gen)])
    var = draws.var(axis=0)
    assert np.all((var > 0.98) & (var < 1.02))
    corr = np.corrcoef(draws.T)[np.triu_indices(P, 1)]
    assert np.abs(corr).max() < 0.02


def test_real_and_imaginary_parts_independent():
    plan = make_plan(CovarianceSpec(2.0), 9, 128)
    gen = np.random.default_rng(3)
    pairs = [sample_pair(plan, gen) for _ in range(20_000)]
    re = np.array([p[0] for p in pairs])
    im = np.array([p[1] for p in pairs])
    cross = (re * im).mean(axis=0)
    assert np.abs(cross).max() < 4 / np.sqrt(len(pairs))


def test_field_mean_is_zero():
    plan = make_plan(CovarianceSpec(2.0), 17, 16 * 24)
    gen = np.random.default_rng(5)
    z = np.array([v for _ in range(50_000) for v in sample_pair(plan, gen)])
    assert np.abs(z.mean(axis=0)).max() < 0.02


def test_empirical_covariance_matches_column():
    spec = CovarianceSpec(2.0)
    P = 65
    M, rho = choose_padding(spec, P)
    assert rho <= 1e-10
    plan = make_plan(spec, P, M)
    gen = np.random.default_rng(2024)
    z = np.array([v for _ in range(5_000) for v in sample_pair(plan, gen)])
    n = len(z)
    emp = z.T @ z / n
    c = first_column(spec, P).values
    target = c[np.abs(np.subtract.outer(np.arange(P), np.arange(P)))]
    se = np.sqrt((1.0 + target ** 2) / n)
    inside = np.abs(emp - target) <= 3 * se
    assert inside.mean() >= 0.99


def test_same_stream_same_pair():
    plan = make_plan(CovarianceSpec(2.0), 17, 64, rho_limit=None)
    a = sample_pair(plan, stream(7, 3, 0))
    b = sample_pair(plan, stream(7, 3, 0))
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])
    c = sample_pair(plan, stream(7, 4, 0))
    assert not np.array_equal(a[0], c[0])


def test_lift_constant():
    fs = lift_to_coefficient(np.zeros(5), 1e-3)
    np.testing.assert_array_equal(fs.a, np.full(5, 1e-3))
    assert fs.a_min_observed == fs.a_max_observed == 1e-3


def test_lift_log_two():
    fs = lift_to_coefficient([np.log(2.0)], 1.0)
    assert fs.a[0] == pytest.approx(2.0, rel=1e-15)


def test_lift_positive_and_bounded():
    z = np.random.default_rng(0).normal(scale=30.0, size=200)
    fs = lift_to_coefficient(z, 0.5)
    assert fs.a.min() > 0
    np.testing.assert_array_equal(fs.a, 0.5 * np.exp(z))
    assert fs.a_min_observed <= fs.a.min() and fs.a.max() <= fs.a_max_observed


def test_lift_rejects_nonpositive_scale():
    with pytest.raises(ValueError):
        lift_to_coefficient([0.0], 0.0)


def test_padding_diagnostic_identity():
    rows = padding_diagnostic(col([1.0, 0.0, 0.0]), [0, 1, 5, 20])
    assert [m for m, _ in rows] == [0, 1, 5, 20]
    assert all(rho == 0.0 for _, rho in rows)


def test_padding_diagnostic_single_row():
    rows = padding_diagnostic(first_column(CovarianceSpec(2.0), 9), [0])
    assert len(rows) == 1 and rows[0][0] == 0


def test_padding_diagnostic_rejects_empty():
    with pytest.raises(ValueError):
        padding_diagnostic(col([1.0, 0.0]), [])


def test_zero_padding_does_not_remove_negative_eigenvalues():
    # zeros leave a jump in the padded column; rho_minus does not decay
    spec = CovarianceSpec(2.0)
    c = first_column(spec, 65)
    rows = dict(padding_diagnostic(c, [64, 512, 1536]))
    assert min(rows.values()) > 1.0


def test_covariance_padding_reaches_machine_level():
    spec = CovarianceSpec(2.0)
    P = 129
    c = first_column(spec, P)
    rows = dict(padding_diagnostic(c, [8 * P, 24 * (P - 1)], spec=spec))
    # the 8P budget is not enough for q = 2 on this grid, 24 (P - 1) is
    assert rows[8 * P] > 1e-10
    assert rows[24 * (P - 1)] <= 1e-10


def test_choose_padding_and_limit():
    spec = CovarianceSpec(2.0)
    M, rho = choose_padding(spec, 33)
    assert rho <= 1e-10 and M % 32 == 0
    with pytest.raises(EmbeddingError):
        make_plan(spec, 33, 0, rho_limit=1e-6)
    with pytest.raises(EmbeddingError):
        choose_padding(spec, 33, max_factor=1)
