import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from randspde.fem import (
    Grid1D,
    SingularSystemError,
    TridiagonalSystem,
    assemble_mass,
    assemble_stiffness,
    interpolate,
    l2_norm,
    l2_project,
    prolong_to_fine,
    restrict_to_coarse,
    solve_tridiagonal,
)

from oracles import gauss_solve, hat_integrals


def test_grid():
    g = Grid1D(3)
    assert g.h == 0.25
    np.testing.assert_array_equal(g.nodes, [0, 0.25, 0.5, 0.75, 1.0])
    assert np.all(np.diff(Grid1D(100).nodes) > 0)
    with pytest.raises(ValueError):
        Grid1D(0)


def test_nested_grids_share_node_coordinates():
    fine, coarse = Grid1D(255), Grid1D(15)
    np.testing.assert_array_equal(fine.nodes[::16], coarse.nodes)


def test_mass_single_node():
    M = assemble_mass(Grid1D(1))
    assert M.diag[0] == pytest.approx(1 / 3, rel=1e-15)
    assert len(M.sub) == 0


def test_mass_three_nodes():
    M = assemble_mass(Grid1D(3))
    np.testing.assert_allclose(M.diag, [1 / 6] * 3, rtol=1e-15)
    np.testing.assert_allclose(M.sub, [1 / 24] * 2, rtol=1e-15)
    np.testing.assert_array_equal(M.sub, M.sup)


def test_mass_interior_row_sums():
    g = Grid1D(9)
    rows = assemble_mass(g).to_dense().sum(axis=1)
    np.testing.assert_allclose(rows[1:-1], g.h, rtol=1e-14)


def test_mass_matches_element_integration():
    K = 7
    M, _ = hat_integrals(K, np.ones(K + 2))
    np.testing.assert_allclose(assemble_mass(Grid1D(K)).to_dense(), M, rtol=1e-14)


def test_stiffness_single_node():
    S = assemble_stiffness(Grid1D(1), np.ones(3))
    assert S.diag[0] == pytest.approx(4.0)


def test_stiffness_three_nodes():
    S = assemble_stiffness(Grid1D(3), np.ones(5))
    np.testing.assert_allclose(S.diag, [8.0, 8.0, 8.0])
    np.testing.assert_allclose(S.sub, [-4.0, -4.0])


def test_stiffness_linear_in_coefficient():
    a = np.random.default_rng(0).uniform(0.5, 2.0, 10)
    g = Grid1D(8)
    S1 = assemble_stiffness(g, a)
    S3 = assemble_stiffness(g, 3.0 * a)
    np.testing.assert_allclose(S3.to_dense(), 3.0 * S1.to_dense(), rtol=1e-14)


def test_stiffness_matches_element_integration():
    K = 8
    a = np.random.default_rng(1).uniform(0.1, 3.0, K + 2)
    _, S = hat_integrals(K, a)
    np.testing.assert_allclose(assemble_stiffness(Grid1D(K), a).to_dense(), S, rtol=1e-13)


def test_stiffness_rejects_nonpositive():
    with pytest.raises(ValueError):
        assemble_stiffness(Grid1D(2), [1.0, 0.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        assemble_stiffness(Grid1D(2), [1.0, 1.0, 1.0])


def test_stiffness_spd_and_dominant():
    gen = np.random.default_rng(2)
    K = 20
    a = np.exp(gen.normal(size=K + 2))
    S = assemble_stiffness(Grid1D(K), a)
    A = S.to_dense()
    for _ in range(100):
        x = gen.normal(size=K)
        assert x @ A @ x > 0
    off = np.abs(A).sum(axis=1) - np.abs(np.diag(A))
    assert np.all(np.diag(A) > 0)
    # interior rows balance exactly; the boundary rows are strictly dominant
    assert np.all(np.diag(A) >= off * (1 - 1e-13))
    assert np.diag(A)[0] > off[0] and np.diag(A)[-1] > off[-1]


def _exact_element_stiffness(K):
    # a(x) = x + 1: int over [x_{k-1}, x_k] of a / h^2 = (x_mid + 1) / h
    g = Grid1D(K)
    mids = 0.5 * (g.nodes[:-1] + g.nodes[1:])
    aint = (mids + 1.0) / g.h
    diag = aint[:-1] + aint[1:]
    return diag, -aint[1:-1]


def _exact_smooth_stiffness(K):
    # a(x) = exp(x): element integral is (e^{x_k} - e^{x_{k-1}}) / h^2
    g = Grid1D(K)
    x = g.nodes
    aint = (np.exp(x[1:]) - np.exp(x[:-1])) / g.h ** 2
    return aint[:-1] + aint[1:], -aint[1:-1]


def test_stiffness_exact_for_linear_coefficient():
    # end-point averaging integrates a linear coefficient exactly
    K = 15
    g = Grid1D(K)
    S = assemble_stiffness(g, g.nodes + 1.0)
    d, o = _exact_element_stiffness(K)
    np.testing.assert_allclose(S.diag, d, rtol=1e-13)
    np.testing.assert_allclose(S.sub, o, rtol=1e-13)


def test_stiffness_entry_error_is_second_order():
    errs = []
    for K in (7, 15, 31, 63):
        g = Grid1D(K)
        S = assemble_stiffness(g, np.exp(g.nodes))
        d, _ = _exact_smooth_stiffness(K)
        errs.append(np.max(np.abs(S.diag - d) / np.abs(d)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.9)


def test_solve_identity():
    n = 6
    I = TridiagonalSystem(np.zeros(n - 1), np.ones(n), np.zeros(n - 1))
    b = np.arange(n, dtype=float)
    np.testing.assert_array_equal(solve_tridiagonal(I, b), b)


def test_solve_matches_dense_oracle():
    gen = np.random.default_rng(3)
    K = 8
    off = gen.uniform(-1, 1, K - 1)
    diag = np.abs(np.concatenate([[0], off])) + np.abs(np.concatenate([off, [0]])) + gen.uniform(0.5, 2, K)
    A = TridiagonalSystem(off, diag, off.copy())
    b = gen.normal(size=K)
    np.testing.assert_allclose(solve_tridiagonal(A, b), gauss_solve(A.to_dense(), b),
                               rtol=0, atol=1e-12)


def test_solve_mass_round_trip():
    M = assemble_mass(Grid1D(3))
    x = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(solve_tridiagonal(M, M.matvec(x)), x, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, 12, elements=st.floats(-1, 1)),
       arrays(np.float64, 12, elements=st.floats(-100, 100)))
def test_solve_residual_bound(off_raw, b):
    off = off_raw[:11]
    diag = 2.5 + np.abs(off_raw)
    A = TridiagonalSystem(off, diag, off[::-1].copy())
    x = solve_tridiagonal(A, b)
    Ainf = np.abs(A.to_dense()).sum(axis=1).max()
    res = np.abs(A.matvec(x) - b).max()
    assert res <= 1e-10 * (Ainf * np.abs(x).max() + np.abs(b).max()) + 1e-300


def test_solve_singular():
    A = TridiagonalSystem(np.array([1.0]), np.array([1.0, 1.0]), np.array([1.0]))
    with pytest.raises(SingularSystemError):
        solve_tridiagonal(A, [1.0, 1.0])
    with pytest.raises(SingularSystemError):
        solve_tridiagonal(TridiagonalSystem(np.zeros(0), np.zeros(1), np.zeros(0)), [1.0])
    B =TridiagonalSystem(np.array([1.0, 0.0]), np.array([1.0, 1.0, 2.0]), np.array([1.0, 0.0]))
    with pytest.raises(SingularSystemError):
        solve_tridiagonal(B, [1.0, 1.0, 1.0])


@pytest.mark.parametrize("n", [1, 2, 3])
def test_solve_small_systems(n):
    gen = np.random.default_rng(n)
    off = gen.uniform(-1, 1, n - 1)
    A = TridiagonalSystem(off, 3.0 + gen.uniform(size=n), gen.uniform(-1, 1, n - 1))
    b = gen.normal(size=n)
    np.testing.assert_allclose(solve_tridiagonal(A, b), gauss_solve(A.to_dense(), b), atol=1e-14)


def test_l2_norm_zero_and_scaling():
    M = assemble_mass(Grid1D(10))
    assert l2_norm(np.zeros(10), M) == 0.0
    u = np.random.default_rng(4).normal(size=10)
    assert l2_norm(-3.5 * u, M) == pytest.approx(3.5 * l2_norm(u, M), rel=1e-12)


def test_l2_norm_of_sine():
    g = Grid1D(255)
    u = interpolate(lambda x: np.sin(np.pi * x), g)
    assert abs(l2_norm(u, assemble_mass(g)) - 1 / np.sqrt(2)) < 1e-4


def test_l2_project_identity_on_vh():
    g = Grid1D(63)
    M = assemble_mass(g)
    w = np.random.default_rng(5).normal(size=63)
    np.testing.assert_allclose(l2_project(w, M), w, atol=1e-12)
    np.testing.assert_array_equal(l2_project(np.zeros(63), M), np.zeros(63))
    p = interpolate(lambda x: x * (1 - x), g)
    np.testing.assert_allclose(l2_project(p, M), p, atol=1e-12)


def test_prolong_restrict_round_trip():
    coarse, fine = Grid1D(7), Grid1D(63)
    u = np.random.default_rng(6).normal(size=7)
    up = prolong_to_fine(u, coarse, fine)
    assert up.shape == (63,)
    np.testing.assert_allclose(restrict_to_coarse(up, fine, coarse), u, atol=1e-15)


def test_prolong_is_exact_interpolation():
    coarse, fine = Grid1D(3), Grid1D(15)
    u = np.array([1.0, -1.0, 2.0])
    full = np.interp(fine.nodes, coarse.nodes, np.r_[0.0, u, 0.0])[1:-1]
    np.testing.assert_allclose(prolong_to_fine(u, coarse, fine), full, atol=1e-15)


def test_prolong_preserves_norm():
    coarse, fine = Grid1D(15), Grid1D(127)
    u = np.random.default_rng(7).normal(size=15)
    n_c = l2_norm(u, assemble_mass(coarse))
    n_f = l2_norm(prolong_to_fine(u, coarse, fine), assemble_mass(fine))
    assert n_f == pytest.approx(n_c, rel=1e-12)


def test_prolong_zero_and_same_grid():
    coarse, fine = Grid1D(3), Grid1D(7)
    assert not prolong_to_fine(np.zeros(3), coarse, fine).any()
    u = np.arange(1.0, 4.0)
    np.testing.assert_array_equal(prolong_to_fine(u, coarse, coarse), u)


def test_non_nested_rejected():
    with pytest.raises(ValueError):
        prolong_to_fine(np.zeros(4), Grid1D(4), Grid1D(8))
    with pytest.raises(ValueError):
        restrict_to_coarse(np.zeros(8), Grid1D(8), Grid1D(4))
