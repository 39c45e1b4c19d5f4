"""Matrix-free operators: products, restrictions, norms, and the CG solver."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sgsn import DenseOperator, IdentityOperator, Rng, cg_solve
from sgsn.operators import DiagonalMap, as_index_set, as_vector


def test_identity_matvec_passthrough():
    op = IdentityOperator(2)
    np.testing.assert_array_equal(op.matvec(np.array([1.0, 2.0])), [1.0, 2.0])
    np.testing.assert_array_equal(op.rmatvec(np.array([3.0, -1.0])), [3.0, -1.0])


def test_zero_operator_annihilates():
    op = DenseOperator(np.zeros((3, 2)))
    np.testing.assert_array_equal(op.matvec(np.array([5.0, -7.0])), np.zeros(3))
    np.testing.assert_array_equal(op.rmatvec(np.ones(3)), np.zeros(2))


def test_dense_matvec_hand_example():
    op = DenseOperator(np.array([[1.0, 2.0], [3.0, 4.0]]))
    np.testing.assert_array_equal(op.matvec(np.array([1.0, 1.0])), [3.0, 7.0])


def test_frobenius_norms():
    assert IdentityOperator(2).frob_sq() == 2.0
    assert DenseOperator(np.zeros((2, 2))).frob_sq() == 0.0
    assert DenseOperator(np.array([[1.0, 2.0], [3.0, 4.0]])).frob_sq() == 30.0


def test_row_restricted_full_set_equals_adjoint():
    rng = Rng(31)
    a = rng.normal(12).reshape(4, 3)
    op = DenseOperator(a)
    z = rng.normal(4)
    rows = np.arange(4)
    np.testing.assert_allclose(op.rmatvec_rows(rows, z), op.rmatvec(z), rtol=0, atol=0)


def test_row_restricted_empty_set():
    op = DenseOperator(np.ones((4, 3)))
    np.testing.assert_array_equal(op.rmatvec_rows(np.array([], dtype=np.int64), np.array([])),
                                  np.zeros(3))
    out = op.matvec_rows(np.array([], dtype=np.int64), np.ones(3))
    assert out.shape == (0,)


def test_row_restricted_matches_scatter_oracle():
    rng = Rng(32)
    a = rng.normal(6).reshape(3, 2)
    op = DenseOperator(a)
    rows = np.array([0, 2])
    zr = rng.normal(2)
    scattered = np.zeros(3)
    scattered[rows] = zr
    np.testing.assert_allclose(op.rmatvec_rows(rows, zr), op.rmatvec(scattered),
                               rtol=0, atol=1e-15)
    x = rng.normal(2)
    np.testing.assert_allclose(op.matvec_rows(rows, x), op.matvec(x)[rows], rtol=0, atol=1e-15)


@given(st.integers(min_value=0, max_value=2**31 - 1))
@settings(max_examples=40, deadline=None)
def test_adjoint_identity_random(seed):
    rng = Rng(seed)
    m = 1 + int(rng.below(10))
    n = 1 + int(rng.below(10))
    op = DenseOperator(rng.normal(m * n).reshape(m, n))
    x = rng.normal(n)
    z = rng.normal(m)
    lhs = float(np.dot(op.matvec(x), z))
    rhs = float(np.dot(x, op.rmatvec(z)))
    assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs))


def test_row_sqnorms_match_dense():
    rng = Rng(33)
    a = rng.normal(15).reshape(5, 3)
    op = DenseOperator(a)
    np.testing.assert_allclose(op.row_sqnorms(), np.einsum("ij,ij->i", a, a), atol=1e-14)
    assert abs(op.frob_sq() - float(op.row_sqnorms().sum())) <= 1e-12


def test_as_vector_validation():
    assert as_vector([1, 2], 2).dtype == np.float64
    with pytest.raises(ValueError, match="expected shape"):
        as_vector([1, 2, 3], 2)
    with pytest.raises(ValueError, match="non-finite"):
        as_vector([1.0, np.nan], 2)


def test_as_index_set_validation():
    np.testing.assert_array_equal(as_index_set([0, 2], 3), [0, 2])
    with pytest.raises(ValueError, match="out of range"):
        as_index_set([0, 3], 3)
    with pytest.raises(ValueError, match="strictly increasing"):
        as_index_set([1, 1], 3)
    with pytest.raises(ValueError, match="strictly increasing"):
        as_index_set([2, 0], 3)


def test_diagonal_map_applies_elementwise():
    dm = DiagonalMap(np.array([1.0, 0.0, 2.0]))
    np.testing.assert_array_equal(dm.apply(np.array([3.0, 5.0, 7.0])), [3.0, 0.0, 14.0])


def test_cg_identity_system():
    r = np.array([0.3, -1.2, 4.0])
    res = cg_solve(lambda v: v, r)
    assert res.converged
    np.testing.assert_allclose(res.x, r, atol=1e-12)


def test_cg_scaled_identity():
    res = cg_solve(lambda v: 2.0 * v, np.array([4.0, 6.0]))
    assert res.converged
    np.testing.assert_allclose(res.x, [2.0, 3.0], atol=1e-12)


def test_cg_two_by_two_exact():
    a = np.array([[4.0, 1.0], [1.0, 3.0]])
    res = cg_solve(lambda v: a @ v, np.array([1.0, 2.0]))
    assert res.converged
    assert res.iterations == 2
    np.testing.assert_allclose(res.x, [1.0 / 11.0, 7.0 / 11.0], atol=1e-10)


def test_cg_matches_dense_solve_random_spd():
    rng = Rng(34)
    for _ in range(20):
        n = 2 + int(rng.below(20))
        g = rng.normal(n * n).reshape(n, n)
        a = g @ g.T + n * np.eye(n)  # well conditioned by construction
        rhs = rng.normal(n)
        res = cg_solve(lambda v, a=a: a @ v, rhs, tol=1e-12)
        direct = np.linalg.solve(a, rhs)
        assert res.converged
        np.testing.assert_allclose(res.x, direct, atol=1e-8 * (1.0 + np.abs(direct).max()))


def test_cg_detects_indefinite_operator():
    a = np.array([[1.0, 0.0], [0.0, -1.0]])
    res = cg_solve(lambda v: a @ v, np.array([0.0, 1.0]))
    assert not res.converged


def test_cg_iteration_budget_returns_best_effort():
    a = np.array([[1.0, 0.0], [0.0, 1e8]])
    res = cg_solve(lambda v: a @ v, np.array([1.0, 1.0]), tol=1e-14, max_iter=1)
    assert not res.converged
    assert res.iterations == 1
    assert np.isfinite(res.residual)


def test_cg_stall_cutoff_returns_best_iterate():
    # a severely ill-conditioned system whose residual plateaus above the
    # target: the solver must stop early and hand back its best iterate
    rng = Rng(35)
    n = 120
    g = rng.normal(n * n).reshape(n, n)
    q, _ = np.linalg.qr(g)
    eigs = np.geomspace(1e-12, 1.0, n)
    a = (q * eigs) @ q.T
    a = 0.5 * (a + a.T)
    rhs = q[:, 0]
    res = cg_solve(lambda v: a @ v, rhs, tol=1e-14, stall_window=40)
    assert res.iterations < 2 * n + 20
    r = rhs - a @ res.x
    assert np.linalg.norm(r) <= np.linalg.norm(rhs)
