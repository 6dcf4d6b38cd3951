"""Dense kernel tests: Cholesky solves, generalized eigensolver,
rank-revealing orthogonalization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nkschwarz import (
    DenseSymMatrix,
    NotPositiveDefinite,
    SizeMismatch,
    cholesky_solve,
    rank_reveal_columns,
    sym_gevp,
)


def random_spd(n, rng, scale=1.0):
    L = np.tril(rng.standard_normal((n, n)))
    np.fill_diagonal(L, np.abs(L.diagonal()) + n)
    return scale * (L @ L.T)


class TestDenseSymMatrix:
    def test_mirrored_exactly(self, rng):
        a = rng.standard_normal((5, 5))
        m = DenseSymMatrix(a)
        assert np.array_equal(m.values, m.values.T)

    def test_rejects_nonsquare(self):
        with pytest.raises(SizeMismatch):
            DenseSymMatrix(np.zeros((2, 3)))


class TestCholeskySolve:
    def test_identity(self):
        x = cholesky_solve(np.eye(3), np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(x, [1.0, 2.0, 3.0], rtol=0, atol=0)

    def test_diagonal(self):
        x = cholesky_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0]))
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-15)

    def test_random_factor_roundtrip(self):
        # M built from a known Cholesky factor; the construction is the oracle
        rng = np.random.default_rng(42)
        M = random_spd(8, rng)
        rhs = M @ np.ones(8)
        x = cholesky_solve(M, rhs)
        np.testing.assert_allclose(x, np.ones(8), atol=1e-12)

    def test_not_positive_definite(self):
        M = np.diag([1.0, -1.0])
        with pytest.raises(NotPositiveDefinite):
            cholesky_solve(M, np.ones(2))

    def test_matrix_rhs(self, rng):
        M = random_spd(6, rng)
        X = rng.standard_normal((6, 3))
        sol = cholesky_solve(M, M @ X)
        np.testing.assert_allclose(sol, X, atol=1e-11)

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            cholesky_solve(np.eye(3), np.ones(4))


class TestSymGevp:
    def test_diagonal_identity(self):
        pairs = sym_gevp(np.diag([1.0, 2.0]), np.eye(2))
        np.testing.assert_allclose(pairs.values, [1.0, 2.0], atol=1e-14)
        np.testing.assert_allclose(np.abs(pairs.vectors), np.eye(2), atol=1e-14)

    def test_identical_operators(self, rng):
        T = random_spd(7, rng)
        pairs = sym_gevp(T, T)
        np.testing.assert_allclose(pairs.values, np.ones(7), atol=1e-12)

    def test_two_by_two_characteristic_polynomial(self):
        # det(S - lambda T) = 4 lambda^2 - 10 lambda + 3, roots (10 +- sqrt(52))/8
        S = np.array([[2.0, 1.0], [1.0, 2.0]])
        T = np.diag([1.0, 4.0])
        expected = np.sort(np.roots([4.0, -10.0, 3.0]))
        np.testing.assert_allclose(
            expected, (10.0 + np.array([-1, 1]) * np.sqrt(52.0)) / 8.0
        )
        pairs = sym_gevp(S, T)
        np.testing.assert_allclose(pairs.values, expected, rtol=1e-13)

    def test_eigenpair_residuals_and_orthonormality(self, rng):
        # type invariants: residual bound and T-orthonormality at 1e-10
        for n in (3, 10, 25):
            S = random_spd(n, rng) - 2.0 * np.eye(n)  # symmetric, indefinite
            T = random_spd(n, rng)
            pairs = sym_gevp(S, T)
            normS, normT = np.linalg.norm(S, "fro"), np.linalg.norm(T, "fro")
            for k in range(n):
                v, lam = pairs.vectors[:, k], pairs.values[k]
                res = np.linalg.norm(S @ v - lam * (T @ v))
                assert res <= 1e-10 * (normS + abs(lam) * normT)
            gram = pairs.vectors.T @ T @ pairs.vectors
            assert np.abs(gram - np.eye(n)).max() <= 1e-10

    def test_columnwise_consistency(self, rng):
        # S V = T V Lambda columnwise to 1e-10 * ||S||_F
        S = random_spd(12, rng)
        T = random_spd(12, rng)
        pairs = sym_gevp(S, T)
        lhs = S @ pairs.vectors
        rhs = T @ pairs.vectors @ np.diag(pairs.values)
        assert np.abs(lhs - rhs).max() <= 1e-10 * np.linalg.norm(S, "fro")

    def test_not_positive_definite_rhs(self, rng):
        S = random_spd(4, rng)
        with pytest.raises(NotPositiveDefinite):
            sym_gevp(S, np.diag([1.0, 1.0, -1.0, 1.0]))

    def test_pencil_shape_mismatch(self):
        with pytest.raises(SizeMismatch):
            sym_gevp(np.eye(3), np.eye(4))

    def test_select(self, rng):
        T = random_spd(5, rng)
        pairs = sym_gevp(np.diag([0.0, 1.0, 2.0, 3.0, 4.0]), np.eye(5))
        sel = pairs.select(pairs.values > 1.5)
        assert len(sel) == 3
        assert sel.vectors.shape == (5, 3)


class TestRankReveal:
    def test_duplicate_removal(self):
        e1 = np.array([1.0, 0.0, 0.0])
        W = rank_reveal_columns(np.column_stack([e1, e1]), tol=1e-10)
        assert W.shape[1] == 1
        np.testing.assert_allclose(np.abs(W[:, 0]), e1, atol=1e-15)

    def test_two_orthonormal(self):
        V = np.eye(3)[:, :2]
        W = rank_reveal_columns(V)
        assert W.shape[1] == 2
        np.testing.assert_allclose(W.T @ W, np.eye(2), atol=1e-14)

    def test_near_duplicate_dropped(self):
        # residual after projection is 1e-14 < tol
        v = np.array([1.0, 0.0])
        w = np.array([0.0, 1.0])
        V = np.column_stack([v, v + 1e-14 * w])
        W = rank_reveal_columns(V, tol=1e-10)
        assert W.shape[1] == 1

    def test_kept_columns_ip_orthonormal(self, rng):
        B = random_spd(9, rng)
        V = rng.standard_normal((9, 6))
        W = rank_reveal_columns(V, ip=lambda x: B @ x)
        gram = W.T @ B @ W
        np.testing.assert_allclose(gram, np.eye(W.shape[1]), atol=1e-12)

    def test_dropped_columns_within_tolerance(self, rng):
        # engineered dependencies: dropped columns project onto kept ones
        B = random_spd(8, rng)
        base = rng.standard_normal((8, 3))
        V = np.column_stack([base, base @ rng.standard_normal((3, 2))])
        W, kept = rank_reveal_columns(
            V, ip=lambda x: B @ x, tol=1e-10, return_index=True
        )
        assert W.shape[1] == 3
        dropped = [j for j in range(V.shape[1]) if j not in kept]
        for j in dropped:
            v = V[:, j]
            resid = v - W @ (W.T @ (B @ v))
            r = np.sqrt(resid @ B @ resid)
            assert r <= 1e-10 * np.sqrt(v @ B @ v) * (1 + 1e-6)

    def test_idempotent_column_count(self, rng):
        V = rng.standard_normal((10, 7))
        W = rank_reveal_columns(V)
        W2 = rank_reveal_columns(W)
        assert W.shape[1] == W2.shape[1]

    def test_empty_input(self):
        W = rank_reveal_columns(np.zeros((5, 0)))
        assert W.shape == (5, 0)

    def test_zero_column_skipped(self):
        V = np.zeros((4, 1))
        assert rank_reveal_columns(V).shape[1] == 0

    @given(st.integers(2, 8), st.integers(1, 8), st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_span_preserved_property(self, n, m, seed):
        # kept columns reproduce every input column up to the tolerance
        rng = np.random.default_rng(seed)
        V = rng.standard_normal((n, m))
        W = rank_reveal_columns(V, tol=1e-10)
        assert W.shape[1] <= min(n, m)
        for j in range(m):
            v = V[:, j]
            resid = v - W @ (W.T @ v)
            assert np.linalg.norm(resid) <= 1e-8 * max(np.linalg.norm(v), 1e-12)
