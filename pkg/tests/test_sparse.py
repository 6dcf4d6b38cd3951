"""Sparse symmetric storage and Matrix Market round trips."""

import numpy as np
import pytest

from nkschwarz import (
    SizeMismatch,
    SparseSymMatrix,
    read_matrix_market,
    write_matrix_market,
)


def small_matrix():
    m = SparseSymMatrix(4)
    m.add_entries([0, 0, 1, 2, 3], [0, 2, 1, 2, 3], [2.0, -1.0, 3.0, 4.0, 5.0])
    # an entry given below the diagonal must land in the same place
    m.add_entries([2], [0], [-0.5])
    return m.finalize()


class TestSparseSymMatrix:
    def test_symmetric_expansion_exact(self):
        dense = small_matrix().to_dense()
        assert np.array_equal(dense, dense.T)
        assert dense[0, 2] == -1.5  # duplicates summed, transposed entry folded

    def test_matvec_matches_dense(self, rng):
        m = small_matrix()
        x = rng.standard_normal(4)
        np.testing.assert_allclose(m.matvec(x), m.to_dense() @ x, rtol=1e-15)

    def test_matvec_bitwise_deterministic(self, rng):
        m = small_matrix()
        x = rng.standard_normal(4)
        assert np.array_equal(m.matvec(x), m.matvec(x))

    def test_submatrix(self, rng):
        m = small_matrix()
        idx = np.array([0, 2, 3])
        sub = m.submatrix(idx)
        np.testing.assert_array_equal(
            sub.to_dense(), m.to_dense()[np.ix_(idx, idx)]
        )

    def test_from_dense_roundtrip(self, rng):
        a = rng.standard_normal((5, 5))
        a = a + a.T
        m = SparseSymMatrix.from_dense(a)
        np.testing.assert_allclose(m.to_dense(), a, atol=1e-15)

    def test_index_out_of_range(self):
        m = SparseSymMatrix(3)
        with pytest.raises(SizeMismatch):
            m.add_entries([3], [0], [1.0])

    def test_add_after_finalize_rejected(self):
        m = small_matrix()
        with pytest.raises(RuntimeError):
            m.add_entries([0], [0], [1.0])


class TestMatrixMarket:
    def test_symmetric_qualifier_roundtrip(self, tmp_path, rng):
        m = small_matrix()
        path = tmp_path / "A.mtx"
        write_matrix_market(path, m)
        text = path.read_text()
        assert "symmetric" in text.splitlines()[0]
        back = read_matrix_market(path)
        np.testing.assert_allclose(back.to_dense(), m.to_dense(), rtol=1e-15)

    def test_general_rectangular_roundtrip(self, tmp_path, rng):
        G = rng.standard_normal((6, 3))
        path = tmp_path / "G.mtx"
        write_matrix_market(path, G)
        back = read_matrix_market(path, symmetric=False)
        np.testing.assert_allclose(np.asarray(back), G, rtol=1e-12)

    def test_nonsymmetric_read_rejected(self, tmp_path):
        import scipy.io

        path = tmp_path / "bad.mtx"
        scipy.io.mmwrite(str(path), np.array([[1.0, 2.0], [0.0, 1.0]]))
        with pytest.raises(SizeMismatch):
            read_matrix_market(path)
