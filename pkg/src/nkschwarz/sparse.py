"""Sparse symmetric storage and Matrix Market I/O.

Only the upper triangle is stored during assembly; finalization expands
it to a full CSR matrix whose matvec has a fixed summation order, so two
matvecs on identical inputs are bitwise identical.
"""

from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import SizeMismatch

__all__ = ["SparseSymMatrix", "write_matrix_market", "read_matrix_market"]


class SparseSymMatrix:
    """Symmetric sparse matrix assembled from upper-triangle triplets.

    Entries with row > col are transposed into the upper triangle on
    insertion, so symmetry holds by construction and the mirror expansion
    at finalization is exact.
    """

    def __init__(self, dim):
        if dim < 0:
            raise SizeMismatch("dimension must be nonnegative")
        self.dim = int(dim)
        self._rows = []
        self._cols = []
        self._vals = []
        self._csr = None

    @classmethod
    def from_triplets(cls, dim, rows, cols, vals):
        m = cls(dim)
        m.add_entries(rows, cols, vals)
        return m.finalize()

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise SizeMismatch(f"expected square array, got {a.shape}")
        iu = np.triu_indices(a.shape[0])
        sym = 0.5 * (a + a.T)
        mask = sym[iu] != 0.0
        return cls.from_triplets(
            a.shape[0], iu[0][mask], iu[1][mask], sym[iu][mask]
        )

    def add_entries(self, rows, cols, vals):
        """Accumulate triplets; duplicates are summed at finalization."""
        if self._csr is not None:
            raise RuntimeError("matrix already finalized")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=float).ravel()
        if not (rows.shape == cols.shape == vals.shape):
            raise SizeMismatch("triplet arrays must have equal length")
        if len(rows) and (rows.min() < 0 or cols.min() < 0
                          or rows.max() >= self.dim or cols.max() >= self.dim):
            raise SizeMismatch("triplet index out of range")
        swap = rows > cols
        r = np.where(swap, cols, rows)
        c = np.where(swap, rows, cols)
        self._rows.append(r)
        self._cols.append(c)
        self._vals.append(vals)

    def finalize(self):
        """Build the full symmetric CSR representation; idempotent."""
        if self._csr is None:
            if self._rows:
                r = np.concatenate(self._rows)
                c = np.concatenate(self._cols)
                v = np.concatenate(self._vals)
            else:
                r = c = np.zeros(0, dtype=np.int64)
                v = np.zeros(0)
            upper = sp.coo_matrix((v, (r, c)), shape=(self.dim, self.dim)).tocsr()
            strict = sp.triu(upper, k=1)
            self._csr = (upper + strict.T).tocsr()
            self._csr.sum_duplicates()
            self._rows = self._cols = self._vals = None
        return self

    @property
    def csr(self) -> sp.csr_matrix:
        if self._csr is None:
            raise RuntimeError("call finalize() before using the matrix")
        return self._csr

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.dim:
            raise SizeMismatch(f"operand length {x.shape[0]} != dim {self.dim}")
        return self.csr @ x

    def __matmul__(self, x):
        return self.csr @ x

    def to_dense(self):
        return self.csr.toarray()

    def diagonal(self):
        return self.csr.diagonal()

    def submatrix(self, idx):
        """Principal submatrix on the given index set (R M R^T)."""
        idx = np.asarray(idx, dtype=np.int64)
        sub = self.csr[idx][:, idx]
        out = SparseSymMatrix(len(idx))
        coo = sp.triu(sub, k=0).tocoo()
        out.add_entries(coo.row, coo.col, coo.data)
        return out.finalize()

    @property
    def nnz(self):
        return self.csr.nnz

    def __repr__(self):
        state = "finalized" if self._csr is not None else "assembling"
        return f"SparseSymMatrix(dim={self.dim}, {state})"


def write_matrix_market(path, matrix):
    """Write a matrix in Matrix Market coordinate format.

    SparseSymMatrix instances are written with the ``symmetric``
    qualifier (lower triangle only); dense or general sparse arrays are
    written as ``general``.
    """
    if isinstance(matrix, SparseSymMatrix):
        scipy.io.mmwrite(
            str(path), sp.tril(matrix.csr, k=0), symmetry="symmetric"
        )
    else:
        scipy.io.mmwrite(str(path), matrix)


def read_matrix_market(path, symmetric=True):
    """Read a Matrix Market file.

    With ``symmetric=True`` the result is returned as a finalized
    SparseSymMatrix (the symmetric qualifier, if present, is expanded by
    the reader and verified here).  Otherwise the raw array or sparse
    matrix is returned.
    """
    m = scipy.io.mmread(str(path))
    if not symmetric:
        return m
    coo = sp.coo_matrix(m)
    if coo.shape[0] != coo.shape[1]:
        raise SizeMismatch(f"expected square matrix, got {coo.shape}")
    if (abs(coo - coo.T)).max() if coo.nnz else 0.0:
        raise SizeMismatch("matrix read from file is not symmetric")
    upper = sp.triu(coo, k=0).tocoo()
    out = SparseSymMatrix(coo.shape[0])
    out.add_entries(upper.row, upper.col, upper.data)
    return out.finalize()
