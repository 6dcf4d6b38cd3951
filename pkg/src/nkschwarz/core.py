"""Dense numerical kernels used by every other module.

Cholesky solves, the symmetric-definite generalized eigensolver and
rank-revealing orthogonalization all live here.  Subdomain and coarse
problems are desk scale (a few thousand unknowns at most) so everything
in this module is dense; the global system matrix stays sparse and is
only ever applied, never factored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import NoConvergence, NotPositiveDefinite, SizeMismatch

__all__ = [
    "DenseSymMatrix",
    "EigenPairs",
    "cholesky_solve",
    "cholesky_factor",
    "CholeskyFactor",
    "sym_gevp",
    "rank_reveal_columns",
]


class DenseSymMatrix:
    """Square symmetric matrix stored densely, row major.

    Symmetry is enforced on construction by mirroring, so ``values`` is
    exactly equal to its transpose.
    """

    def __init__(self, values):
        a = np.asarray(values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise SizeMismatch(f"expected a square array, got shape {a.shape}")
        self.values = 0.5 * (a + a.T)
        self.dim = a.shape[0]

    def __array__(self, dtype=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def __matmul__(self, other):
        return self.values @ other

    def __repr__(self):
        return f"DenseSymMatrix(dim={self.dim})"


def _as_sym_array(M) -> np.ndarray:
    """Accept a DenseSymMatrix or a plain square ndarray."""
    if isinstance(M, DenseSymMatrix):
        return M.values
    a = np.asarray(M, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise SizeMismatch(f"expected a square array, got shape {a.shape}")
    return a


@dataclass
class EigenPairs:
    """All eigenpairs of a symmetric-definite pencil (S, T).

    ``values`` is ascending and ``vectors[:, k]`` pairs with ``values[k]``.
    When T is SPD the vectors are T-orthonormal.
    """

    values: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.vectors = np.asarray(self.vectors, dtype=float)
        if self.vectors.shape[1] != self.values.shape[0]:
            raise SizeMismatch("one eigenvector column per eigenvalue required")

    def __len__(self):
        return len(self.values)

    def select(self, mask):
        """Sub-collection of pairs for a boolean mask over eigenvalues."""
        mask = np.asarray(mask, dtype=bool)
        return EigenPairs(self.values[mask], self.vectors[:, mask])


class CholeskyFactor:
    """Reusable Cholesky factorization of an SPD matrix."""

    def __init__(self, M):
        a = _as_sym_array(M)
        self.dim = a.shape[0]
        if self.dim == 0:
            self._c_and_lower = None
            return
        try:
            self._c_and_lower = sla.cho_factor(a, lower=True, check_finite=False)
        except sla.LinAlgError as exc:
            raise NotPositiveDefinite(str(exc)) from exc

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if rhs.shape[0] != self.dim:
            raise SizeMismatch(
                f"rhs has leading dimension {rhs.shape[0]}, expected {self.dim}"
            )
        if self.dim == 0:
            return rhs.copy()
        return sla.cho_solve(self._c_and_lower, rhs, check_finite=False)


def cholesky_factor(M) -> CholeskyFactor:
    """Factor an SPD matrix once for repeated solves.

    Raises NotPositiveDefinite if a pivot <= 0 is encountered.
    """
    return CholeskyFactor(M)


def cholesky_solve(M, rhs):
    """Solve M x = rhs for SPD M via Cholesky.

    ``rhs`` may be a vector or a matrix of stacked right-hand sides.
    """
    return CholeskyFactor(M).solve(rhs)


def sym_gevp(S, T) -> EigenPairs:
    """Solve the generalized eigenvalue problem S v = lambda T v.

    S must be symmetric (possibly indefinite or singular), T must be SPD.
    Returns every eigenpair with values ascending and vectors
    T-orthonormal.  Raises NotPositiveDefinite if T fails its
    factorization and NoConvergence if the underlying iteration gives up.
    """
    s = _as_sym_array(S)
    t = _as_sym_array(T)
    if s.shape != t.shape:
        raise SizeMismatch(f"pencil shapes differ: {s.shape} vs {t.shape}")
    n = s.shape[0]
    if n == 0:
        return EigenPairs(np.zeros(0), np.zeros((0, 0)))
    # Symmetrize defensively; inputs assembled as products can carry
    # round-off asymmetry that LAPACK would silently ignore one side of.
    s = 0.5 * (s + s.T)
    t = 0.5 * (t + t.T)
    try:
        w, v = sla.eigh(s, t, check_finite=False)
    except sla.LinAlgError as exc:
        msg = str(exc)
        if "positive definite" in msg or "leading minor" in msg:
            raise NotPositiveDefinite(msg) from exc
        raise NoConvergence(msg) from exc
    return EigenPairs(w, v)


def _as_ip_operator(ip):
    """Normalize an inner-product specification to a matvec callable.

    Accepts a callable v -> M v, anything with a ``matvec`` method, or a
    dense/sparse matrix applied with ``@``.  ``None`` means the Euclidean
    inner product.
    """
    if ip is None:
        return lambda v: v
    if callable(ip) and not hasattr(ip, "__matmul__"):
        return ip
    if hasattr(ip, "matvec"):
        return ip.matvec
    if isinstance(ip, DenseSymMatrix):
        m = ip.values
        return lambda v: m @ v
    if callable(ip):
        return ip
    m = ip
    return lambda v: m @ v


def rank_reveal_columns(V, ip=None, tol=1e-10, return_index=False):
    """Orthonormal basis, in the ``ip`` inner product, of the column span of V.

    Columns are processed left to right with modified Gram-Schmidt and one
    reorthogonalization pass.  A column whose residual after projection
    onto the columns kept so far has ip-norm at most ``tol`` times its
    original ip-norm is dropped.  Kept columns are ip-orthonormal.

    With ``return_index=True`` also returns the indices of the surviving
    input columns, in order.
    """
    V = np.asarray(V, dtype=float)
    if V.ndim != 2:
        raise SizeMismatch("expected a 2-D array of candidate columns")
    if tol <= 0:
        raise ValueError("tol must be positive")
    apply_ip = _as_ip_operator(ip)

    kept = []        # orthonormal columns q
    kept_ip = []     # cached ip(q), reused for every projection
    kept_index = []
    for j in range(V.shape[1]):
        v = V[:, j].copy()
        nrm0_sq = float(v @ apply_ip(v))
        if nrm0_sq <= 0.0:
            continue
        nrm0 = np.sqrt(nrm0_sq)
        for _ in range(2):
            for q, ipq in zip(kept, kept_ip):
                v -= (ipq @ v) * q
        ipv = apply_ip(v)
        nrm = np.sqrt(max(float(v @ ipv), 0.0))
        if nrm <= tol * nrm0:
            continue
        kept.append(v / nrm)
        kept_ip.append(ipv / nrm)
        kept_index.append(j)

    W = (
        np.column_stack(kept)
        if kept
        else np.zeros((V.shape[0], 0), dtype=float)
    )
    if return_index:
        return W, kept_index
    return W
