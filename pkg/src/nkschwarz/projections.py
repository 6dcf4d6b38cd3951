"""Per-subdomain near-kernel projections and restricted inverses.

For a subdomain with SPD solver matrix B and near-kernel basis G (the
restriction of the global near-kernel, rank-compressed in the B inner
product), this module builds

    xi0    B-orthogonal projection onto span(G),
           xi0 = G (G^T B G)^{-1} G^T B
    q      Euclidean-orthogonal projection onto the B-orthogonal
           complement of span(G),
           q = I - B G (G^T B^2 G)^{-1} G^T B
    B_dag  inverse of B restricted to that complement,
           B_dag = (I - xi0) B^{-1} = B^{-1} - G (G^T B G)^{-1} G^T

and, from the spectral filtering of the local eigenproblems, the
projections eta (high-mode filter inside the complement) and p (used by
the inexact-coarse-solve analysis) together with the restricted inverse
B_tilde_dag = (I - eta)(I - xi0) B^{-1}.

Operators accept a vector or a matrix of stacked columns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import cholesky_factor, rank_reveal_columns
from .errors import NotPositiveDefinite, SingularGram, SizeMismatch

__all__ = [
    "SubdomainKernel",
    "build_subdomain_kernel",
    "SorasSubspaces",
    "build_soras_subspaces",
    "build_p",
    "spectral_projection",
]


class SubdomainKernel:
    """Near-kernel machinery of one subdomain.

    Everything is stored in factored form: the kernel basis, the
    Cholesky factor of B and the Cholesky factors of the two Gram
    matrices G^T B G and (BG)^T (BG).
    """

    def __init__(self, index, G_i, B_i):
        B = np.asarray(B_i, dtype=float)
        B = 0.5 * (B + B.T)
        n = B.shape[0]
        G_i = np.asarray(G_i, dtype=float).reshape(n, -1)
        self.index = index
        self.n = n
        self.B = B
        self.G_i = G_i
        self.chol_B = cholesky_factor(B)
        self.n_kernel = G_i.shape[1]
        if self.n_kernel:
            self.BG = B @ G_i
            self._chol_gram = cholesky_factor(G_i.T @ self.BG)
            # Householder basis of range(B G_i) and its orthonormal
            # completion: the completion spans the B-orthogonal complement
            # of the kernel, and building both from one factorization
            # keeps them orthogonal to machine precision.  The raw Gram
            # (BG)^T (BG) spans the squared conditioning of B and is
            # never formed.
            full = np.linalg.qr(self.BG, mode="complete")[0]
            self._QB = full[:, : self.n_kernel]
            self._Qperp = full[:, self.n_kernel:]
        else:
            self.BG = np.zeros((n, 0))
            self._chol_gram = None
            self._QB = np.zeros((n, 0))
            self._Qperp = np.eye(n)
        # B restricted to the complement; its conditioning is purged of
        # the near-kernel modes that live inside span(G_i)
        self._chol_B_perp = cholesky_factor(
            self._Qperp.T @ (B @ self._Qperp)
        )
        self._xi0_mat = None

    # -- projections ----------------------------------------------------

    def xi0(self, v):
        """B-orthogonal projection onto span(G_i)."""
        if self.n_kernel == 0:
            return np.zeros_like(np.asarray(v, dtype=float))
        return self.G_i @ self._chol_gram.solve(self.BG.T @ v)

    def xi0_T(self, v):
        """Transpose of xi0."""
        if self.n_kernel == 0:
            return np.zeros_like(np.asarray(v, dtype=float))
        return self.BG @ self._chol_gram.solve(self.G_i.T @ v)

    def q(self, v):
        """Euclidean projection onto the B-orthogonal complement of span(G_i).

        Symmetric as a matrix; q v satisfies G_i^T B (q v) = 0.
        """
        v = np.asarray(v, dtype=float)
        if self.n_kernel == 0:
            return v.copy()
        return v - self._QB @ (self._QB.T @ v)

    # -- solves ----------------------------------------------------------

    def solve_B(self, v):
        """B^{-1} v."""
        return self.chol_B.solve(v)

    def B_dag(self, v):
        """Restricted inverse (I - xi0) B^{-1} applied to v.

        Realized in the complement basis as Q (Q^T B Q)^{-1} Q^T, which
        is the same operator (both invert the restriction of B on the
        complement and annihilate range(B G_i)) but never inverts B on
        its near-kernel, so the composition with q is exact.
        """
        v = np.asarray(v, dtype=float)
        if self.n_kernel == 0:
            return self.chol_B.solve(v)
        return self._Qperp @ self._chol_B_perp.solve(self._Qperp.T @ v)

    def apply_B_perp(self, v):
        """Riesz map of the B form on the complement: q(B v)."""
        return self.q(self.B @ np.asarray(v, dtype=float))

    # -- dense helpers (subdomain scale only) -----------------------------

    def xi0_matrix(self):
        if self._xi0_mat is None:
            self._xi0_mat = self.xi0(np.eye(self.n))
        return self._xi0_mat

    def complement_basis(self):
        """Euclidean-orthonormal basis of the B-orthogonal complement of G_i."""
        return self._Qperp

    def __repr__(self):
        return (
            f"SubdomainKernel(index={self.index}, n={self.n}, "
            f"n_kernel={self.n_kernel})"
        )


def build_subdomain_kernel(index, G_restricted, B_i, tol=1e-10) -> SubdomainKernel:
    """Compress the restricted near-kernel columns and build the projections.

    ``G_restricted`` holds the raw columns R_i G, which are frequently
    dependent near subdomain boundaries; they are rank-compressed in the
    B_i inner product before any Gram matrix is inverted.
    """
    B = np.asarray(B_i, dtype=float)
    G_raw = np.asarray(G_restricted, dtype=float).reshape(B.shape[0], -1)
    ip = lambda v: B @ v
    G_i = rank_reveal_columns(G_raw, ip=ip, tol=tol)
    return SubdomainKernel(index, G_i, B)


def spectral_projection(vectors, M):
    """Projection onto span(vectors) parallel to its M-orthogonal complement.

    For M-orthogonal eigenvector families this is the projection onto
    the selected modes parallel to the span of the remaining ones.
    Returns a callable acting on vectors or stacked columns.
    """
    V = np.asarray(vectors, dtype=float)
    if V.ndim != 2:
        raise SizeMismatch("expected a matrix of column vectors")
    if V.shape[1] == 0:
        return lambda v: np.zeros_like(np.asarray(v, dtype=float))
    M = np.asarray(M, dtype=float)
    MV = M @ V
    gram = cholesky_factor(V.T @ MV)
    return lambda v: V @ gram.solve(MV.T @ v)


def build_p(V_tau, V_gamma, kernel: SubdomainKernel, tol=1e-10):
    """Projection used by the inexact-coarse-solve stability argument.

    p is the (I - xi0)^T B (I - xi0)-orthogonal projection onto the sum
    of the two selected eigenvector families.  The quadratic form is
    singular on the near-kernel but nonsingular on that sum; a failed
    factorization of the Gram matrix means the candidate basis leaks
    into the near-kernel and is reported as SingularGram.
    """
    n = kernel.n
    V_tau = np.asarray(V_tau, dtype=float).reshape(n, -1)
    V_gamma = np.asarray(V_gamma, dtype=float).reshape(n, -1)
    Y = rank_reveal_columns(
        np.hstack([V_tau, V_gamma]), ip=lambda v: kernel.B @ v, tol=tol
    )
    if Y.shape[1] == 0:
        return lambda v: np.zeros_like(np.asarray(v, dtype=float))

    def form(v):
        w = v - kernel.xi0(v)
        return kernel.xi0_T(-(kernel.B @ w)) + kernel.B @ w

    CY = form(Y)
    G = 0.5 * (Y.T @ CY + CY.T @ Y)
    # the quadratic form is singular exactly on the near-kernel, so a
    # collapsed Gram eigenvalue means the candidates leak into it
    w = np.linalg.eigvalsh(G)
    if w[0] <= 1e-12 * max(w[-1], 0.0):
        raise SingularGram(
            "candidate basis is contaminated by near-kernel components"
        )
    try:
        gram = cholesky_factor(G)
    except NotPositiveDefinite as exc:
        raise SingularGram(
            "candidate basis is contaminated by near-kernel components"
        ) from exc
    return lambda v: Y @ gram.solve(CY.T @ v)


@dataclass
class SorasSubspaces:
    """Spectral splitting of the complement space for one subdomain.

    ``V_gamma`` spans the high modes (filter eigenvalue above gamma) of
    the upper-bound eigenproblem, ``W_gamma`` the rest.  ``eta`` projects
    onto V_gamma parallel to W_gamma inside the complement; composed as
    (I - eta)(I - xi0) it is the B-orthogonal projection onto W_gamma.
    """

    kernel: SubdomainKernel
    V_gamma: np.ndarray
    W_gamma: np.ndarray
    gamma: float
    _eta: callable = field(default=None, repr=False)
    p: callable = field(default=None, repr=False)

    def eta(self, v):
        return self._eta(v)

    def B_tilde_dag(self, v):
        """(I - eta)(I - xi0) B^{-1} v, the inverse of B restricted to W_gamma."""
        w = self.kernel.B_dag(v)
        return w - self._eta(w)

    def apply_B_W(self, v):
        """Riesz map of the B form on W_gamma (Euclidean projection of B v)."""
        W = self.W_gamma
        if W.shape[1] == 0:
            return np.zeros_like(np.asarray(v, dtype=float))
        Bv = self.kernel.B @ np.asarray(v, dtype=float)
        gram = cholesky_factor(W.T @ W)
        return W @ gram.solve(W.T @ Bv)


def build_soras_subspaces(
    kernel: SubdomainKernel,
    upper_pairs,
    gamma,
    lower_pairs=None,
    tau=None,
    tol=1e-10,
) -> SorasSubspaces:
    """Split the complement by the upper-bound eigenproblem at threshold gamma.

    ``upper_pairs`` are eigenpairs of the upper-bound problem, with
    vectors already lifted into the subdomain space (they lie in the
    B-orthogonal complement of the near-kernel and are B-orthonormal).
    When the lower-bound pairs and tau are given, the projection p onto
    the union of the two selected families is built as well.
    """
    mu = upper_pairs.values
    U = upper_pairs.vectors
    V_gamma_raw = U[:, mu > gamma]
    W_gamma = U[:, mu <= gamma]
    # re-orthonormalize the selected block in the B inner product in case
    # of degenerate clusters straddling the threshold
    V_gamma = rank_reveal_columns(
        V_gamma_raw, ip=lambda v: kernel.B @ v, tol=tol
    )
    eta = spectral_projection(V_gamma, kernel.B)

    p = None
    if lower_pairs is not None and tau is not None:
        V_tau = lower_pairs.vectors[:, lower_pairs.values > tau]
        p = build_p(V_tau, V_gamma_raw, kernel, tol=tol)

    return SorasSubspaces(
        kernel=kernel,
        V_gamma=V_gamma,
        W_gamma=W_gamma,
        gamma=float(gamma),
        _eta=eta,
        p=p,
    )
