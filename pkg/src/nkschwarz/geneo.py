"""Spectral coarse spaces built from subdomain generalized eigenproblems.

Three pencil families are solved per subdomain (n is the subdomain size,
xi0 the near-kernel projection, D the partition-of-unity weights, A_neu
the Neumann matrix and B the subdomain solver matrix):

  AS_LOWER      (I-xi0)^T D R A R^T D (I-xi0) V = lambda A_neu V
  SORAS_LOWER   (I-xi0)^T B (I-xi0) V           = lambda A_neu V
  SORAS_UPPER   D R A R^T D U = mu B U, posed on the B-orthogonal
                complement of the near-kernel

Eigenvectors whose eigenvalue exceeds the user threshold (tau for the
lower pencils, gamma for the upper one) are weighted, prolongated and
merged with the near-kernel generators into the coarse basis Z; the
coarse operator is E = Z^T A Z, optionally replaced by a cheaper SPD
surrogate for inexact coarse solves.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    CholeskyFactor,
    EigenPairs,
    cholesky_factor,
    rank_reveal_columns,
    sym_gevp,
)
from .decomposition import Decomposition
from .errors import NotPositiveDefinite, SizeMismatch
from .projections import SubdomainKernel

__all__ = [
    "GevpKind",
    "GevpSpec",
    "solve_gevp",
    "CoarseSpace",
    "assemble_coarse",
    "make_inexact",
    "attach_inexact",
    "parse_inexact_strategy",
    "INEXACT_STRATEGIES",
]


class GevpKind(enum.Enum):
    AS_LOWER = "as_lower"
    SORAS_LOWER = "soras_lower"
    SORAS_UPPER = "soras_upper"


@dataclass(frozen=True)
class GevpSpec:
    """Which pencil to solve, on which subdomain, with which threshold."""

    kind: GevpKind
    j: int
    threshold: float

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")


def _weighted_dirichlet(d: Decomposition, A, j):
    """Dense D_j R_j A R_j^T D_j block for subdomain j."""
    sub = A.submatrix(d.dof_sets[j]).to_dense()
    w = d.D[j]
    return sub * np.outer(w, w)


def solve_gevp(spec: GevpSpec, d: Decomposition, A, kernel: SubdomainKernel) -> EigenPairs:
    """Solve one subdomain pencil densely; all eigenpairs, values ascending.

    For the upper pencil the problem is assembled in a Euclidean-
    orthonormal basis of the complement space and the eigenvectors are
    lifted back, so they come out B-orthonormal and orthogonal to the
    near-kernel in the B inner product.
    """
    j = spec.j
    n = kernel.n
    if len(d.dof_sets[j]) != n:
        raise SizeMismatch("kernel was built for a different subdomain size")
    if spec.kind is GevpKind.SORAS_UPPER:
        M = _weighted_dirichlet(d, A, j)
        Q = kernel.complement_basis()
        pairs = sym_gevp(Q.T @ M @ Q, Q.T @ kernel.B @ Q)
        return EigenPairs(pairs.values, Q @ pairs.vectors)

    if spec.kind is GevpKind.AS_LOWER:
        M = _weighted_dirichlet(d, A, j)
    else:
        M = kernel.B
    P = np.eye(n) - kernel.xi0_matrix()
    S = P.T @ M @ P
    T = d.A_neu[j].to_dense()
    return sym_gevp(S, T)


@dataclass
class CoarseSpace:
    """Full-rank coarse basis with its exact and optional inexact operator.

    Z is A-orthonormal by construction, E = Z^T A Z its Gram matrix.
    ``provenance[k]`` tags the candidate that produced column k, one of
    ("VG", i), ("geneo_tau", j, k) or ("geneo_gamma", i, k).  When an
    inexact surrogate is attached, ``lambda_minus``/``lambda_plus`` are
    the extreme eigenvalues of E Etilde^{-1} and ``eps_A`` the induced
    operator deviation max(|1 - lambda_minus|, |1 - lambda_plus|).
    """

    A: object
    Z: np.ndarray
    E: np.ndarray
    provenance: list
    E_tilde: np.ndarray = None
    lambda_minus: float = None
    lambda_plus: float = None
    eps_A: float = None
    _chol_E: CholeskyFactor = field(default=None, repr=False)
    _chol_Et: CholeskyFactor = field(default=None, repr=False)

    def __post_init__(self):
        if self._chol_E is None and self.dim:
            self._chol_E = cholesky_factor(self.E)
        if self._chol_Et is None and self.E_tilde is not None and self.dim:
            self._chol_Et = cholesky_factor(self.E_tilde)

    @property
    def dim(self):
        return self.Z.shape[1]

    # -- exact coarse operators ------------------------------------------

    def coarse_solve(self, r):
        """Z E^{-1} Z^T r."""
        if self.dim == 0:
            return np.zeros_like(np.asarray(r, dtype=float))
        return self.Z @ self._chol_E.solve(self.Z.T @ r)

    def P0(self, v):
        """A-orthogonal projection onto the coarse space, Z E^{-1} Z^T A."""
        return self.coarse_solve(self.A @ v)

    def P0_T(self, v):
        """Transpose A Z E^{-1} Z^T."""
        return self.A @ self.coarse_solve(v)

    # -- inexact counterparts ----------------------------------------------

    def coarse_solve_inexact(self, r):
        """Z Etilde^{-1} Z^T r."""
        if self.E_tilde is None:
            raise NotPositiveDefinite("no inexact coarse operator attached")
        if self.dim == 0:
            return np.zeros_like(np.asarray(r, dtype=float))
        return self.Z @ self._chol_Et.solve(self.Z.T @ r)

    def P0_tilde(self, v):
        """Z Etilde^{-1} Z^T A; same range and kernel as P0, not a projection."""
        return self.coarse_solve_inexact(self.A @ v)

    def P0_tilde_T(self, v):
        return self.A @ self.coarse_solve_inexact(v)


def assemble_coarse(
    d: Decomposition,
    A,
    kernels,
    gevp_results,
    tau,
    gamma=None,
    method="AS2",
    tol=1e-10,
) -> CoarseSpace:
    """Merge near-kernel generators and filtered eigenvectors into Z.

    ``gevp_results`` maps each subdomain index to its eigenpairs: for
    method "AS2" the AS lower pencil, for "SORAS2" a (lower, upper) pair;
    ``None`` skips the spectral families and keeps only the near-kernel
    generators (the one-level coarse space).  Candidates are ordered by
    family, then subdomain index, then eigenvalue descending, and
    compressed to an A-orthonormal basis; an empty candidate set is
    legal and yields a zero-dimensional coarse space.
    """
    method = method.upper()
    if method not in ("AS2", "SORAS2"):
        raise ValueError(f"unknown coarse method {method!r}")
    n = d.dim
    candidates = []
    tags = []

    for i in range(d.N):
        G_i = kernels[i].G_i
        for k in range(G_i.shape[1]):
            col = np.zeros(n)
            col[d.dof_sets[i]] = d.D[i] * G_i[:, k]
            candidates.append(col)
            tags.append(("VG", i))

    for j in range(d.N if gevp_results is not None else 0):
        pairs = gevp_results[j][0] if method == "SORAS2" else gevp_results[j]
        sel = np.flatnonzero(pairs.values > tau)
        for k in sel[np.argsort(-pairs.values[sel])]:
            v = pairs.vectors[:, k]
            col = np.zeros(n)
            col[d.dof_sets[j]] = d.D[j] * (v - kernels[j].xi0(v))
            candidates.append(col)
            tags.append(("geneo_tau", j, int(k)))

    if method == "SORAS2" and gevp_results is not None:
        if gamma is None:
            raise ValueError("SORAS2 coarse space needs the gamma threshold")
        for i in range(d.N):
            pairs = gevp_results[i][1]
            sel = np.flatnonzero(pairs.values > gamma)
            for k in sel[np.argsort(-pairs.values[sel])]:
                col = np.zeros(n)
                col[d.dof_sets[i]] = d.D[i] * pairs.vectors[:, k]
                candidates.append(col)
                tags.append(("geneo_gamma", i, int(k)))

    if candidates:
        V = np.column_stack(candidates)
        Z, kept = rank_reveal_columns(
            V, ip=lambda v: A @ v, tol=tol, return_index=True
        )
        provenance = [tags[k] for k in kept]
    else:
        Z = np.zeros((n, 0))
        provenance = []

    E = Z.T @ (A @ Z) if Z.shape[1] else np.zeros((0, 0))
    E = 0.5 * (E + E.T)
    return CoarseSpace(A=A, Z=Z, E=E, provenance=provenance)


INEXACT_STRATEGIES = (
    "exact",
    "jacobi",
    "block_jacobi",
    "scaled",
    "truncated_cholesky",
)


def make_inexact(E, strategy, param=None):
    """Build an SPD surrogate Etilde of the coarse operator E.

    Strategies: exact, jacobi (diagonal), block_jacobi (diagonal blocks,
    param = block size, default 4), scaled (param * E, default 2.0) and
    truncated_cholesky (drop small factor entries, param = drop
    tolerance, default 1e-2).  Returns (E_tilde, lambda_minus,
    lambda_plus, eps_A) where lambda_-/+ bound the spectrum of
    E Etilde^{-1}.  A strategy producing a non-SPD surrogate raises
    NotPositiveDefinite rather than being silently repaired.
    """
    E = np.asarray(E, dtype=float)
    m = E.shape[0]
    if strategy not in INEXACT_STRATEGIES:
        raise ValueError(f"unknown inexact strategy {strategy!r}")
    if strategy == "exact":
        Et = E.copy()
    elif strategy == "jacobi":
        Et = np.diag(np.diag(E))
    elif strategy == "block_jacobi":
        b = int(param) if param is not None else 4
        if b < 1:
            raise ValueError("block size must be positive")
        Et = np.zeros_like(E)
        for s in range(0, m, b):
            e = min(s + b, m)
            Et[s:e, s:e] = E[s:e, s:e]
    elif strategy == "scaled":
        alpha = float(param) if param is not None else 2.0
        Et = alpha * E
    else:  # truncated_cholesky
        drop = float(param) if param is not None else 1e-2
        if m:
            L = np.linalg.cholesky(E)
            scale = np.sqrt(np.outer(np.diag(E), np.diag(E)))
            Lt = np.where(np.abs(L) >= drop * np.sqrt(scale), L, 0.0)
            np.fill_diagonal(Lt, np.diag(L))
            Et = Lt @ Lt.T
        else:
            Et = E.copy()
    Et = 0.5 * (Et + Et.T)
    cholesky_factor(Et)  # SPD verification per the inexact-solve assumption
    if m:
        vals = sym_gevp(E, Et).values
        lam_min, lam_max = float(vals[0]), float(vals[-1])
    else:
        lam_min = lam_max = 1.0
    eps_a = max(abs(1.0 - lam_min), abs(1.0 - lam_max))
    return Et, lam_min, lam_max, eps_a


def attach_inexact(cs: CoarseSpace, strategy, param=None) -> CoarseSpace:
    """Return a copy of the coarse space with a surrogate operator attached."""
    Et, lam_min, lam_max, eps_a = make_inexact(cs.E, strategy, param)
    return replace(
        cs,
        E_tilde=Et,
        lambda_minus=lam_min,
        lambda_plus=lam_max,
        eps_A=eps_a,
        _chol_E=cs._chol_E,
        _chol_Et=None,
    )


def parse_inexact_strategy(text):
    """Parse "name" or "name:param" into (strategy, param or None)."""
    if ":" in text:
        name, raw = text.split(":", 1)
        return name.strip(), float(raw)
    return text.strip(), None
