"""The six Schwarz preconditioner variants.

All variants share the additive structure

    M^{-1} = Z E^{-1} Z^T + (I - P0) [sum_i R_i^T S_i R_i] (I - P0^T)

with the coarse projection P0 = Z E^{-1} Z^T A and a per-subdomain local
solve S_i:

  AS      S_i = (R_i A R_i^T)^{-1}
  SORAS   S_i = D_i B_i^{-1} D_i
  SORAS, inexact coarse   S_i = D_i (I - eta_i)(I - xi0_i) B_i^{-1} D_i

One-level methods are the same formulas with the coarse space reduced to
the near-kernel span; an empty coarse space degenerates them to the pure
local sum.  Inexact variants replace E by the SPD surrogate Etilde and
P0 by Ptilde0 = Z Etilde^{-1} Z^T A, which is no longer a projection; in
that case the high-mode filter eta_i must be kept in the local solves
because (I - Ptilde0) no longer annihilates the coarse directions that
carry those modes.
"""

from __future__ import annotations

import enum

import numpy as np

from .core import cholesky_factor
from .decomposition import Decomposition
from .errors import SizeMismatch
from .geneo import CoarseSpace, GevpKind, GevpSpec, solve_gevp

__all__ = [
    "Variant",
    "BChoice",
    "Preconditioner",
    "build_as_preconditioner",
    "build_soras_preconditioner",
    "one_level_constants",
    "dense_operator",
]


class Variant(enum.Enum):
    AS1 = "as1"
    SORAS1 = "soras1"
    AS2 = "as2"
    SORAS2 = "soras2"
    AS2_INEXACT = "as2_inexact"
    SORAS2_INEXACT = "soras2_inexact"

    @property
    def is_soras(self):
        return self in (Variant.SORAS1, Variant.SORAS2, Variant.SORAS2_INEXACT)

    @property
    def is_inexact(self):
        return self in (Variant.AS2_INEXACT, Variant.SORAS2_INEXACT)


class BChoice(enum.Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"


class Preconditioner:
    """Applies one of the Schwarz variants; symmetric and positive definite."""

    def __init__(self, variant, d, A, cs, local_solves):
        self.variant = variant
        self.d = d
        self.A = A
        self.cs = cs
        self._local = local_solves

    def _coarse(self, r):
        if self.cs is None or self.cs.dim == 0:
            return np.zeros_like(np.asarray(r, dtype=float))
        if self.variant.is_inexact:
            return self.cs.coarse_solve_inexact(r)
        return self.cs.coarse_solve(r)

    @property
    def _has_coarse(self):
        return self.cs is not None and self.cs.dim > 0

    def local_sum(self, w):
        """sum_i R_i^T S_i R_i w."""
        out = np.zeros_like(np.asarray(w, dtype=float))
        for i in range(self.d.N):
            out[self.d.dof_sets[i]] += self._local[i](w[self.d.dof_sets[i]])
        return out

    def apply(self, x):
        """M^{-1} x."""
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.d.dim:
            raise SizeMismatch(f"operand length {x.shape[0]} != {self.d.dim}")
        coarse = self._coarse(x)
        w = x - self.A @ coarse if self._has_coarse else x  # (I - P0^T) x
        s = self.local_sum(w)
        if self._has_coarse:
            s = s - self._coarse(self.A @ s)  # (I - P0) s
        return coarse + s

    __call__ = apply

    def matvec(self, x):
        return self.apply(x)


def build_as_preconditioner(d: Decomposition, A, cs: CoarseSpace = None,
                            inexact=False) -> Preconditioner:
    """Additive Schwarz: Dirichlet local solves (R_i A R_i^T)^{-1}.

    With a coarse space of near-kernel and filtered eigenvectors this is
    the two-level method; with a near-kernel-only coarse space (or none)
    the one-level method.  ``inexact=True`` switches the coarse solve to
    the attached surrogate.
    """
    if inexact and (cs is None or cs.E_tilde is None):
        raise SizeMismatch("inexact variant requires an attached surrogate")
    locals_ = []
    for i in range(d.N):
        chol = cholesky_factor(A.submatrix(d.dof_sets[i]).to_dense())
        locals_.append(chol.solve)
    variant = Variant.AS2_INEXACT if inexact else (
        Variant.AS2 if cs is not None and _has_spectral(cs) else Variant.AS1
    )
    return Preconditioner(variant, d, A, cs, locals_)


def build_soras_preconditioner(
    d: Decomposition,
    A,
    kernels,
    cs: CoarseSpace = None,
    inexact=False,
    subspaces=None,
) -> Preconditioner:
    """Symmetrized weighted Schwarz with local solver matrices B_i.

    ``kernels[i].B`` is the subdomain solver matrix (Neumann by default,
    Dirichlet if the kernels were built that way).  For the inexact
    variant the per-subdomain spectral splittings must be supplied so
    the local solves can retain the high-mode filter.
    """
    if inexact:
        if cs is None or cs.E_tilde is None:
            raise SizeMismatch("inexact variant requires an attached surrogate")
        if subspaces is None:
            raise SizeMismatch("inexact SORAS needs the spectral subspaces")
        locals_ = []
        for i in range(d.N):
            w = d.D[i]
            ss = subspaces[i]
            locals_.append(lambda v, w=w, ss=ss: w * ss.B_tilde_dag(w * v))
        variant = Variant.SORAS2_INEXACT
    else:
        locals_ = []
        for i in range(d.N):
            w = d.D[i]
            k = kernels[i]
            locals_.append(lambda v, w=w, k=k: w * k.solve_B(w * v))
        variant = (
            Variant.SORAS2 if cs is not None and _has_spectral(cs) else Variant.SORAS1
        )
    p = Preconditioner(variant, d, A, cs, locals_)
    p.kernels = kernels
    if inexact:
        p.subspaces = subspaces
    return p


def _has_spectral(cs: CoarseSpace):
    return any(tag[0] != "VG" for tag in cs.provenance)


def apply_soras2_unsimplified(p: Preconditioner, x):
    """Two-level SORAS through the restricted inverses.

    Evaluates Z E^{-1} Z^T x
      + (I - P0) sum_i R_i^T D_i (I - xi0_i) B_i^{-1} D_i R_i (I - P0^T) x,
    which agrees with the plain apply because the weighted prolongation
    of any near-kernel component is removed by (I - P0) anyway.
    """
    if not hasattr(p, "kernels"):
        raise SizeMismatch("unsimplified form needs a SORAS preconditioner")
    x = np.asarray(x, dtype=float)
    coarse = p.cs.coarse_solve(x) if p._has_coarse else np.zeros_like(x)
    w = x - p.cs.P0_T(x) if p._has_coarse else x
    s = np.zeros_like(x)
    for i in range(p.d.N):
        k = p.kernels[i]
        loc = k.B_dag(p.d.D[i] * w[p.d.dof_sets[i]])
        s[p.d.dof_sets[i]] += p.d.D[i] * loc
    if p._has_coarse:
        s = s - p.cs.P0(s)
    return coarse + s


def one_level_constants(d: Decomposition, A, kernels, method="soras"):
    """Largest pencil eigenvalues governing the one-level bounds.

    tau0 is the largest eigenvalue over subdomains of the lower-bound
    pencil (the AS pencil for method "as", the SORAS pencil otherwise);
    gamma0 the largest eigenvalue of the upper-bound pencil on the
    complement spaces.  Both are finite for SPD Neumann matrices.
    """
    kind = GevpKind.AS_LOWER if method.lower() == "as" else GevpKind.SORAS_LOWER
    tau0 = 0.0
    gamma0 = 0.0
    for j in range(d.N):
        pairs = solve_gevp(GevpSpec(kind, j, 1.0), d, A, kernels[j])
        if len(pairs):
            tau0 = max(tau0, float(pairs.values[-1]))
        upper = solve_gevp(
            GevpSpec(GevpKind.SORAS_UPPER, j, 1.0), d, A, kernels[j]
        )
        if len(upper):
            gamma0 = max(gamma0, float(upper.values[-1]))
    return tau0, gamma0


def dense_operator(apply_fn, n):
    """Materialize a linear operator as a dense n-by-n matrix."""
    out = np.zeros((n, n))
    e = np.zeros(n)
    for k in range(n):
        e[k] = 1.0
        out[:, k] = apply_fn(e)
        e[k] = 0.0
    return out
