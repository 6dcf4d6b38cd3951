"""Condition number bounds and their numerical verification.

The two-level methods admit two-sided spectral bounds for the
preconditioned operator; this module evaluates the bound formulas from
the decomposition constants (k0, k1), the thresholds (tau, gamma) and,
for inexact coarse solves, the extreme eigenvalues of E Etilde^{-1}.
The exact spectrum is computed densely through the pencil
(A M^{-1} A, A), whose eigenvalues coincide with those of M^{-1} A while
staying in symmetric-definite territory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import sym_gevp
from .errors import NotPositiveDefinite, SizeMismatch
from .precond import Variant, dense_operator

__all__ = [
    "minmax_over_delta",
    "inexact_constants",
    "kappa_bound",
    "preconditioned_spectrum",
    "BoundReport",
    "make_bound_report",
]


def minmax_over_delta(c, d, alpha, beta):
    """min over delta > 0 of max(c + alpha*delta, d + beta/delta).

    Valid for positive parameters; the minimizer equates the two terms.
    """
    if min(c, d, alpha, beta) <= 0:
        raise ValueError("all parameters must be positive")
    return 0.5 * (d + c + np.sqrt((d - c) ** 2 + 4.0 * alpha * beta))


def inexact_constants(k0, k1, tau, lam_minus, lam_plus, eps_a, gamma=None):
    """Two-sided spectral constants (c_T, c_R) for inexact coarse solves.

    ``gamma=None`` selects the additive Schwarz form; otherwise the
    weighted (SORAS) form, whose continuity constant carries an extra
    factor gamma.
    """
    g = 1.0 if gamma is None else float(gamma)
    base = k0 * g
    c_r = 0.5 * (
        base * (1.0 + eps_a**2)
        + lam_plus
        + np.sqrt(
            (base * (1.0 + eps_a**2) - lam_plus) ** 2
            + 4.0 * lam_plus * base * eps_a**2
        )
    )
    freq = k0 * k1 * tau * g
    c_t = lam_minus / ((1.0 + eps_a * np.sqrt(freq)) ** 2 + lam_minus * k1 * tau)
    return c_t, c_r


def kappa_bound(variant, k0, k1, tau=None, gamma=None, tau0=None, gamma0=None,
                lam_minus=None, lam_plus=None, eps_a=None):
    """Condition number bound of the given variant.

    Returns (bound, c_T, c_R); for the exact variants c_T and c_R are the
    stable-decomposition and continuity constants of the underlying
    framework, so bound = c_R / c_T in every case.
    """
    variant = Variant(variant) if not isinstance(variant, Variant) else variant
    if variant is Variant.AS1:
        c_t, c_r = 1.0 / (1.0 + k1 * tau0), float(k0)
    elif variant is Variant.SORAS1:
        c_t, c_r = 1.0 / (1.0 + k1 * tau0), max(1.0, k0 * gamma0)
    elif variant is Variant.AS2:
        c_t, c_r = 1.0 / (1.0 + k1 * tau), float(k0)
    elif variant is Variant.SORAS2:
        c_t, c_r = 1.0 / (1.0 + k1 * tau), max(1.0, k0 * gamma)
    elif variant is Variant.AS2_INEXACT:
        c_t, c_r = inexact_constants(k0, k1, tau, lam_minus, lam_plus, eps_a)
    elif variant is Variant.SORAS2_INEXACT:
        c_t, c_r = inexact_constants(
            k0, k1, tau, lam_minus, lam_plus, eps_a, gamma=gamma
        )
    else:
        raise ValueError(f"unhandled variant {variant}")
    return c_r / c_t, c_t, c_r


def preconditioned_spectrum(A, M_inv, n=None):
    """All eigenvalues of M^{-1} A, ascending.

    M^{-1} A is A-self-adjoint, so its spectrum is that of the symmetric
    matrix C^T A C where M^{-1} = C C^T.  Assembling M^{-1} densely and
    factoring it keeps the whole computation in symmetric-definite
    territory; the congruence route stays accurate at high coefficient
    contrast where the equivalent pencil (A M^{-1} A, A) loses all
    digits to the conditioning of A.
    """
    A_dense = A.to_dense() if hasattr(A, "to_dense") else np.asarray(A, dtype=float)
    n = A_dense.shape[0] if n is None else n
    apply_M = M_inv.apply if hasattr(M_inv, "apply") else M_inv
    M_dense = dense_operator(apply_M, n)
    M_dense = 0.5 * (M_dense + M_dense.T)
    try:
        C = np.linalg.cholesky(M_dense)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(
            "assembled preconditioner is not positive definite"
        ) from exc
    H = C.T @ (A_dense @ C)
    return sym_gevp(H, np.eye(n)).values


@dataclass
class BoundReport:
    """Measured versus predicted conditioning of one configuration."""

    variant: str
    tau: float
    gamma: float
    k0: int
    k1: int
    tau0: float = None
    gamma0: float = None
    lambda_minus: float = None
    lambda_plus: float = None
    eps_A: float = None
    c_T: float = None
    c_R: float = None
    lambda_min_exact: float = None
    lambda_max_exact: float = None
    kappa_exact: float = None
    kappa_bound: float = None
    satisfied: bool = None
    margin: float = None

    def as_dict(self):
        return {k: v for k, v in self.__dict__.items()}


def make_bound_report(
    variant,
    spectrum,
    k0,
    k1,
    tau=None,
    gamma=None,
    tau0=None,
    gamma0=None,
    lam_minus=None,
    lam_plus=None,
    eps_a=None,
    rel_slack=1e-8,
) -> BoundReport:
    """Compare a computed spectrum against the variant's bound."""
    variant = Variant(variant) if not isinstance(variant, Variant) else variant
    spectrum = np.asarray(spectrum, dtype=float)
    if spectrum.size == 0:
        raise SizeMismatch("empty spectrum")
    lam_min, lam_max = float(spectrum[0]), float(spectrum[-1])
    if lam_min <= 0:
        raise SizeMismatch("preconditioned operator is not positive definite")
    kappa_exact = lam_max / lam_min
    bound, c_t, c_r = kappa_bound(
        variant, k0, k1, tau=tau, gamma=gamma, tau0=tau0, gamma0=gamma0,
        lam_minus=lam_minus, lam_plus=lam_plus, eps_a=eps_a,
    )
    return BoundReport(
        variant=variant.value,
        tau=tau,
        gamma=gamma,
        k0=k0,
        k1=k1,
        tau0=tau0,
        gamma0=gamma0,
        lambda_minus=lam_minus,
        lambda_plus=lam_plus,
        eps_A=eps_a,
        c_T=c_t,
        c_R=c_r,
        lambda_min_exact=lam_min,
        lambda_max_exact=lam_max,
        kappa_exact=kappa_exact,
        kappa_bound=bound,
        satisfied=bool(kappa_exact <= bound * (1.0 + rel_slack)),
        margin=bound / kappa_exact,
    )
