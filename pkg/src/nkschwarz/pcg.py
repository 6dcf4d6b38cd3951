"""Preconditioned conjugate gradients with Ritz value extraction.

The CG coefficients define a Lanczos tridiagonal whose eigenvalues (Ritz
values) approximate the spectrum of the preconditioned operator; their
ratio estimates its condition number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

__all__ = ["PcgResult", "pcg"]


@dataclass
class PcgResult:
    """Outcome of a PCG run.

    ``residual_history[k]`` is the relative residual norm of iterate k
    , entry 0 being the initial guess; iterates use the CG residual
    recurrence, which tracks ||b - A x_k|| up to the attainable accuracy
    of the problem.  Ritz values come from the Lanczos tridiagonal
    assembled from the CG coefficients.
    """

    x: np.ndarray
    iterations: int
    converged: bool
    residual_history: list
    ritz_min: float = None
    ritz_max: float = None
    kappa_estimate: float = None
    alphas: list = field(default_factory=list, repr=False)
    betas: list = field(default_factory=list, repr=False)


def _as_apply(op):
    if callable(op) and not hasattr(op, "__matmul__"):
        return op
    if hasattr(op, "apply"):
        return op.apply
    if hasattr(op, "matvec"):
        return op.matvec
    return lambda v: op @ v


def _ritz_values(alphas, betas):
    """Eigenvalues of the CG Lanczos tridiagonal."""
    k = len(alphas)
    if k == 0:
        return None
    diag = np.zeros(k)
    off = np.zeros(max(k - 1, 0))
    for i in range(k):
        diag[i] = 1.0 / alphas[i]
        if i > 0:
            diag[i] += betas[i - 1] / alphas[i - 1]
        if i < k - 1:
            off[i] = np.sqrt(max(betas[i], 0.0)) / alphas[i]
    if k == 1:
        return diag
    return sla.eigvalsh_tridiagonal(diag, off)


def pcg(A, M_inv, b, rtol=1e-8, maxit=500, x0=None) -> PcgResult:
    """Solve A x = b with preconditioner M^{-1}, both SPD operators.

    Stops when the true relative residual drops to ``rtol``.  On budget
    exhaustion the best iterate and the full history are returned with
    ``converged=False``.
    """
    if not 0 < rtol < 1:
        raise ValueError("rtol must lie in (0, 1)")
    apply_A = _as_apply(A)
    apply_M = _as_apply(M_inv)
    b = np.asarray(b, dtype=float)
    nb = np.linalg.norm(b)
    if nb == 0.0:
        return PcgResult(
            x=np.zeros_like(b), iterations=0, converged=True,
            residual_history=[0.0],
        )

    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=float).copy()
    r = b - apply_A(x) if x0 is not None else b.copy()
    history = [float(np.linalg.norm(r) / nb)]
    if history[0] <= rtol:
        return PcgResult(
            x=x, iterations=0, converged=True, residual_history=history
        )

    z = apply_M(r)
    p = z.copy()
    rz = float(r @ z)
    alphas, betas = [], []
    converged = False
    it = 0
    for it in range(1, maxit + 1):
        Ap = apply_A(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0 or rz == 0.0:
            # breakdown: the residual has collapsed below representable
            # accuracy; the current iterate is as good as it gets
            converged = history[-1] <= rtol
            it -= 1
            break
        alpha = rz / pAp
        alphas.append(alpha)
        x = x + alpha * p
        r = r - alpha * Ap
        history.append(float(np.linalg.norm(r) / nb))
        if history[-1] <= rtol:
            converged = True
            break
        z = apply_M(r)
        rz_new = float(r @ z)
        beta = rz_new / rz
        betas.append(beta)
        rz = rz_new
        p = z + beta * p

    ritz = _ritz_values(alphas, betas[: len(alphas) - 1])
    res = PcgResult(
        x=x,
        iterations=it,
        converged=converged,
        residual_history=history,
        alphas=alphas,
        betas=betas,
    )
    if ritz is not None:
        res.ritz_min = float(ritz[0])
        res.ritz_max = float(ritz[-1])
        if res.ritz_min > 0:
            res.kappa_estimate = res.ritz_max / res.ritz_min
    return res
