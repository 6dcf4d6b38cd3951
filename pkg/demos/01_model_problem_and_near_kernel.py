"""Build a curl-curl model system and look at its near-kernel.

The unknowns are edge values on a structured grid.  The system matrix is
a curl-curl stiffness plus a small edge mass, and the discrete gradients
of interior nodes span a subspace on which the energy is tiny: the
near-kernel that makes these systems hard for plain iterative methods.
"""

import numpy as np
import scipy.linalg as sla

from nkschwarz import assemble_system, build_grid_complex, coefficient_field

nx = ny = 8
gc = build_grid_complex(nx, ny)
print(f"grid {nx}x{ny}: {gc.n_nodes} nodes, {gc.n_edges} edges, "
      f"{gc.n_faces} faces")

# the discrete de Rham structure: circulation of a gradient vanishes
assert abs((gc.curl @ gc.grad)).max() == 0
print("curl o grad = 0 holds exactly (integer incidence matrices)")

cf = coefficient_field(gc, pattern="channels", rho=1e3, eps_factor=1e-6)
ms = assemble_system(gc, cf)
print(f"\ninterior system: {ms.dim} unknowns, near-kernel of dimension "
      f"{ms.n_kernel}")

A = ms.A.to_dense()
evals = sla.eigvalsh(A)
print(f"spectrum of A: [{evals[0]:.3e}, {evals[-1]:.3e}], "
      f"condition number {evals[-1]/evals[0]:.2e}")

# Rayleigh quotients over the gradient columns sit at the mass scale
rq = np.array([(g @ A @ g) / (g @ g) for g in ms.G.T])
print(f"Rayleigh quotients over the near-kernel: "
      f"[{rq.min():.3e}, {rq.max():.3e}]  (eps = {ms.eps_int.max():.1e})")
print(f"generic directions sit at the curl scale "
      f"~ {np.median(np.diag(A)):.2f}")

# that gap is exactly what stalls unpreconditioned conjugate gradients
from nkschwarz import pcg

rng = np.random.default_rng(0)
b = rng.standard_normal(ms.dim)
res = pcg(ms.A, np.eye(ms.dim), b, rtol=1e-8, maxit=2000)
print(f"\nunpreconditioned CG: {res.iterations} iterations "
      f"(converged: {res.converged})")
