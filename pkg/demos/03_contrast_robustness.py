"""Iteration counts across coefficient contrast: one level versus two.

Strip subdomains cut along the high-coefficient channels make the
one-level method (near-kernel deflation only) degrade with contrast,
while the two-level coarse space absorbs the contrast-driven modes and
keeps iteration counts flat.  This is the behavior the condition number
bounds predict: the one-level constants grow with the heterogeneity, the
two-level thresholds do not.
"""

from nkschwarz import (
    ExperimentConfig,
    build_pipeline,
    one_level_constants,
    solve_pipeline,
)

base = dict(
    nx=16, ny=16, px=1, py=4, overlap=1, pattern="channels",
    eps_factor=1e-6, seed=3, tau=1.25, maxit=900,
)

rows = []
for rho in (1.0, 1e3, 1e6):
    one = build_pipeline(ExperimentConfig(variant="soras1", rho=rho, **base))
    two = build_pipeline(ExperimentConfig(variant="soras2", rho=rho, **base))
    it1 = solve_pipeline(one).iterations
    it2 = solve_pipeline(two).iterations
    tau0, gamma0 = one.tau0, one.gamma0
    rows.append((rho, it1, it2, tau0, gamma0, two.cs.dim))

print(f"{'contrast':>9} {'one-level':>10} {'two-level':>10} "
      f"{'tau0':>10} {'gamma0':>12} {'coarse dim':>11}")
for rho, it1, it2, tau0, gamma0, dim in rows:
    print(f"{rho:>9.0e} {it1:>10} {it2:>10} {tau0:>10.2f} {gamma0:>12.1f} "
          f"{dim:>11}")

r1 = rows[-1][1] / rows[0][1]
r2 = max(r[2] for r in rows) / min(r[2] for r in rows)
print(f"\none-level iterations grew {r1:.1f}x across six orders of "
      f"contrast; two-level varied {r2:.2f}x")
print("gamma0 tracks the contrast, which is exactly the quantity the "
      "upper-bound eigenproblem removes from the local solves")
