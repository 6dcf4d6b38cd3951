"""Command line interface.

Verbs mirror the pipeline stages and exchange data through a workspace
directory: ``generate`` writes the system in Matrix Market form plus a
JSON manifest, later verbs append their parameters to the manifest and
rebuild the pipeline deterministically from it.  ``verify-bounds`` and
``sweep`` exit nonzero unless every requested bound check passes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .decomposition import decompose, verify_pou
from .errors import NkSchwarzError
from .experiment import (
    ExperimentConfig,
    build_pipeline,
    run_experiment,
    solve_pipeline,
    verify_bounds,
)
from .model import assemble_system, build_grid_complex, coefficient_field
from .precond import Variant
from .sparse import write_matrix_market

MANIFEST = "manifest.json"


def _load_manifest(workspace):
    path = os.path.join(workspace, MANIFEST)
    if not os.path.exists(path):
        raise NkSchwarzError(
            f"no manifest in {workspace}; run 'generate' first"
        )
    with open(path) as fh:
        return json.load(fh)


def _save_manifest(workspace, manifest):
    tmp = os.path.join(workspace, MANIFEST + ".tmp")
    with open(tmp, "w") as fh:
        json.dump(manifest, fh, indent=2, default=float)
    os.replace(tmp, os.path.join(workspace, MANIFEST))


def _config_from_manifest(manifest, **overrides):
    keys = ExperimentConfig().resolved_dict().keys()
    merged = {k: v for k, v in manifest.items() if k in keys}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**merged).validate()


def _write_json(path, payload):
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, default=float)
    os.replace(tmp, path)
    print(json.dumps(payload, indent=2, default=float))


def cmd_generate(args):
    cfg = ExperimentConfig(
        nx=args.nx, ny=args.ny, pattern=args.pattern, rho=args.rho,
        seed=args.seed, eps_factor=args.eps_factor,
        include_nearkernel=not args.no_nearkernel,
    ).validate()
    gc = build_grid_complex(cfg.nx, cfg.ny)
    cf = coefficient_field(
        gc, pattern=cfg.pattern, rho=cfg.rho, seed=cfg.seed,
        eps_factor=cfg.eps_factor,
    )
    ms = assemble_system(gc, cf)
    os.makedirs(args.workspace, exist_ok=True)
    write_matrix_market(os.path.join(args.workspace, "A.mtx"), ms.A)
    write_matrix_market(os.path.join(args.workspace, "G.mtx"), ms.G)
    write_matrix_market(
        os.path.join(args.workspace, "nu.mtx"), ms.nu.reshape(-1, 1)
    )
    write_matrix_market(
        os.path.join(args.workspace, "eps.mtx"), cf.eps.reshape(-1, 1)
    )
    manifest = cfg.resolved_dict()
    manifest["config_hash"] = cfg.content_hash()
    manifest["n_dof"] = ms.dim
    manifest["n_kernel"] = ms.n_kernel
    manifest["files"] = ["A.mtx", "G.mtx", "nu.mtx", "eps.mtx"]
    _save_manifest(args.workspace, manifest)
    print(json.dumps(
        {"n_dof": ms.dim, "n_kernel": ms.n_kernel,
         "workspace": args.workspace}, indent=2,
    ))
    return 0


def cmd_decompose(args):
    manifest = _load_manifest(args.workspace)
    cfg = _config_from_manifest(
        manifest, px=args.px, py=args.py, overlap=args.overlap
    )
    pl = build_pipeline(cfg)
    hist = np.bincount(pl.d.multiplicity)[1:]
    summary = {
        "N": pl.d.N,
        "k0": pl.d.k0,
        "k1": pl.d.k1,
        "dof_counts": [int(len(s)) for s in pl.d.dof_sets],
        "multiplicity_histogram": {
            str(m + 1): int(c) for m, c in enumerate(hist) if c
        },
        "pou_max_deviation": verify_pou(pl.d).max_deviation,
    }
    manifest.update(px=cfg.px, py=cfg.py, overlap=cfg.overlap)
    _save_manifest(args.workspace, manifest)
    _write_json(os.path.join(args.workspace, "decomposition.json"), summary)
    return 0


def cmd_build_coarse(args):
    manifest = _load_manifest(args.workspace)
    variant = {"as2": "as2", "soras2": "soras2"}[args.method]
    if args.inexact != "exact":
        variant += "_inexact"
    cfg = _config_from_manifest(
        manifest, variant=variant, tau=args.tau, gamma=args.gamma,
        b_choice=args.b_choice, inexact=args.inexact,
    )
    pl = build_pipeline(cfg)
    per_subdomain = [0] * pl.d.N
    for tag in pl.cs.provenance:
        if tag[0] != "VG":
            per_subdomain[tag[1]] += 1
    summary = {
        "method": args.method,
        "tau": cfg.tau,
        "gamma": pl.gamma,
        "coarse_dim": pl.cs.dim,
        "nearkernel_columns": sum(1 for t in pl.cs.provenance if t[0] == "VG"),
        "selected_per_subdomain": per_subdomain,
        "lambda_minus": pl.cs.lambda_minus,
        "lambda_plus": pl.cs.lambda_plus,
        "eps_A": pl.cs.eps_A,
    }
    manifest.update(
        variant=cfg.variant, tau=cfg.tau, gamma=pl.gamma,
        b_choice=cfg.b_choice, inexact=cfg.inexact,
    )
    _save_manifest(args.workspace, manifest)
    if args.dump:
        write_matrix_market(os.path.join(args.workspace, "Z.mtx"), pl.cs.Z)
        write_matrix_market(os.path.join(args.workspace, "E.mtx"), pl.cs.E)
    _write_json(os.path.join(args.workspace, "coarse.json"), summary)
    return 0


def cmd_inspect_kernel(args):
    from .geneo import GevpKind, GevpSpec, solve_gevp

    manifest = _load_manifest(args.workspace)
    cfg = _config_from_manifest(manifest)
    pl = build_pipeline(cfg)
    i = args.subdomain
    if not 0 <= i < pl.d.N:
        raise NkSchwarzError(f"subdomain {i} out of range (N={pl.d.N})")
    k = pl.kernels[i]
    rng = np.random.default_rng(0)
    v = rng.standard_normal(k.n)
    xi_v = k.xi0(v)
    diag = {
        "subdomain": i,
        "n_local": k.n,
        "dim_G": k.n_kernel,
        "idempotency_residual": float(
            np.linalg.norm(k.xi0(xi_v) - xi_v)
            / max(np.linalg.norm(xi_v), 1e-300)
        ),
        "b_orthogonality_residual": float(
            np.linalg.norm(k.G_i.T @ (k.B @ (v - xi_v)))
        ),
    }
    if pl.subspaces is not None:
        diag["dim_V_gamma"] = int(pl.subspaces[i].V_gamma.shape[1])
        diag["dim_W_gamma"] = int(pl.subspaces[i].W_gamma.shape[1])
    else:
        upper = solve_gevp(
            GevpSpec(GevpKind.SORAS_UPPER, i, pl.gamma), pl.d, pl.ms.A, k
        )
        diag["dim_V_gamma"] = int((upper.values > pl.gamma).sum())
        diag["dim_W_gamma"] = int((upper.values <= pl.gamma).sum())
    _write_json(os.path.join(args.workspace, f"kernel_{i}.json"), diag)
    return 0


def cmd_solve(args):
    manifest = _load_manifest(args.workspace)
    cfg = _config_from_manifest(
        manifest, variant=args.variant, rtol=args.rtol, maxit=args.maxit,
        rhs_seed=args.rhs_seed,
    )
    pl = build_pipeline(cfg)
    res = solve_pipeline(pl)
    summary = {
        "variant": cfg.variant,
        "iterations": res.iterations,
        "converged": res.converged,
        "final_residual": res.residual_history[-1],
        "ritz_min": res.ritz_min,
        "ritz_max": res.ritz_max,
        "kappa_estimate": res.kappa_estimate,
        "residual_history": res.residual_history,
        "config_hash": cfg.content_hash(),
    }
    _write_json(os.path.join(args.workspace, "solve.json"), summary)
    return 0 if res.converged else 1


def cmd_verify_bounds(args):
    manifest = _load_manifest(args.workspace)
    cfg = _config_from_manifest(manifest, variant=args.variant)
    pl = build_pipeline(cfg)
    report = verify_bounds(pl)
    payload = report.as_dict()
    payload["config_hash"] = cfg.content_hash()
    _write_json(os.path.join(args.workspace, "bounds.json"), payload)
    return 0 if report.satisfied else 1


def cmd_sweep(args):
    bundle = run_experiment(args.config, args.out, plots=args.plots)
    print(json.dumps(
        {"n_runs": bundle["n_runs"],
         "all_bounds_satisfied": bundle["all_bounds_satisfied"],
         "out": args.out}, indent=2,
    ))
    return 0 if bundle["all_bounds_satisfied"] else 1


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="nkschwarz",
        description="Two-level Schwarz preconditioners with near-kernel-aware "
                    "coarse spaces on curl-curl model problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="assemble a model system")
    p.add_argument("--workspace", default=".")
    p.add_argument("--nx", type=int, default=8)
    p.add_argument("--ny", type=int, default=8)
    p.add_argument("--pattern", default="constant")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps-factor", type=float, default=1e-6)
    p.add_argument("--no-nearkernel", action="store_true")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("decompose", help="build the overlapping decomposition")
    p.add_argument("--workspace", default=".")
    p.add_argument("--px", type=int, required=True)
    p.add_argument("--py", type=int, required=True)
    p.add_argument("--overlap", type=int, default=1)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("build-coarse", help="solve the eigenproblems and "
                                            "assemble the coarse space")
    p.add_argument("--workspace", default=".")
    p.add_argument("--method", choices=["as2", "soras2"], required=True)
    p.add_argument("--tau", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--b-choice", choices=["neumann", "dirichlet"],
                   default="neumann")
    p.add_argument("--inexact", default="exact")
    p.add_argument("--dump", action="store_true",
                   help="also write Z.mtx and E.mtx")
    p.set_defaults(func=cmd_build_coarse)

    p = sub.add_parser("inspect-kernel", help="per-subdomain near-kernel "
                                              "diagnostics")
    p.add_argument("--workspace", default=".")
    p.add_argument("--subdomain", type=int, required=True)
    p.set_defaults(func=cmd_inspect_kernel)

    p = sub.add_parser("solve", help="run preconditioned conjugate gradients")
    p.add_argument("--workspace", default=".")
    p.add_argument("--variant", default=None,
                   choices=[v.value for v in Variant])
    p.add_argument("--rtol", type=float, default=None)
    p.add_argument("--maxit", type=int, default=None)
    p.add_argument("--rhs-seed", type=int, default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify-bounds", help="dense spectrum against the "
                                             "condition number bound")
    p.add_argument("--workspace", default=".")
    p.add_argument("--variant", default=None)
    p.set_defaults(func=cmd_verify_bounds)

    p = sub.add_parser("sweep", help="run a config file, possibly a sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plots", action="store_true", default=None)
    p.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except NkSchwarzError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
