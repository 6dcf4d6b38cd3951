"""End-to-end experiment pipeline, configuration and file outputs.

A configuration describes model, decomposition, coarse space, solver and
verification choices in one INI-style file (key = value lines grouped in
sections, mirroring the CLI flags).  Running an experiment executes

    generate -> decompose -> build-coarse -> solve -> verify

and writes a JSON report, a CSV table and optional SVG plots.  Every
output embeds the resolved configuration and its content hash.  Files
are written to a temporary name and renamed into place.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import json
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .bounds import BoundReport, make_bound_report, preconditioned_spectrum
from .decomposition import decompose, verify_pou
from .errors import ConfigError, NkSchwarzError
from .geneo import (
    GevpKind,
    GevpSpec,
    assemble_coarse,
    attach_inexact,
    parse_inexact_strategy,
    solve_gevp,
)
from .model import (
    COEFFICIENT_PATTERNS,
    assemble_system,
    build_grid_complex,
    coefficient_field,
)
from .pcg import pcg
from .precond import (
    BChoice,
    Variant,
    build_as_preconditioner,
    build_soras_preconditioner,
    one_level_constants,
)
from .projections import build_soras_subspaces, build_subdomain_kernel

__all__ = [
    "ExperimentConfig",
    "Pipeline",
    "build_pipeline",
    "solve_pipeline",
    "load_config",
    "run_experiment",
    "verify_bounds",
]


@dataclass
class ExperimentConfig:
    """Resolved parameters of one run."""

    nx: int = 8
    ny: int = 8
    pattern: str = "constant"
    rho: float = 1.0
    seed: int = 0
    eps_factor: float = 1e-6
    include_nearkernel: bool = True
    px: int = 2
    py: int = 2
    overlap: int = 1
    variant: str = "as2"
    tau: float = 0.5
    gamma: float = None          # None -> gamma_scale_k0 * k0
    gamma_scale_k0: float = 2.0
    b_choice: str = "neumann"
    inexact: str = "exact"
    rtol: float = 1e-8
    maxit: int = 500
    rhs_seed: int = 7
    verify: bool = True
    rel_slack: float = 1e-8

    def validate(self):
        problems = []
        if self.nx < 1 or self.ny < 1:
            problems.append("model: nx and ny must be >= 1")
        if self.pattern not in COEFFICIENT_PATTERNS:
            problems.append(f"model: unknown pattern {self.pattern!r}")
        if self.rho < 1:
            problems.append("model: rho must be >= 1")
        if self.eps_factor <= 0:
            problems.append("model: eps_factor must be positive")
        if self.px < 1 or self.py < 1:
            problems.append("decomposition: px and py must be >= 1")
        if self.overlap < 1:
            problems.append("decomposition: overlap must be >= 1")
        try:
            Variant(self.variant)
        except ValueError:
            problems.append(f"coarse: unknown variant {self.variant!r}")
        if self.tau <= 0:
            problems.append("coarse: tau must be positive")
        if self.gamma is not None and self.gamma <= 0:
            problems.append("coarse: gamma must be positive")
        try:
            BChoice(self.b_choice)
        except ValueError:
            problems.append(f"coarse: unknown b_choice {self.b_choice!r}")
        name, _ = parse_inexact_strategy(self.inexact)
        if name not in ("exact", "jacobi", "block_jacobi", "scaled",
                        "truncated_cholesky"):
            problems.append(f"coarse: unknown inexact strategy {name!r}")
        if not 0 < self.rtol < 1:
            problems.append("solve: rtol must lie in (0, 1)")
        if self.maxit < 1:
            problems.append("solve: maxit must be >= 1")
        if problems:
            raise ConfigError("; ".join(problems))
        return self

    def resolved_dict(self):
        return asdict(self)

    def content_hash(self):
        blob = json.dumps(self.resolved_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


_SECTION_OF = {
    "nx": "model", "ny": "model", "pattern": "model", "rho": "model",
    "seed": "model", "eps_factor": "model", "include_nearkernel": "model",
    "px": "decomposition", "py": "decomposition", "overlap": "decomposition",
    "variant": "coarse", "tau": "coarse", "gamma": "coarse",
    "gamma_scale_k0": "coarse", "b_choice": "coarse", "inexact": "coarse",
    "rtol": "solve", "maxit": "solve", "rhs_seed": "solve",
    "verify": "verify", "rel_slack": "verify",
}

_BOOL_KEYS = {"include_nearkernel", "verify"}
_INT_KEYS = {"nx", "ny", "seed", "px", "py", "overlap", "maxit", "rhs_seed"}
_FLOAT_KEYS = {"rho", "eps_factor", "tau", "gamma", "gamma_scale_k0",
               "rtol", "rel_slack"}


def _coerce(key, raw):
    raw = raw.strip()
    if key in _BOOL_KEYS:
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{key}: expected a boolean, got {raw!r}")
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    return raw


def load_config(path):
    """Parse a config file into (base ExperimentConfig, sweep lists).

    Unknown keys and missing required sections are reported together.
    The optional [sweep] section maps known keys to comma-separated
    value lists; the experiment runs their cartesian product.
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    missing = [
        s for s in ("model", "decomposition", "coarse", "solve")
        if not parser.has_section(s)
    ]
    if missing:
        raise ConfigError(
            "missing required sections: " + ", ".join(f"[{s}]" for s in missing)
        )
    problems = []
    values = {}
    sweeps = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            if section == "sweep":
                if key not in _SECTION_OF:
                    problems.append(f"sweep: unknown key {key!r}")
                    continue
                try:
                    sweeps[key] = [_coerce(key, tok) for tok in raw.split(",")]
                except ConfigError as exc:
                    problems.append(str(exc))
            elif section == "output":
                continue  # handled by run_experiment
            elif key not in _SECTION_OF:
                problems.append(f"[{section}]: unknown key {key!r}")
            elif _SECTION_OF[key] != section:
                problems.append(
                    f"key {key!r} belongs in section [{_SECTION_OF[key]}]"
                )
            else:
                try:
                    values[key] = _coerce(key, raw)
                except ConfigError as exc:
                    problems.append(str(exc))
    if problems:
        raise ConfigError("; ".join(problems))
    cfg = ExperimentConfig(**values)
    cfg.validate()
    plots = False
    if parser.has_section("output"):
        plots = parser.getboolean("output", "plots", fallback=False)
    return cfg, sweeps, plots


@dataclass
class Pipeline:
    """Everything built for one configuration."""

    config: ExperimentConfig
    gc: object
    ms: object
    d: object
    kernels: list
    gevp_results: object
    cs: object
    precond: object
    gamma: float
    tau0: float = None
    gamma0: float = None
    subspaces: list = None
    pou: object = None
    timings: dict = field(default_factory=dict)


def _build_kernels(ms, d, b_choice, include_nearkernel):
    kernels = []
    for i in range(d.N):
        dofs = d.dof_sets[i]
        if b_choice is BChoice.DIRICHLET:
            B = ms.A.submatrix(dofs).to_dense()
        else:
            B = d.A_neu[i].to_dense()
        G_r = ms.G[dofs, :] if include_nearkernel else np.zeros((len(dofs), 0))
        kernels.append(build_subdomain_kernel(i, G_r, B))
    return kernels


def _tag_stage(exc, stage):
    if not hasattr(exc, "stage"):
        exc.stage = stage
    return exc


def build_pipeline(cfg: ExperimentConfig) -> Pipeline:
    """Run generate -> decompose -> build-coarse for one configuration.

    Exceptions escaping a stage carry a ``stage`` attribute naming it.
    """
    cfg.validate()
    variant = Variant(cfg.variant)
    timings = {}

    t0 = time.perf_counter()
    try:
        gc = build_grid_complex(cfg.nx, cfg.ny)
        cf = coefficient_field(
            gc, pattern=cfg.pattern, rho=cfg.rho, seed=cfg.seed,
            eps_factor=cfg.eps_factor,
        )
        ms = assemble_system(gc, cf)
    except NkSchwarzError as exc:
        raise _tag_stage(exc, "generate")
    timings["generate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    try:
        d = decompose(ms, gc, cfg.px, cfg.py, cfg.overlap)
        pou = verify_pou(d)
    except NkSchwarzError as exc:
        raise _tag_stage(exc, "decompose")
    timings["decompose"] = time.perf_counter() - t0

    gamma = cfg.gamma if cfg.gamma is not None else cfg.gamma_scale_k0 * d.k0

    t0 = time.perf_counter()
    try:
        b_choice = BChoice(cfg.b_choice)
        as_like = variant in (Variant.AS1, Variant.AS2, Variant.AS2_INEXACT)
        kernels = _build_kernels(
            ms, d,
            BChoice.DIRICHLET if as_like else b_choice,
            cfg.include_nearkernel,
        )

        one_level = variant in (Variant.AS1, Variant.SORAS1)
        tau0 = gamma0 = None
        gevp_results = None
        subspaces = None
        if one_level:
            tau0, gamma0 = one_level_constants(
                d, ms.A, kernels, method="as" if as_like else "soras"
            )
            cs = assemble_coarse(
                d, ms.A, kernels, None, tau=np.inf, method="AS2"
            )
        elif as_like:
            gevp_results = [
                solve_gevp(GevpSpec(GevpKind.AS_LOWER, j, cfg.tau),
                           d, ms.A, kernels[j])
                for j in range(d.N)
            ]
            cs = assemble_coarse(
                d, ms.A, kernels, gevp_results, tau=cfg.tau, method="AS2"
            )
        else:
            lower = [
                solve_gevp(GevpSpec(GevpKind.SORAS_LOWER, j, cfg.tau),
                           d, ms.A, kernels[j])
                for j in range(d.N)
            ]
            upper = [
                solve_gevp(GevpSpec(GevpKind.SORAS_UPPER, i, gamma),
                           d, ms.A, kernels[i])
                for i in range(d.N)
            ]
            gevp_results = list(zip(lower, upper))
            cs = assemble_coarse(
                d, ms.A, kernels, gevp_results, tau=cfg.tau, gamma=gamma,
                method="SORAS2",
            )
            if variant is Variant.SORAS2_INEXACT:
                subspaces = [
                    build_soras_subspaces(
                        kernels[i], upper[i], gamma,
                        lower_pairs=lower[i], tau=cfg.tau,
                    )
                    for i in range(d.N)
                ]

        inexact_name, inexact_param = parse_inexact_strategy(cfg.inexact)
        if variant.is_inexact:
            cs = attach_inexact(cs, inexact_name, inexact_param)

        if as_like:
            precond = build_as_preconditioner(
                d, ms.A, cs, inexact=variant.is_inexact
            )
        else:
            precond = build_soras_preconditioner(
                d, ms.A, kernels, cs,
                inexact=variant.is_inexact, subspaces=subspaces,
            )
    except NkSchwarzError as exc:
        raise _tag_stage(exc, "build-coarse")
    timings["build-coarse"] = time.perf_counter() - t0

    return Pipeline(
        config=cfg, gc=gc, ms=ms, d=d, kernels=kernels,
        gevp_results=gevp_results, cs=cs, precond=precond, gamma=gamma,
        tau0=tau0, gamma0=gamma0, subspaces=subspaces, pou=pou,
        timings=timings,
    )


def solve_pipeline(pl: Pipeline):
    """PCG solve against a seeded random right-hand side."""
    cfg = pl.config
    rng = np.random.default_rng(cfg.rhs_seed)
    b = rng.standard_normal(pl.ms.dim)
    t0 = time.perf_counter()
    res = pcg(pl.ms.A, pl.precond, b, rtol=cfg.rtol, maxit=cfg.maxit)
    pl.timings["solve"] = time.perf_counter() - t0
    return res


def verify_bounds(pl) -> BoundReport:
    """Dense spectrum of the preconditioned operator against its bound.

    Accepts a built Pipeline or an ExperimentConfig (built on the fly).
    """
    if isinstance(pl, ExperimentConfig):
        pl = build_pipeline(pl)
    cfg = pl.config
    t0 = time.perf_counter()
    spectrum = preconditioned_spectrum(pl.ms.A, pl.precond)
    report = make_bound_report(
        Variant(cfg.variant),
        spectrum,
        k0=pl.d.k0,
        k1=pl.d.k1,
        tau=cfg.tau,
        gamma=pl.gamma,
        tau0=pl.tau0,
        gamma0=pl.gamma0,
        lam_minus=pl.cs.lambda_minus,
        lam_plus=pl.cs.lambda_plus,
        eps_a=pl.cs.eps_A,
        rel_slack=cfg.rel_slack,
    )
    pl.timings["verify"] = time.perf_counter() - t0
    return report


# ---------------------------------------------------------------------------
# file outputs
# ---------------------------------------------------------------------------


def _atomic_write(path, data, mode="w"):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, mode) as fh:
        fh.write(data)
    os.replace(tmp, path)


def _run_record(cfg, pl, solve_res, report):
    rec = {
        "config": cfg.resolved_dict(),
        "config_hash": cfg.content_hash(),
        "k0": pl.d.k0,
        "k1": pl.d.k1,
        "gamma_resolved": pl.gamma,
        "coarse_dim": pl.cs.dim,
        "n_dof": pl.ms.dim,
        "pou_max_deviation": pl.pou.max_deviation,
        "timings": pl.timings,
    }
    if solve_res is not None:
        rec["iterations"] = solve_res.iterations
        rec["converged"] = solve_res.converged
        rec["ritz_min"] = solve_res.ritz_min
        rec["ritz_max"] = solve_res.ritz_max
        rec["kappa_estimate"] = solve_res.kappa_estimate
        rec["residual_history"] = solve_res.residual_history
    if report is not None:
        rec["bound_report"] = report.as_dict()
    return rec


_CSV_COLUMNS = [
    "variant", "nx", "ny", "pattern", "rho", "tau", "gamma", "px", "py",
    "overlap", "inexact", "k0", "k1", "coarse_dim", "iterations",
    "kappa_estimate", "kappa_exact", "kappa_bound", "satisfied", "margin",
]


def _csv_rows(records):
    rows = []
    for rec in records:
        cfg = rec["config"]
        rep = rec.get("bound_report") or {}
        rows.append({
            "variant": cfg["variant"],
            "nx": cfg["nx"], "ny": cfg["ny"], "pattern": cfg["pattern"],
            "rho": cfg["rho"], "tau": cfg["tau"],
            "gamma": rec["gamma_resolved"],
            "px": cfg["px"], "py": cfg["py"], "overlap": cfg["overlap"],
            "inexact": cfg["inexact"],
            "k0": rec["k0"], "k1": rec["k1"],
            "coarse_dim": rec["coarse_dim"],
            "iterations": rec.get("iterations"),
            "kappa_estimate": rec.get("kappa_estimate"),
            "kappa_exact": rep.get("kappa_exact"),
            "kappa_bound": rep.get("kappa_bound"),
            "satisfied": rep.get("satisfied"),
            "margin": rep.get("margin"),
        })
    return rows


def _write_plots(outdir, records):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for rec in records:
        hist = rec.get("residual_history")
        if not hist:
            continue
        label = f"{rec['config']['variant']} rho={rec['config']['rho']:g}"
        ax.semilogy(hist, label=label)
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative residual")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(os.path.join(outdir, "residuals.svg"))
    plt.close(fig)

    pts = [
        (k, rec["bound_report"]["kappa_exact"], rec["bound_report"]["kappa_bound"])
        for k, rec in enumerate(records)
        if rec.get("bound_report")
    ]
    if pts:
        fig, ax = plt.subplots(figsize=(6, 4))
        ks, exact, bound = zip(*pts)
        ax.semilogy(ks, exact, "o-", label="kappa exact")
        ax.semilogy(ks, bound, "s--", label="kappa bound")
        ax.set_xlabel("run index")
        ax.set_ylabel("condition number")
        ax.legend()
        fig.tight_layout()
        fig.savefig(os.path.join(outdir, "kappa.svg"))
        plt.close(fig)


def _sweep_product(base: ExperimentConfig, sweeps):
    if not sweeps:
        yield base
        return
    keys = sorted(sweeps)
    index = [0] * len(keys)
    while True:
        cfg = ExperimentConfig(**base.resolved_dict())
        for k, i in zip(keys, index):
            setattr(cfg, k, sweeps[k][i])
        yield cfg.validate()
        for pos in range(len(keys) - 1, -1, -1):
            index[pos] += 1
            if index[pos] < len(sweeps[keys[pos]]):
                break
            index[pos] = 0
        else:
            break


def run_experiment(config_path, outdir, plots=None):
    """Execute a configuration (or its sweep) and write the result files.

    Returns the results bundle: a dict with one record per run plus a
    summary.  Stage failures abort the affected run but keep its partial
    record, tagged with the failing stage.
    """
    base, sweeps, plots_cfg = load_config(config_path)
    if plots is None:
        plots = plots_cfg
    os.makedirs(outdir, exist_ok=True)

    records = []
    ok = True
    for cfg in _sweep_product(base, sweeps):
        record = {"config": cfg.resolved_dict(),
                  "config_hash": cfg.content_hash()}
        stage = "generate"
        try:
            pl = build_pipeline(cfg)
            stage = "solve"
            solve_res = solve_pipeline(pl)
            report = None
            if cfg.verify:
                stage = "verify"
                report = verify_bounds(pl)
                ok = ok and report.satisfied
            record = _run_record(cfg, pl, solve_res, report)
        except NkSchwarzError as exc:
            record["failed_stage"] = getattr(exc, "stage", stage)
            record["error"] = str(exc)
            ok = False
        records.append(record)

    bundle = {
        "runs": records,
        "all_bounds_satisfied": ok,
        "n_runs": len(records),
    }
    _atomic_write(
        os.path.join(outdir, "results.json"),
        json.dumps(bundle, indent=2, default=float),
    )
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_CSV_COLUMNS)
    writer.writeheader()
    for row in _csv_rows([r for r in records if "error" not in r]):
        writer.writerow(row)
    _atomic_write(os.path.join(outdir, "results.csv"), buf.getvalue())
    if plots:
        _write_plots(outdir, [r for r in records if "error" not in r])
    return bundle
