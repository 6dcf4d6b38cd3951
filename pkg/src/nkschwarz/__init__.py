"""Two-level overlapping Schwarz preconditioners with near-kernel-aware
spectral coarse spaces, verified on curl-curl model problems.

The package is organized bottom-up:

  core            dense kernels (Cholesky, generalized eigensolver,
                  rank-revealing orthogonalization)
  sparse          symmetric sparse storage and Matrix Market I/O
  model           structured-grid curl-curl systems with a gradient
                  near-kernel
  decomposition   overlapping subdomains, weights, Neumann matrices
  projections     per-subdomain near-kernel projections and restricted
                  inverses
  geneo           subdomain eigenproblems and the coarse space
  precond         the preconditioner variants
  pcg             conjugate gradients with Ritz values
  bounds          condition number bounds and spectrum checks
  experiment      configuration, pipeline and file outputs
"""

from .bounds import (
    BoundReport,
    inexact_constants,
    kappa_bound,
    make_bound_report,
    minmax_over_delta,
    preconditioned_spectrum,
)
from .core import (
    DenseSymMatrix,
    EigenPairs,
    cholesky_factor,
    cholesky_solve,
    rank_reveal_columns,
    sym_gevp,
)
from .decomposition import Decomposition, decompose, verify_pou
from .errors import (
    ConfigError,
    EmptySubdomain,
    NkSchwarzError,
    NoConvergence,
    NotPositiveDefinite,
    SingularGram,
    SizeMismatch,
)
from .experiment import (
    ExperimentConfig,
    Pipeline,
    build_pipeline,
    load_config,
    run_experiment,
    solve_pipeline,
    verify_bounds,
)
from .geneo import (
    CoarseSpace,
    GevpKind,
    GevpSpec,
    assemble_coarse,
    attach_inexact,
    make_inexact,
    solve_gevp,
)
from .model import (
    CoefficientField,
    GridComplex,
    ModelSystem,
    assemble_system,
    build_grid_complex,
    coefficient_field,
    neumann_matrix,
)
from .pcg import PcgResult, pcg
from .precond import (
    BChoice,
    Preconditioner,
    Variant,
    apply_soras2_unsimplified,
    build_as_preconditioner,
    build_soras_preconditioner,
    dense_operator,
    one_level_constants,
)
from .projections import (
    SorasSubspaces,
    SubdomainKernel,
    build_p,
    build_soras_subspaces,
    build_subdomain_kernel,
    spectral_projection,
)
from .sparse import SparseSymMatrix, read_matrix_market, write_matrix_market

__version__ = "0.1.0"
