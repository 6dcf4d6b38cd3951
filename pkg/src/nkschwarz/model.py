"""Curl-curl model problems on a structured 2D grid.

Unknowns live on edges.  The system matrix is

    A = Curl^T diag(nu) Curl + diag(eps * edge mass),

restricted to interior edges after eliminating the Dirichlet boundary.
The discrete gradient maps node functions to edge functions and is
annihilated exactly by the discrete curl, so the columns of the gradient
restricted to interior nodes span a genuine near-kernel of A whenever
eps is small against nu: their Rayleigh quotients are O(eps).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import SizeMismatch
from .sparse import SparseSymMatrix

__all__ = [
    "GridComplex",
    "CoefficientField",
    "ModelSystem",
    "build_grid_complex",
    "coefficient_field",
    "assemble_system",
    "neumann_matrix",
]

COEFFICIENT_PATTERNS = ("constant", "channels", "checkerboard", "random-contrast")


@dataclass
class GridComplex:
    """Nodes, edges and faces of an nx-by-ny grid of unit cells.

    ``grad`` is the node-to-edge incidence (+1 at the head, -1 at the
    tail of each edge) and ``curl`` the edge-to-face incidence (counter
    clockwise circulation).  Both have integer entries and satisfy
    curl @ grad == 0 exactly.
    """

    nx: int
    ny: int
    n_nodes: int
    n_edges: int
    n_faces: int
    grad: sp.csr_matrix
    curl: sp.csr_matrix
    boundary_nodes: np.ndarray
    boundary_edges: np.ndarray
    interior_nodes: np.ndarray = field(init=False)
    interior_edges: np.ndarray = field(init=False)
    face_xy: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        node_mask = np.ones(self.n_nodes, dtype=bool)
        node_mask[self.boundary_nodes] = False
        self.interior_nodes = np.flatnonzero(node_mask)
        edge_mask = np.ones(self.n_edges, dtype=bool)
        edge_mask[self.boundary_edges] = False
        self.interior_edges = np.flatnonzero(edge_mask)

    def node_index(self, i, j):
        return j * (self.nx + 1) + i

    def face_index(self, i, j):
        return j * self.nx + i


def build_grid_complex(nx, ny) -> GridComplex:
    """Construct the discrete complex for an nx-by-ny cell grid."""
    if nx < 1 or ny < 1:
        raise SizeMismatch("grid needs at least one cell in each direction")
    n_nodes = (nx + 1) * (ny + 1)
    n_hedges = nx * (ny + 1)
    n_vedges = ny * (nx + 1)
    n_edges = n_hedges + n_vedges
    n_faces = nx * ny

    def node(i, j):
        return j * (nx + 1) + i

    def hedge(i, j):  # from node(i,j) to node(i+1,j)
        return j * nx + i

    def vedge(i, j):  # from node(i,j) to node(i,j+1)
        return n_hedges + j * (nx + 1) + i

    rows, cols, vals = [], [], []
    for j in range(ny + 1):
        for i in range(nx):
            e = hedge(i, j)
            rows += [e, e]
            cols += [node(i, j), node(i + 1, j)]
            vals += [-1, 1]
    for j in range(ny):
        for i in range(nx + 1):
            e = vedge(i, j)
            rows += [e, e]
            cols += [node(i, j), node(i, j + 1)]
            vals += [-1, 1]
    grad = sp.csr_matrix(
        (vals, (rows, cols)), shape=(n_edges, n_nodes), dtype=np.int64
    )

    rows, cols, vals = [], [], []
    face_xy = np.zeros((n_faces, 2), dtype=np.int64)
    for j in range(ny):
        for i in range(nx):
            f = j * nx + i
            face_xy[f] = (i, j)
            # bottom + right - top - left
            rows += [f, f, f, f]
            cols += [hedge(i, j), vedge(i + 1, j), hedge(i, j + 1), vedge(i, j)]
            vals += [1, 1, -1, -1]
    curl = sp.csr_matrix(
        (vals, (rows, cols)), shape=(n_faces, n_edges), dtype=np.int64
    )

    bnodes = [
        node(i, j)
        for j in range(ny + 1)
        for i in range(nx + 1)
        if i in (0, nx) or j in (0, ny)
    ]
    bedges = [hedge(i, j) for j in (0, ny) for i in range(nx)]
    bedges += [vedge(i, j) for i in (0, nx) for j in range(ny)]

    return GridComplex(
        nx=nx,
        ny=ny,
        n_nodes=n_nodes,
        n_edges=n_edges,
        n_faces=n_faces,
        grad=grad,
        curl=curl,
        boundary_nodes=np.array(sorted(bnodes), dtype=np.int64),
        boundary_edges=np.array(sorted(bedges), dtype=np.int64),
        face_xy=face_xy,
    )


@dataclass
class CoefficientField:
    """Per-face curl-curl coefficient nu and per-edge mass coefficient eps."""

    nu: np.ndarray
    eps: np.ndarray
    pattern: str
    rho: float
    seed: int = 0

    def __post_init__(self):
        self.nu = np.asarray(self.nu, dtype=float)
        self.eps = np.asarray(self.eps, dtype=float)
        if np.any(self.nu <= 0) or np.any(self.eps <= 0):
            raise ValueError("coefficients must be positive")


def coefficient_field(
    gc, pattern="constant", rho=1.0, seed=0, eps_factor=1e-6
) -> CoefficientField:
    """Build a coefficient field on the grid.

    Patterns:
      constant        nu = 1 everywhere
      channels        alternating rows of faces with nu in {1, rho}
      checkerboard    nu = rho on faces with odd parity
      random-contrast nu log-uniform in [1, rho], seeded

    eps is constant, ``eps_factor`` times the smallest nu, which makes
    the gradient directions a near-kernel whenever eps_factor << 1.
    """
    if pattern not in COEFFICIENT_PATTERNS:
        raise ValueError(f"unknown pattern {pattern!r}")
    if rho < 1.0:
        raise ValueError("contrast rho must be >= 1")
    fx, fy = gc.face_xy[:, 0], gc.face_xy[:, 1]
    if pattern == "constant":
        nu = np.ones(gc.n_faces)
    elif pattern == "channels":
        nu = np.where(fy % 2 == 1, rho, 1.0)
    elif pattern == "checkerboard":
        nu = np.where((fx + fy) % 2 == 1, rho, 1.0)
    else:
        rng = np.random.default_rng(seed)
        nu = np.exp(rng.uniform(0.0, np.log(rho) if rho > 1 else 0.0, gc.n_faces))
    eps = np.full(gc.n_edges, eps_factor * nu.min())
    return CoefficientField(nu=nu, eps=eps, pattern=pattern, rho=rho, seed=seed)


@dataclass
class ModelSystem:
    """Assembled interior system with the data needed for local Neumann matrices.

    ``A`` acts on interior edges, ``G`` holds the discrete gradients of
    interior nodes restricted to interior edges (their support never
    touches boundary edges, so the restriction is exact).  ``curl_int``
    retains the per-face circulation rows on interior edges; together
    with ``nu`` and ``eps_int`` it is the element-level decomposition of
    A used to assemble subdomain Neumann matrices.
    """

    gc: GridComplex
    cf: CoefficientField
    A: SparseSymMatrix
    G: np.ndarray
    curl_int: sp.csr_matrix
    nu: np.ndarray
    eps_int: np.ndarray

    @property
    def dim(self):
        return self.A.dim

    @property
    def n_kernel(self):
        return self.G.shape[1]

    def face_interior_edges(self, f):
        """Interior-edge indices (A indexing) touched by face f."""
        row = self.curl_int.getrow(f)
        return row.indices


def assemble_system(gc: GridComplex, cf: CoefficientField) -> ModelSystem:
    """Assemble A and the near-kernel generator G on interior edges."""
    if cf.nu.shape[0] != gc.n_faces:
        raise SizeMismatch(
            f"nu has {cf.nu.shape[0]} entries for {gc.n_faces} faces"
        )
    if cf.eps.shape[0] != gc.n_edges:
        raise SizeMismatch(
            f"eps has {cf.eps.shape[0]} entries for {gc.n_edges} edges"
        )
    int_edges = gc.interior_edges
    n_int = len(int_edges)
    curl_int = gc.curl.tocsc()[:, int_edges].tocsr().astype(float)

    # A = sum_f nu_f c_f^T c_f + diag(eps) on the interior block.
    stiff = (curl_int.T @ sp.diags(cf.nu) @ curl_int).tocoo()
    A = SparseSymMatrix(n_int)
    upper = stiff.row <= stiff.col
    A.add_entries(stiff.row[upper], stiff.col[upper], stiff.data[upper])
    diag = np.arange(n_int)
    A.add_entries(diag, diag, cf.eps[int_edges])
    A.finalize()

    G = gc.grad.tocsc()[np.ix_(int_edges, gc.interior_nodes)].toarray().astype(float)
    return ModelSystem(
        gc=gc,
        cf=cf,
        A=A,
        G=G,
        curl_int=curl_int,
        nu=np.asarray(cf.nu, dtype=float),
        eps_int=cf.eps[int_edges].astype(float),
    )


def neumann_matrix(ms: ModelSystem, edge_subset) -> SparseSymMatrix:
    """Element-assembled Neumann matrix on a subset of interior edges.

    Includes the stiffness contribution of every face whose interior
    edges all lie in the subset, plus the edge mass terms of the subset.
    With the full interior edge set this reproduces A exactly.  Indices
    refer to the interior-edge (A) numbering.
    """
    subset = np.asarray(sorted(edge_subset), dtype=np.int64)
    n_loc = len(subset)
    if n_loc == 0:
        return SparseSymMatrix(0).finalize()
    if subset.min() < 0 or subset.max() >= ms.dim:
        raise SizeMismatch("edge subset out of range")
    pos = -np.ones(ms.dim, dtype=np.int64)
    pos[subset] = np.arange(n_loc)

    indptr = ms.curl_int.indptr
    indices = ms.curl_int.indices
    data = ms.curl_int.data
    out = SparseSymMatrix(n_loc)
    rows, cols, vals = [], [], []
    for f in range(ms.curl_int.shape[0]):
        sl = slice(indptr[f], indptr[f + 1])
        cols_f = indices[sl]
        if len(cols_f) == 0 or np.any(pos[cols_f] < 0):
            continue
        loc = pos[cols_f]
        signs = data[sl]
        nu_f = ms.nu[f]
        for a in range(len(loc)):
            for b in range(a, len(loc)):
                ra, rb = loc[a], loc[b]
                v = nu_f * signs[a] * signs[b]
                if ra <= rb:
                    rows.append(ra)
                    cols.append(rb)
                else:
                    rows.append(rb)
                    cols.append(ra)
                vals.append(v)
    if rows:
        out.add_entries(rows, cols, vals)
    diag = np.arange(n_loc)
    out.add_entries(diag, diag, ms.eps_int[subset])
    return out.finalize()
