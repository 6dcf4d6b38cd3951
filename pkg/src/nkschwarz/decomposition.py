"""Overlapping decompositions with restrictions, weights and Neumann matrices.

Subdomains start from a Cartesian partition of the faces and grow by
layers of face adjacency.  Degrees of freedom are the interior edges of
a subdomain's faces.  Weights are reciprocal multiplicities, which makes
the partition of unity sum exactly to the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySubdomain, SizeMismatch
from .model import GridComplex, ModelSystem, neumann_matrix
from .sparse import SparseSymMatrix

__all__ = ["Decomposition", "decompose", "verify_pou", "PouReport"]


@dataclass
class Decomposition:
    """Overlapping subdomains of the interior-edge index set.

    ``dof_sets[i]`` is sorted ascending; restriction R_i selects those
    entries and ``D[i]`` carries the diagonal partition-of-unity weights.
    ``k0`` is a coloring constant for the interaction graph (subdomains
    whose unknowns are coupled through A) and ``k1`` the largest number
    of subdomains sharing one unknown.
    """

    N: int
    dim: int
    dof_sets: list
    overlap: int
    D: list
    A_neu: list
    k0: int
    k1: int
    face_sets: list = field(default=None, repr=False)
    multiplicity: np.ndarray = field(default=None, repr=False)

    def restrict(self, i, x):
        """R_i x."""
        return np.asarray(x)[self.dof_sets[i]]

    def prolong(self, i, y, out=None):
        """R_i^T y, accumulated into ``out`` when given."""
        if out is None:
            out = np.zeros(self.dim, dtype=float)
        np.add.at(out, self.dof_sets[i], y)
        return out

    def size(self, i):
        return len(self.dof_sets[i])

    def weighted_restrict(self, i, x):
        """D_i R_i x."""
        return self.D[i] * self.restrict(i, x)


def _grow_face_set(gc: GridComplex, faces, layers):
    """Grow a face set by layers of edge-sharing adjacency."""
    nx, ny = gc.nx, gc.ny
    mask = np.zeros((nx, ny), dtype=bool)
    fx, fy = gc.face_xy[faces, 0], gc.face_xy[faces, 1]
    mask[fx, fy] = True
    for _ in range(layers):
        grown = mask.copy()
        grown[1:, :] |= mask[:-1, :]
        grown[:-1, :] |= mask[1:, :]
        grown[:, 1:] |= mask[:, :-1]
        grown[:, :-1] |= mask[:, 1:]
        mask = grown
    ii, jj = np.nonzero(mask)
    return np.array(sorted(gc.face_index(i, j) for i, j in zip(ii, jj)))


def _interaction_graph(A: SparseSymMatrix, dof_sets):
    """Adjacency of subdomains coupled through nonzeros of A.

    Sharing an unknown counts as coupling (the diagonal of A is
    positive), so this refines the plain dof-intersection graph.
    """
    n = A.dim
    N = len(dof_sets)
    csr = A.csr
    reach = []
    for dofs in dof_sets:
        cols = np.unique(csr[dofs].indices)
        marker = np.zeros(n, dtype=bool)
        marker[cols] = True
        reach.append(marker)
    adj = [set() for _ in range(N)]
    for i in range(N):
        for j in range(i + 1, N):
            if reach[i][dof_sets[j]].any():
                adj[i].add(j)
                adj[j].add(i)
    return adj


def _greedy_coloring(adj):
    """Color count of a greedy coloring in index order."""
    colors = {}
    for i in range(len(adj)):
        used = {colors[j] for j in adj[i] if j in colors}
        c = 0
        while c in used:
            c += 1
        colors[i] = c
    return (max(colors.values()) + 1) if colors else 1


def decompose(ms: ModelSystem, gc: GridComplex, px, py, overlap) -> Decomposition:
    """Cartesian px-by-py overlapping decomposition of the model system.

    Raises EmptySubdomain if a subdomain's faces carry no interior edge.
    """
    if px < 1 or py < 1:
        raise SizeMismatch("need at least one subdomain in each direction")
    if px > gc.nx or py > gc.ny:
        raise SizeMismatch("more subdomains than face columns / rows")
    if overlap < 1:
        raise SizeMismatch("overlap must be at least one face layer")

    x_blocks = np.array_split(np.arange(gc.nx), px)
    y_blocks = np.array_split(np.arange(gc.ny), py)
    face_sets = []
    for yb in y_blocks:
        for xb in x_blocks:
            faces = [gc.face_index(i, j) for j in yb for i in xb]
            face_sets.append(_grow_face_set(gc, np.array(faces), overlap))

    # interior edges of each face set, in A (interior) indexing
    int_pos = -np.ones(gc.n_edges, dtype=np.int64)
    int_pos[gc.interior_edges] = np.arange(len(gc.interior_edges))
    dof_sets = []
    for k, faces in enumerate(face_sets):
        edges = np.unique(gc.curl[faces].indices)
        dofs = int_pos[edges]
        dofs = np.sort(dofs[dofs >= 0])
        if len(dofs) == 0:
            raise EmptySubdomain(f"subdomain {k} has no interior edges")
        dof_sets.append(dofs)

    mult = np.zeros(ms.dim, dtype=np.int64)
    for dofs in dof_sets:
        mult[dofs] += 1
    if np.any(mult == 0):
        raise EmptySubdomain("decomposition does not cover all interior edges")

    D = [1.0 / mult[dofs] for dofs in dof_sets]
    A_neu = [neumann_matrix(ms, dofs) for dofs in dof_sets]
    k1 = int(mult.max())
    k0 = _greedy_coloring(_interaction_graph(ms.A, dof_sets))

    return Decomposition(
        N=len(dof_sets),
        dim=ms.dim,
        dof_sets=dof_sets,
        overlap=overlap,
        D=D,
        A_neu=A_neu,
        k0=k0,
        k1=k1,
        face_sets=face_sets,
        multiplicity=mult,
    )


@dataclass
class PouReport:
    """Result of the partition-of-unity check."""

    max_deviation: float
    passes: bool


def verify_pou(d: Decomposition, tol=1e-15) -> PouReport:
    """Check sum_i R_i^T D_i R_i = I entrywise.

    The sum is diagonal by construction, so only its diagonal deviation
    from one is reported.  Reciprocal-multiplicity weights give exactly
    zero deviation in floating point only when multiplicities are powers
    of two; otherwise round-off up to 1e-15 remains.
    """
    acc = np.zeros(d.dim)
    for i in range(d.N):
        np.add.at(acc, d.dof_sets[i], d.D[i])
    dev = float(np.abs(acc - 1.0).max()) if d.dim else 0.0
    return PouReport(max_deviation=dev, passes=dev <= tol)
