"""Grid complex and curl-curl model system tests."""

import numpy as np
import pytest
import scipy.linalg as sla

from nkschwarz import (
    SizeMismatch,
    assemble_system,
    build_grid_complex,
    coefficient_field,
    neumann_matrix,
)
from nkschwarz.model import CoefficientField


def build(nx, ny, pattern="constant", rho=1.0, seed=0, eps_factor=1e-6):
    gc = build_grid_complex(nx, ny)
    cf = coefficient_field(gc, pattern=pattern, rho=rho, seed=seed,
                           eps_factor=eps_factor)
    return gc, cf, assemble_system(gc, cf)


class TestGridComplex:
    @pytest.mark.parametrize(
        "nx,ny,nodes,edges,faces",
        [(1, 1, 4, 4, 1), (2, 1, 6, 7, 2), (3, 3, 16, 24, 9)],
    )
    def test_entity_counts(self, nx, ny, nodes, edges, faces):
        gc = build_grid_complex(nx, ny)
        assert gc.n_nodes == nodes
        assert gc.n_edges == edges
        assert gc.n_faces == faces
        assert gc.n_nodes == (nx + 1) * (ny + 1)
        assert gc.n_edges == nx * (ny + 1) + ny * (nx + 1)

    @pytest.mark.parametrize("nx,ny", [(1, 1), (2, 3), (5, 4)])
    def test_complex_property_exact(self, nx, ny):
        gc = build_grid_complex(nx, ny)
        prod = (gc.curl @ gc.grad).toarray()
        assert np.array_equal(prod, np.zeros_like(prod))

    def test_boundary_sets(self):
        gc = build_grid_complex(2, 2)
        assert len(gc.interior_nodes) == 1
        assert len(gc.interior_edges) == 4
        assert len(gc.boundary_edges) + len(gc.interior_edges) == gc.n_edges

    def test_rejects_empty_grid(self):
        with pytest.raises(SizeMismatch):
            build_grid_complex(0, 3)


class TestCoefficientField:
    def test_values_within_contrast_band(self):
        gc = build_grid_complex(6, 6)
        for pattern in ("constant", "channels", "checkerboard",
                        "random-contrast"):
            cf = coefficient_field(gc, pattern=pattern, rho=100.0, seed=1)
            assert cf.nu.min() >= 1.0 - 1e-15
            assert cf.nu.max() <= 100.0 + 1e-12
            assert np.all(cf.eps > 0)

    def test_random_contrast_seeded(self):
        gc = build_grid_complex(4, 4)
        a = coefficient_field(gc, "random-contrast", rho=1e3, seed=5)
        b = coefficient_field(gc, "random-contrast", rho=1e3, seed=5)
        assert np.array_equal(a.nu, b.nu)

    def test_rejects_nonpositive(self):
        gc = build_grid_complex(2, 2)
        with pytest.raises(ValueError):
            CoefficientField(nu=np.zeros(gc.n_faces),
                             eps=np.ones(gc.n_edges), pattern="constant",
                             rho=1.0)

    def test_unknown_pattern(self):
        gc = build_grid_complex(2, 2)
        with pytest.raises(ValueError):
            coefficient_field(gc, pattern="stripes")


class TestAssembleSystem:
    def test_degenerate_one_cell(self):
        # every edge of the single cell is a boundary edge
        gc, cf, ms = build(1, 1)
        assert ms.dim == 0
        assert ms.G.shape == (0, 0)

    def test_two_by_two(self):
        gc, cf, ms = build(2, 2)
        assert ms.dim == 4
        assert ms.G.shape == (4, 1)
        # curl-curl part annihilates the gradient exactly
        stiff = ms.A.to_dense() - np.diag(ms.eps_int)
        g = ms.G[:, 0]
        assert abs(g @ stiff @ g) == 0.0

    def test_near_kernel_under_contrast(self):
        gc, cf, ms = build(4, 4, pattern="channels", rho=1e6)
        A = ms.A.to_dense()
        assert np.all(sla.eigvalsh(A) > 0)  # SPD
        rayleigh = [
            (g @ A @ g) / (g @ g) for g in ms.G.T
        ]
        # equality holds in exact arithmetic; the assembled stiffness
        # leaves cancellation noise of order u * nu_max / eps ~ 2e-4
        assert min(rayleigh) <= ms.eps_int.max() * (1 + 1e-3)

    def test_gradient_columns_annihilated(self):
        gc, cf, ms = build(5, 4, pattern="random-contrast", rho=1e3, seed=2)
        stiff = ms.A.to_dense() - np.diag(ms.eps_int)
        resid = ms.G.T @ stiff @ ms.G
        assert np.abs(resid).max() <= 1e-12 * np.abs(stiff).max()

    def test_spd_kernel_free(self):
        gc, cf, ms = build(4, 3, eps_factor=1e-8)
        assert sla.eigvalsh(ms.A.to_dense()).min() > 0

    def test_size_mismatch(self):
        gc = build_grid_complex(3, 3)
        cf = coefficient_field(gc)
        bad = CoefficientField(nu=cf.nu[:-1], eps=cf.eps, pattern="constant",
                               rho=1.0)
        with pytest.raises(SizeMismatch):
            assemble_system(gc, bad)


class TestNeumannMatrix:
    def test_full_subset_equals_A(self):
        gc, cf, ms = build(4, 4, pattern="channels", rho=10.0)
        full = neumann_matrix(ms, np.arange(ms.dim))
        assert np.array_equal(full.to_dense(), ms.A.to_dense())

    def test_empty_subset(self):
        gc, cf, ms = build(3, 3)
        assert neumann_matrix(ms, []).dim == 0

    def test_left_column_against_brute_force(self):
        # independent re-assembly over the left column of faces
        gc, cf, ms = build(2, 2, pattern="checkerboard", rho=7.0)
        left_faces = [gc.face_index(0, j) for j in range(2)]
        subset = sorted(
            set().union(*[set(ms.face_interior_edges(f)) for f in left_faces])
        )
        got = neumann_matrix(ms, subset).to_dense()

        pos = {e: k for k, e in enumerate(subset)}
        expected = np.zeros((len(subset), len(subset)))
        curl = ms.curl_int
        for f in left_faces:
            row = curl.getrow(f)
            for a, sa in zip(row.indices, row.data):
                for b, sb in zip(row.indices, row.data):
                    expected[pos[a], pos[b]] += ms.nu[f] * sa * sb
        for e in subset:
            expected[pos[e], pos[e]] += ms.eps_int[e]
        np.testing.assert_allclose(got, expected, rtol=0, atol=0)

    def test_element_additivity_over_partition(self):
        # summing the per-face contributions over any partition of the
        # faces plus the mass reproduces A exactly
        gc, cf, ms = build(4, 3, pattern="random-contrast", rho=100.0, seed=9)
        parts = np.array_split(np.arange(gc.n_faces), 3)
        acc = np.zeros((ms.dim, ms.dim))
        curl = ms.curl_int
        for part in parts:
            for f in part:
                row = curl.getrow(f)
                c = np.zeros(ms.dim)
                c[row.indices] = row.data
                acc += ms.nu[f] * np.outer(c, c)
        acc += np.diag(ms.eps_int)
        np.testing.assert_allclose(acc, ms.A.to_dense(), atol=1e-13)

    def test_out_of_range_subset(self):
        gc, cf, ms = build(3, 3)
        with pytest.raises(SizeMismatch):
            neumann_matrix(ms, [ms.dim + 1])
