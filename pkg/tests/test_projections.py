"""Near-kernel projections, restricted inverses and spectral splittings."""

import numpy as np
import pytest

from nkschwarz import (
    SingularGram,
    build_p,
    build_soras_subspaces,
    build_subdomain_kernel,
    spectral_projection,
)


def random_spd(n, rng, spread=1.0):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    vals = np.exp(rng.uniform(0, spread, n))
    return (q * vals) @ q.T


class TestXi0:
    def test_empty_kernel_is_zero(self, rng):
        k = build_subdomain_kernel(0, np.zeros((4, 0)), np.eye(4))
        v = rng.standard_normal(4)
        assert np.array_equal(k.xi0(v), np.zeros(4))
        assert np.array_equal(k.q(v), v)

    def test_fixes_its_range(self, rng):
        B = random_spd(6, rng)
        G = rng.standard_normal((6, 2))
        k = build_subdomain_kernel(0, G, B)
        v = G @ rng.standard_normal(2)
        np.testing.assert_allclose(k.xi0(v), v, atol=1e-12 * np.linalg.norm(v))

    def test_euclidean_special_case(self):
        k = build_subdomain_kernel(0, np.eye(3)[:, :1], np.eye(3))
        out = k.xi0(np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(out, [1.0, 0.0, 0.0], atol=1e-14)

    def test_idempotent_and_b_orthogonal(self, rng):
        B = random_spd(9, rng, spread=3.0)
        G = rng.standard_normal((9, 3))
        k = build_subdomain_kernel(0, G, B)
        for _ in range(100):
            v = rng.standard_normal(9)
            xv = k.xi0(v)
            assert np.linalg.norm(k.xi0(xv) - xv) <= 1e-12 * max(
                np.linalg.norm(xv), 1e-30
            )
            # complement residual is B-orthogonal to the kernel
            w = k.G_i.T @ (k.B @ (v - xv))
            assert np.abs(w).max() <= 1e-12 * np.linalg.norm(k.B @ v)


class TestQ:
    def test_euclidean_special_case(self):
        k = build_subdomain_kernel(0, np.eye(3)[:, :1], np.eye(3))
        out = k.q(np.array([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(out, [0.0, 2.0, 3.0], atol=1e-14)

    def test_symmetric_idempotent(self, rng):
        B = random_spd(7, rng)
        G = rng.standard_normal((7, 2))
        k = build_subdomain_kernel(0, G, B)
        Q = k.q(np.eye(7))
        np.testing.assert_allclose(Q, Q.T, atol=1e-13)
        np.testing.assert_allclose(Q @ Q, Q, atol=1e-12)

    def test_output_in_complement(self, rng):
        B = random_spd(8, rng, spread=4.0)
        G = rng.standard_normal((8, 3))
        k = build_subdomain_kernel(0, G, B)
        for _ in range(20):
            v = rng.standard_normal(8)
            w = k.G_i.T @ (k.B @ k.q(v))
            assert np.abs(w).max() <= 1e-11 * np.linalg.norm(k.B @ v)

    def test_bdag_absorbs_q(self, rng):
        # the restricted inverse is unchanged by the complement projection
        B = random_spd(8, rng, spread=4.0)
        G = rng.standard_normal((8, 3))
        k = build_subdomain_kernel(0, G, B)
        for _ in range(20):
            v = rng.standard_normal(8)
            a, b = k.B_dag(k.q(v)), k.B_dag(v)
            assert np.linalg.norm(a - b) <= 1e-12 * np.linalg.norm(b)


class TestBDag:
    def test_empty_kernel_is_plain_inverse(self, rng):
        B = random_spd(5, rng)
        k = build_subdomain_kernel(0, np.zeros((5, 0)), B)
        v = rng.standard_normal(5)
        np.testing.assert_allclose(
            k.B_dag(v), np.linalg.solve(B, v), atol=1e-12
        )

    def test_range_b_orthogonal_to_kernel(self, rng):
        B = random_spd(6, rng)
        G = rng.standard_normal((6, 2))
        k = build_subdomain_kernel(0, G, B)
        y = k.B @ (G @ rng.standard_normal(2))
        w = k.G_i.T @ (k.B @ k.B_dag(y))
        assert np.abs(w).max() <= 1e-12 * np.linalg.norm(y)

    def test_round_trip_on_complement(self, rng):
        # apply the complement Riesz map, then the restricted inverse
        B = random_spd(6, rng)
        G = rng.standard_normal((6, 2))
        k = build_subdomain_kernel(0, G, B)
        for _ in range(20):
            y = k.q(rng.standard_normal(6))
            back = k.B_dag(k.apply_B_perp(y))
            assert np.linalg.norm(back - y) <= 1e-11 * np.linalg.norm(y)

    def test_full_kernel_gives_zero(self, rng):
        B = random_spd(4, rng)
        k = build_subdomain_kernel(0, np.eye(4), B)
        v = rng.standard_normal(4)
        assert np.linalg.norm(k.B_dag(v)) <= 1e-12 * np.linalg.norm(v)


SPLIT_TAU = 1.25  # above the order-one bulk, filters a genuine minority


@pytest.fixture(scope="module")
def split():
    # Dirichlet local matrices put eigenvalues of the lower pencil on
    # both sides of the threshold, so every family is active
    from conftest import MODERATE, pipeline_for
    from nkschwarz import GevpKind, GevpSpec, solve_gevp

    cfg = dict(MODERATE, variant="soras2", b_choice="dirichlet")
    pl = pipeline_for(**cfg)
    j = 1
    kernel = pl.kernels[j]
    upper = solve_gevp(
        GevpSpec(GevpKind.SORAS_UPPER, j, 1.0), pl.d, pl.ms.A, kernel
    )
    lower = solve_gevp(
        GevpSpec(GevpKind.SORAS_LOWER, j, 1.0), pl.d, pl.ms.A, kernel
    )
    gamma = float(np.median(upper.values[upper.values > 0]))
    ss = build_soras_subspaces(
        kernel, upper, gamma, lower_pairs=lower, tau=SPLIT_TAU
    )
    return pl, kernel, ss, upper, lower


class TestSpectralSplitting:

    def test_eta_idempotent_and_splits(self, split, rng):
        pl, kernel, ss, upper, lower = split
        assert ss.V_gamma.shape[1] > 0
        assert ss.W_gamma.shape[1] > 0
        for _ in range(100):
            v = rng.standard_normal(kernel.n)
            ev = ss.eta(v)
            assert np.linalg.norm(ss.eta(ev) - ev) <= 1e-12 * max(
                np.linalg.norm(ev), 1e-30
            )
        # identity on the high block, zero on the low block
        for c in ss.V_gamma.T:
            assert np.linalg.norm(ss.eta(c) - c) <= 1e-11 * np.linalg.norm(c)
        for w in ss.W_gamma.T:
            assert np.linalg.norm(ss.eta(w)) <= 1e-11 * np.linalg.norm(w)

    def test_composition_is_b_orthogonal_projection_on_W(self, split, rng):
        # (I - eta)(I - xi0) projects B-orthogonally onto the low block
        pl, kernel, ss, upper, lower = split
        W = ss.W_gamma
        for _ in range(20):
            v = rng.standard_normal(kernel.n)
            pv = ss.B_tilde_dag(kernel.B @ v)  # (I-eta)(I-xi0) B^-1 B v
            resid = W.T @ (kernel.B @ (pv - v))
            assert np.abs(resid).max() <= 1e-11 * np.linalg.norm(
                kernel.B @ v
            )

    def test_btilde_inverts_on_W(self, split, rng):
        pl, kernel, ss, upper, lower = split
        for _ in range(20):
            w = ss.W_gamma @ rng.standard_normal(ss.W_gamma.shape[1])
            back = ss.B_tilde_dag(ss.apply_B_W(w))
            assert np.linalg.norm(back - w) <= 1e-11 * np.linalg.norm(w)

    def test_p_fixes_its_range_and_is_idempotent(self, split, rng):
        pl, kernel, ss, upper, lower = split
        assert ss.p is not None
        for _ in range(100):
            v = rng.standard_normal(kernel.n)
            pv = ss.p(v)
            assert np.linalg.norm(ss.p(pv) - pv) <= 1e-11 * max(
                np.linalg.norm(pv), 1e-30
            )

    def test_pythagoras_split(self, split, rng):
        # energy of the unfiltered residual splits over p and the
        # eigenvector filter with no cross term
        pl, kernel, ss, upper, lower = split
        V_sel = lower.vectors[:, lower.values > SPLIT_TAU]
        assert V_sel.shape[1] > 0
        pi = spectral_projection(V_sel, pl.d.A_neu[kernel.index].to_dense())

        def b_form(v):
            w = v - kernel.xi0(v)
            return w @ (kernel.B @ w)

        for _ in range(50):
            u = rng.standard_normal(kernel.n)
            lhs1 = b_form(u - ss.p(u))
            lhs2 = b_form(ss.p(u) - pi(u))
            rhs = b_form(u - pi(u))
            assert abs(lhs1 + lhs2 - rhs) <= 1e-10 * abs(rhs)

    def test_empty_selection_gives_zero_projection(self, split, rng):
        pl, kernel, ss, upper, lower = split
        p = build_p(np.zeros((kernel.n, 0)), np.zeros((kernel.n, 0)), kernel)
        v = rng.standard_normal(kernel.n)
        assert np.array_equal(p(v), np.zeros(kernel.n))

    def test_kernel_contamination_detected(self, split, rng):
        pl, kernel, ss, upper, lower = split
        if kernel.n_kernel == 0:
            pytest.skip("subdomain has no near-kernel")
        bad = np.column_stack([ss.V_gamma, kernel.G_i[:, :1]])
        with pytest.raises(SingularGram):
            build_p(bad, np.zeros((kernel.n, 0)), kernel)


class TestSpectralProjection:
    def test_projection_parallel_to_complement(self, rng):
        M = random_spd(8, rng)
        vals, vecs = np.linalg.eigh(M)
        sel = vecs[:, -2:]
        pi = spectral_projection(sel, M)
        v = rng.standard_normal(8)
        pv = pi(v)
        # range and M-orthogonality of the residual against the selection
        assert np.linalg.norm(pi(pv) - pv) <= 1e-12 * np.linalg.norm(pv)
        assert np.abs(sel.T @ (M @ (v - pv))).max() <= 1e-12 * np.linalg.norm(
            M @ v
        )
