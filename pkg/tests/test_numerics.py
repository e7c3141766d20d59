"""Quadrature, linear algebra and root-finding contracts.

Oracles used here:
  * the 2-point Gauss-Legendre rule derived by hand (nodes +-1/sqrt(3),
    unit weights on [-1, 1]);
  * full SVD (LAPACK divide-and-conquer) for extremal singular values;
  * a companion matrix whose spectrum is read off a factored polynomial.
"""

import math

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spectra_cert import numerics as nx


class TestGaussLegendre:
    def test_two_point_rule_matches_hand_derivation(self):
        nodes, weights = nx.gauss_legendre(2, -1.0, 1.0)
        npt.assert_allclose(nodes, [-1 / math.sqrt(3), 1 / math.sqrt(3)], atol=1e-15)
        npt.assert_allclose(weights, [1.0, 1.0], atol=1e-15)

    def test_cubic_exact_with_two_nodes(self):
        nodes, weights = nx.gauss_legendre(2, 0.0, 1.0)
        assert abs(np.sum(weights * nodes**3) - 0.25) < 1e-15

    def test_weights_sum_to_interval_length(self):
        _, weights = nx.gauss_legendre(37, -2.0, 5.0)
        assert abs(weights.sum() - 7.0) < 1e-12

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            nx.gauss_legendre(0, 0.0, 1.0)
        with pytest.raises(ValueError):
            nx.gauss_legendre(4, 1.0, 1.0)

    @settings(max_examples=40, deadline=None)
    @given(
        n=st.integers(min_value=1, max_value=12),
        coeffs=st.lists(
            st.floats(min_value=-5, max_value=5, allow_nan=False), min_size=1, max_size=8
        ),
    )
    def test_polynomial_exactness_up_to_degree_2n_minus_1(self, n, coeffs):
        deg = min(len(coeffs) - 1, 2 * n - 1)
        c = np.asarray(coeffs[: deg + 1])
        nodes, weights = nx.gauss_legendre(n, 0.0, 2.0)
        quad = float(np.sum(weights * np.polyval(c[::-1], nodes)))
        exact = float(sum(ck * 2.0 ** (k + 1) / (k + 1) for k, ck in enumerate(c)))
        assert abs(quad - exact) <= 1e-12 * (1.0 + abs(exact) + np.abs(c).sum() * 10)


class TestPanelGauss:
    def test_matches_single_panel_on_smooth_integrand(self):
        x1, w1 = nx.gauss_legendre(40, 0.0, 2.0)
        x2, w2 = nx.panel_gauss([0.0, 0.7, 1.3, 2.0], 24)
        f = lambda x: np.exp(-(x**2)) * np.cos(x)
        assert abs(np.sum(w1 * f(x1)) - np.sum(w2 * f(x2))) < 1e-13

    def test_resolves_endpoint_power_singularity(self):
        # integral of r^-0.9 on (0, 1] = 10; log-graded panels handle it.
        # The untiled tail below 10^-K contributes 10 * 10^(-K/10), so
        # K = 100 panels leave ~1e-9.
        edges = [10.0**-k for k in range(100, 0, -1)] + [1.0]
        x, w = nx.panel_gauss(edges, 20)
        assert abs(np.sum(w * x**-0.9) - 10.0) < 2e-9

    def test_rejects_nonmonotone_breakpoints(self):
        with pytest.raises(ValueError):
            nx.panel_gauss([0.0, 1.0, 0.5], 4)


class TestRadialGrid:
    def test_uniform_weight_sum_is_r_max(self):
        g = nx.radial_grid(64, 40.0)
        assert abs(g.weights.sum() - 40.0) < 1e-10

    def test_graded_weight_sum_is_r_max(self):
        g = nx.radial_grid(64, 40.0, "graded-to-origin")
        assert abs(g.weights.sum() - 40.0) < 1e-10

    def test_nodes_strictly_increasing_and_off_origin(self):
        for grading in ("uniform", "graded-to-origin"):
            g = nx.radial_grid(128, 10.0, grading)
            assert g.nodes[0] > 0
            assert np.all(np.diff(g.nodes) > 0)
            assert g.nodes[-1] <= 10.0

    def test_graded_grid_clusters_at_origin(self):
        u = nx.radial_grid(100, 1.0)
        g = nx.radial_grid(100, 1.0, "graded-to-origin")
        assert g.nodes[0] < u.nodes[0] / 50

    def test_graded_integrates_inverse_sqrt(self):
        # integral of r^-1/2 over (0,1] = 2; the gamma=2 map makes the
        # integrand polynomial so the rule is essentially exact.
        g = nx.radial_grid(40, 1.0, "graded-to-origin")
        assert abs(np.sum(g.weights / np.sqrt(g.nodes)) - 2.0) < 1e-12

    def test_refined_preserves_construction(self):
        g = nx.radial_grid(32, 7.0, "graded-to-origin", gamma=3.0)
        r = g.refined()
        assert r.n == 64
        assert r.grading == "graded-to-origin"
        assert abs(r.weights.sum() - 7.0) < 1e-10

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            nx.radial_grid(16, -1.0)
        with pytest.raises(ValueError):
            nx.radial_grid(16, 1.0, "log")


class TestBoxGrid:
    def test_even_order_required(self):
        with pytest.raises(ValueError):
            nx.box_grid(9, 5.0)

    def test_no_node_at_origin(self):
        g = nx.box_grid(8, 5.0)
        pts, _ = g.points_and_weights()
        assert np.min(np.linalg.norm(pts, axis=1)) > 1e-3

    def test_weights_integrate_volume(self):
        g = nx.box_grid(6, 2.0)
        _, w = g.points_and_weights()
        assert abs(w.sum() - 4.0**3) < 1e-10

    def test_dense_guard(self):
        g = nx.box_grid(82, 1.0)
        with pytest.raises(nx.NumericsError):
            g.points_and_weights()


class TestEigComplex:
    def test_companion_matrix_spectrum(self):
        # companion matrix of z^2 - 3z + 2 = (z - 1)(z - 2)
        m = np.array([[0.0, -2.0], [1.0, 3.0]], dtype=complex)
        vals = sorted(lam.real for lam, _ in nx.eig_complex(m))
        npt.assert_allclose(vals, [1.0, 2.0], atol=1e-12)

    def test_residual_contract_on_fixed_matrix(self):
        rng = np.random.default_rng(7)
        m = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
        norm_m = np.linalg.norm(m)
        for lam, v in nx.eig_complex(m):
            assert np.linalg.norm(m @ v - lam * v) <= 1e-10 * norm_m

    def test_sorted_deterministic_order(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))
        vals = [lam for lam, _ in nx.eig_complex(m)]
        assert vals == sorted(vals, key=lambda z: (z.real, z.imag))

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_residual_contract_random(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        norm_m = np.linalg.norm(m)
        for lam, v in nx.eig_complex(m):
            assert np.linalg.norm(m @ v - lam * v) <= 1e-10 * norm_m * np.linalg.norm(v)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            nx.eig_complex(np.ones((2, 3)))


class TestSingularValues:
    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000))
    def test_extremes_match_full_svd_oracle(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        svals = np.linalg.svd(m, compute_uv=False)
        assert abs(nx.largest_singular_value(m) - svals[0]) <= 1e-8 * svals[0]
        smin = nx.smallest_singular_value(m)
        assert abs(smin - svals[-1]) <= 1e-5 * max(svals[-1], 1e-30)

    def test_adjoint_invariance(self):
        rng = np.random.default_rng(11)
        m = rng.standard_normal((20, 20)) + 1j * rng.standard_normal((20, 20))
        a = nx.largest_singular_value(m)
        b = nx.largest_singular_value(m.conj().T)
        assert abs(a - b) <= 1e-8 * a

    def test_singular_matrix_flags(self):
        m = np.zeros((4, 4), dtype=complex)
        m[0, 0] = 1.0
        val, flag = nx.smallest_singular_value(m, return_flag=True)
        assert val == 0.0 and flag

    def test_diagonal_matrix_exact(self):
        m = np.diag([3.0, 2.0, 0.5]).astype(complex)
        assert abs(nx.largest_singular_value(m) - 3.0) < 1e-8
        assert abs(nx.smallest_singular_value(m) - 0.5) < 1e-6


class TestRefineEigenpair:
    def test_improves_perturbed_pair(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
        pairs = nx.eig_complex(m)
        lam, v = pairs[0]
        lam_p = lam + 1e-6
        v_p = v + 1e-6 * rng.standard_normal(30)
        lam_r, v_r = nx.refine_eigenpair(m, lam_p, v_p)
        resid = np.linalg.norm(m @ v_r - lam_r * v_r)
        assert resid <= 1e-12 * np.linalg.norm(m)


class TestFindRootIncreasing:
    def test_threshold_equation_root(self):
        f = lambda lam: 6.0 * lam + math.sqrt(2.0) * lam**1.5 - 1.0
        root = nx.find_root_increasing(f, 0.0, 1.0)
        assert abs(f(root)) <= 1e-12
        assert abs(root - 0.1525) < 5e-4

    def test_requires_bracketing(self):
        with pytest.raises(ValueError):
            nx.find_root_increasing(lambda x: x + 10.0, 0.0, 1.0)


class TestExtrapolationAndFits:
    def test_aitken_on_geometric_sequence(self):
        limit, c, q = 0.5, 0.1, 0.3
        vals = [limit - c * q**k for k in range(3)]
        assert abs(nx.aitken_extrapolate(vals) - limit) < 1e-12

    def test_loglog_slope_pure_power(self):
        xs = [2.0, 4.0, 8.0, 16.0]
        ys = [7.0 * x**-1.5 for x in xs]
        assert abs(nx.fit_loglog_slope(xs, ys) + 1.5) < 1e-12


class TestParallelMap:
    def test_preserves_order_and_respects_cap(self, monkeypatch):
        monkeypatch.setenv("SPECTRA_CERT_THREADS", "2")
        out = nx.parallel_map(lambda x: x * x, range(10))
        assert out == [x * x for x in range(10)]
        monkeypatch.setenv("SPECTRA_CERT_THREADS", "1")
        out = nx.parallel_map(lambda x: -x, range(5))
        assert out == [0, -1, -2, -3, -4]

    def test_bad_env_value(self, monkeypatch):
        monkeypatch.setenv("SPECTRA_CERT_THREADS", "many")
        with pytest.raises(ValueError):
            nx.thread_cap()
