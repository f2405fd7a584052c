"""Sketched generalized scores: isotropy, distortion envelope, kernel probes,
and the instrumentation contract."""

import numpy as np
import pytest

import rowsketch.fastlev as fastlev
from rowsketch import (GaussianSketch, SketchConfig, SparseRowMatrix,
                       approx_generalized_leverage, build_projector_sketch,
                       exact_leverage_scores, factor_gram,
                       generalized_leverage_scores, kernel_probe, scale_rows)
from rowsketch.instrument import factorization_count, solve_count
from rowsketch.fastlev import sketch_rows

from conftest import gaussian_matrix


class TestProjectorSketch:
    def test_zero_gaussian_forces_zero_projector(self, monkeypatch):
        B = gaussian_matrix(10, 4, 1)
        k = sketch_rows(0.5, SketchConfig())
        monkeypatch.setattr(fastlev, "gaussian_sketch",
                            lambda kk, n, cfg, salt=(): GaussianSketch(kk, np.zeros((kk, n))))
        M = build_projector_sketch(B, 0.5, SketchConfig(seed=0))
        assert M.shape == (k, 4)
        np.testing.assert_array_equal(M, np.zeros((k, 4)))

    def test_isotropy_expectation_on_orthonormal_rows(self):
        # E ||M a_i||^2 == tau^B_i; average 1000 seeds within 5%
        d = 6
        B = SparseRowMatrix.from_dense(np.eye(d))
        A = gaussian_matrix(5, d, 3)
        exact = generalized_leverage_scores(A, B).values
        theta = 1.0
        acc = np.zeros(5)
        trials = 1000
        for seed in range(trials):
            M = build_projector_sketch(B, theta, SketchConfig(seed=seed))
            sk = A.dot_dense(M.T)
            acc += np.einsum("ij,ij->i", sk, sk)
        np.testing.assert_allclose(acc / trials, exact, rtol=0.05)

    def test_solves_match_dense_pseudoinverse_application(self):
        B = gaussian_matrix(20, 5, 7)
        theta = 0.5
        cfg = SketchConfig(seed=9)
        M = build_projector_sketch(B, theta, cfg)
        k = sketch_rows(theta, cfg)
        G = fastlev.gaussian_sketch(k, 20, cfg).entries
        dense_b = B.to_dense()
        oracle = (G @ dense_b @ np.linalg.pinv(dense_b.T @ dense_b)) / np.sqrt(k)
        np.testing.assert_allclose(M, oracle, atol=1e-8)

    def test_row_count_formula(self):
        cfg = SketchConfig(jl_rows_constant=64.0)
        assert sketch_rows(0.5, cfg) == 128
        assert sketch_rows(1.0, cfg) == 64
        with pytest.raises(ValueError):
            sketch_rows(0.0, cfg)


class TestKernelProbe:
    def test_full_column_rank_probes_are_null(self):
        B = gaussian_matrix(30, 5, 2)
        kp = kernel_probe(B, 3, SketchConfig(seed=1))
        kp.validate()
        sigma_max = factor_gram(B).singular_values[0]
        for t in range(3):
            z = kp.probes[t]
            bz = np.linalg.norm(B.to_dense() @ z)
            assert bz <= 1e-8 * max(np.linalg.norm(z), 1e-300) * sigma_max + 1e-12

    def test_one_dimensional_kernel_direction(self):
        B = SparseRowMatrix.from_dense(np.array([[0.0, 1.0]]))
        kp = kernel_probe(B, 3, SketchConfig(seed=5))
        for t in range(3):
            z = kp.probes[t]
            # kernel of B is span(e_1): second coordinate vanishes
            assert abs(z[1]) <= 1e-12 * max(abs(z[0]), 1)
            assert abs(z[0]) > 1e-6

    def test_rank_deficient_rows_flagged_with_high_rate(self, rng):
        # rows constructed inside ker(B) flagged by >= 1 of 3 probes, >=99%
        d = 8
        basis = np.linalg.qr(rng.standard_normal((d, d)))[0]
        B = SparseRowMatrix.from_dense(rng.standard_normal((20, d - 2)) @ basis[:, :d - 2].T)
        kernel_rows = basis[:, d - 2:].T  # two rows spanning ker(B)
        A = SparseRowMatrix.from_dense(kernel_rows)
        flagged = 0
        trials = 1000
        for seed in range(trials):
            g = approx_generalized_leverage(A, B, 0.5, SketchConfig(seed=seed))
            flagged += int(g.infinite.all())
        assert flagged / trials >= 0.99

    def test_probe_count_validated(self):
        with pytest.raises(ValueError):
            kernel_probe(gaussian_matrix(4, 2, 0), 0, SketchConfig())


class TestApproxGeneralized:
    def test_identity_reference_bounds(self):
        d = 8
        ident = SparseRowMatrix.from_dense(np.eye(d))
        est = approx_generalized_leverage(ident, ident, 1.0, SketchConfig(seed=3))
        assert not est.has_infinite
        safety = d ** 1.0
        assert np.all(est.values >= 0)
        assert np.all(est.values <= d * safety)  # exact scores are 1

    def test_kernel_detection(self):
        A = SparseRowMatrix.from_dense(np.array([[1.0, 0.0]]))
        B = SparseRowMatrix.from_dense(np.array([[0.0, 1.0]]))
        est = approx_generalized_leverage(A, B, 0.5, SketchConfig(seed=1))
        assert est.infinite[0]

    def test_envelope_against_exact_oracle(self, rng):
        # B a verified 2-approximation, theta = 1/log2(d): estimates within
        # [tau^B (1 - 1e-8), 3 tau^B] in >= 95/100 seeds
        n, d = 500, 8
        A = gaussian_matrix(n, d, 77)
        theta = 1.0 / np.log2(d)
        ok = 0
        for seed in range(100):
            w = np.sqrt(np.random.default_rng(1000 + seed).uniform(0.5, 1.0, size=n))
            B = scale_rows(A, w)
            exact = generalized_leverage_scores(A, B).values
            est = approx_generalized_leverage(A, B, theta, SketchConfig(seed=seed))
            assert not est.has_infinite
            ok += bool(np.all(est.values >= exact * (1 - 1e-8))
                       and np.all(est.values <= 3.0 * exact))
        assert ok >= 95

    def test_distortion_invariant_d_theta_squared(self):
        # returned <= d^theta * safety * tau^B with safety = d^theta
        A = gaussian_matrix(200, 8, 5)
        theta = 0.5
        cap = (8 ** theta) ** 2
        exact = exact_leverage_scores(A).values
        ok = 0
        for seed in range(100):
            est = approx_generalized_leverage(A, A, theta, SketchConfig(seed=seed))
            ok += bool(np.all(est.values <= cap * exact + 1e-12)
                       and np.all(est.values >= exact - 1e-8))
        assert ok >= 95

    def test_instrumentation_counts(self):
        # one factorization plus k + t_probes solves per call
        A = gaussian_matrix(40, 6, 8)
        cfg = SketchConfig(seed=2, kernel_probes=3)
        theta = 0.5
        f0, s0 = factorization_count(), solve_count()
        approx_generalized_leverage(A, A, theta, cfg)
        assert factorization_count() - f0 == 1
        assert solve_count() - s0 == sketch_rows(theta, cfg) + 3

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            approx_generalized_leverage(gaussian_matrix(4, 2, 0),
                                        gaussian_matrix(4, 3, 0), 0.5, SketchConfig())
