"""Rank-1 leverage updates, target inversion, the reweighting sweep, and the
weight-perturbation comparison bound."""

import numpy as np
import pytest

from rowsketch import (Reweighting, SparseRowMatrix, compare_leverage_bound,
                       compute_reweighting, cross_leverage,
                       exact_leverage_scores, gamma_for_target, min_norm_witness,
                       rank_one_update, read_weights, scale_rows, write_weights)

from conftest import gaussian_matrix, power_law_matrix


def reweighted_scores(A, weights):
    return exact_leverage_scores(scale_rows(A, weights)).values


class TestRankOneUpdate:
    def test_gamma_to_zero_limit_is_identity(self):
        A = gaussian_matrix(20, 4, 1)
        tau = exact_leverage_scores(A).values
        cross = min_norm_witness(A, 3)
        out = rank_one_update(tau, cross, 3, 1e-12)
        np.testing.assert_allclose(out, tau, atol=1e-10)

    def test_identity_matrix_untouched_by_orthogonal_downweight(self):
        # cross terms vanish, and (1-g)*1/(1-g) == 1: all scores stay 1
        A = SparseRowMatrix.from_dense(np.eye(5))
        tau = exact_leverage_scores(A).values
        cross = min_norm_witness(A, 2)
        out = rank_one_update(tau, cross, 2, 0.5)
        np.testing.assert_allclose(out, np.ones(5), atol=1e-12)

    def test_matches_recompute_from_scratch_oracle(self):
        A = gaussian_matrix(20, 4, 9)
        tau = exact_leverage_scores(A).values
        i, gamma = 7, 0.3
        out = rank_one_update(tau, min_norm_witness(A, i), i, gamma)
        w = np.ones(20)
        w[i] = np.sqrt(1.0 - gamma)
        np.testing.assert_allclose(out, reweighted_scores(A, w), atol=1e-8)

    def test_monotonicity_directions(self):
        A = power_law_matrix(25, 5, 3)
        tau = exact_leverage_scores(A).values
        for i, gamma in ((0, 0.2), (10, 0.7), (24, 0.45)):
            out = rank_one_update(tau, min_norm_witness(A, i), i, gamma)
            assert out[i] <= tau[i] + 1e-10
            mask = np.arange(25) != i
            assert np.all(out[mask] >= tau[mask] - 1e-10)

    def test_parameter_validation(self):
        tau = np.array([0.9, 0.5])
        cross = np.array([0.9, 0.1])
        for gamma in (0.0, 1.0, -0.5):
            with pytest.raises(ValueError):
                rank_one_update(tau, cross, 0, gamma)
        # denominator guard: gamma * tau_i >= 1 (drifted tau slightly above 1)
        with pytest.raises(ValueError):
            rank_one_update(np.array([1.2, 0.5]), np.array([1.2, 0.1]), 0, 0.9)


class TestGammaForTarget:
    def test_no_change_needed(self):
        assert gamma_for_target(0.4, 0.4) == 0.0

    def test_frozen_hand_computed_case(self):
        # tau = 1/2, u = 1/4: g = 2/3, and the update formula returns 1/4
        g = gamma_for_target(0.5, 0.25)
        assert g == pytest.approx(2.0 / 3.0, abs=1e-15)
        assert (1 - g) * 0.5 / (1 - g * 0.5) == pytest.approx(0.25, abs=1e-15)

    def test_composition_hits_target_exactly(self):
        A = gaussian_matrix(30, 5, 21)
        tau = exact_leverage_scores(A).values
        rng = np.random.default_rng(2)
        for _ in range(20):
            i = int(rng.integers(30))
            if tau[i] >= 1 - 1e-9:
                continue
            u_i = float(rng.uniform(0.2, 0.95) * tau[i])
            g = gamma_for_target(float(tau[i]), u_i)
            out = rank_one_update(tau, min_norm_witness(A, i), i, g)
            assert out[i] == pytest.approx(u_i, abs=1e-12)

    def test_leverage_one_rejected(self):
        with pytest.raises(ValueError):
            gamma_for_target(1.0, 0.5)
        with pytest.raises(ValueError):
            gamma_for_target(0.5, 0.0)


class TestComputeReweighting:
    def test_all_ones_target_leaves_weights_alone(self):
        A = gaussian_matrix(50, 5, 4)
        W, cert = compute_reweighting(A, np.ones(50))
        np.testing.assert_array_equal(W.weights, np.ones(50))
        assert cert.converged and cert.reweighted_count == 0
        assert cert.sweeps_used == 1

    def test_identity_matrix_small_target_zeroes_rows(self):
        d = 6
        A = SparseRowMatrix.from_dense(np.eye(d))
        alpha = 0.5
        W, cert = compute_reweighting(A, np.full(d, alpha))
        np.testing.assert_array_equal(W.weights, np.zeros(d))
        assert cert.converged
        assert cert.reweighted_mass == pytest.approx(d * alpha)
        assert cert.reweighted_mass <= d + 1e-6

    def test_certificate_on_random_instances(self):
        for seed, maker in ((0, gaussian_matrix), (1, power_law_matrix)):
            n, d = 100, 4
            A = maker(n, d, seed)
            u = np.full(n, 8.0 * d / n)
            W, cert = compute_reweighting(A, u)
            W.validate()
            assert cert.converged
            achieved = reweighted_scores(A, W.weights)
            assert np.all(achieved <= u + 1e-6)
            assert cert.reweighted_mass <= d + 1e-6

    def test_weights_never_increase_across_sweeps(self):
        A = power_law_matrix(60, 4, 7)
        u = np.full(60, 0.1)
        prev = np.ones(60)
        for cap in range(1, 8):
            W, _ = compute_reweighting(A, u, max_sweeps=cap)
            assert np.all(W.weights <= prev + 1e-15)
            prev = W.weights

    def test_non_convergence_reported_not_hidden(self):
        A = power_law_matrix(80, 4, 11)
        u = np.full(80, 0.05)
        W, cert = compute_reweighting(A, u, max_sweeps=1)
        full_W, full_cert = compute_reweighting(A, u)
        if full_cert.sweeps_used > 1:
            assert not cert.converged
            assert cert.max_violation > cert.tol
        assert full_cert.converged

    def test_targets_validated(self):
        A = gaussian_matrix(5, 2, 0)
        for bad in (np.zeros(5), np.full(5, -1.0), np.ones(4)):
            with pytest.raises(ValueError):
                compute_reweighting(A, bad)


class TestCompareLeverageBound:
    def test_equal_weightings_give_equality(self):
        A = gaussian_matrix(20, 4, 5)
        W = Reweighting(np.full(20, 0.8))
        lhs, rhs = compare_leverage_bound(A, W, W, 3)
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_tiny_perturbation_stays_tight(self, rng):
        A = gaussian_matrix(20, 4, 6)
        w = rng.uniform(0.5, 1.0, size=20)
        wbar = w.copy()
        wbar[7] = min(wbar[7] + 1e-6, 1.0)
        lhs, rhs = compare_leverage_bound(A, Reweighting(w), Reweighting(wbar), 3)
        assert lhs <= rhs + 1e-8
        assert rhs / lhs - 1 <= 1e-3

    def test_never_violated_on_random_sweep(self):
        rng = np.random.default_rng(17)
        for trial in range(200):
            n, d = 15, 3
            A = gaussian_matrix(n, d, trial)
            w = rng.uniform(0.05, 1.0, size=n)
            wbar = rng.uniform(0.05, 1.0, size=n)
            if trial % 3 == 0:  # some zero weights away from the probed row
                w[rng.integers(1, n)] = 0.0
            i = 0
            lhs, rhs = compare_leverage_bound(A, Reweighting(w), Reweighting(wbar), i)
            assert lhs <= rhs + 1e-8

    def test_zero_weight_at_row_rejected(self):
        A = gaussian_matrix(5, 2, 0)
        w = np.ones(5)
        wz = w.copy()
        wz[1] = 0.0
        with pytest.raises(ValueError):
            compare_leverage_bound(A, Reweighting(wz), Reweighting(w), 1)


def test_weight_tsv_round_trip(tmp_path, rng):
    W = Reweighting(rng.uniform(0.0, 1.0, size=30))
    p = tmp_path / "w.tsv"
    write_weights(p, W)
    back = read_weights(p)
    np.testing.assert_array_equal(back.weights, W.weights)


def test_reweighting_validation():
    with pytest.raises(ValueError):
        Reweighting(np.array([1.5])).validate()
    with pytest.raises(ValueError):
        Reweighting(np.array([-0.1])).validate()
