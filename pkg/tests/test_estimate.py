"""Unit tests for label-free accuracy estimation: the least-squares fit
to second-order statistics, the pseudo-label estimator, and the pipeline."""

import numpy as np
import pytest

from quorum.core import DimensionError, DomainError, LabelSpace, PredictionMatrix, ow_weights
from quorum.estimate import (
    METHODS,
    ErmConfig,
    FitResult,
    erm_gradient,
    erm_loss,
    fit_accuracies,
    fit_ow_i,
    fit_ow_l,
    pipeline_aggregate,
    run_pipeline,
)
from quorum.secondorder import exact_second_order
from quorum.simulate import CiSimSpec, simulate_ci

X_TRUE = np.array([0.6, 0.7, 0.8, 0.9])


class TestErmLoss:
    def test_zero_at_generating_accuracies(self):
        so = exact_second_order(X_TRUE, 4)
        assert abs(erm_loss(X_TRUE, so)) <= 1e-12

    def test_positive_away_from_truth(self):
        so = exact_second_order(X_TRUE, 4)
        assert erm_loss(np.array([0.7, 0.7, 0.7, 0.7]), so) > 1e-4

    def test_matches_direct_residual_sum(self):
        # independent reimplementation from the definition, as a cross-check
        x_gen = np.array([0.55, 0.8, 0.7])
        k = 3
        so = exact_second_order(x_gen, k)
        x = np.array([0.6, 0.75, 0.66])
        from quorum.secondorder import cross_label_prob, same_label_prob

        direct = 0.0
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                for a in range(k):
                    for b in range(k):
                        pred = (
                            same_label_prob(x[i], x[j], k)
                            if a == b
                            else cross_label_prob(x[i], x[j], k)
                        )
                        direct += (so.probs[i, j, a, b] - pred) ** 2
        assert erm_loss(x, so) == pytest.approx(direct, rel=1e-10)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = int(rng.integers(2, 6))
            k = int(rng.integers(2, 6))
            so = exact_second_order(1.0 / k + (1.0 - 1.0 / k) * rng.random(n), k)
            x = 1.0 / k + 0.01 + (0.98 - 1.0 / k) * rng.random(n)
            grad = erm_gradient(x, so)
            h = 1e-6
            for c in range(n):
                e = np.zeros(n)
                e[c] = h
                fd = (erm_loss(x + e, so) - erm_loss(x - e, so)) / (2 * h)
                assert grad[c] == pytest.approx(fd, rel=1e-5, abs=1e-9)

    def test_dimension_mismatch_rejected(self):
        so = exact_second_order(X_TRUE, 4)
        with pytest.raises(DimensionError):
            erm_loss(np.array([0.5, 0.5]), so)


class TestErmConfig:
    def test_validation(self):
        with pytest.raises(DomainError):
            ErmConfig(starts=0)
        with pytest.raises(DomainError):
            ErmConfig(max_iters=0)
        with pytest.raises(DomainError):
            ErmConfig(eps=0.6)
        with pytest.raises(DomainError):
            ErmConfig(threads=0)


class TestFitAccuracies:
    def test_exact_matrix_recovery(self):
        so = exact_second_order(X_TRUE, 4)
        fit = fit_accuracies(so, ErmConfig(starts=4, seed=0))
        np.testing.assert_allclose(fit.accuracies, X_TRUE, atol=1e-6)
        assert fit.converged
        assert fit.loss <= 1e-10
        assert fit.method == "ow-l"
        assert fit.starts_agreeing >= 2

    def test_threaded_fit_is_identical(self):
        so = exact_second_order(np.array([0.65, 0.8, 0.75]), 3)
        a = fit_accuracies(so, ErmConfig(starts=6, seed=3, threads=1))
        b = fit_accuracies(so, ErmConfig(starts=6, seed=3, threads=3))
        np.testing.assert_array_equal(a.accuracies, b.accuracies)
        assert a.loss == b.loss

    def test_seed_changes_restarts_not_answer(self):
        # needs N >= 3: with two agents a single agreement equation
        # leaves a solution manifold and restarts legitimately differ
        so = exact_second_order(np.array([0.6, 0.75, 0.85]), 2)
        a = fit_accuracies(so, ErmConfig(starts=4, seed=0))
        b = fit_accuracies(so, ErmConfig(starts=4, seed=99))
        np.testing.assert_allclose(a.accuracies, b.accuracies, atol=1e-6)
        np.testing.assert_allclose(a.accuracies, [0.6, 0.75, 0.85], atol=1e-6)

    def test_finite_sample_recovery(self):
        pm = simulate_ci(CiSimSpec(tuple(X_TRUE), 4, 20_000, 12))
        fit = fit_ow_l(pm, ErmConfig(starts=4, seed=0))
        np.testing.assert_allclose(fit.accuracies, X_TRUE, atol=0.05)

    def test_to_dict_round_trips_scalars(self):
        so = exact_second_order(np.array([0.6, 0.85]), 2)
        doc = fit_accuracies(so, ErmConfig(starts=2, seed=0)).to_dict()
        assert set(doc) >= {"accuracies", "weights", "method", "loss", "converged"}
        assert isinstance(doc["accuracies"], list)


class TestFitOwI:
    def test_close_to_truth_on_simulated_data(self):
        pm = simulate_ci(CiSimSpec(tuple(X_TRUE), 4, 20_000, 13))
        fit = fit_ow_i(pm)
        np.testing.assert_allclose(fit.accuracies, X_TRUE, atol=0.05)
        assert fit.method == "ow-i"

    def test_deterministic(self):
        pm = simulate_ci(CiSimSpec((0.6, 0.7, 0.8), 3, 500, 14))
        a = fit_ow_i(pm)
        b = fit_ow_i(pm)
        np.testing.assert_array_equal(a.accuracies, b.accuracies)

    def test_needs_two_agents(self):
        pm = PredictionMatrix(LabelSpace.default(2), np.array([[0], [1]]))
        with pytest.raises(DimensionError):
            fit_ow_i(pm)


class TestRunPipeline:
    def setup_method(self):
        self.pm = simulate_ci(CiSimSpec(tuple(X_TRUE), 4, 3000, 15))

    def test_every_method_produces_valid_labels(self):
        for method in METHODS:
            res = run_pipeline(
                self.pm,
                method,
                erm=ErmConfig(starts=2, seed=0),
                accuracies=X_TRUE if method == "ow-oracle" else None,
                abilities=np.array([1.0, 1.5, 2.0, 2.5]) if method == "eow" else None,
            )
            assert res.labels.shape == (self.pm.m,)
            assert res.labels.min() >= 0 and res.labels.max() < 4
            assert res.method == method

    def test_method_name_normalization(self):
        a = run_pipeline(self.pm, "OW_I")
        b = run_pipeline(self.pm, "ow-i")
        np.testing.assert_array_equal(a.labels, b.labels)
        with pytest.raises(DomainError):
            run_pipeline(self.pm, "magic")

    def test_truth_is_never_consulted(self):
        scrambled = self.pm.with_truth((self.pm.truth + 1) % 4)
        for method in ("mv", "isp", "ow-l", "ow-i"):
            a = run_pipeline(self.pm, method, erm=ErmConfig(starts=2, seed=0))
            b = run_pipeline(scrambled, method, erm=ErmConfig(starts=2, seed=0))
            np.testing.assert_array_equal(a.labels, b.labels)

    def test_fit_attached_only_for_weighted_methods(self):
        assert run_pipeline(self.pm, "mv").fit is None
        assert run_pipeline(self.pm, "isp").fit is None
        assert run_pipeline(self.pm, "ow-i").fit is not None
        res = run_pipeline(self.pm, "ow-oracle", accuracies=X_TRUE)
        assert isinstance(res.fit, FitResult)
        np.testing.assert_allclose(res.fit.weights, ow_weights(X_TRUE, 4), atol=1e-12)

    def test_oracle_and_eow_require_parameters(self):
        with pytest.raises(DomainError):
            run_pipeline(self.pm, "ow-oracle")
        with pytest.raises(DomainError):
            run_pipeline(self.pm, "eow")
        with pytest.raises(DimensionError):
            run_pipeline(self.pm, "ow-oracle", accuracies=np.array([0.9, 0.8]))
        with pytest.raises(DomainError):
            run_pipeline(self.pm, "eow", abilities=np.array([1.0, -1.0, 1.0, 1.0]))

    def test_eow_fit_reports_no_accuracies(self):
        res = run_pipeline(self.pm, "eow", abilities=np.array([1.0, 1.5, 2.0, 2.5]))
        assert np.isnan(res.fit.accuracies).all()
        np.testing.assert_array_equal(res.fit.weights, [1.0, 1.5, 2.0, 2.5])

    def test_pipeline_aggregate_wrapper(self):
        np.testing.assert_array_equal(
            pipeline_aggregate(self.pm, "mv"), run_pipeline(self.pm, "mv").labels
        )

    def test_better_weights_do_not_hurt(self):
        truth = self.pm.truth
        acc = {
            m: float((run_pipeline(self.pm, m, erm=ErmConfig(starts=2, seed=0),
                                   accuracies=X_TRUE if m == "ow-oracle" else None).labels == truth).mean())
            for m in ("mv", "isp", "ow-l", "ow-oracle")
        }
        assert acc["ow-oracle"] >= acc["mv"] - 0.01
        assert acc["isp"] >= acc["mv"] - 0.01
