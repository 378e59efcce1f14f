"""Unit tests for the brute-force oracles: answer-vector enumeration,
exact posteriors, closed-form expectations, and difficulty mixtures."""

import math

import numpy as np
import pytest

from quorum import aggregate as agg
from quorum.core import DimensionError, DomainError, ResourceError, ow_weights, sigma_k
from quorum.oracle import (
    DifficultyMixture,
    answer_vector_probs,
    bayes_posterior,
    enumerate_vectors,
    exact_expected_advantage,
    expected_accuracy,
    expected_advantage_gaps,
    expected_mv_advantage,
    joint_correct_probability,
    mixture_expected_accuracy,
    mixture_expected_advantage,
    mixture_posterior,
    mixture_second_order,
)
from quorum.secondorder import exact_second_order


class TestEnumeration:
    def test_all_vectors_once(self):
        vectors = enumerate_vectors(3, 2)
        assert vectors.shape == (8, 3)
        assert len({tuple(v) for v in vectors}) == 8

    def test_budget_enforced(self):
        with pytest.raises(ResourceError):
            enumerate_vectors(10, 10, budget=1000)

    def test_probabilities_sum_to_one(self):
        x = np.array([0.6, 0.75, 0.9])
        for k in (2, 3, 4):
            vectors = enumerate_vectors(3, k)
            probs = answer_vector_probs(vectors, 0, x, k)
            assert probs.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(probs >= 0)

    def test_vector_probability_matches_hand_product(self):
        # truth 0, K=3: agent hits with x_i, misses spread over 2 labels
        x = np.array([0.6, 0.9])
        probs = answer_vector_probs(np.array([[0, 2]]), 0, x, 3)
        assert probs[0] == pytest.approx(0.6 * (0.1 / 2), abs=1e-15)


class TestBayesPosterior:
    def test_fixture(self):
        post = bayes_posterior(np.array([0, 1, 1]), np.array([0.9, 0.6, 0.6]), 2)
        np.testing.assert_allclose(post, [0.8, 0.2], atol=1e-12)

    def test_sums_to_one(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(2, 6))
            k = int(rng.integers(2, 5))
            x = 1.0 / k + (0.99 - 1.0 / k) * rng.random(n)
            post = bayes_posterior(rng.integers(0, k, size=n), x, k)
            assert post.sum() == pytest.approx(1.0, abs=1e-12)

    def test_contradiction_with_certainty_rejected(self):
        # two infallible agents cannot disagree; the posterior is undefined
        with pytest.raises(DomainError):
            bayes_posterior(np.array([0, 1]), np.array([1.0, 1.0]), 2)


class TestExpectedAdvantage:
    def test_mv_closed_form_matches_enumeration(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            n = int(rng.integers(2, 6))
            k = int(rng.integers(2, 5))
            x = 1.0 / k + (1.0 - 1.0 / k) * rng.random(n)
            enum = exact_expected_advantage("mv", x, k)
            assert enum == pytest.approx(expected_mv_advantage(x, k), abs=1e-12)

    def test_gap_fixtures(self):
        gi, gm = expected_advantage_gaps(np.array([1.0, 1.0, 0.5, 0.5]), 2)
        assert gi == pytest.approx(1 / 3, abs=1e-12)
        assert gm == pytest.approx(1 / 3, abs=1e-12)
        gi, gm = expected_advantage_gaps(np.array([1.0, 1.0]), 2)
        assert gi == pytest.approx(1.0, abs=1e-12)
        assert gm == pytest.approx(1.0, abs=1e-12)

    def test_gaps_match_enumeration(self):
        rng = np.random.default_rng(5)
        for _ in range(15):
            n = int(rng.integers(2, 5))
            k = int(rng.integers(2, 5))
            x = 1.0 / k + (1.0 - 1.0 / k) * rng.random(n)
            gi, gm = expected_advantage_gaps(x, k)
            e = {r: exact_expected_advantage(r, x, k) for r in ("mv", "sp", "isp")}
            assert gi == pytest.approx(e["isp"] - e["mv"], abs=1e-10)
            assert gm == pytest.approx(e["mv"] - e["sp"], abs=1e-10)

    def test_gap_ratio_law(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            n = int(rng.integers(2, 8))
            k = int(rng.integers(2, 15))
            x = 1.0 / k + (1.0 - 1.0 / k) * rng.random(n)
            gi, gm = expected_advantage_gaps(x, k)
            assert gm == pytest.approx((k - 1) * gi, rel=1e-12, abs=1e-15)

    def test_chance_level_population_has_zero_gaps(self):
        gi, gm = expected_advantage_gaps(np.full(4, 0.25), 4)
        assert gi == 0.0
        assert gm == 0.0

    def test_needs_two_agents(self):
        with pytest.raises(DimensionError):
            expected_advantage_gaps(np.array([0.8]), 2)


class TestExpectedAccuracy:
    def test_two_expert_fixture(self):
        x = np.array([1.0, 1.0, 0.5, 0.5])
        assert expected_accuracy("mv", x, 2) == pytest.approx(7 / 8, abs=1e-12)
        assert expected_accuracy("sp", x, 2) == pytest.approx(3 / 4, abs=1e-12)
        assert expected_accuracy("isp", x, 2) == pytest.approx(1.0, abs=1e-12)

    def test_tie_modes_agree_after_truth_averaging(self):
        # lowest-index tie-breaking favors label 0, but averaging over
        # all true labels symmetrizes it away: a 1v1 split between equal
        # agents scores 0.49 + 0.42/2 = 0.7 under either policy
        x = np.array([0.7, 0.7])
        uni = expected_accuracy("mv", x, 2, tie_mode=agg.TIE_UNIFORM)
        low = expected_accuracy("mv", x, 2, tie_mode=agg.TIE_LOWEST)
        assert uni == pytest.approx(0.7, abs=1e-12)
        assert low == pytest.approx(0.7, abs=1e-12)

    def test_weighted_needs_weights(self):
        with pytest.raises(DomainError):
            expected_accuracy("weighted", np.array([0.6, 0.7]), 2)

    def test_weighted_equals_best_agent_when_dominant(self):
        # one strong agent above the dominance threshold of two weak peers
        x = np.array([0.99, 0.55, 0.55])
        thr = agg.dominance_threshold(x, 2, 0)
        assert x[0] > thr
        acc = expected_accuracy("weighted", x, 2, weights=ow_weights(x, 2))
        assert acc == pytest.approx(x[0], abs=1e-12)


class TestDifficultyMixture:
    def test_atoms_validation(self):
        with pytest.raises(DomainError):
            DifficultyMixture.atoms([(1.0, 0.5), (2.0, 0.6)])  # weights sum > 1
        with pytest.raises(DomainError):
            DifficultyMixture.atoms([(-1.0, 1.0)])
        with pytest.raises(DomainError):
            DifficultyMixture.atoms([(1.0, -0.2), (2.0, 1.2)])

    def test_log_uniform_validation(self):
        with pytest.raises(DomainError):
            DifficultyMixture.log_uniform(0.0, 1.0)
        with pytest.raises(DomainError):
            DifficultyMixture.log_uniform(5.0, 1.0)

    def test_nodes_weights_sum_to_one(self):
        for mix in (
            DifficultyMixture.atoms([(0.5, 0.25), (2.0, 0.75)]),
            DifficultyMixture.log_uniform(0.1, 10.0),
        ):
            alphas, weights = mix.nodes()
            assert weights.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(alphas >= 0)

    def test_atom_sampling_matches_weights(self):
        mix = DifficultyMixture.atoms([(1.0, 0.2), (3.0, 0.8)])
        u = np.linspace(0.0005, 0.9995, 2000)
        draws = mix.sample(u)
        assert set(np.unique(draws)) == {1.0, 3.0}
        assert (draws == 1.0).mean() == pytest.approx(0.2, abs=0.01)

    def test_log_uniform_sampling_stays_in_range(self):
        mix = DifficultyMixture.log_uniform(0.5, 8.0)
        draws = mix.sample(np.linspace(0.001, 0.999, 500))
        assert np.all((draws >= 0.5) & (draws <= 8.0))
        assert np.median(draws) == pytest.approx(2.0, rel=0.05)  # geometric mean


class TestMixtureOracles:
    def setup_method(self):
        self.mix = DifficultyMixture.atoms([(0.0, 0.3), (50.0, 0.7)])
        self.beta = np.array([1.0, 1.0])

    def test_joint_correct_fixture(self):
        # hard questions are coin flips, easy ones near-certain:
        # 0.3 * 0.25 + 0.7 * 1 = 0.775 > 0.85^2 = 0.7225
        joint = joint_correct_probability(self.beta, self.mix, 2)
        assert joint == pytest.approx(0.775, abs=1e-12)
        marginal = float(np.dot(self.mix.weights, sigma_k(self.mix.alphas, 2)))
        assert marginal**2 == pytest.approx(0.7225, abs=1e-12)
        assert joint > marginal**2

    def test_single_atom_reduces_to_independent_model(self):
        rng = np.random.default_rng(7)
        beta = np.array([0.5, 1.5, 2.5])
        mix = DifficultyMixture.atoms([(1.3, 1.0)])
        x = sigma_k(1.3 * beta, 3)
        for _ in range(10):
            vec = rng.integers(0, 3, size=3)
            np.testing.assert_allclose(
                mixture_posterior(vec, beta, mix, 3),
                bayes_posterior(vec, x, 3),
                atol=1e-12,
            )

    def test_zero_difficulty_scale_gives_uniform_posterior(self):
        mix = DifficultyMixture.atoms([(0.0, 1.0)])
        post = mixture_posterior(np.array([0, 1, 1]), np.array([1.0, 2.0, 0.5]), mix, 3)
        np.testing.assert_allclose(post, 1 / 3, atol=1e-12)

    def test_mixture_posterior_handles_extreme_abilities(self):
        # log-space evaluation must survive alpha*beta ~ 500
        mix = DifficultyMixture.atoms([(100.0, 0.5), (0.1, 0.5)])
        post = mixture_posterior(np.array([0, 1]), np.array([5.0, 1.0]), mix, 2)
        assert np.isfinite(post).all()
        assert post.sum() == pytest.approx(1.0, abs=1e-12)
        assert post[0] > post[1]

    def test_mixture_second_order_is_valid_and_correlated(self):
        so = mixture_second_order(self.beta, self.mix, 2)
        np.testing.assert_allclose(so.probs.sum(axis=2), 1.0, atol=1e-12)
        # shared difficulty induces positive same-answer correlation
        # relative to the independent product of marginals
        exact = exact_second_order(
            np.array([0.85, 0.85]), 2
        )  # same marginals, no sharing
        assert so.probs[0, 1, 0, 0] > exact.probs[0, 1, 0, 0]

    def test_mixture_advantage_ordering(self):
        mix = DifficultyMixture.atoms([(0.4, 0.5), (2.0, 0.5)])
        beta = np.array([0.5, 1.0, 1.5])
        adv = {r: mixture_expected_advantage(r, beta, mix, 3) for r in ("mv", "sp", "isp")}
        assert adv["isp"] >= adv["mv"] - 1e-10
        assert adv["mv"] >= adv["sp"] - 1e-10

    def test_mixture_accuracy_ability_weighting_is_best(self):
        mix = DifficultyMixture.atoms([(0.4, 0.5), (2.0, 0.5)])
        beta = np.array([0.5, 1.0, 1.5])
        eow = mixture_expected_accuracy("eow", beta, mix, 3)
        for rule in ("mv", "sp", "isp"):
            assert eow >= mixture_expected_accuracy(rule, beta, mix, 3) - 1e-12

    def test_quadrature_matches_dense_discretization(self):
        beta = np.array([1.0, 2.0, 0.5])
        quad = DifficultyMixture.log_uniform(0.1, 10.0)
        edges = np.linspace(math.log(0.1), math.log(10.0), 5001)
        grid = np.exp(0.5 * (edges[:-1] + edges[1:]))
        dense = DifficultyMixture.atoms([(a, 1.0 / grid.size) for a in grid])
        for vec in ([0, 0, 1], [1, 0, 1]):
            pq = mixture_posterior(np.array(vec), beta, quad, 2)
            pd = mixture_posterior(np.array(vec), beta, dense, 2)
            np.testing.assert_allclose(pq, pd, atol=1e-5)
