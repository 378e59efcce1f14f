"""Unit tests for core types: label spaces, prediction matrices, the
generalized sigmoid pair, deterministic randomness, and label shuffling."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quorum.core import (
    AgentProfile,
    DimensionError,
    DomainError,
    LabelSpace,
    PredictionMatrix,
    ShuffleMap,
    apply_shuffle_map,
    clamp_accuracies,
    derive_seed,
    ow_weights,
    question_rng,
    random_shuffle_map,
    shuffle_apply,
    shuffle_invert,
    sigma_k,
    sigma_k_inverse,
    uniform_block,
)


class TestSigmoidPair:
    def test_known_values(self):
        assert sigma_k(0.0, 2) == pytest.approx(0.5, abs=1e-15)
        assert sigma_k(0.0, 4) == pytest.approx(0.25, abs=1e-15)
        assert sigma_k(math.log(4), 2) == pytest.approx(0.8, abs=1e-12)
        assert sigma_k_inverse(0.8, 2) == pytest.approx(math.log(4), abs=1e-12)
        assert sigma_k_inverse(0.9, 4) == pytest.approx(math.log(27), abs=1e-12)

    def test_chance_level_maps_to_exact_zero(self):
        # 1/K is the fixed point of the pair; the inverse must return 0.0
        # exactly, not a rounding residue.
        for k in (2, 3, 4, 5, 7, 10):
            assert sigma_k_inverse(1.0 / k, k) == 0.0

    def test_monotone_and_bounded(self):
        # strictly increasing where float64 can resolve the steps,
        # nondecreasing and within [0, 1] out to the saturated tails
        for k in (2, 3, 6):
            p = sigma_k(np.linspace(-30, 30, 301), k)
            assert np.all(np.diff(p) > 0)
            assert np.all((p > 0) & (p < 1))
            tails = sigma_k(np.linspace(-40, 40, 401), k)
            assert np.all(np.diff(tails) >= 0)
            assert np.all((tails >= 0) & (tails <= 1))

    def test_extreme_arguments_do_not_overflow(self):
        assert sigma_k(700.0, 2) == pytest.approx(1.0, abs=1e-12)
        assert sigma_k(-700.0, 2) == pytest.approx(0.0, abs=1e-12)

    @given(
        st.floats(min_value=-16, max_value=16),
        st.integers(min_value=2, max_value=12),
    )
    def test_round_trip_from_log_odds(self, x, k):
        back = sigma_k_inverse(sigma_k(x, k), k)
        assert back == pytest.approx(x, rel=1e-9, abs=1e-9)

    @given(
        st.floats(min_value=1e-6, max_value=1 - 1e-6),
        st.integers(min_value=2, max_value=12),
    )
    def test_round_trip_from_probability(self, p, k):
        back = sigma_k(sigma_k_inverse(p, k), k)
        assert back == pytest.approx(p, abs=1e-12)

    def test_array_shapes_preserved(self):
        x = np.array([[0.0, 1.0], [-1.0, 2.0]])
        assert sigma_k(x, 3).shape == (2, 2)
        assert isinstance(sigma_k(0.5, 3), float)
        assert isinstance(sigma_k_inverse(0.5, 3), float)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            sigma_k(np.inf, 2)
        with pytest.raises(DomainError):
            sigma_k(np.nan, 2)
        with pytest.raises(DomainError):
            sigma_k(0.0, 1)
        with pytest.raises(DomainError):
            sigma_k_inverse(0.0, 2)
        with pytest.raises(DomainError):
            sigma_k_inverse(1.0, 2)
        with pytest.raises(DomainError):
            sigma_k_inverse(0.5, 2.5)


class TestClampAndWeights:
    def test_clamp_bounds(self):
        acc = clamp_accuracies([0.0, 0.3, 0.999999999, 1.0], 4, eps=1e-6)
        assert acc[0] == pytest.approx(0.25 + 1e-6)
        assert acc[1] == 0.3
        assert acc[-1] == pytest.approx(1 - 1e-6)

    def test_clamp_eps_validation(self):
        with pytest.raises(DomainError):
            clamp_accuracies([0.5], 2, eps=0.0)
        with pytest.raises(DomainError):
            clamp_accuracies([0.5], 2, eps=0.6)
        with pytest.raises(DomainError):
            clamp_accuracies([np.nan], 2)

    def test_floored_agents_get_exact_zero_weight(self):
        w = ow_weights(np.array([0.25, 0.1, 0.9]), 4)
        assert w[0] == 0.0
        assert w[1] == 0.0
        assert w[2] > 0.0

    def test_weights_increase_with_accuracy(self):
        # strictly increasing above chance; floored to 0 at or below it
        acc = np.linspace(0.51, 0.99, 20)
        w = ow_weights(acc, 2)
        assert np.all(np.diff(w) > 0)
        assert np.all(ow_weights(np.array([0.1, 0.3, 0.5]), 2) == 0.0)

    def test_weight_matches_inverse_sigmoid_of_clamped_accuracy(self):
        acc = np.array([0.17, 0.5, 0.92])
        w = ow_weights(acc, 3, eps=1e-6)
        clamped = clamp_accuracies(acc, 3, eps=1e-6)
        expect = sigma_k_inverse(clamped, 3)
        expect[0] = 0.0  # floored agent
        np.testing.assert_allclose(w, expect, atol=1e-15)


class TestLabelSpace:
    def test_default_labels(self):
        assert LabelSpace.default(3).labels == ("A", "B", "C")
        space = LabelSpace.default(28)
        assert space.labels[:2] == ("A", "B")
        assert space.labels[26] == "A1"
        assert space.k == 28

    def test_index_lookup(self):
        space = LabelSpace(("yes", "no"))
        assert space.index("no") == 1
        with pytest.raises(DomainError):
            space.index("maybe")

    def test_validation(self):
        with pytest.raises(DomainError):
            LabelSpace(("only",))
        with pytest.raises(DomainError):
            LabelSpace(("A", "A"))
        with pytest.raises(DomainError):
            LabelSpace(("A", ""))
        with pytest.raises(DomainError):
            LabelSpace.default(1)


class TestPredictionMatrix:
    def test_basic_properties(self):
        pm = PredictionMatrix(LabelSpace.default(3), np.array([[0, 1], [2, 2]]))
        assert (pm.m, pm.n, pm.k) == (2, 2, 3)
        assert pm.truth is None

    def test_arrays_are_read_only(self):
        pm = PredictionMatrix(
            LabelSpace.default(2), np.array([[0, 1]]), np.array([1])
        )
        with pytest.raises(ValueError):
            pm.answers[0, 0] = 1
        with pytest.raises(ValueError):
            pm.truth[0] = 0

    def test_with_truth_and_select_agents(self):
        pm = PredictionMatrix(
            LabelSpace.default(2),
            np.array([[0, 1, 1], [1, 0, 1]]),
            np.array([0, 1]),
        )
        sub = pm.select_agents([2, 0])
        np.testing.assert_array_equal(sub.answers, [[1, 0], [1, 1]])
        np.testing.assert_array_equal(sub.truth, pm.truth)
        assert pm.with_truth(None).truth is None

    def test_validation(self):
        space = LabelSpace.default(2)
        with pytest.raises(DimensionError):
            PredictionMatrix(space, np.array([0, 1]))
        with pytest.raises(DimensionError):
            PredictionMatrix(space, np.zeros((0, 2), dtype=int))
        with pytest.raises(DomainError):
            PredictionMatrix(space, np.array([[0.5, 1.0]]))
        with pytest.raises(DomainError):
            PredictionMatrix(space, np.array([[0, 2]]))
        with pytest.raises(DimensionError):
            PredictionMatrix(space, np.array([[0, 1]]), np.array([0, 1]))
        with pytest.raises(DomainError):
            PredictionMatrix(space, np.array([[0, 1]]), np.array([2]))


class TestAgentProfile:
    def test_from_accuracies_is_consistent_with_weights(self):
        prof = AgentProfile.from_accuracies([0.6, 0.9], 3)
        np.testing.assert_allclose(
            prof.weight, sigma_k_inverse(prof.accuracy, 3), atol=1e-15
        )
        assert prof.n == 2

    def test_from_abilities(self):
        prof = AgentProfile.from_abilities([1.0, 2.5])
        np.testing.assert_array_equal(prof.weight, [1.0, 2.5])

    def test_validation(self):
        with pytest.raises(DomainError):
            AgentProfile()
        with pytest.raises(DimensionError):
            AgentProfile(accuracy=np.array([0.5, 0.6]), weight=np.array([1.0]))
        with pytest.raises(DomainError):
            AgentProfile(accuracy=np.array([1.0]))
        with pytest.raises(DomainError):
            AgentProfile(ability=np.array([-0.1]))


class TestDeterministicRandomness:
    def test_uniform_block_reproducible(self):
        a = uniform_block(7, 100, 5)
        b = uniform_block(7, 100, 5)
        np.testing.assert_array_equal(a, b)
        assert not np.array_equal(a, uniform_block(8, 100, 5))

    def test_uniform_block_rows_are_prefix_stable(self):
        # extending the question count must not disturb earlier questions
        short = uniform_block(3, 50, 4)
        long = uniform_block(3, 200, 4)
        np.testing.assert_array_equal(long[:50], short)

    def test_uniform_block_validation(self):
        with pytest.raises(DimensionError):
            uniform_block(0, -1, 2)
        with pytest.raises(DimensionError):
            uniform_block(0, 10, 0)

    def test_question_rng_is_order_independent(self):
        forward = [question_rng(5, q).random() for q in range(10)]
        backward = [question_rng(5, q).random() for q in reversed(range(10))]
        np.testing.assert_array_equal(forward, backward[::-1])
        assert question_rng(5, 3).random() != question_rng(6, 3).random()

    def test_derive_seed_stable_and_distinct(self):
        assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
        seen = {derive_seed(0, a, b) for a in range(8) for b in range(8)}
        assert len(seen) == 64


class TestShuffle:
    def test_identity_map(self):
        smap = ShuffleMap.identity(4, 3)
        pm = PredictionMatrix(LabelSpace.default(3), np.array([[0, 1], [2, 0], [1, 1], [2, 2]]))
        np.testing.assert_array_equal(apply_shuffle_map(pm, smap).answers, pm.answers)

    def test_validation(self):
        with pytest.raises(DomainError):
            ShuffleMap(np.array([[0, 0], [1, 0]]))
        with pytest.raises(DomainError):
            ShuffleMap(np.array([[0.0, 1.0]]))
        with pytest.raises(DimensionError):
            ShuffleMap(np.array([0, 1]))

    def test_shape_mismatch_rejected(self):
        pm = PredictionMatrix(LabelSpace.default(2), np.array([[0, 1]]))
        with pytest.raises(DimensionError):
            apply_shuffle_map(pm, ShuffleMap.identity(2, 2))
        with pytest.raises(DimensionError):
            apply_shuffle_map(pm, ShuffleMap.identity(1, 3))

    @given(
        st.integers(min_value=1, max_value=30),
        st.integers(min_value=1, max_value=5),
        st.integers(min_value=2, max_value=6),
        st.integers(min_value=0, max_value=2**31),
    )
    @settings(max_examples=40, deadline=None)
    def test_round_trip(self, m, n, k, seed):
        rng = np.random.default_rng(seed)
        pm = PredictionMatrix(
            LabelSpace.default(k),
            rng.integers(0, k, size=(m, n)),
            rng.integers(0, k, size=m),
        )
        shuffled, smap = shuffle_apply(pm, seed)
        restored = shuffle_invert(shuffled, smap)
        np.testing.assert_array_equal(restored.answers, pm.answers)
        np.testing.assert_array_equal(restored.truth, pm.truth)
        # the vector path must agree with the matrix path
        np.testing.assert_array_equal(shuffle_invert(shuffled.truth, smap), pm.truth)

    def test_shuffle_preserves_agreement_pattern(self):
        # relabeling cannot change which agents agree on a question
        rng = np.random.default_rng(0)
        pm = PredictionMatrix(LabelSpace.default(4), rng.integers(0, 4, size=(40, 5)))
        shuffled, _ = shuffle_apply(pm, 123)
        before = pm.answers[:, :, None] == pm.answers[:, None, :]
        after = shuffled.answers[:, :, None] == shuffled.answers[:, None, :]
        np.testing.assert_array_equal(before, after)

    def test_random_shuffle_map_deterministic(self):
        a = random_shuffle_map(20, 4, 9)
        b = random_shuffle_map(20, 4, 9)
        np.testing.assert_array_equal(a.perms, b.perms)
        inv = a.inverse()
        rows = np.arange(20)[:, None]
        np.testing.assert_array_equal(
            inv.perms[rows, a.perms], np.tile(np.arange(4), (20, 1))
        )

    def test_invert_validates_vector(self):
        _, smap = shuffle_apply(
            PredictionMatrix(LabelSpace.default(2), np.zeros((3, 2), dtype=int)), 0
        )
        with pytest.raises(DimensionError):
            shuffle_invert(np.array([0, 1]), smap)
        with pytest.raises(DomainError):
            shuffle_invert(np.array([0, 1, 2]), smap)
        with pytest.raises(DomainError):
            shuffle_invert(np.array([0.0, 1.0, 0.0]), smap)
