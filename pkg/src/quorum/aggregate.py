"""Aggregation rules for one question's answer vector.

Three families of rules, ordered by the information they use:

  * zero-order: majority vote (MV) over the answers alone;
  * first-order: weighted vote, each agent contributing its log-odds
    weight to the label it chose;
  * second-order: rules that score each candidate label against what the
    agents were *expected* to answer, given their peers' answers. The
    peer-expected score subtracts predictability; its counterfactual
    variant averages the expectation over the answers each peer did NOT
    give, which rewards agreement that peers' behavior cannot explain.

Batch variants (suffix ``_batch``) evaluate all M questions of a
prediction matrix at once and are exact vectorizations of the
per-question functions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionError,
    DomainError,
    PredictionMatrix,
    _as_readonly,
    ow_weights,
    question_rng,
    sigma_k,
)
from .secondorder import SecondOrderMatrix

__all__ = [
    "TIE_LOWEST",
    "TIE_UNIFORM",
    "TiePolicy",
    "AdvantageVector",
    "argmax_set",
    "vote_counts",
    "advantage_mv",
    "aggregate_mv",
    "aggregate_weighted",
    "sp_score",
    "isp_score",
    "advantage_sp",
    "advantage_isp",
    "aggregate_sp",
    "aggregate_isp",
    "dominance_threshold",
    "vote_counts_batch",
    "weighted_scores_batch",
    "sp_advantage_batch",
    "isp_advantage_batch",
    "decide_batch",
]

TIE_LOWEST = "lowest_index"
TIE_UNIFORM = "uniform_random"

_REL_TOL = 1e-9
_ABS_TOL = 1e-12


def argmax_set(scores: np.ndarray) -> np.ndarray:
    """Indices within tolerance of the maximum score."""

    scores = np.asarray(scores, dtype=float)
    top = float(scores.max())
    return np.flatnonzero(scores >= top - (_ABS_TOL + _REL_TOL * abs(top)))


@dataclass(frozen=True)
class TiePolicy:
    """How to resolve tied top scores.

    ``lowest_index`` picks the smallest label index; ``uniform_random``
    picks uniformly among the tied labels, deterministically as a function
    of (seed, question_index).
    """

    mode: str = TIE_UNIFORM
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in (TIE_LOWEST, TIE_UNIFORM):
            raise DomainError(f"unknown tie mode {self.mode!r}")

    def pick(self, scores: np.ndarray, question_index: int = 0) -> int:
        tied = argmax_set(scores)
        if tied.size == 1 or self.mode == TIE_LOWEST:
            return int(tied[0])
        rng = question_rng(self.seed, question_index)
        return int(tied[rng.integers(tied.size)])


@dataclass(frozen=True)
class AdvantageVector:
    """Per-label advantage scores for one question under one rule.

    The chosen label is the argmax. Entries sum to zero and are bounded
    by the number of agents in absolute value.
    """

    values: np.ndarray
    rule: str

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.shape[0] < 2:
            raise DimensionError(f"advantage vector must be 1-d with K >= 2, got shape {vals.shape}")
        object.__setattr__(self, "values", _as_readonly(vals))

    @property
    def k(self) -> int:
        return int(self.values.shape[0])

    def argmax_set(self) -> np.ndarray:
        return argmax_set(self.values)


# ---------------------------------------------------------------------------
# Input checks
# ---------------------------------------------------------------------------


def _check_answers(answers, k: int, min_agents: int = 1) -> np.ndarray:
    arr = np.asarray(answers)
    if arr.ndim != 1 or arr.shape[0] < min_agents:
        raise DimensionError(
            f"answers must be a 1-d vector of at least {min_agents} agents, got shape {arr.shape}"
        )
    if not np.issubdtype(arr.dtype, np.integer):
        raise DomainError(f"answers must be integer label indices, got dtype {arr.dtype}")
    if arr.min() < 0 or arr.max() >= k:
        raise DomainError(f"answer indices must lie in [0, {k})")
    return arr.astype(np.int64)


def _check_matrix(answers, k: int, min_agents: int = 1) -> np.ndarray:
    arr = np.asarray(answers)
    if arr.ndim != 2 or arr.shape[1] < min_agents:
        raise DimensionError(
            f"expected (M, N) answer matrix with N >= {min_agents}, got shape {arr.shape}"
        )
    if not np.issubdtype(arr.dtype, np.integer):
        raise DomainError(f"answers must be integer label indices, got dtype {arr.dtype}")
    if arr.size and (arr.min() < 0 or arr.max() >= k):
        raise DomainError(f"answer indices must lie in [0, {k})")
    return arr.astype(np.int64)


def _as_matrix(pm_or_array, k: int | None = None, min_agents: int = 1) -> tuple[np.ndarray, int]:
    if isinstance(pm_or_array, PredictionMatrix):
        return _check_matrix(pm_or_array.answers, pm_or_array.k, min_agents), pm_or_array.k
    if k is None:
        raise DomainError("label count k is required for raw answer arrays")
    return _check_matrix(pm_or_array, k, min_agents), int(k)


# ---------------------------------------------------------------------------
# Zero- and first-order rules
# ---------------------------------------------------------------------------


def vote_counts(answers, k: int) -> np.ndarray:
    arr = _check_answers(answers, k)
    return np.bincount(arr, minlength=k).astype(float)


def advantage_mv(answers, k: int) -> AdvantageVector:
    """Vote count of each label minus the uniform share N/K."""

    arr = _check_answers(answers, k)
    counts = np.bincount(arr, minlength=k).astype(float)
    return AdvantageVector(counts - arr.shape[0] / k, rule="mv")


def aggregate_mv(answers, k: int, tie: TiePolicy | None = None, question_index: int = 0) -> int:
    tie = tie or TiePolicy()
    return tie.pick(vote_counts(answers, k), question_index)


def aggregate_weighted(
    answers, weights, k: int, tie: TiePolicy | None = None, question_index: int = 0
) -> int:
    """Pick the label with the largest total weight of supporting agents."""

    arr = _check_answers(answers, k)
    w = np.asarray(weights, dtype=float)
    if w.shape != arr.shape:
        raise DimensionError(f"weights shape {w.shape} does not match answers shape {arr.shape}")
    if not np.all(np.isfinite(w)):
        raise DomainError("weights must be finite")
    scores = np.bincount(arr, weights=w, minlength=k)
    tie = tie or TiePolicy()
    return tie.pick(scores, question_index)


# ---------------------------------------------------------------------------
# Second-order rules
# ---------------------------------------------------------------------------


def _peer_expected_tables(so: SecondOrderMatrix) -> np.ndarray:
    """SG[j, s, l] = sum over i != j of P(A_i = s | A_j = s_l)."""

    sg = so.probs.sum(axis=0)  # (N, K, K): sum over i, incl. i == j
    n, k = so.n, so.k
    idx = np.arange(n)
    sg = sg - so.probs[idx, idx]  # remove the identity diagonal block
    return sg


def _counterfactual_tables(so: SecondOrderMatrix) -> np.ndarray:
    """SI[j, s, l] = sum over i != j of mean_{a != s_l} P(A_i = s | A_j = a)."""

    k = so.k
    rowsum = so.probs.sum(axis=3, keepdims=True)  # (N, N, K, 1)
    ti = (rowsum - so.probs) / (k - 1)
    si = ti.sum(axis=0)
    idx = np.arange(so.n)
    si = si - ti[idx, idx]
    return si


def _gather_totals(tables: np.ndarray, answers: np.ndarray) -> np.ndarray:
    """totals[q, s] = sum over j of tables[j, s, answers[q, j]]."""

    m, n = answers.shape
    k = tables.shape[1]
    totals = np.zeros((m, k))
    for j in range(n):
        totals += tables[j][:, answers[:, j]].T
    return totals


def vote_counts_batch(answers: np.ndarray, k: int) -> np.ndarray:
    counts = np.zeros((answers.shape[0], k))
    for s in range(k):
        counts[:, s] = (answers == s).sum(axis=1)
    return counts


def weighted_scores_batch(answers: np.ndarray, weights: np.ndarray, k: int) -> np.ndarray:
    scores = np.zeros((answers.shape[0], k))
    for s in range(k):
        scores[:, s] = ((answers == s) * weights[None, :]).sum(axis=1)
    return scores


def sp_advantage_batch(pm_or_answers, so: SecondOrderMatrix, k: int | None = None) -> np.ndarray:
    """Advantage of the peer-expected rule for every question, shape (M, K)."""

    answers, k = _as_matrix(pm_or_answers, k if k is not None else so.k, min_agents=2)
    _check_so(so, answers.shape[1], k)
    counts = vote_counts_batch(answers, k)
    totals = _gather_totals(_peer_expected_tables(so), answers)
    return counts - totals / (answers.shape[1] - 1)


def isp_advantage_batch(pm_or_answers, so: SecondOrderMatrix, k: int | None = None) -> np.ndarray:
    """Advantage of the counterfactual peer rule for every question."""

    answers, k = _as_matrix(pm_or_answers, k if k is not None else so.k, min_agents=2)
    _check_so(so, answers.shape[1], k)
    counts = vote_counts_batch(answers, k)
    totals = _gather_totals(_counterfactual_tables(so), answers)
    return counts - totals / (answers.shape[1] - 1)


def _check_so(so: SecondOrderMatrix, n: int, k: int) -> None:
    if so.n != n or so.k != k:
        raise DimensionError(
            f"second-order matrix is for N={so.n}, K={so.k}; answers have N={n}, K={k}"
        )


def sp_score(answers, so: SecondOrderMatrix, target_agent: int, target_label: int) -> float:
    """Peers' average expected probability that the target agent answers the target label.

    S(s, i) = (1/(N-1)) * sum over j != i of P(A_i = s | A_j = a_j).
    """

    arr = _check_answers(answers, so.k, min_agents=2)
    _check_so(so, arr.shape[0], so.k)
    i, s = _check_target(arr, so.k, target_agent, target_label)
    peers = [j for j in range(arr.shape[0]) if j != i]
    vals = [so.probs[i, j, s, arr[j]] for j in peers]
    return float(np.mean(vals))


def isp_score(answers, so: SecondOrderMatrix, target_agent: int, target_label: int) -> float:
    """Like ``sp_score`` but averaging over the answers each peer did not give.

    S(s, i) = (1/(N-1)) * sum over j != i of
              (1/(K-1)) * sum over a != a_j of P(A_i = s | A_j = a).
    """

    arr = _check_answers(answers, so.k, min_agents=2)
    _check_so(so, arr.shape[0], so.k)
    i, s = _check_target(arr, so.k, target_agent, target_label)
    k = so.k
    vals = []
    for j in range(arr.shape[0]):
        if j == i:
            continue
        others = [a for a in range(k) if a != arr[j]]
        vals.append(np.mean([so.probs[i, j, s, a] for a in others]))
    return float(np.mean(vals))


def _check_target(arr: np.ndarray, k: int, target_agent: int, target_label: int) -> tuple[int, int]:
    if not 0 <= target_agent < arr.shape[0]:
        raise DimensionError(f"target agent {target_agent} out of range [0, {arr.shape[0]})")
    if not 0 <= target_label < k:
        raise DomainError(f"target label {target_label} out of range [0, {k})")
    return int(target_agent), int(target_label)


def advantage_sp(answers, so: SecondOrderMatrix) -> AdvantageVector:
    arr = _check_answers(answers, so.k, min_agents=2)
    return AdvantageVector(sp_advantage_batch(arr[None, :], so)[0], rule="sp")


def advantage_isp(answers, so: SecondOrderMatrix) -> AdvantageVector:
    arr = _check_answers(answers, so.k, min_agents=2)
    return AdvantageVector(isp_advantage_batch(arr[None, :], so)[0], rule="isp")


def aggregate_sp(
    answers, so: SecondOrderMatrix, tie: TiePolicy | None = None, question_index: int = 0
) -> tuple[int, AdvantageVector]:
    adv = advantage_sp(answers, so)
    tie = tie or TiePolicy()
    return tie.pick(adv.values, question_index), adv


def aggregate_isp(
    answers, so: SecondOrderMatrix, tie: TiePolicy | None = None, question_index: int = 0
) -> tuple[int, AdvantageVector]:
    adv = advantage_isp(answers, so)
    tie = tie or TiePolicy()
    return tie.pick(adv.values, question_index), adv


def decide_batch(scores: np.ndarray, tie: TiePolicy | None = None) -> np.ndarray:
    """Argmax of each row, resolving ties per the policy. Shape (M,)."""

    tie = tie or TiePolicy()
    scores = np.asarray(scores, dtype=float)
    top = scores.max(axis=1, keepdims=True)
    tied = scores >= top - (_ABS_TOL + _REL_TOL * np.abs(top))
    labels = np.argmax(tied, axis=1).astype(np.int64)  # lowest tied index
    if tie.mode == TIE_UNIFORM:
        multi = np.flatnonzero(tied.sum(axis=1) > 1)
        for q in multi:
            labels[q] = tie.pick(scores[q], int(q))
    return labels


# ---------------------------------------------------------------------------
# Dominance threshold
# ---------------------------------------------------------------------------


def dominance_threshold(accuracies, k: int, target_agent: int, eps: float = 1e-6) -> float:
    """Accuracy above which one agent should simply be trusted outright.

    Equals sigma_k of the total log-odds weight of the other agents: if
    the target agent's accuracy exceeds this value, its own answer is the
    optimal aggregate no matter what the others say; below it, weighted
    voting strictly improves on the agent alone.
    """

    x = np.asarray(accuracies, dtype=float)
    if x.ndim != 1 or x.shape[0] < 2:
        raise DimensionError(f"need at least 2 agents, got shape {x.shape}")
    if not 0 <= target_agent < x.shape[0]:
        raise DimensionError(f"target agent {target_agent} out of range [0, {x.shape[0]})")
    others = np.delete(x, target_agent)
    return float(sigma_k(float(ow_weights(others, k, eps).sum()), k))
