"""Second-order conditional answer probabilities.

For agents i, j and labels s_k, s_l the second-order matrix holds
P(A_i = s_k | A_j = s_l): how agent i is expected to answer given what
agent j answered. Under the conditionally-independent model with uniform
(shuffled) truth these probabilities have a closed form in the agent
accuracies; from data they are estimated by conditional frequencies.

Conventions used throughout:
  * probs[i, j, k, l] = P(A_i = s_k | A_j = s_l)
  * each column (i, j, :, l) sums to 1
  * diagonal blocks (i == j) are identity
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .core import (
    DimensionError,
    DomainError,
    FormatError,
    PredictionMatrix,
    _as_readonly,
)

__all__ = [
    "SecondOrderMatrix",
    "same_label_prob",
    "cross_label_prob",
    "exact_second_order",
    "empirical_second_order",
    "loo_second_order",
    "pair_counts",
    "write_second_order_csv",
    "read_second_order_csv",
]

_COLSUM_TOL = 1e-9


@dataclass(frozen=True)
class SecondOrderMatrix:
    """Conditional answer probabilities for every ordered agent pair.

    ``probs[i, j, k, l]`` is P(A_i = s_k | A_j = s_l). ``imputed`` flags
    cells whose conditioning event was never observed (filled with 1/K).
    ``source`` records how the matrix was built.
    """

    probs: np.ndarray
    imputed: np.ndarray
    source: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 4 or probs.shape[0] != probs.shape[1] or probs.shape[2] != probs.shape[3]:
            raise DimensionError(f"probs must have shape (N, N, K, K), got {probs.shape}")
        n, _, k, _ = probs.shape
        if n < 1 or k < 2:
            raise DimensionError(f"need N >= 1 agents and K >= 2 labels, got N={n}, K={k}")
        if np.any(probs < -_COLSUM_TOL) or np.any(probs > 1.0 + _COLSUM_TOL):
            raise DomainError("probabilities must lie in [0, 1]")
        colsums = probs.sum(axis=2)
        if not np.allclose(colsums, 1.0, atol=_COLSUM_TOL):
            worst = float(np.abs(colsums - 1.0).max())
            raise DomainError(f"each conditional column must sum to 1 (worst deviation {worst:.3e})")
        imputed = np.asarray(self.imputed, dtype=bool)
        if imputed.shape != probs.shape:
            raise DimensionError(f"imputed flags must match probs shape, got {imputed.shape}")
        object.__setattr__(self, "probs", _as_readonly(probs))
        object.__setattr__(self, "imputed", _as_readonly(imputed))

    @property
    def n(self) -> int:
        return int(self.probs.shape[0])

    @property
    def k(self) -> int:
        return int(self.probs.shape[2])


def same_label_prob(x_i, x_j, k: int):
    """P(A_i = s | A_j = s): both right, or both wrong on the same label."""

    return x_i * x_j + (1.0 - x_i) * (1.0 - x_j) / (k - 1)


def cross_label_prob(x_i, x_j, k: int):
    """P(A_i = s | A_j = s') for s != s'."""

    return (x_i * (1.0 - x_j) + (1.0 - x_i) * x_j) / (k - 1) + (k - 2) * (1.0 - x_i) * (
        1.0 - x_j
    ) / (k - 1) ** 2


def _assemble(same: np.ndarray, cross: np.ndarray, k: int) -> np.ndarray:
    """Build (N, N, K, K) probs from per-pair same/cross values."""

    n = same.shape[0]
    eye = np.eye(k, dtype=bool)
    probs = np.where(eye, same[:, :, None, None], cross[:, :, None, None])
    idx = np.arange(n)
    probs[idx, idx] = np.eye(k)
    return probs


def exact_second_order(accuracies, k: int) -> SecondOrderMatrix:
    """Model-implied second-order matrix for given per-agent accuracies.

    Accuracies may lie anywhere in [0, 1] (the closed endpoints describe
    always-wrong and infallible agents); no clamping is applied here.
    """

    x = np.asarray(accuracies, dtype=float)
    if x.ndim != 1 or x.shape[0] < 1:
        raise DimensionError(f"accuracies must be a non-empty vector, got shape {x.shape}")
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise DomainError(f"label count must be an integer >= 2, got {k!r}")
    if np.any(~np.isfinite(x)) or np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("accuracies must lie in [0, 1]")
    same = same_label_prob(x[:, None], x[None, :], k)
    cross = cross_label_prob(x[:, None], x[None, :], k)
    probs = _assemble(same, cross, k)
    return SecondOrderMatrix(
        probs,
        np.zeros(probs.shape, dtype=bool),
        source="exact",
        meta={"accuracies": tuple(float(v) for v in x), "k": int(k)},
    )


def mixture_weighted_second_order(sames, crosses, weights, k: int, meta=None) -> SecondOrderMatrix:
    """Average per-pair same/cross values over mixture components.

    ``sames``/``crosses`` have shape (T, N, N) for T components. Valid
    because the conditioning answer's marginal is uniform for every
    component, so conditional probabilities mix linearly.
    """

    w = np.asarray(weights, dtype=float)
    same = np.tensordot(w, np.asarray(sames, dtype=float), axes=1)
    cross = np.tensordot(w, np.asarray(crosses, dtype=float), axes=1)
    probs = _assemble(same, cross, k)
    return SecondOrderMatrix(
        probs, np.zeros(probs.shape, dtype=bool), source="exact_mixture", meta=dict(meta or {})
    )


def pair_counts(pm: PredictionMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Joint answer counts for every ordered agent pair.

    Returns ``(counts, denom)`` where ``counts[i, j, k, l]`` is the number
    of questions with A_i = s_k and A_j = s_l, and ``denom[j, l]`` the
    number with A_j = s_l.
    """

    n, k = pm.n, pm.k
    counts = np.empty((n, n, k, k), dtype=np.int64)
    for j in range(n):
        col_j = pm.answers[:, j]
        for i in range(n):
            pair = pm.answers[:, i] * k + col_j
            counts[i, j] = np.bincount(pair, minlength=k * k).reshape(k, k)
    denom = np.empty((n, k), dtype=np.int64)
    for j in range(n):
        denom[j] = np.bincount(pm.answers[:, j], minlength=k)
    return counts, denom


def _from_counts(counts: np.ndarray, denom: np.ndarray, k: int, smoothing: float, source: str, meta: dict) -> SecondOrderMatrix:
    n = counts.shape[0]
    if smoothing < 0.0:
        raise DomainError(f"smoothing must be nonnegative, got {smoothing}")
    den = denom.astype(float) + k * smoothing
    num = counts.astype(float) + smoothing
    unseen = denom == 0  # (n, k): conditioning label never observed for agent j
    with np.errstate(invalid="ignore", divide="ignore"):
        probs = np.where(den[None, :, None, :] == 0.0, 1.0 / k, num / den[None, :, None, :])
    imputed = np.broadcast_to(unseen[None, :, None, :], probs.shape).copy()
    # diagonal blocks are identity by convention, never estimated
    idx = np.arange(n)
    probs[idx, idx] = np.eye(k)
    imputed[idx, idx] = False
    return SecondOrderMatrix(probs, imputed, source=source, meta=meta)


def empirical_second_order(pm: PredictionMatrix, smoothing: float = 0.0) -> SecondOrderMatrix:
    """Estimate the second-order matrix by conditional frequencies.

    Columns whose conditioning event never occurs are filled with the
    uninformative value 1/K and flagged in ``imputed``. ``smoothing`` adds
    the given pseudo-count to every joint cell (off by default).
    """

    counts, denom = pair_counts(pm)
    return _from_counts(
        counts, denom, pm.k, smoothing, source="empirical", meta={"m": pm.m, "smoothing": smoothing}
    )


def loo_second_order(
    pm: PredictionMatrix,
    exclude_question: int,
    smoothing: float = 0.0,
    _counts: tuple[np.ndarray, np.ndarray] | None = None,
) -> SecondOrderMatrix:
    """Empirical second-order matrix with one question left out.

    Precomputed ``pair_counts(pm)`` may be passed via ``_counts`` when
    calling this in a loop over questions.
    """

    q = exclude_question
    if not 0 <= q < pm.m:
        raise DimensionError(f"exclude_question {q} out of range [0, {pm.m})")
    if pm.m < 2:
        raise DimensionError("leave-one-out needs at least 2 questions")
    counts, denom = _counts if _counts is not None else pair_counts(pm)
    counts = counts.copy()
    denom = denom.copy()
    row = pm.answers[q]
    n = pm.n
    counts[np.repeat(np.arange(n), n), np.tile(np.arange(n), n), np.repeat(row, n), np.tile(row, n)] -= 1
    denom[np.arange(n), row] -= 1
    return _from_counts(
        counts,
        denom,
        pm.k,
        smoothing,
        source="leave_one_out",
        meta={"m": pm.m, "excluded": int(q), "smoothing": smoothing},
    )


# ---------------------------------------------------------------------------
# Serialization: long CSV with columns i,j,k,l,prob,imputed
# ---------------------------------------------------------------------------


def write_second_order_csv(so: SecondOrderMatrix, path: str) -> None:
    """Write the matrix as long-form CSV; floats survive round-trip exactly."""

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "k", "l", "prob", "imputed"])
        n, k = so.n, so.k
        for i in range(n):
            for j in range(n):
                for a in range(k):
                    for b in range(k):
                        writer.writerow(
                            [i, j, a, b, repr(float(so.probs[i, j, a, b])), int(so.imputed[i, j, a, b])]
                        )


def read_second_order_csv(path: str) -> SecondOrderMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if header != ["i", "j", "k", "l", "prob", "imputed"]:
            raise FormatError(f"{path}: unexpected header {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6:
                raise FormatError(f"{path}:{lineno}: expected 6 fields, got {len(row)}")
            try:
                rows.append(
                    (int(row[0]), int(row[1]), int(row[2]), int(row[3]), float(row[4]), int(row[5]))
                )
            except ValueError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise FormatError(f"{path}: no data rows")
    n = max(r[0] for r in rows) + 1
    k = max(r[2] for r in rows) + 1
    if len(rows) != n * n * k * k:
        raise FormatError(f"{path}: expected {n * n * k * k} rows for N={n}, K={k}, got {len(rows)}")
    probs = np.full((n, n, k, k), np.nan)
    imputed = np.zeros((n, n, k, k), dtype=bool)
    for i, j, a, b, p, f in rows:
        if not (0 <= i < n and 0 <= j < n and 0 <= a < k and 0 <= b < k):
            raise FormatError(f"{path}: index ({i},{j},{a},{b}) out of range")
        probs[i, j, a, b] = p
        imputed[i, j, a, b] = bool(f)
    if np.any(np.isnan(probs)):
        raise FormatError(f"{path}: missing cells")
    return SecondOrderMatrix(probs, imputed, source="csv", meta={"path": str(path)})
