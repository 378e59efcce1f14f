"""Core types and primitives for multi-agent answer aggregation.

A *prediction matrix* holds the categorical answers of N agents on M
questions over a label space of size K. Everything downstream (voting
rules, peer-prediction scores, reliability estimation) consumes these
types. The module also provides the generalized sigmoid pair used to map
agent accuracies to log-odds weights, and the label-shuffle machinery
that removes any positional information from the labels.

All randomness is counter-based (Philox) and keyed by explicit integer
seeds, so every derived quantity is a pure function of (seed, question
index) regardless of iteration order or thread count.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DomainError",
    "DimensionError",
    "FormatError",
    "ResourceError",
    "LabelSpace",
    "PredictionMatrix",
    "ShuffleMap",
    "AgentProfile",
    "sigma_k",
    "sigma_k_inverse",
    "clamp_accuracies",
    "ow_weights",
    "uniform_block",
    "question_rng",
    "derive_seed",
    "random_shuffle_map",
    "shuffle_apply",
    "apply_shuffle_map",
    "shuffle_invert",
]

_MASK64 = (1 << 64) - 1


class DomainError(ValueError):
    """A numeric argument is outside its mathematical domain."""


class DimensionError(ValueError):
    """Array shapes or sizes are inconsistent."""


class FormatError(ValueError):
    """An input file or serialized payload is malformed."""


class ResourceError(RuntimeError):
    """A requested computation exceeds the configured budget."""


# ---------------------------------------------------------------------------
# Label space and answer containers
# ---------------------------------------------------------------------------


def _default_labels(k: int) -> tuple[str, ...]:
    # A..Z, then A1..Z1, A2..Z2, ...
    letters = string.ascii_uppercase
    out = []
    for i in range(k):
        suffix = "" if i < 26 else str(i // 26)
        out.append(letters[i % 26] + suffix)
    return tuple(out)


@dataclass(frozen=True)
class LabelSpace:
    """Ordered set of K >= 2 distinct answer labels.

    The tuple order defines the canonical index of each label; indices are
    stable for the lifetime of the object.
    """

    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 2:
            raise DomainError(f"label space needs at least 2 labels, got {len(labels)}")
        if len(set(labels)) != len(labels):
            raise DomainError("labels must be distinct")
        if any(lab == "" for lab in labels):
            raise DomainError("labels must be non-empty strings")

    @property
    def k(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"unknown label {label!r}") from None

    @classmethod
    def default(cls, k: int) -> "LabelSpace":
        if k < 2:
            raise DomainError(f"label space needs at least 2 labels, got {k}")
        return cls(_default_labels(k))


def _as_readonly(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, copy=True)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class PredictionMatrix:
    """Answers of N agents on M questions, with optional ground truth.

    ``answers[q, i]`` is the canonical label index chosen by agent i on
    question q. ``truth`` (if present) holds the true label index per
    question. Arrays are stored read-only; instances are safe to share
    across threads.
    """

    space: LabelSpace
    answers: np.ndarray
    truth: np.ndarray | None = None

    def __post_init__(self) -> None:
        ans = np.asarray(self.answers)
        if ans.ndim != 2:
            raise DimensionError(f"answers must be 2-d (questions x agents), got shape {ans.shape}")
        if ans.shape[0] < 1 or ans.shape[1] < 1:
            raise DimensionError(f"need at least one question and one agent, got shape {ans.shape}")
        if not np.issubdtype(ans.dtype, np.integer):
            raise DomainError(f"answers must be integer label indices, got dtype {ans.dtype}")
        k = self.space.k
        if ans.min() < 0 or ans.max() >= k:
            raise DomainError(f"answer indices must lie in [0, {k})")
        object.__setattr__(self, "answers", _as_readonly(ans.astype(np.int64)))
        if self.truth is not None:
            tr = np.asarray(self.truth)
            if tr.shape != (ans.shape[0],):
                raise DimensionError(
                    f"truth must have shape ({ans.shape[0]},), got {tr.shape}"
                )
            if not np.issubdtype(tr.dtype, np.integer):
                raise DomainError(f"truth must be integer label indices, got dtype {tr.dtype}")
            if tr.min() < 0 or tr.max() >= k:
                raise DomainError(f"truth indices must lie in [0, {k})")
            object.__setattr__(self, "truth", _as_readonly(tr.astype(np.int64)))

    @property
    def m(self) -> int:
        return int(self.answers.shape[0])

    @property
    def n(self) -> int:
        return int(self.answers.shape[1])

    @property
    def k(self) -> int:
        return self.space.k

    def with_truth(self, truth: np.ndarray | None) -> "PredictionMatrix":
        return PredictionMatrix(self.space, self.answers, truth)

    def select_agents(self, indices: list[int]) -> "PredictionMatrix":
        if len(indices) < 1:
            raise DimensionError("need at least one agent")
        return PredictionMatrix(self.space, self.answers[:, indices], self.truth)


@dataclass(frozen=True)
class AgentProfile:
    """Per-agent parameters: accuracy x_i, ability b_i, and/or weight w_i.

    Any field may be absent. When weights are derived from accuracies they
    equal the inverse sigmoid of the clamped accuracy (see ``ow_weights``).
    """

    accuracy: np.ndarray | None = None
    ability: np.ndarray | None = None
    weight: np.ndarray | None = None

    def __post_init__(self) -> None:
        sizes = set()
        for name in ("accuracy", "ability", "weight"):
            val = getattr(self, name)
            if val is None:
                continue
            arr = np.asarray(val, dtype=float)
            if arr.ndim != 1:
                raise DimensionError(f"{name} must be 1-d, got shape {arr.shape}")
            sizes.add(arr.shape[0])
            object.__setattr__(self, name, _as_readonly(arr))
        if not sizes:
            raise DomainError("profile must set at least one of accuracy/ability/weight")
        if len(sizes) > 1:
            raise DimensionError(f"profile fields disagree on agent count: {sorted(sizes)}")
        if self.accuracy is not None:
            if np.any(self.accuracy <= 0.0) or np.any(self.accuracy >= 1.0):
                raise DomainError("accuracies must lie strictly in (0, 1)")
        if self.ability is not None and np.any(self.ability < 0.0):
            raise DomainError("abilities must be nonnegative")

    @property
    def n(self) -> int:
        for val in (self.accuracy, self.ability, self.weight):
            if val is not None:
                return int(val.shape[0])
        raise AssertionError("unreachable")

    @classmethod
    def from_accuracies(cls, accuracies, k: int, eps: float = 1e-6) -> "AgentProfile":
        acc = clamp_accuracies(accuracies, k, eps)
        return cls(accuracy=acc, weight=ow_weights(accuracies, k, eps))

    @classmethod
    def from_abilities(cls, abilities) -> "AgentProfile":
        beta = np.asarray(abilities, dtype=float)
        return cls(ability=beta, weight=beta)


# ---------------------------------------------------------------------------
# Generalized sigmoid pair
# ---------------------------------------------------------------------------


def sigma_k(x, k: int):
    """Generalized sigmoid: e^x / (K - 1 + e^x).

    Maps a log-odds value to a probability in (0, 1); at x = 0 it returns
    1/K (the chance level for K labels). Accepts scalars or arrays.
    """

    _check_k(k)
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("sigma_k requires finite input")
    out = np.empty_like(arr)
    pos = arr >= 0
    # Two algebraically equal branches, each overflow-free on its half-line.
    out[pos] = 1.0 / (1.0 + (k - 1) * np.exp(-arr[pos]))
    ex = np.exp(arr[~pos])
    out[~pos] = ex / (k - 1 + ex)
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def sigma_k_inverse(p, k: int):
    """Inverse of ``sigma_k``: ln((K - 1) p / (1 - p)) for p in (0, 1).

    The chance level p = 1/K maps to 0.0 exactly.
    """

    _check_k(k)
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise DomainError("sigma_k_inverse requires probabilities strictly in (0, 1)")
    with np.errstate(divide="ignore"):
        out = np.where(arr * k == 1.0, 0.0, np.log((k - 1) * arr / (1.0 - arr)))
    return float(out) if np.isscalar(p) or arr.ndim == 0 else out


def _check_k(k: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise DomainError(f"label count must be an integer >= 2, got {k!r}")


def clamp_accuracies(accuracies, k: int, eps: float = 1e-6) -> np.ndarray:
    """Clamp accuracies into [1/K + eps, 1 - eps] before weighting."""

    _check_k(k)
    if not 0.0 < eps < 0.5:
        raise DomainError(f"eps must lie in (0, 0.5), got {eps}")
    acc = np.asarray(accuracies, dtype=float)
    if not np.all(np.isfinite(acc)):
        raise DomainError("accuracies must be finite")
    lo = 1.0 / k + eps
    hi = 1.0 - eps
    if lo >= hi:
        raise DomainError(f"empty clamp interval for k={k}, eps={eps}")
    return np.clip(acc, lo, hi)


def ow_weights(accuracies, k: int, eps: float = 1e-6) -> np.ndarray:
    """Log-odds weights w_i = sigma_k_inverse(clamped x_i).

    Agents clamped to the lower bound 1/K + eps carry no usable signal and
    get weight exactly 0.0 rather than the tiny positive residue the
    clamped inverse would produce.
    """

    clamped = clamp_accuracies(accuracies, k, eps)
    w = sigma_k_inverse(clamped, k)
    w = np.atleast_1d(np.asarray(w, dtype=float))
    acc = np.atleast_1d(np.asarray(accuracies, dtype=float))
    w[acc <= 1.0 / k + eps] = 0.0
    return w


# ---------------------------------------------------------------------------
# Deterministic randomness
# ---------------------------------------------------------------------------


def uniform_block(seed: int, m: int, width: int) -> np.ndarray:
    """Deterministic (m, width) block of uniforms on [0, 1).

    Row q is the randomness budget of question q: its values occupy fixed
    counter positions of a Philox stream keyed by ``seed``, so they do not
    depend on how many questions follow, on iteration order, or on thread
    count.
    """

    if m < 0 or width < 1:
        raise DimensionError(f"invalid block shape ({m}, {width})")
    gen = np.random.Generator(np.random.Philox(key=int(seed) & _MASK64))
    return gen.random((m, width))


def question_rng(seed: int, question_index: int) -> np.random.Generator:
    """Independent generator for one question, keyed by (seed, index)."""

    key = np.array([int(seed) & _MASK64, int(question_index) & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(master: int, *parts: int) -> int:
    """Stable child seed for a labeled sub-stream of a master seed."""

    ss = np.random.SeedSequence((int(master),) + tuple(int(p) for p in parts))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Label shuffling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShuffleMap:
    """Per-question label permutations.

    ``perms[q]`` maps original label index c to shuffled index
    ``perms[q, c]``. Applying a map and then inverting it is the identity.
    """

    perms: np.ndarray
    seed: int = 0

    def __post_init__(self) -> None:
        perms = np.asarray(self.perms)
        if perms.ndim != 2:
            raise DimensionError(f"perms must be 2-d, got shape {perms.shape}")
        if not np.issubdtype(perms.dtype, np.integer):
            raise DomainError("perms must hold integer indices")
        k = perms.shape[1]
        if not np.all(np.sort(perms, axis=1) == np.arange(k)):
            raise DomainError("each row of perms must be a permutation of 0..K-1")
        object.__setattr__(self, "perms", _as_readonly(perms.astype(np.int64)))

    @property
    def m(self) -> int:
        return int(self.perms.shape[0])

    @property
    def k(self) -> int:
        return int(self.perms.shape[1])

    def inverse(self) -> "ShuffleMap":
        inv = np.argsort(self.perms, axis=1)
        return ShuffleMap(inv, self.seed)

    @classmethod
    def identity(cls, m: int, k: int) -> "ShuffleMap":
        return cls(np.tile(np.arange(k), (m, 1)), seed=0)


def random_shuffle_map(m: int, k: int, seed: int) -> ShuffleMap:
    """Uniformly random permutation per question, derived from ``seed``."""

    _check_k(k)
    u = uniform_block(seed, m, k)
    # argsort of iid uniforms is a uniformly random permutation
    return ShuffleMap(np.argsort(u, axis=1), seed=int(seed))


def apply_shuffle_map(pm: PredictionMatrix, smap: ShuffleMap) -> PredictionMatrix:
    """Relabel every answer (and truth) through the given per-question map."""

    if smap.m != pm.m or smap.k != pm.k:
        raise DimensionError(
            f"shuffle map shape ({smap.m}, {smap.k}) does not match matrix ({pm.m}, {pm.k})"
        )
    rows = np.arange(pm.m)[:, None]
    shuffled = smap.perms[rows, pm.answers]
    truth = None
    if pm.truth is not None:
        truth = smap.perms[np.arange(pm.m), pm.truth]
    return PredictionMatrix(pm.space, shuffled, truth)


def shuffle_apply(pm: PredictionMatrix, seed: int) -> tuple[PredictionMatrix, ShuffleMap]:
    """Apply a fresh random per-question label shuffle.

    Returns the relabeled matrix together with the map needed to undo it.
    After shuffling, the location of the true label carries no information:
    it is uniform over the K slots for every question.
    """

    smap = random_shuffle_map(pm.m, pm.k, seed)
    return apply_shuffle_map(pm, smap), smap


def shuffle_invert(obj, smap: ShuffleMap):
    """Undo a shuffle on a PredictionMatrix or a length-M label-index vector."""

    inv = smap.inverse()
    if isinstance(obj, PredictionMatrix):
        return apply_shuffle_map(obj, inv)
    arr = np.asarray(obj)
    if arr.shape != (smap.m,):
        raise DimensionError(f"expected shape ({smap.m},), got {arr.shape}")
    if not np.issubdtype(arr.dtype, np.integer):
        raise DomainError("label vector must hold integer indices")
    if arr.min() < 0 or arr.max() >= smap.k:
        raise DomainError(f"label indices must lie in [0, {smap.k})")
    return inv.perms[np.arange(smap.m), arr]
