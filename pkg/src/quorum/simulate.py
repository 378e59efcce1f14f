"""Generative simulators and the two standard experiment drivers.

Both simulators draw the true label uniformly per question and agent
errors uniformly over the wrong labels, which is exactly the structure a
per-question label shuffle induces. Under the independent model each
agent hits the truth with its fixed accuracy; under the difficulty model
a per-question difficulty scale is drawn first and every agent's hit
probability becomes a function of it, correlating errors across agents.

All draws for question q come from row q of a counter-based uniform
block, so matrices are bit-reproducible from (spec, seed) alone and each
question's randomness is independent of iteration order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionError,
    DomainError,
    LabelSpace,
    PredictionMatrix,
    derive_seed,
    sigma_k,
    uniform_block,
)
from .aggregate import TiePolicy
from .estimate import run_pipeline
from .oracle import DifficultyMixture

__all__ = [
    "CiSimSpec",
    "DifficultySimSpec",
    "simulate_ci",
    "simulate_difficulty",
    "AccuracyTable",
    "GapCurve",
    "run_accuracy_table",
    "run_gap_curve",
    "TABLE_METHODS",
]

TABLE_METHODS = ("mv", "sp", "single_best", "isp", "opt")

DEFAULT_KS = (2, 4, 6, 8, 10)
DEFAULT_ACCURACIES = (0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class CiSimSpec:
    """Independent-errors simulation: fixed per-agent accuracies."""

    accuracies: tuple[float, ...]
    k: int
    m: int
    seed: int = 0

    def __post_init__(self) -> None:
        acc = tuple(float(v) for v in self.accuracies)
        object.__setattr__(self, "accuracies", acc)
        _check_sim_dims(self.k, self.m, len(acc))
        for v in acc:
            if not (1.0 / self.k <= v <= 1.0):
                raise DomainError(f"accuracies must lie in [1/K, 1], got {v}")

    @property
    def n(self) -> int:
        return len(self.accuracies)


@dataclass(frozen=True)
class DifficultySimSpec:
    """Shared-difficulty simulation: abilities plus a difficulty mixture."""

    abilities: tuple[float, ...]
    mixture: DifficultyMixture
    k: int
    m: int
    seed: int = 0

    def __post_init__(self) -> None:
        beta = tuple(float(v) for v in self.abilities)
        object.__setattr__(self, "abilities", beta)
        _check_sim_dims(self.k, self.m, len(beta))
        for v in beta:
            if not (np.isfinite(v) and v >= 0.0):
                raise DomainError(f"abilities must be finite and nonnegative, got {v}")

    @property
    def n(self) -> int:
        return len(self.abilities)


def _check_sim_dims(k: int, m: int, n: int) -> None:
    if not isinstance(k, (int, np.integer)) or k < 2:
        raise DomainError(f"label count must be an integer >= 2, got {k!r}")
    if m < 1:
        raise DimensionError(f"question count must be >= 1, got {m}")
    if n < 1:
        raise DimensionError("need at least one agent")


def _answers_from_uniforms(
    u_agents: np.ndarray, hit_probs: np.ndarray, truth: np.ndarray, k: int
) -> np.ndarray:
    """Map uniforms to labels: below the hit probability means correct,
    the remainder spreads uniformly over the K-1 wrong labels."""

    correct = u_agents < hit_probs
    with np.errstate(invalid="ignore", divide="ignore"):
        v = (u_agents - hit_probs) / (1.0 - hit_probs)
        v = np.where(correct, 0.0, v)  # unused lanes; keep the int cast clean
        wrong = np.minimum((v * (k - 1)).astype(np.int64), k - 2)
    wrong = np.clip(wrong, 0, k - 2)
    wrong = wrong + (wrong >= truth[:, None])
    return np.where(correct, truth[:, None], wrong)


def simulate_ci(spec: CiSimSpec) -> PredictionMatrix:
    """Simulate the independent-errors model; truth included."""

    u = uniform_block(spec.seed, spec.m, 1 + spec.n)
    truth = np.minimum((u[:, 0] * spec.k).astype(np.int64), spec.k - 1)
    x = np.asarray(spec.accuracies)
    answers = _answers_from_uniforms(u[:, 1:], x[None, :], truth, spec.k)
    return PredictionMatrix(LabelSpace.default(spec.k), answers, truth)


def simulate_difficulty(spec: DifficultySimSpec) -> PredictionMatrix:
    """Simulate the shared-difficulty model; truth included."""

    u = uniform_block(spec.seed, spec.m, 2 + spec.n)
    alphas = spec.mixture.sample(u[:, 0])
    truth = np.minimum((u[:, 1] * spec.k).astype(np.int64), spec.k - 1)
    beta = np.asarray(spec.abilities)
    hit = sigma_k(alphas[:, None] * beta[None, :], spec.k)
    answers = _answers_from_uniforms(u[:, 2:], hit, truth, spec.k)
    return PredictionMatrix(LabelSpace.default(spec.k), answers, truth)


# ---------------------------------------------------------------------------
# Experiment drivers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AccuracyTable:
    """Accuracy (percent) of each method across label-space sizes."""

    ks: tuple[int, ...]
    methods: tuple[str, ...]
    values: np.ndarray  # (len(ks), len(methods)) percent
    m: int
    accuracies: tuple[float, ...]
    seed: int

    def to_rows(self) -> list[dict]:
        rows = []
        for i, k in enumerate(self.ks):
            row = {"k": int(k)}
            row.update(
                {meth: round(float(self.values[i, j]), 4) for j, meth in enumerate(self.methods)}
            )
            rows.append(row)
        return rows

    def to_text(self) -> str:
        width = 12
        header = "k".rjust(4) + "".join(m.rjust(width) for m in self.methods)
        lines = [header, "-" * len(header)]
        for i, k in enumerate(self.ks):
            lines.append(
                str(k).rjust(4)
                + "".join(f"{self.values[i, j]:.2f}".rjust(width) for j in range(len(self.methods)))
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GapCurve:
    """Mean accuracy gaps (percentage points) versus label-space size."""

    ks: tuple[int, ...]
    gap_isp_mv: np.ndarray
    gap_mv_sp: np.ndarray
    stderr: np.ndarray  # standard error of gap_isp_mv over replications
    replications: int
    m: int
    accuracies: tuple[float, ...]
    seed: int

    def to_rows(self) -> list[dict]:
        return [
            {
                "k": int(k),
                "gap_isp_mv": float(self.gap_isp_mv[i]),
                "gap_mv_sp": float(self.gap_mv_sp[i]),
                "stderr": float(self.stderr[i]),
            }
            for i, k in enumerate(self.ks)
        ]


def _method_accuracies(pm: PredictionMatrix, true_acc: np.ndarray, seed: int) -> dict:
    """Accuracy (fraction) of each table method on one simulated dataset."""

    if pm.truth is None:
        raise DomainError("table experiments need simulated truth")
    out = {}
    for idx, method in enumerate(("mv", "sp", "isp")):
        tie = TiePolicy(seed=derive_seed(seed, 900 + idx))
        labels = run_pipeline(pm, method, tie=tie).labels
        out[method] = float((labels == pm.truth).mean())
    best = int(np.argmax(true_acc))
    out["single_best"] = float((pm.answers[:, best] == pm.truth).mean())
    tie = TiePolicy(seed=derive_seed(seed, 903))
    labels = run_pipeline(pm, "ow-oracle", tie=tie, accuracies=true_acc).labels
    out["opt"] = float((labels == pm.truth).mean())
    return out


def run_accuracy_table(
    seed: int = 0,
    m: int = 10_000,
    ks: tuple[int, ...] = DEFAULT_KS,
    accuracies: tuple[float, ...] = DEFAULT_ACCURACIES,
) -> AccuracyTable:
    """Accuracy of every rule across label-space sizes, one dataset per K.

    Second-order rules use the empirical second-order matrix estimated
    from the same dataset they aggregate; the oracle-weighted column uses
    the true accuracies.
    """

    acc = np.asarray(accuracies, dtype=float)
    values = np.zeros((len(ks), len(TABLE_METHODS)))
    for i, k in enumerate(ks):
        pm = simulate_ci(CiSimSpec(tuple(acc), int(k), int(m), derive_seed(seed, k)))
        stats = _method_accuracies(pm, acc, derive_seed(seed, k))
        for j, meth in enumerate(TABLE_METHODS):
            values[i, j] = 100.0 * stats[meth]
    return AccuracyTable(
        ks=tuple(int(k) for k in ks),
        methods=TABLE_METHODS,
        values=values,
        m=int(m),
        accuracies=tuple(float(v) for v in acc),
        seed=int(seed),
    )


def run_gap_curve(
    seed: int = 0,
    m: int = 10_000,
    ks: tuple[int, ...] = DEFAULT_KS,
    accuracies: tuple[float, ...] = DEFAULT_ACCURACIES,
    replications: int = 1,
) -> GapCurve:
    """Accuracy gaps (counterfactual minus MV, MV minus peer-expected) vs K.

    With multiple replications each cell is a mean over independent
    datasets and ``stderr`` reports the standard error of the first gap.
    """

    if replications < 1:
        raise DomainError(f"replications must be >= 1, got {replications}")
    acc = np.asarray(accuracies, dtype=float)
    gaps_im = np.zeros((replications, len(ks)))
    gaps_ms = np.zeros((replications, len(ks)))
    for r in range(replications):
        for i, k in enumerate(ks):
            sim_seed = derive_seed(seed, r, k)
            pm = simulate_ci(CiSimSpec(tuple(acc), int(k), int(m), sim_seed))
            stats = _method_accuracies(pm, acc, sim_seed)
            gaps_im[r, i] = 100.0 * (stats["isp"] - stats["mv"])
            gaps_ms[r, i] = 100.0 * (stats["mv"] - stats["sp"])
    stderr = (
        gaps_im.std(axis=0, ddof=1) / np.sqrt(replications)
        if replications > 1
        else np.zeros(len(ks))
    )
    return GapCurve(
        ks=tuple(int(k) for k in ks),
        gap_isp_mv=gaps_im.mean(axis=0),
        gap_mv_sp=gaps_ms.mean(axis=0),
        stderr=stderr,
        replications=int(replications),
        m=int(m),
        accuracies=tuple(float(v) for v in acc),
        seed=int(seed),
    )
