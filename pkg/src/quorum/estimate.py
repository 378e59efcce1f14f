"""Label-free estimation of agent accuracies, and the full pipeline.

Two estimators recover per-agent accuracies without any ground truth:

  * matrix fit (``fit_ow_l``): least-squares fit of the model-implied
    second-order probabilities to the empirically observed ones, solved
    by multi-start projected gradient descent with an analytic gradient;
  * pseudo-label vote (``fit_ow_i``): aggregate with the counterfactual
    peer rule, treat its output as truth, and score each agent against it.

Either way the recovered accuracies are turned into log-odds weights for
weighted voting. ``run_pipeline`` wires ingest, optional estimation, and
aggregation together.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import (
    DimensionError,
    DomainError,
    PredictionMatrix,
    _as_readonly,
    ow_weights,
)
from . import aggregate as agg
from .aggregate import TIE_LOWEST, TiePolicy
from .secondorder import SecondOrderMatrix, empirical_second_order

__all__ = [
    "METHODS",
    "ErmConfig",
    "FitResult",
    "PipelineResult",
    "erm_loss",
    "erm_gradient",
    "fit_accuracies",
    "fit_ow_l",
    "fit_ow_i",
    "run_pipeline",
    "pipeline_aggregate",
]

METHODS = ("mv", "sp", "isp", "ow-l", "ow-i", "ow-oracle", "eow")


@dataclass(frozen=True)
class ErmConfig:
    """Settings for the projected-gradient accuracy fit."""

    starts: int = 8
    max_iters: int = 2000
    grad_tol: float = 1e-9
    step0: float = 0.1
    eps: float = 1e-6
    seed: int = 0
    threads: int = 1

    def __post_init__(self) -> None:
        if self.starts < 1:
            raise DomainError(f"starts must be >= 1, got {self.starts}")
        if self.max_iters < 1:
            raise DomainError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0.0 < self.eps < 0.5:
            raise DomainError(f"eps must lie in (0, 0.5), got {self.eps}")
        if self.step0 <= 0.0 or self.grad_tol <= 0.0:
            raise DomainError("step0 and grad_tol must be positive")
        if self.threads < 1:
            raise DomainError(f"threads must be >= 1, got {self.threads}")


@dataclass(frozen=True)
class FitResult:
    """Recovered accuracies and weights, plus fit diagnostics."""

    accuracies: np.ndarray
    weights: np.ndarray
    method: str
    loss: float | None = None
    converged: bool = True
    iterations: int = 0
    starts_agreeing: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "accuracies", _as_readonly(np.asarray(self.accuracies, dtype=float)))
        object.__setattr__(self, "weights", _as_readonly(np.asarray(self.weights, dtype=float)))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "accuracies": [float(v) for v in self.accuracies],
            "weights": [float(v) for v in self.weights],
            "loss": None if self.loss is None else float(self.loss),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "starts_agreeing": self.starts_agreeing,
        }


# ---------------------------------------------------------------------------
# ERM objective
# ---------------------------------------------------------------------------


class _ErmData:
    """Per-pair sufficient statistics of the target second-order matrix.

    The loss sums squared residuals over all ordered pairs i != j and all
    (k, l) cells; grouping cells by same-label vs cross-label reduces both
    the loss and its gradient to O(N^2) work per evaluation.
    """

    def __init__(self, so: SecondOrderMatrix):
        self.n = so.n
        self.k = so.k
        k = self.k
        diag = so.probs[:, :, np.arange(k), np.arange(k)]  # (N, N, K)
        self.same_sum = diag.sum(axis=2)
        self.same_sq = (diag**2).sum(axis=2)
        total_sum = so.probs.sum(axis=(2, 3))
        total_sq = (so.probs**2).sum(axis=(2, 3))
        self.cross_sum = total_sum - self.same_sum
        self.cross_sq = total_sq - self.same_sq
        self.offdiag = ~np.eye(self.n, dtype=bool)

    def loss(self, x: np.ndarray) -> float:
        k = self.k
        s = x[:, None] * x[None, :] + (1 - x[:, None]) * (1 - x[None, :]) / (k - 1)
        c = (x[:, None] * (1 - x[None, :]) + (1 - x[:, None]) * x[None, :]) / (k - 1) + (
            k - 2
        ) * (1 - x[:, None]) * (1 - x[None, :]) / (k - 1) ** 2
        per_pair = (
            k * s**2
            - 2 * s * self.same_sum
            + self.same_sq
            + k * (k - 1) * c**2
            - 2 * c * self.cross_sum
            + self.cross_sq
        )
        return float(per_pair[self.offdiag].sum())

    def loss_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        k = self.k
        s = x[:, None] * x[None, :] + (1 - x[:, None]) * (1 - x[None, :]) / (k - 1)
        c = (x[:, None] * (1 - x[None, :]) + (1 - x[:, None]) * x[None, :]) / (k - 1) + (
            k - 2
        ) * (1 - x[:, None]) * (1 - x[None, :]) / (k - 1) ** 2
        per_pair = (
            k * s**2
            - 2 * s * self.same_sum
            + self.same_sq
            + k * (k - 1) * c**2
            - 2 * c * self.cross_sum
            + self.cross_sq
        )
        loss = float(per_pair[self.offdiag].sum())
        # residual sums: A_ij = sum_k (S_ij - target_kk), B_ij likewise off-diagonal
        a = k * s - self.same_sum
        b = k * (k - 1) * c - self.cross_sum
        a = np.where(self.offdiag, a, 0.0)
        b = np.where(self.offdiag, b, 0.0)
        ds = x - (1 - x) / (k - 1)  # d S_ij / d x_i evaluated at x_j
        dc = (1 - 2 * x) / (k - 1) - (k - 2) * (1 - x) / (k - 1) ** 2
        grad = 2 * (
            a @ ds + b @ dc  # m is the first index of the pair
            + a.T @ ds + b.T @ dc  # m is the second index
        )
        return loss, grad


def erm_loss(accuracies, so: SecondOrderMatrix) -> float:
    """Squared-residual fit of model-implied to observed second-order cells."""

    x = _check_fit_point(accuracies, so)
    return _ErmData(so).loss(x)


def erm_gradient(accuracies, so: SecondOrderMatrix) -> np.ndarray:
    """Analytic gradient of ``erm_loss`` in the accuracies."""

    x = _check_fit_point(accuracies, so)
    return _ErmData(so).loss_grad(x)[1]


def _check_fit_point(accuracies, so: SecondOrderMatrix) -> np.ndarray:
    x = np.asarray(accuracies, dtype=float)
    if x.shape != (so.n,):
        raise DimensionError(f"accuracies shape {x.shape} does not match N={so.n}")
    if np.any(~np.isfinite(x)):
        raise DomainError("accuracies must be finite")
    if so.n < 2:
        raise DimensionError("the fit needs at least 2 agents")
    return x


# ---------------------------------------------------------------------------
# Projected gradient descent
# ---------------------------------------------------------------------------


def _pgd_single(data: _ErmData, x0: np.ndarray, lo: float, hi: float, cfg: ErmConfig):
    x = np.clip(x0, lo, hi)
    loss, grad = data.loss_grad(x)
    step = cfg.step0
    iters = 0
    converged = False
    for iters in range(1, cfg.max_iters + 1):
        moved = False
        for _ in range(60):  # backtracking line search
            x_new = np.clip(x - step * grad, lo, hi)
            delta = x_new - x
            if not np.any(delta):
                break
            new_loss = data.loss(x_new)
            if new_loss <= loss + float(grad @ delta) + float(delta @ delta) / (2 * step):
                x = x_new
                loss, grad = data.loss_grad(x)
                step *= 1.25
                moved = True
                break
            step *= 0.5
        proj_grad = x - np.clip(x - grad, lo, hi)
        if np.max(np.abs(proj_grad)) <= cfg.grad_tol:
            converged = True
            break
        if not moved:
            # line search stalled: treat as converged to machine precision
            converged = True
            break
    return x, loss, converged, iters


def fit_accuracies(so: SecondOrderMatrix, cfg: ErmConfig | None = None) -> FitResult:
    """Best-fit accuracies for an observed second-order matrix.

    Runs projected gradient descent from several random interior starts
    (plus the box midpoint) and keeps the lowest loss. The box is
    [1/K + eps, 1 - eps]; under relabeling symmetry the reflected solution
    lies outside the box, so the minimizer in the box is unique for
    informative data.
    """

    cfg = cfg or ErmConfig()
    data = _ErmData(so)
    if data.n < 2:
        raise DimensionError("the fit needs at least 2 agents")
    lo = 1.0 / data.k + cfg.eps
    hi = 1.0 - cfg.eps
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    x0s = [np.full(data.n, 0.5 * (lo + hi))]
    x0s += list(lo + (hi - lo) * rng.random((cfg.starts - 1, data.n))) if cfg.starts > 1 else []

    def solve(x0):
        return _pgd_single(data, x0, lo, hi, cfg)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(solve, x0s))
    else:
        results = [solve(x0) for x0 in x0s]

    best = min(range(len(results)), key=lambda idx: results[idx][1])
    x_best, loss_best, converged, iters = results[best]
    agreeing = sum(
        1
        for x, loss, _, _ in results
        if loss <= loss_best + 1e-8 and np.max(np.abs(x - x_best)) <= 1e-4
    )
    return FitResult(
        accuracies=x_best,
        weights=ow_weights(x_best, data.k, cfg.eps),
        method="ow-l",
        loss=loss_best,
        converged=converged,
        iterations=iters,
        starts_agreeing=agreeing,
    )


def fit_ow_l(pm: PredictionMatrix, cfg: ErmConfig | None = None, smoothing: float = 0.0) -> FitResult:
    """Accuracies from the empirical second-order matrix of a dataset."""

    return fit_accuracies(empirical_second_order(pm, smoothing), cfg)


def fit_ow_i(pm: PredictionMatrix, eps: float = 1e-6, smoothing: float = 0.0) -> FitResult:
    """Accuracies by scoring agents against counterfactual-peer pseudo-labels.

    Pseudo-label ties resolve to the lowest index so the estimate is
    deterministic.
    """

    if pm.n < 2:
        raise DimensionError("the pseudo-label estimator needs at least 2 agents")
    so = empirical_second_order(pm, smoothing)
    adv = agg.isp_advantage_batch(pm, so)
    pseudo = agg.decide_batch(adv, TiePolicy(TIE_LOWEST))
    acc = (pm.answers == pseudo[:, None]).mean(axis=0)
    return FitResult(
        accuracies=acc,
        weights=ow_weights(acc, pm.k, eps),
        method="ow-i",
        loss=None,
        converged=True,
    )


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineResult:
    labels: np.ndarray
    method: str
    fit: FitResult | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", _as_readonly(np.asarray(self.labels)))


def run_pipeline(
    pm: PredictionMatrix,
    method: str,
    tie: TiePolicy | None = None,
    erm: ErmConfig | None = None,
    accuracies=None,
    abilities=None,
    smoothing: float = 0.0,
    eps: float = 1e-6,
) -> PipelineResult:
    """Aggregate a prediction matrix with the chosen method.

    ``ow-oracle`` requires true accuracies and ``eow`` per-agent abilities;
    the label-free methods (``ow-l``, ``ow-i``) fit their own weights. The
    truth column of ``pm``, if any, is never consulted.
    """

    method = method.lower().replace("_", "-")
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
    tie = tie or TiePolicy()
    fit = None
    if method == "mv":
        scores = agg.vote_counts_batch(pm.answers, pm.k)
    elif method == "sp":
        scores = agg.sp_advantage_batch(pm, empirical_second_order(pm, smoothing))
    elif method == "isp":
        scores = agg.isp_advantage_batch(pm, empirical_second_order(pm, smoothing))
    elif method == "ow-l":
        fit = fit_ow_l(pm, erm, smoothing)
        scores = agg.weighted_scores_batch(pm.answers, fit.weights, pm.k)
    elif method == "ow-i":
        fit = fit_ow_i(pm, eps, smoothing)
        scores = agg.weighted_scores_batch(pm.answers, fit.weights, pm.k)
    elif method == "ow-oracle":
        if accuracies is None:
            raise DomainError("ow-oracle needs per-agent accuracies")
        w = ow_weights(accuracies, pm.k, eps)
        if w.shape != (pm.n,):
            raise DimensionError(f"accuracies shape {w.shape} does not match N={pm.n}")
        fit = FitResult(
            accuracies=np.asarray(accuracies, dtype=float), weights=w, method="ow-oracle"
        )
        scores = agg.weighted_scores_batch(pm.answers, w, pm.k)
    else:  # eow
        if abilities is None:
            raise DomainError("eow needs per-agent abilities")
        beta = np.asarray(abilities, dtype=float)
        if beta.shape != (pm.n,):
            raise DimensionError(f"abilities shape {beta.shape} does not match N={pm.n}")
        if np.any(beta < 0.0) or np.any(~np.isfinite(beta)):
            raise DomainError("abilities must be finite and nonnegative")
        fit = FitResult(accuracies=np.full(pm.n, np.nan), weights=beta, method="eow")
        scores = agg.weighted_scores_batch(pm.answers, beta, pm.k)
    labels = agg.decide_batch(scores, tie)
    return PipelineResult(labels=labels, method=method, fit=fit)


def pipeline_aggregate(pm: PredictionMatrix, method: str, **kwargs) -> np.ndarray:
    """One label per question; see ``run_pipeline`` for options."""

    return run_pipeline(pm, method, **kwargs).labels
