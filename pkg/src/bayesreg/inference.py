"""Maximum-likelihood estimation over multi-setting datasets.

A dataset is an ordered list of batches, each holding the outcomes
collected at one measurement setting.  Log-likelihoods add across
batches; the ML estimate is located by a coarse grid scan (ties break
toward the lowest lexicographic grid index) followed by Nelder-Mead
refinement clamped to the parameter box.  The optimizer is deterministic:
identical datasets give bit-identical results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from bayesreg.models import StatisticalModel
from bayesreg.region import FisherMatrix

__all__ = ["Batch", "Dataset", "MLResult", "log_likelihood", "ml_estimate", "fisher_at"]


@dataclass(frozen=True)
class Batch:
    """Outcomes collected at one setting; ``copies`` equals the outcome count."""

    setting: np.ndarray
    outcomes: np.ndarray

    @staticmethod
    def make(setting, outcomes) -> "Batch":
        return Batch(np.atleast_1d(np.asarray(setting, dtype=float)), np.asarray(outcomes))

    @property
    def copies(self) -> int:
        return len(self.outcomes)


@dataclass(frozen=True)
class Dataset:
    """Ordered accumulation of batches."""

    batches: tuple

    @staticmethod
    def make(batches) -> "Dataset":
        return Dataset(tuple(batches))

    @property
    def total_copies(self) -> int:
        return sum(b.copies for b in self.batches)

    def append(self, batch: Batch) -> "Dataset":
        return Dataset(self.batches + (batch,))

    def to_json(self) -> str:
        return json.dumps(
            {
                "batches": [
                    {"setting": b.setting.tolist(), "outcomes": np.asarray(b.outcomes).tolist()}
                    for b in self.batches
                ]
            }
        )

    @staticmethod
    def from_json(text: str) -> "Dataset":
        doc = json.loads(text)
        return Dataset.make(Batch.make(b["setting"], b["outcomes"]) for b in doc["batches"])


@dataclass(frozen=True)
class MLResult:
    estimate: np.ndarray
    log_likelihood_max: float
    fisher_at_ml: FisherMatrix
    converged: bool
    boundary_hit: bool
    n_iterations: int


def _batch_terms(model: StatisticalModel, dataset: Dataset):
    # precompute per-batch sufficient statistics once
    return [(b.setting, model.batch_stats(b.outcomes)) for b in dataset.batches]


def _ll_from_terms(model, terms, params):
    total = None
    for setting, stats in terms:
        term = model.stats_log_likelihood(setting, stats, params)
        total = term if total is None else total + term
    return total


def log_likelihood(model: StatisticalModel, dataset: Dataset, params):
    """Sum of batch log-likelihoods; -inf where an outcome has zero density.

    ``params`` may be a single point (d,) or a matrix (M, d) of points.
    """
    if not dataset.batches:
        raise ValueError("dataset is empty")
    return _ll_from_terms(model, _batch_terms(model, dataset), params)


def ml_estimate(
    model: StatisticalModel,
    dataset: Dataset,
    grid_points: int = 101,
    xatol: float = 1e-8,
    maxiter: int = 10_000,
) -> MLResult:
    """Maximum-likelihood estimate over the parameter box.

    Coarse per-dimension grid (``grid_points`` each), then Nelder-Mead
    refinement to ``xatol``, clamped to the box.  ``boundary_hit`` reports
    an optimum within tolerance of the box boundary; ``converged=False``
    (never an exception) reports refinement hitting the iteration cap.
    """
    if not dataset.batches:
        raise ValueError("dataset is empty")
    space = model.param_space
    terms = _batch_terms(model, dataset)

    axes = [np.linspace(space.lower[j], space.upper[j], grid_points) for j in range(space.d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.column_stack([m.ravel() for m in mesh])
    ll = np.asarray(_ll_from_terms(model, terms, grid), dtype=float)
    ll = np.where(np.isnan(ll), -np.inf, ll)
    start = grid[int(np.argmax(ll))]

    def neg_ll(x):
        v = _ll_from_terms(model, terms, np.asarray(x, dtype=float))
        return -v if np.isfinite(v) else np.inf

    res = optimize.minimize(
        neg_ll,
        start,
        method="Nelder-Mead",
        bounds=list(zip(space.lower, space.upper)),
        options={"xatol": xatol, "fatol": 1e-7, "maxiter": maxiter, "maxfev": maxiter},
    )
    estimate = space.clip(res.x)
    tol = 1e-9 * space.edges + 1e-12
    boundary = bool(np.any(estimate - space.lower <= tol) or np.any(space.upper - estimate <= tol))
    return MLResult(
        estimate=estimate,
        log_likelihood_max=float(-res.fun),
        fisher_at_ml=fisher_at(model, dataset, estimate),
        converged=bool(res.success),
        boundary_hit=boundary,
        n_iterations=int(res.nit),
    )


def fisher_at(model: StatisticalModel, dataset: Dataset, params) -> FisherMatrix:
    """Dataset Fisher information: sum over batches of copies x per-copy information.

    Only the batch shapes (settings and copy counts) enter, not the outcome
    values.  The result may be singular for information-deficient designs;
    check ``FisherMatrix.is_singular``.
    """
    if not dataset.batches:
        raise ValueError("dataset is empty")
    params = np.atleast_1d(np.asarray(params, dtype=float))
    total = np.zeros((model.d, model.d))
    for b in dataset.batches:
        total += b.copies * np.asarray(model.fisher_single(params, b.setting))
    return FisherMatrix(0.5 * (total + total.T))
