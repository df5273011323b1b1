"""Greedy adaptive selection of measurement settings to minimize the MRSE.

The campaign spends N copies over K steps (N/K copies per step).  After
each step the accumulated data give an ML estimate which stands in for
the unknown truth; for every candidate setting on a uniform grid over
the setting space, L datasets of N/K copies are simulated from that
surrogate, appended to the measured data, re-fit, and scored by the
MRSE objective matching the reported region kind (fixed size, fixed
credibility, or plausible) evaluated on the projected information at
the projected ML point.  The next measured setting is the grid argmin
of the replicate-averaged objective (ties to the lowest grid index);
simulated data are then discarded and only real data accumulate.

Every random draw comes from a substream keyed by (seed, purpose, step,
grid index, replicate), so results are bit-identical regardless of
evaluation order or parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from bayesreg.inference import Batch, Dataset, MLResult, fisher_at, ml_estimate
from bayesreg.models import StatisticalModel
from bayesreg.region import (
    FisherMatrix,
    ParamSpace,
    RegionProps,
    RegionSpec,
    SingularFisherError,
    lambda_crit,
    mrse_credible_fixed_c,
    mrse_credible_fixed_s,
    mrse_plausible,
    props_for_spec,
)
from bayesreg.streams import substream

__all__ = [
    "AdaptiveConfig",
    "StepRecord",
    "RunRecord",
    "SelectionDiagnostics",
    "mrse_objective",
    "settings_grid",
    "choose_setting",
    "run_adaptive",
    "run_nonadaptive",
    "optimal_setting_at",
]


@dataclass(frozen=True)
class AdaptiveConfig:
    """Campaign plan: K steps of N/K copies, L projection replicates on an n_m grid."""

    steps: int
    total_copies: int
    spec: RegionSpec
    initial_setting: tuple
    replicates: int = 20
    grid_count: int = 32
    seed: int = 0
    ml_grid_points: int = 101
    ml_xatol: float = 1e-8
    projection_grid_points: int = 41
    projection_xatol: float = 1e-5

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("need at least one step")
        if self.total_copies < 1 or self.total_copies % self.steps != 0:
            raise ValueError("steps must divide total_copies")
        if self.replicates < 1:
            raise ValueError("need at least one projection replicate")
        if self.grid_count < 1:
            raise ValueError("need at least one grid setting")

    @property
    def copies_per_step(self) -> int:
        return self.total_copies // self.steps


@dataclass(frozen=True)
class StepRecord:
    """Per-step trace: measured setting, ML estimate, predicted and true-parameter MRSE."""

    k: int
    setting: tuple
    ml_estimate: tuple
    converged: bool
    mrse_pred: float
    mrse_true: float
    size: float
    credibility: float
    lam: float
    lambda_crit_degenerate: bool


@dataclass(frozen=True)
class RunRecord:
    """Complete trace of an adaptive or nonadaptive campaign."""

    scheme: str
    spec: RegionSpec
    seed: int
    steps: tuple

    @property
    def final(self) -> StepRecord:
        return self.steps[-1]

    def to_jsonable(self) -> dict:
        return {
            "scheme": self.scheme,
            "region": {"kind": self.spec.kind, "value": self.spec.value},
            "seed": self.seed,
            "steps": [
                {
                    "k": s.k,
                    "setting": list(s.setting),
                    "ml": list(s.ml_estimate),
                    "converged": s.converged,
                    "mrse_pred": s.mrse_pred,
                    "mrse_true": s.mrse_true,
                    "s": s.size,
                    "c": s.credibility,
                    "lambda": s.lam,
                    "lambda_crit_flag": s.lambda_crit_degenerate,
                }
                for s in self.steps
            ],
        }


@dataclass(frozen=True)
class SelectionDiagnostics:
    grid: np.ndarray
    objectives: np.ndarray
    dropped: np.ndarray
    chosen_index: int


def mrse_objective(spec: RegionSpec, fisher, space: ParamSpace) -> float:
    """The MRSE form matching the reported region kind, on a given information matrix."""
    fisher = FisherMatrix.coerce(fisher)
    if spec.kind == RegionSpec.FIXED_SIZE:
        return mrse_credible_fixed_s(fisher.d, spec.value, fisher, space)
    if spec.kind == RegionSpec.FIXED_CREDIBILITY:
        return mrse_credible_fixed_c(fisher.d, spec.value, fisher)
    return mrse_plausible(fisher.d, fisher, space)


def settings_grid(space_m: ParamSpace, n_m: int) -> np.ndarray:
    """Uniform lattice over the setting space, endpoints included, shape (n, d_m).

    One axis gets n_m points; for d_m >= 2 each axis gets
    ceil(n_m^(1/d_m)) points, so the lattice may slightly exceed n_m.
    """
    if n_m < 1:
        raise ValueError("n_m must be >= 1")
    if space_m.d == 1:
        return np.linspace(space_m.lower[0], space_m.upper[0], n_m)[:, None]
    per_axis = math.ceil(n_m ** (1.0 / space_m.d))
    axes = [np.linspace(space_m.lower[j], space_m.upper[j], per_axis) for j in range(space_m.d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def choose_setting(
    model: StatisticalModel,
    accumulated: Dataset,
    config: AdaptiveConfig,
    step_index: int,
    ml: MLResult | None = None,
) -> tuple:
    """Next setting: grid argmin of the replicate-averaged projected MRSE objective.

    Projection replicates whose refit fails to converge (or whose projected
    information is singular) are dropped and counted; a setting with no
    surviving replicate is excluded, and if every setting is excluded the
    selection errors out.  Objective values are the planning heuristic of
    the protocol and are taken at face value.
    """
    if ml is None:
        ml = ml_estimate(model, accumulated, grid_points=config.ml_grid_points, xatol=config.ml_xatol)
    if not ml.converged:
        raise ValueError("accumulated-data ML did not converge; cannot project")
    surrogate = ml.estimate
    grid = settings_grid(model.setting_space, config.grid_count)
    n_new = config.copies_per_step

    objectives = np.full(grid.shape[0], np.inf)
    dropped = np.zeros(grid.shape[0], dtype=int)
    for j, setting in enumerate(grid):
        values = []
        for rep in range(config.replicates):
            rng = substream(config.seed, "sim", step_index, j, rep)
            outcomes = model.sample(surrogate, setting, n_new, rng)
            combined = accumulated.append(Batch.make(setting, outcomes))
            projected = ml_estimate(
                model,
                combined,
                grid_points=config.projection_grid_points,
                xatol=config.projection_xatol,
            )
            if not projected.converged:
                dropped[j] += 1
                continue
            try:
                fisher = fisher_at(model, combined, projected.estimate)
                values.append(mrse_objective(config.spec, fisher, model.param_space))
            except SingularFisherError:
                dropped[j] += 1
        if values:
            objectives[j] = float(np.mean(values))
    if not np.any(np.isfinite(objectives)):
        raise RuntimeError("every projection replicate was dropped; no setting can be chosen")
    chosen = int(np.argmin(objectives))
    return grid[chosen].copy(), SelectionDiagnostics(
        grid=grid, objectives=objectives, dropped=dropped, chosen_index=chosen
    )


def _guarded_props(spec: RegionSpec, fisher: FisherMatrix, space: ParamSpace) -> RegionProps:
    try:
        return props_for_spec(spec, fisher, space)
    except SingularFisherError:
        return RegionProps(lam=math.nan, size=math.nan, credibility=math.nan, asymptotic_valid=False)


def _guarded_objective(spec: RegionSpec, fisher: FisherMatrix, space: ParamSpace) -> float:
    try:
        return mrse_objective(spec, fisher, space)
    except SingularFisherError:
        return math.nan


def _step_record(
    model: StatisticalModel,
    dataset: Dataset,
    k: int,
    setting: np.ndarray,
    ml: MLResult,
    spec: RegionSpec,
    true_params,
) -> StepRecord:
    space = model.param_space
    props = _guarded_props(spec, ml.fisher_at_ml, space)
    try:
        degenerate = lambda_crit(model.d, ml.fisher_at_ml, space) >= 1.0
    except SingularFisherError:
        degenerate = True
    mrse_true = math.nan
    if true_params is not None:
        mrse_true = _guarded_objective(spec, fisher_at(model, dataset, true_params), space)
    return StepRecord(
        k=k,
        setting=tuple(float(v) for v in np.atleast_1d(setting)),
        ml_estimate=tuple(float(v) for v in ml.estimate),
        converged=ml.converged,
        mrse_pred=_guarded_objective(spec, ml.fisher_at_ml, space),
        mrse_true=mrse_true,
        size=props.size,
        credibility=props.credibility,
        lam=props.lam,
        lambda_crit_degenerate=degenerate,
    )


def _run_campaign(
    model: StatisticalModel,
    true_params,
    config: AdaptiveConfig,
    adaptive: bool,
) -> RunRecord:
    truth = np.atleast_1d(np.asarray(true_params, dtype=float))
    if not model.param_space.contains(truth):
        raise ValueError("true parameters lie outside the parameter space")
    setting = np.atleast_1d(np.asarray(config.initial_setting, dtype=float))
    if not model.setting_space.contains(setting):
        raise ValueError("initial setting lies outside the setting space")

    dataset = Dataset.make([])
    records = []
    for k in range(1, config.steps + 1):
        rng = substream(config.seed, "data", k)
        outcomes = model.sample(truth, setting, config.copies_per_step, rng)
        dataset = dataset.append(Batch.make(setting, outcomes))
        ml = ml_estimate(model, dataset, grid_points=config.ml_grid_points, xatol=config.ml_xatol)
        records.append(_step_record(model, dataset, k, setting, ml, config.spec, truth))
        if adaptive and k < config.steps:
            setting, _ = choose_setting(model, dataset, config, k, ml=ml)
    return RunRecord(
        scheme="adaptive" if adaptive else "nonadaptive",
        spec=config.spec,
        seed=config.seed,
        steps=tuple(records),
    )


def run_adaptive(model: StatisticalModel, true_params, config: AdaptiveConfig) -> RunRecord:
    """K-step adaptive campaign; real copies are drawn from ``true_params`` only."""
    return _run_campaign(model, true_params, config, adaptive=True)


def run_nonadaptive(
    model: StatisticalModel,
    true_params,
    total_copies: int,
    steps: int,
    fixed_setting,
    spec: RegionSpec,
    seed: int = 0,
    ml_grid_points: int = 101,
    ml_xatol: float = 1e-8,
) -> RunRecord:
    """Same campaign shape with the setting held fixed throughout."""
    config = AdaptiveConfig(
        steps=steps,
        total_copies=total_copies,
        spec=spec,
        initial_setting=tuple(np.atleast_1d(np.asarray(fixed_setting, dtype=float))),
        replicates=1,
        grid_count=1,
        seed=seed,
        ml_grid_points=ml_grid_points,
        ml_xatol=ml_xatol,
    )
    return _run_campaign(model, true_params, config, adaptive=False)


def optimal_setting_at(
    model: StatisticalModel,
    spec: RegionSpec,
    params,
    copies: int,
    per_axis: int = 201,
) -> tuple:
    """Setting minimizing the MRSE objective at known parameters (grid + local refine).

    A diagnostic oracle: with the true parameters plugged in, it returns the
    best fixed setting a clairvoyant observer could measure, the target the
    adaptive scheme should approach.
    """
    params = np.atleast_1d(np.asarray(params, dtype=float))
    space_m = model.setting_space

    def objective(setting) -> float:
        fisher = FisherMatrix(copies * np.asarray(model.fisher_single(params, setting)))
        try:
            return mrse_objective(spec, fisher, model.param_space)
        except SingularFisherError:
            return np.inf

    grid = settings_grid(space_m, per_axis ** space_m.d if space_m.d > 1 else per_axis)
    values = np.array([objective(m) for m in grid])
    best = grid[int(np.argmin(values))]
    res = optimize.minimize(
        lambda m: objective(space_m.clip(m)),
        best,
        method="Nelder-Mead",
        bounds=list(zip(space_m.lower, space_m.upper)),
        options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000},
    )
    final = space_m.clip(res.x)
    if objective(final) <= objective(best):
        return final, float(objective(final))
    return best, float(objective(best))
