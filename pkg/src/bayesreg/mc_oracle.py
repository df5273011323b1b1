"""Brute-force validators for the closed-form region results.

Three independent toolsets:

* Monte Carlo estimates of region size, credibility and RSE straight from
  their defining integrals (no Gaussian approximation), with either a
  uniform proposal over the parameter box or a Gaussian importance
  proposal centered at the ML point with covariance F_ML^(-1).  The
  importance proposal is the practical choice for concentrated
  likelihoods (large N); the uniform one remains available for unbiased
  validation at small N.

* The exact d = 1 interval RSE formulas used to study what happens when
  the interior-regime expression is applied although the interval was
  actually truncated by the box boundary ("categorical" vs actual RSE).

* The truncated-ball moments behind the general-d conservativeness
  argument: a ball of radius R with a spherical cap of height h removed,
  second moment and volume by one-dimensional quadrature over the polar
  angle, plus the discrete summation lemma (partial-sum ratios with
  strictly increasing term ratios dip below the equal endpoint ratios,
  with a unique minimum).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from bayesreg.inference import Dataset, MLResult, log_likelihood
from bayesreg.models import StatisticalModel
from bayesreg.region import ParamSpace
from bayesreg.specfn import unit_ball_volume
from bayesreg.streams import substream

__all__ = [
    "MCConfig",
    "MCRegionResult",
    "MCEstimate",
    "CapGeometry",
    "CapIntegrals",
    "LemmaResult",
    "LemmaPreconditionError",
    "mc_region_props",
    "mc_rse",
    "rse_interval_actual",
    "rse_interval_categorical",
    "cap_integrals",
    "lemma_check",
]


@dataclass(frozen=True)
class MCConfig:
    """Sampling plan for the Monte Carlo oracles."""

    samples: int = 100_000
    proposal: str = "importance"  # "importance" | "uniform"
    seed: int = 0

    def __post_init__(self):
        if self.samples < 1000:
            raise ValueError("need at least 1000 Monte Carlo samples")
        if self.proposal not in ("importance", "uniform"):
            raise ValueError(f"unknown proposal {self.proposal!r}")


@dataclass(frozen=True)
class MCRegionResult:
    size: float
    size_se: float
    credibility: float
    credibility_se: float
    samples: int
    proposal: str
    zero_acceptance: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "size": self.size,
                "size_se": self.size_se,
                "credibility": self.credibility,
                "credibility_se": self.credibility_se,
                "samples": self.samples,
                "proposal": self.proposal,
                "zero_acceptance": self.zero_acceptance,
            }
        )


@dataclass(frozen=True)
class MCEstimate:
    value: float
    std_error: float
    samples: int
    proposal: str
    zero_acceptance: bool

    def to_json(self) -> str:
        return json.dumps(
            {
                "estimate": self.value,
                "std_error": self.std_error,
                "samples": self.samples,
                "proposal": self.proposal,
                "zero_acceptance": self.zero_acceptance,
            }
        )


def _gaussian_logpdf(points: np.ndarray, mean: np.ndarray, cov: np.ndarray) -> np.ndarray:
    d = mean.size
    chol = np.linalg.cholesky(cov)
    delta = points - mean
    z = np.linalg.solve(chol, delta.T)
    maha = np.sum(z**2, axis=0)
    log_det = 2.0 * np.sum(np.log(np.diag(chol)))
    return -0.5 * (d * math.log(2.0 * math.pi) + log_det + maha)


def _draw_prior_weighted(space: ParamSpace, ml: MLResult, config: MCConfig):
    """Sample points plus weights w such that mean(w f) estimates the prior average of f."""
    rng = substream(config.seed, "mc")
    m = config.samples
    if config.proposal == "uniform":
        return space.sample_uniform(m, rng), np.ones(m)
    mean = np.asarray(ml.estimate, dtype=float)
    cov = ml.fisher_at_ml.inverse
    points = rng.multivariate_normal(mean, cov, size=m)
    log_q = _gaussian_logpdf(points, mean, cov)
    inside = space.contains(points)
    weights = np.where(inside, np.exp(-log_q) / space.volume, 0.0)
    return points, weights


def _likelihood_ratios(model, dataset, ml, points) -> np.ndarray:
    log_l = np.asarray(log_likelihood(model, dataset, points), dtype=float)
    return np.exp(log_l - ml.log_likelihood_max)


def _ratio_estimate(num_terms: np.ndarray, den_terms: np.ndarray):
    m = num_terms.size
    den = float(np.mean(den_terms))
    if den == 0.0:
        return math.nan, math.nan
    value = float(np.mean(num_terms)) / den
    resid = num_terms - value * den_terms
    se = math.sqrt(float(np.mean(resid**2)) / m) / den
    return value, se


def mc_region_props(
    model: StatisticalModel, dataset: Dataset, lam: float, config: MCConfig, ml: MLResult
) -> MCRegionResult:
    """Monte Carlo size and credibility of R_lambda from the defining integrals.

    Size is the prior-measure fraction of points with likelihood ratio at
    least lambda, credibility the likelihood-weighted fraction; standard
    errors are binomial (size, uniform proposal) or linearized ratio
    errors.
    """
    if not (0.0 < lam <= 1.0):
        raise ValueError("lambda must lie in (0, 1]")
    points, weights = _draw_prior_weighted(model.param_space, ml, config)
    ratios = _likelihood_ratios(model, dataset, ml, points)
    member = (ratios >= lam) & (weights > 0)

    zero = not np.any(member)
    if zero:
        warnings.warn("no Monte Carlo sample fell inside the region", RuntimeWarning)

    size_terms = weights * member
    size = float(np.mean(size_terms))
    size_se = float(np.std(size_terms, ddof=1)) / math.sqrt(config.samples)

    cred, cred_se = _ratio_estimate(weights * ratios * member, weights * ratios)
    return MCRegionResult(
        size=size,
        size_se=size_se,
        credibility=cred,
        credibility_se=cred_se,
        samples=config.samples,
        proposal=config.proposal,
        zero_acceptance=zero,
    )


def mc_rse(
    model: StatisticalModel,
    dataset: Dataset,
    lam: float,
    reference,
    config: MCConfig,
    ml: MLResult,
) -> MCEstimate:
    """Monte Carlo RSE: uniform-prior average of |r' - reference|^2 over R_lambda."""
    if not (0.0 < lam <= 1.0):
        raise ValueError("lambda must lie in (0, 1]")
    reference = np.atleast_1d(np.asarray(reference, dtype=float))
    points, weights = _draw_prior_weighted(model.param_space, ml, config)
    ratios = _likelihood_ratios(model, dataset, ml, points)
    member = (ratios >= lam) & (weights > 0)
    zero = not np.any(member)
    if zero:
        warnings.warn("no Monte Carlo sample fell inside the region", RuntimeWarning)
    sq = np.sum((points - reference) ** 2, axis=1)
    value, se = _ratio_estimate(weights * member * sq, weights * member)
    return MCEstimate(value=value, std_error=se, samples=config.samples,
                      proposal=config.proposal, zero_acceptance=zero)


# ---------------------------------------------------------------------------
# d = 1 interval RSE: actual vs categorical
# ---------------------------------------------------------------------------


def rse_interval_actual(r: float, a: float, b: float) -> float:
    """Mean of (x - r)^2 over the interval [a, b]: (a^2 + ab + b^2)/3 - r(a + b) + r^2."""
    if not a < b:
        raise ValueError("need a < b")
    return (a**2 + a * b + b**2) / 3.0 - r * (a + b) + r**2


def rse_interval_categorical(r: float, a: float, r_ml: float) -> float:
    """Interval RSE computed as if no truncation happened.

    Equals :func:`rse_interval_actual` on the symmetric interval
    [a, 2 r_ml - a] centered at the ML point:
    [a^2 - 2 r_ml (a + 3 r) + 3 r^2 + 4 r_ml^2]/3.
    """
    return (a**2 - 2.0 * r_ml * (a + 3.0 * r) + 3.0 * r**2 + 4.0 * r_ml**2) / 3.0


# ---------------------------------------------------------------------------
# truncated-ball moments (general-d conservativeness)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapGeometry:
    """Ball of radius R with a spherical cap of height h removed (0 <= h <= R)."""

    radius: float
    height: float
    d: int

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        if not (0.0 <= self.height <= self.radius):
            raise ValueError("cap height must satisfy 0 <= h <= R")
        if self.d < 1:
            raise ValueError("dimension must be a positive integer")


@dataclass(frozen=True)
class CapIntegrals:
    second_moment: float  # integral of |x|^2 over the truncated ball
    volume: float
    rse: float  # their ratio


def _cap_quad(d: int, radius: float, height: float, power: int) -> float:
    # integral over the removed cap of |x|^power, via polar angle from the cap axis
    a = radius - height
    theta_h = math.acos(1.0 - height / radius)
    k = d + power

    def integrand(theta):
        rho = a / math.cos(theta) if a > 0.0 else 0.0
        return math.sin(theta) ** (d - 2) * (radius**k - rho**k) / k

    value, err = integrate.quad(integrand, 0.0, theta_h, epsabs=1e-12, epsrel=1e-11, limit=200)
    if err > max(1e-9, 1e-9 * abs(value)):
        raise RuntimeError(f"cap quadrature did not converge (error estimate {err})")
    area = 2.0 * math.pi ** ((d - 1) / 2.0) / math.gamma((d - 1) / 2.0)
    return area * value


def cap_integrals(geom: CapGeometry) -> CapIntegrals:
    """Second moment, volume, and their ratio (RSE about the center) of the truncated ball.

    The full ball and the half ball share RSE = d R^2/(d + 2) by radial
    symmetry; intermediate heights dip below it, which is the
    conservativeness of the untruncated formula.  d = 1 uses the interval
    closed form (the polar parametrization needs d >= 2).
    """
    r, h, d = geom.radius, geom.height, geom.d
    if d == 1:
        volume = 2.0 * r - h
        second = ((r - h) ** 3 + r**3) / 3.0
        return CapIntegrals(second_moment=second, volume=volume, rse=second / volume)

    v_ball = unit_ball_volume(d) * r**d
    i_ball = v_ball * d * r**2 / (d + 2.0)
    if h == 0.0:
        return CapIntegrals(second_moment=i_ball, volume=v_ball, rse=i_ball / v_ball)
    volume = v_ball - _cap_quad(d, r, h, 0)
    second = i_ball - _cap_quad(d, r, h, 2)
    return CapIntegrals(second_moment=second, volume=volume, rse=second / volume)


# ---------------------------------------------------------------------------
# summation lemma
# ---------------------------------------------------------------------------


class LemmaPreconditionError(ValueError):
    """Input sequences violate the lemma's preconditions."""


def make_compliant_lemma_instance(rng: np.random.Generator, n_terms: int):
    """Random (a, b) sequences satisfying the lemma's preconditions exactly.

    Draws positive b and strictly increasing term ratios for j >= 1, then
    solves for a0 so the head ratio equals the total ratio.  ``n_terms``
    counts the indices after the head (so the sequences have n_terms + 1
    entries and the lemma needs n_terms >= 2).
    """
    if n_terms < 2:
        raise ValueError("need n_terms >= 2")
    b = rng.uniform(0.1, 2.0, size=n_terms + 1)
    ratios = np.sort(rng.uniform(0.05, 3.0, size=n_terms))
    while np.any(np.diff(ratios) <= 0):  # enforce strictness against duplicates
        ratios = np.sort(rng.uniform(0.05, 3.0, size=n_terms))
    a = np.empty(n_terms + 1)
    a[1:] = ratios * b[1:]
    a[0] = b[0] * np.sum(a[1:]) / np.sum(b[1:])
    return a, b


@dataclass(frozen=True)
class LemmaResult:
    holds: bool
    k_star: int


def lemma_check(a_seq, b_seq, ratio_tol: float = 1e-12) -> LemmaResult:
    """Verify the partial-sum ratio lemma on one instance.

    Preconditions (violations raise): nonnegative a, positive b, the head
    ratio a0/b0 equals the total ratio sum(a)/sum(b) within ``ratio_tol``,
    and the term ratios a_j/b_j are strictly increasing for j >= 1.

    Checks that every interior partial-sum ratio t(k) = sum_{j<=k} a_j /
    sum_{j<=k} b_j is strictly below t(0), and that t has exactly one
    minimum (strict decrease to k*, strict increase after).  Returns the
    verdict and k*.
    """
    a = np.asarray(a_seq, dtype=float)
    b = np.asarray(b_seq, dtype=float)
    if a.ndim != 1 or a.shape != b.shape or a.size < 3:
        raise LemmaPreconditionError("need 1-D sequences of equal length >= 3")
    if np.any(a < 0) or np.any(b <= 0):
        raise LemmaPreconditionError("need a_j >= 0 and b_j > 0")
    total_ratio = float(np.sum(a) / np.sum(b))
    if abs(a[0] / b[0] - total_ratio) > ratio_tol * max(1.0, abs(total_ratio)):
        raise LemmaPreconditionError("head ratio a0/b0 must equal the total ratio")
    ratios = a[1:] / b[1:]
    if not np.all(np.diff(ratios) > 0):
        raise LemmaPreconditionError("term ratios a_j/b_j must be strictly increasing for j >= 1")

    t = np.cumsum(a) / np.cumsum(b)
    k_star = int(np.argmin(t))
    diffs = np.diff(t)
    holds = (
        bool(np.all(t[1:-1] < t[0]))
        and int(np.sum(t <= t[k_star])) == 1
        and bool(np.all(diffs[:k_star] < 0))
        and bool(np.all(diffs[k_star:] > 0))
    )
    return LemmaResult(holds=holds, k_star=k_star)
