"""Closed-form geometry and accuracy of likelihood-ratio error regions.

The region with ratio parameter lambda for a dataset D is
R_lambda = {r : L(D|r) >= lambda * L_max}, anchored at the maximum-
likelihood point.  Under a uniform (primitive) prior on a bounded box
R0 of volume V, and in the large-sample regime where the region stays
away from the box boundary and the likelihood is effectively Gaussian
with curvature F_ML, the region is characterized by

    size         s = (V_d / V) (-2 log lambda)^(d/2) det(F_ML)^(-1/2)
    credibility  c = 1 - Q(d/2, -log lambda)
    lambda_crit    = sqrt(det(2 pi F_ML^(-1))) / V

where V_d is the unit-ball volume and Q the regularized upper
incomplete gamma function.  lambda_crit marks the "plausible" region:
the credible region containing all plausible parameters and nothing
else.

Accuracy is measured by the region squared error (RSE), the
prior-averaged squared distance of region points from the true
parameter, and its dataset average (MRSE).  In the same regime

    RSE  = |r_ML - r|^2 + 2 Tr{F_ML^(-1)} (-log lambda)/(d + 2)
    MRSE = Tr{F^(-1)} (1 - 2 log lambda/(d + 2))

which reduce to the point-estimator MSE and Cramer-Rao value at
lambda = 1.  The remaining functions express the MRSE under the three
reporting constraints (fixed size, fixed credibility, plausible), the
trace-class upper bounds used to argue monotonicity for d >= 2, and
the threshold values beyond which the plausible-region bounds are
guaranteed to decrease.

Sizes produced by the asymptotic formula can exceed 1 when the formula
is used outside its regime; they are reported as-is with
``asymptotic_valid=False`` so callers can detect the violation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from bayesreg.specfn import inv_reg_upper_gamma, reg_upper_gamma, unit_ball_volume

__all__ = [
    "SingularFisherError",
    "ParamSpace",
    "FisherMatrix",
    "RegionSpec",
    "RegionProps",
    "credibility_of_lambda",
    "size_of_lambda",
    "lambda_crit",
    "size_from_credibility",
    "rse_asymptotic",
    "mrse_asymptotic",
    "mrse_credible_fixed_s",
    "mrse_credible_fixed_c",
    "mrse_credible_interval",
    "mrse_plausible",
    "trace_inverse_bound",
    "mrse_credible_fixed_s_bound",
    "mrse_plausible_bound_c",
    "mrse_plausible_bound_detf",
    "plausible_size_from_detf",
    "plausible_c_profile",
    "plausible_detf_profile",
    "threshold_c_max",
    "threshold_detf",
    "props_for_spec",
]

_SINGULAR_DET = 1e-300


class SingularFisherError(ValueError):
    """Fisher matrix is singular (or not positive definite) where the formulas need det F > 0."""


class ParamSpace:
    """Axis-aligned parameter box R0 carrying the uniform primitive prior.

    Only the raw coordinate volume V enters the region formulas; the
    normalized prior measure dr/V is applied inside the size/credibility
    semantics and never double-counted.
    """

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ValueError("lower and upper must be 1-D and of equal length")
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("bounds must be finite")
        if np.any(upper <= lower):
            raise ValueError("upper bounds must exceed lower bounds")
        self.lower = lower
        self.upper = upper

    @classmethod
    def from_volume(cls, d: int, volume: float) -> "ParamSpace":
        """A cube [0, volume^(1/d)]^d; handy when only V matters."""
        if volume <= 0:
            raise ValueError("volume must be positive")
        edge = volume ** (1.0 / d)
        return cls(np.zeros(d), np.full(d, edge))

    @property
    def d(self) -> int:
        return self.lower.size

    @property
    def edges(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def volume(self) -> float:
        return float(np.prod(self.edges))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, points, atol: float = 0.0) -> np.ndarray | bool:
        """Coordinatewise membership test; points shaped (..., d)."""
        pts = np.asarray(points, dtype=float)
        ok = np.all((pts >= self.lower - atol) & (pts <= self.upper + atol), axis=-1)
        return bool(ok) if ok.ndim == 0 else ok

    def clip(self, points) -> np.ndarray:
        return np.clip(np.asarray(points, dtype=float), self.lower, self.upper)

    def sample_uniform(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, self.d))

    def __repr__(self) -> str:
        return f"ParamSpace(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class FisherMatrix:
    """Symmetric d x d information matrix with the accessors the formulas need.

    Symmetry is validated to 1e-10 relative on construction and the stored
    matrix is symmetrized.  Positive definiteness is *not* required here
    (zero-information designs are legitimate data); formulas that need
    det F > 0 raise :class:`SingularFisherError` instead.
    """

    def __init__(self, matrix):
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"Fisher matrix must be square, got shape {m.shape}")
        scale = np.max(np.abs(m)) if m.size else 0.0
        if np.max(np.abs(m - m.T)) > 1e-10 * max(1.0, scale):
            raise ValueError("Fisher matrix must be symmetric to 1e-10 relative")
        self._m = 0.5 * (m + m.T)

    @classmethod
    def coerce(cls, value) -> "FisherMatrix":
        if isinstance(value, FisherMatrix):
            return value
        return cls(value)

    @property
    def matrix(self) -> np.ndarray:
        return self._m.copy()

    @property
    def d(self) -> int:
        return self._m.shape[0]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self._m))

    @property
    def trace(self) -> float:
        return float(np.trace(self._m))

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self._m)

    @property
    def inv_trace(self) -> float:
        """Tr{F^(-1)}."""
        return float(np.trace(np.linalg.inv(self._m)))

    @property
    def is_singular(self) -> bool:
        det = self.det
        return not np.isfinite(det) or det < _SINGULAR_DET

    def scaled(self, factor: float) -> "FisherMatrix":
        return FisherMatrix(self._m * float(factor))

    def __add__(self, other: "FisherMatrix") -> "FisherMatrix":
        other = FisherMatrix.coerce(other)
        return FisherMatrix(self._m + other._m)

    def __repr__(self) -> str:
        return f"FisherMatrix({self._m.tolist()})"


@dataclass(frozen=True)
class RegionSpec:
    """Which region constraint is reported: fixed size, fixed credibility, or plausible."""

    kind: str
    value: float | None = None

    FIXED_SIZE = "fixed-s"
    FIXED_CREDIBILITY = "fixed-c"
    PLAUSIBLE = "plausible"

    def __post_init__(self):
        if self.kind == self.FIXED_SIZE:
            if self.value is None or not (0.0 < self.value <= 1.0):
                raise ValueError("fixed-size spec needs s0 in (0, 1]")
        elif self.kind == self.FIXED_CREDIBILITY:
            if self.value is None or not (0.0 < self.value < 1.0):
                raise ValueError("fixed-credibility spec needs c0 in (0, 1)")
        elif self.kind == self.PLAUSIBLE:
            if self.value is not None:
                raise ValueError("plausible spec takes no value")
        else:
            raise ValueError(f"unknown region spec kind {self.kind!r}")

    @classmethod
    def fixed_size(cls, s0: float) -> "RegionSpec":
        return cls(cls.FIXED_SIZE, float(s0))

    @classmethod
    def fixed_credibility(cls, c0: float) -> "RegionSpec":
        return cls(cls.FIXED_CREDIBILITY, float(c0))

    @classmethod
    def plausible(cls) -> "RegionSpec":
        return cls(cls.PLAUSIBLE, None)


@dataclass(frozen=True)
class RegionProps:
    """The (lambda, size, credibility) triple of one region.

    ``asymptotic_valid`` is False when the asymptotic formulas left their
    regime (size > 1, or lambda > 1 for degenerate plausible regions); the
    numbers are still reported as-is, NaN where undefined.
    """

    lam: float
    size: float
    credibility: float
    asymptotic_valid: bool


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not (0.0 < lam <= 1.0):
        raise ValueError(f"lambda must lie in (0, 1], got {lam}")
    return lam


def _spd_det(fisher: FisherMatrix) -> float:
    det = fisher.det
    if not np.isfinite(det) or det <= 0.0:
        raise SingularFisherError(f"Fisher determinant must be positive, got {det}")
    return det


def _check_d(d: int, fisher: FisherMatrix | None = None, space: ParamSpace | None = None) -> int:
    d = int(d)
    if d < 1:
        raise ValueError("dimension must be a positive integer")
    if fisher is not None and fisher.d != d:
        raise ValueError(f"Fisher matrix is {fisher.d}x{fisher.d} but d={d}")
    if space is not None and space.d != d:
        raise ValueError(f"parameter space has d={space.d} but d={d}")
    return d


def credibility_of_lambda(d: int, lam: float) -> float:
    """c = 1 - Q(d/2, -log lambda); 0 at lambda = 1, increasing as lambda drops."""
    d = _check_d(d)
    lam = _check_lambda(lam)
    return 1.0 - reg_upper_gamma(d / 2.0, -math.log(lam))


def _props_from_u(d: int, u: float, fisher: FisherMatrix, space: ParamSpace) -> RegionProps:
    # u = -log(lambda) >= 0
    det = _spd_det(fisher)
    size = unit_ball_volume(d) / space.volume * (2.0 * u) ** (d / 2.0) / math.sqrt(det)
    cred = 1.0 - reg_upper_gamma(d / 2.0, u)
    lam = math.exp(-u)
    return RegionProps(lam=lam, size=size, credibility=cred, asymptotic_valid=size <= 1.0)


def size_of_lambda(d: int, lam: float, fisher, space: ParamSpace) -> RegionProps:
    """Full (lambda, size, credibility) triple of the region at a given lambda."""
    fisher = FisherMatrix.coerce(fisher)
    d = _check_d(d, fisher, space)
    lam = _check_lambda(lam)
    return _props_from_u(d, -math.log(lam), fisher, space)


def lambda_crit(d: int, fisher, space: ParamSpace) -> float:
    """Ratio parameter of the plausible region, sqrt(det(2 pi F^(-1)))/V.

    Values >= 1 mean no meaningful plausible region exists for this dataset
    (typical at small sample sizes); they are returned as-is and flagged by
    consumers, not raised.
    """
    fisher = FisherMatrix.coerce(fisher)
    d = _check_d(d, fisher, space)
    det = _spd_det(fisher)
    return (2.0 * math.pi) ** (d / 2.0) / math.sqrt(det) / space.volume


def size_from_credibility(d: int, c: float, fisher, space: ParamSpace) -> float:
    """Size of the region holding credibility c: s = (V_d/V)[2 Q^(-1)(d/2, 1-c)]^(d/2) det(F)^(-1/2)."""
    fisher = FisherMatrix.coerce(fisher)
    d = _check_d(d, fisher, space)
    if not (0.0 < c < 1.0):
        raise ValueError(f"credibility must lie in (0, 1), got {c}")
    u = inv_reg_upper_gamma(d / 2.0, 1.0 - c)
    return _props_from_u(d, u, fisher, space).size


def rse_asymptotic(d: int, lam: float, ml_estimate, true_param, fisher_ml) -> float:
    """|r_ML - r|^2 + 2 Tr{F_ML^(-1)} (-log lambda)/(d + 2).

    Equals the squared estimator error exactly at lambda = 1.
    """
    fisher_ml = FisherMatrix.coerce(fisher_ml)
    d = _check_d(d, fisher_ml)
    lam = _check_lambda(lam)
    _spd_det(fisher_ml)
    ml = np.asarray(ml_estimate, dtype=float).reshape(d)
    truth = np.asarray(true_param, dtype=float).reshape(d)
    sq = float(np.sum((ml - truth) ** 2))
    return sq + 2.0 * fisher_ml.inv_trace * (-math.log(lam)) / (d + 2.0)


def mrse_asymptotic(d: int, lam: float, fisher) -> float:
    """Tr{F^(-1)} (1 - 2 log lambda/(d + 2)); the Cramer-Rao value at lambda = 1."""
    fisher = FisherMatrix.coerce(fisher)
    d = _check_d(d, fisher)
    lam = _check_lambda(lam)
    _spd_det(fisher)
    return fisher.inv_trace * (1.0 - 2.0 * math.log(lam) / (d + 2.0))


def mrse_credible_fixed_s(d: int, s0: float, fisher, space: ParamSpace) -> float:
    """MRSE of the credible region reported at fixed size s0.

    Tr{F^(-1)} [1 + (s0 V / V_d)^(2/d) det(F)^(1/d) / (d + 2)].  For d = 1
    this reduces to the interval form 1/F + (s0 V)^2/12, equivalently
    :func:`mrse_credible_interval` with c tied to (s0, F).
    """
    fisher = FisherMatrix.coerce(fisher)
    d = _check_d(d, fisher, space)
    if not (0.0 < s0 <= 1.0):
        raise ValueError(f"s0 must lie in (0, 1], got {s0}")
    det = _spd_det(fisher)
    bracket = 1.0 + (s0 * space.volume / unit_ball_volume(d)) ** (2.0 / d) * det ** (1.0 / d) / (d + 2.0)
    return fisher.inv_trace * bracket


def mrse_credible_fixed_c(d: int, c0: float, fisher) -> float:
    """MRSE of the credible region reported at fixed credibility c0.

    Tr{F^(-1)} [1 + 2 Q^(-1)(d/2, 1 - c0)/(d + 2)].
    """
    fisher = FisherMatrix.coerce(fisher)
    d = _check_d(d, fisher)
    if not (0.0 < c0 < 1.0):
        raise ValueError(f"c0 must lie in (0, 1), got {c0}")
    _spd_det(fisher)
    u = inv_reg_upper_gamma(d / 2.0, 1.0 - c0)
    return fisher.inv_trace * (1.0 + 2.0 * u / (d + 2.0))


def mrse_credible_interval(s: float, c: float, space: ParamSpace) -> float:
    """d = 1 credible-interval MRSE as a function of (s, c) alone.

    (s V)^2/8 [1/Q^(-1)(1/2, 1-c) + 2/3]; the size-credibility pair is tied
    to the scalar Fisher information by F = 8 Q^(-1)(1/2, 1-c)/(s V)^2.
    """
    if space.d != 1:
        raise ValueError("interval form is defined for d = 1 only")
    if not (0.0 < s <= 1.0) or not (0.0 < c < 1.0):
        raise ValueError("need 0 < s <= 1 and 0 < c < 1")
    u = inv_reg_upper_gamma(0.5, 1.0 - c)
    return (s * space.volume) ** 2 / 8.0 * (1.0 / u + 2.0 / 3.0)


def mrse_plausible(d: int, fisher, space: ParamSpace) -> float:
    """MRSE of the plausible region.

    Tr{F^(-1)} [1 + log(V^2/(2 pi)^d)/(d + 2) + log det(F)/(d + 2)];
    identical to :func:`mrse_asymptotic` evaluated at lambda_crit, so it is
    meaningful only where lambda_crit < 1 (callers flag the degenerate case).
    """
    fisher = FisherMatrix.coerce(fisher)
    d = _check_d(d, fisher, space)
    det = _spd_det(fisher)
    v = space.volume
    bracket = 1.0 + (math.log(v**2 / (2.0 * math.pi) ** d) + math.log(det)) / (d + 2.0)
    return fisher.inv_trace * bracket


def trace_inverse_bound(d: int, detf: float, bound_trace: float) -> float:
    """Tr{F^(-1)} <= d B^(d-1)/det F for trace-class F with Tr{F} <= B.

    Tight at d = 1; loose but sufficient for the monotonicity arguments at
    d >= 2.
    """
    d = _check_d(d)
    if detf <= 0 or bound_trace <= 0:
        raise ValueError("det F and B must be positive")
    return d * bound_trace ** (d - 1) / detf


def mrse_credible_fixed_s_bound(d: int, s0: float, c: float, bound_trace: float, space: ParamSpace) -> float:
    """Trace-class upper bound of the fixed-size MRSE as a function of c.

    (s0 V / V_d)^2 d B^(d-1) / [2 Q^(-1)(d/2, 1-c)]^d * [1 + 2 Q^(-1)(d/2, 1-c)/(d + 2)].
    Strictly decreasing in c; equals the exact interval form at d = 1.
    """
    d = _check_d(d, space=space)
    if not (0.0 < s0 <= 1.0) or not (0.0 < c < 1.0) or bound_trace <= 0:
        raise ValueError("need s0 in (0,1], c in (0,1), B > 0")
    u = inv_reg_upper_gamma(d / 2.0, 1.0 - c)
    lead = (s0 * space.volume / unit_ball_volume(d)) ** 2
    return lead * d * bound_trace ** (d - 1) / (2.0 * u) ** d * (1.0 + 2.0 * u / (d + 2.0))


def mrse_plausible_bound_c(d: int, c: float, bound_trace: float, space: ParamSpace) -> float:
    """Trace-class upper bound of the plausible MRSE as a function of its credibility.

    d B^(d-1) V^2/(2 pi)^d * exp(-2 Q^(-1)(d/2, 1-c)) [1 + 2 Q^(-1)(d/2, 1-c)/(d + 2)].
    Exact (not just a bound) at d = 1, where B drops out.
    """
    d = _check_d(d, space=space)
    if not (0.0 < c < 1.0) or bound_trace <= 0:
        raise ValueError("need c in (0,1), B > 0")
    u = inv_reg_upper_gamma(d / 2.0, 1.0 - c)
    lead = d * bound_trace ** (d - 1) * space.volume**2 / (2.0 * math.pi) ** d
    return lead * math.exp(-2.0 * u) * (1.0 + 2.0 * u / (d + 2.0))


def plausible_size_from_detf(d: int, detf: float, space: ParamSpace) -> float:
    """Plausible-region size as a function of det F.

    s = (V_d / V) det(F)^(-1/2) [log(det(F) V^2/(2 pi)^d)]^(d/2), defined for
    det F > (2 pi)^d / V^2 (below that the plausible region degenerates).
    """
    d = _check_d(d, space=space)
    lead = (2.0 * math.pi) ** d / space.volume**2
    if detf <= lead:
        raise ValueError("no plausible region: det F must exceed (2 pi)^d / V^2")
    log_arg = math.log(detf / lead)
    return unit_ball_volume(d) / space.volume * log_arg ** (d / 2.0) / math.sqrt(detf)


def mrse_plausible_bound_detf(d: int, detf: float, bound_trace: float, space: ParamSpace) -> float:
    """Trace-class upper bound of the plausible MRSE parametrized by det F.

    d B^(d-1)/det(F) [1 + (s V / V_d)^(2/d) det(F)^(1/d)/(d + 2)] with
    s = s(det F) from :func:`plausible_size_from_detf`.
    """
    d = _check_d(d, space=space)
    if bound_trace <= 0:
        raise ValueError("B must be positive")
    s = plausible_size_from_detf(d, detf, space)
    bracket = 1.0 + (s * space.volume / unit_ball_volume(d)) ** (2.0 / d) * detf ** (1.0 / d) / (d + 2.0)
    return d * bound_trace ** (d - 1) / detf * bracket


def plausible_c_profile(d: int, c) -> np.ndarray | float:
    """The non-monotone factor u e^(-2u) of the plausible bound in c, u = Q^(-1)(d/2, 1-c).

    Unimodal with its global maximum at :func:`threshold_c_max`; beyond that
    credibility the whole plausible bound is guaranteed to decrease.  For
    d = 1 it is proportional to the squared plausible-interval size.
    """
    d = _check_d(d)
    c = np.asarray(c, dtype=float)
    if np.any(c <= 0) or np.any(c >= 1):
        raise ValueError("credibility grid must lie in (0, 1)")
    u = inv_reg_upper_gamma(d / 2.0, 1.0 - c)
    out = np.exp(-2.0 * u) * u
    return float(out) if np.ndim(out) == 0 else out


def plausible_detf_profile(d: int, detf, space: ParamSpace) -> np.ndarray | float:
    """x^(-1/2) [log(x V^2/(2 pi)^d)]^(d/2), proportional to the plausible size at det F = x.

    Unimodal with its global maximum at :func:`threshold_detf`; past that
    determinant the plausible size shrinks monotonically.
    """
    d = _check_d(d, space=space)
    x = np.asarray(detf, dtype=float)
    lead = (2.0 * math.pi) ** d / space.volume**2
    if np.any(x <= lead):
        raise ValueError("profile defined for det F > (2 pi)^d / V^2")
    out = np.log(x / lead) ** (d / 2.0) / np.sqrt(x)
    return float(out) if np.ndim(out) == 0 else out


def threshold_c_max(d: int) -> float:
    """Credibility 1 - Q(d/2, 1/2) at which the plausible c-profile peaks.

    Maps to lambda = e^(-1/2) for every d.
    """
    d = _check_d(d)
    return 1.0 - reg_upper_gamma(d / 2.0, 0.5)


def threshold_detf(d: int, space: ParamSpace) -> float:
    """Determinant (2 pi e)^d / V^2 at which the plausible size peaks.

    The matching ratio parameter satisfies lambda_crit^(1/d) = e^(-1/2)
    (so lambda_crit itself is e^(-1/2) at d = 1).
    """
    d = _check_d(d, space=space)
    return (2.0 * math.pi * math.e) ** d / space.volume**2


def props_for_spec(spec: RegionSpec, fisher, space: ParamSpace) -> RegionProps:
    """Region properties implied by a reporting constraint and a Fisher matrix.

    Fixed size pins s and derives (lambda, c); fixed credibility pins c and
    derives (lambda, s); plausible evaluates at lambda_crit, returning NaN
    size/credibility with ``asymptotic_valid=False`` when lambda_crit >= 1.
    """
    fisher = FisherMatrix.coerce(fisher)
    d = _check_d(fisher.d, fisher, space)
    if spec.kind == RegionSpec.FIXED_SIZE:
        det = _spd_det(fisher)
        u = 0.5 * (spec.value * space.volume / unit_ball_volume(d) * math.sqrt(det)) ** (2.0 / d)
        return _props_from_u(d, u, fisher, space)
    if spec.kind == RegionSpec.FIXED_CREDIBILITY:
        u = inv_reg_upper_gamma(d / 2.0, 1.0 - spec.value)
        return _props_from_u(d, u, fisher, space)
    lam = lambda_crit(d, fisher, space)
    if lam >= 1.0:
        return RegionProps(lam=lam, size=math.nan, credibility=math.nan, asymptotic_valid=False)
    return _props_from_u(d, -math.log(lam), fisher, space)
