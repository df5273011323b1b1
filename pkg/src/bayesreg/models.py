"""The three quantum estimation models behind one common interface.

* Homodyne phase (d = 1): a squeezed-vacuum mode carrying an unknown
  relative phase phi is read out by homodyne detection at a controllable
  local-oscillator (LO) phase theta.  The quadrature outcome is a
  zero-mean Gaussian with variance

      var(theta, phi) = [cosh(2 zeta) + cos(2 theta - 2 phi) sinh(2 zeta)] / 2.

  We use the normalized Gaussian density; the per-copy Fisher information
  about phi is then (d var/d phi)^2 / (2 var^2).  A historical variant of
  the information with denominator 2 var instead of 2 var^2 circulates in
  the literature; it is kept as ``homodyne_phase_fisher_printed`` for
  comparison, and the optimal-LO-phase candidates quoted with it are
  reported next to the numeric argmax of the adopted information.

* Three-path interferometer (d = 2): a |1,1,1> Fock state traverses a
  symmetric beam tritter, per-arm phase shifts (psi1 - phi1, psi2 - phi2),
  and a second tritter; photon counting yields 10 outcomes (n1, n2, n3)
  with n1 + n2 + n3 = 3.  Born probabilities come from 3 x 3 permanents
  with output-row repetition.  Outcome indices follow the frozen
  lexicographically descending order of (n1, n2, n3).

* Squeezed-state pair readout (d = 2): a single-mode Gaussian state of
  known unit temperature, squeeze parameter nu and orientation alpha is
  probed by homodyne detection at an LO-phase pair (theta1, theta2); one
  copy yields one quadrature sample at each phase.  The marginal variance

      var(theta) = [nu^2 + 1 + (nu^2 - 1) cos(2 alpha + 2 theta)] / (4 nu)

  is the unique zero-mean Gaussian convention whose information matrix
  reproduces the standard closed-form elements returned by
  ``squeezed_fisher_elements``; the pair information is the sum of the two
  single-phase (rank-one) components.

Model evaluation is pure; samplers take an explicit generator so callers
control the random streams.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from bayesreg.region import FisherMatrix, ParamSpace

__all__ = [
    "StatisticalModel",
    "HomodynePhaseModel",
    "ThreePathModel",
    "SqueezedPairModel",
    "OptSettingResult",
    "homodyne_phase_variance",
    "homodyne_phase_logpdf",
    "homodyne_phase_fisher",
    "homodyne_phase_fisher_printed",
    "homodyne_phase_opt_setting",
    "tritter_unitary",
    "three_path_probs",
    "three_path_fisher",
    "squeezed_variance",
    "squeezed_fisher_elements",
    "sample",
]


# ---------------------------------------------------------------------------
# homodyne phase model (d = 1)
# ---------------------------------------------------------------------------


def homodyne_phase_variance(phi, zeta: float, theta):
    """Quadrature variance [cosh 2 zeta + cos(2 theta - 2 phi) sinh 2 zeta]/2."""
    phi = np.asarray(phi, dtype=float)
    theta = np.asarray(theta, dtype=float)
    out = 0.5 * (math.cosh(2.0 * zeta) + np.cos(2.0 * theta - 2.0 * phi) * math.sinh(2.0 * zeta))
    return float(out) if out.ndim == 0 else out


def homodyne_phase_logpdf(x, phi, zeta: float, theta):
    """Log density of the quadrature outcome: normalized N(0, var(theta, phi))."""
    x = np.asarray(x, dtype=float)
    var = homodyne_phase_variance(phi, zeta, theta)
    out = -0.5 * np.log(2.0 * math.pi * var) - x**2 / (2.0 * var)
    return float(out) if np.ndim(out) == 0 else out


def _homodyne_fisher_per_copy(phi, zeta: float, theta):
    # information of N(0, var(phi)): (var')^2 / (2 var^2)
    var = homodyne_phase_variance(phi, zeta, theta)
    dvar = np.sin(2.0 * np.asarray(theta, dtype=float) - 2.0 * np.asarray(phi, dtype=float)) * math.sinh(2.0 * zeta)
    return dvar**2 / (2.0 * var**2)


def homodyne_phase_fisher(phi: float, zeta: float, theta: float, n_copies: int = 1) -> FisherMatrix:
    """Per-dataset Fisher information about phi for n i.i.d. quadrature samples.

    Zero at zeta = 0 and whenever theta - phi is a multiple of pi/2.
    """
    if n_copies < 1:
        raise ValueError("n_copies must be >= 1")
    f1 = float(_homodyne_fisher_per_copy(phi, zeta, theta))
    return FisherMatrix([[n_copies * f1]])


def homodyne_phase_fisher_printed(phi, zeta: float, theta, n_copies: int = 1):
    """Comparison convention with denominator 2 var instead of 2 var^2.

    Kept only so the two conventions and their optima can be compared;
    the sampling distribution of this package corresponds to
    :func:`homodyne_phase_fisher`.
    """
    var = homodyne_phase_variance(phi, zeta, theta)
    s2 = math.sinh(2.0 * zeta)
    c2 = math.cosh(2.0 * zeta)
    out = n_copies * (s2**2 - (c2 - 2.0 * var) ** 2) / (2.0 * var)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class OptSettingResult:
    """Argmax of the per-copy information over the LO phase, plus diagnostics.

    ``branch_values`` are the closed-form candidates phi +/- arccos(+/- tanh
    zeta)/2 (mod pi) quoted with the printed-information convention;
    ``branch_gap`` is the pi/2-periodic circular distance from the numeric
    argmax to the nearest candidate.  Under the adopted information the gap
    is generally nonzero; under the printed convention it vanishes.
    """

    theta: float
    fisher_per_copy: float
    degenerate: bool
    branch_values: tuple
    branch_gap: float


def _circ_dist(a: float, b: float, period: float) -> float:
    delta = abs(a - b) % period
    return min(delta, period - delta)


def homodyne_phase_opt_setting(phi: float, zeta: float, grid_points: int = 1001) -> OptSettingResult:
    """LO phase maximizing the adopted per-copy information, by grid + bounded refine.

    The objective is pi-periodic in theta, so the search runs over [0, pi).
    At zeta = 0 the objective is flat and the result is flagged degenerate.
    """
    branches = tuple(
        float((phi + sign * math.acos(t) / 2.0) % math.pi)
        for t in (math.tanh(zeta), -math.tanh(zeta))
        for sign in (1.0, -1.0)
    )
    if abs(math.sinh(2.0 * zeta)) < 1e-15:
        return OptSettingResult(theta=0.0, fisher_per_copy=0.0, degenerate=True,
                                branch_values=branches, branch_gap=math.nan)
    grid = np.linspace(0.0, math.pi, grid_points, endpoint=False)
    values = _homodyne_fisher_per_copy(phi, zeta, grid)
    i = int(np.argmax(values))
    h = math.pi / grid_points
    res = optimize.minimize_scalar(
        lambda t: -_homodyne_fisher_per_copy(phi, zeta, t),
        bounds=(grid[i] - h, grid[i] + h),
        method="bounded",
        options={"xatol": 1e-9},
    )
    theta = float(res.x % math.pi)
    gap = min(_circ_dist(theta, b, math.pi / 2.0) for b in branches)
    return OptSettingResult(
        theta=theta,
        fisher_per_copy=float(_homodyne_fisher_per_copy(phi, zeta, theta)),
        degenerate=False,
        branch_values=branches,
        branch_gap=gap,
    )


# ---------------------------------------------------------------------------
# three-path interferometer (d = 2)
# ---------------------------------------------------------------------------

_OMEGA = np.exp(2j * math.pi / 3.0)
_U3 = np.array(
    [[1.0, _OMEGA, _OMEGA],
     [_OMEGA, 1.0, _OMEGA],
     [_OMEGA, _OMEGA, 1.0]],
    dtype=complex,
) / math.sqrt(3.0)

# occupation triples (n1, n2, n3), n1 + n2 + n3 = 3, lexicographically descending
THREE_PATH_OUTCOMES = (
    (3, 0, 0), (2, 1, 0), (2, 0, 1), (1, 2, 0), (1, 1, 1),
    (1, 0, 2), (0, 3, 0), (0, 2, 1), (0, 1, 2), (0, 0, 3),
)
_ROW_REPEATS = tuple(
    tuple(i for i, n in enumerate(triple) for _ in range(n)) for triple in THREE_PATH_OUTCOMES
)
_OUTCOME_NORM = np.array(
    [math.factorial(n1) * math.factorial(n2) * math.factorial(n3) for n1, n2, n3 in THREE_PATH_OUTCOMES],
    dtype=float,
)


def tritter_unitary() -> np.ndarray:
    """Symmetric 3 x 3 beam-tritter unitary with 1/sqrt(3) moduli."""
    return _U3.copy()


def _mode_unitary(t1, t2) -> np.ndarray:
    # U3 @ diag(e^{i t1}, e^{i t2}, 1) @ U3, broadcast over phase arrays
    e1 = np.exp(1j * np.asarray(t1, dtype=float))[..., None, None]
    e2 = np.exp(1j * np.asarray(t2, dtype=float))[..., None, None]
    a0 = np.outer(_U3[:, 0], _U3[0, :])
    a1 = np.outer(_U3[:, 1], _U3[1, :])
    a2 = np.outer(_U3[:, 2], _U3[2, :])
    return a0 * e1 + a1 * e2 + a2


def _permanent3(m: np.ndarray) -> np.ndarray:
    # direct 6-term expansion; every instance here is 3 x 3
    return (
        m[..., 0, 0] * (m[..., 1, 1] * m[..., 2, 2] + m[..., 1, 2] * m[..., 2, 1])
        + m[..., 0, 1] * (m[..., 1, 0] * m[..., 2, 2] + m[..., 1, 2] * m[..., 2, 0])
        + m[..., 0, 2] * (m[..., 1, 0] * m[..., 2, 1] + m[..., 1, 1] * m[..., 2, 0])
    )


def three_path_probs(psi1, psi2, phi1, phi2) -> np.ndarray:
    """The 10 photon-counting Born probabilities, shape (..., 10).

    Depends on the control and unknown phases only through
    (psi1 - phi1, psi2 - phi2).  Probabilities are nonnegative and sum to
    one (unitarity).
    """
    t1 = np.asarray(psi1, dtype=float) - np.asarray(phi1, dtype=float)
    t2 = np.asarray(psi2, dtype=float) - np.asarray(phi2, dtype=float)
    w = _mode_unitary(t1, t2)
    probs = [
        np.abs(_permanent3(w[..., rows, :])) ** 2 / norm
        for rows, norm in zip(_ROW_REPEATS, _OUTCOME_NORM)
    ]
    return np.clip(np.stack(probs, axis=-1), 0.0, None)


def three_path_fisher(psi1, psi2, phi1, phi2, n_copies: int = 1, step: float = 1e-5) -> FisherMatrix:
    """2 x 2 Fisher information about (phi1, phi2) from photon counting.

    Central differences of the outcome probabilities (absolute step on the
    phases); outcomes with probability below 1e-12 are excluded from the
    information sum.
    """
    if n_copies < 1:
        raise ValueError("n_copies must be >= 1")
    p0 = three_path_probs(psi1, psi2, phi1, phi2)
    dp1 = (three_path_probs(psi1, psi2, phi1 + step, phi2) - three_path_probs(psi1, psi2, phi1 - step, phi2)) / (2 * step)
    dp2 = (three_path_probs(psi1, psi2, phi1, phi2 + step) - three_path_probs(psi1, psi2, phi1, phi2 - step)) / (2 * step)
    mask = p0 > 1e-12
    f = np.zeros((2, 2))
    for i, di in enumerate((dp1, dp2)):
        for j, dj in enumerate((dp1, dp2)):
            f[i, j] = np.sum(di[mask] * dj[mask] / p0[mask])
    return FisherMatrix(n_copies * 0.5 * (f + f.T))


# ---------------------------------------------------------------------------
# squeezed-state pair readout (d = 2)
# ---------------------------------------------------------------------------


def squeezed_variance(nu, alpha, theta):
    """Quadrature variance [nu^2 + 1 + (nu^2 - 1) cos(2 alpha + 2 theta)]/(4 nu)."""
    nu = np.asarray(nu, dtype=float)
    if np.any(nu <= 0):
        raise ValueError("squeeze parameter nu must be positive")
    alpha = np.asarray(alpha, dtype=float)
    theta = np.asarray(theta, dtype=float)
    out = (nu**2 + 1.0 + (nu**2 - 1.0) * np.cos(2.0 * alpha + 2.0 * theta)) / (4.0 * nu)
    return float(out) if out.ndim == 0 else out


def squeezed_fisher_elements(nu: float, alpha: float, theta: float) -> np.ndarray:
    """Single-LO-phase 2 x 2 information about (nu, alpha); symmetric, rank <= 1."""
    if nu <= 0:
        raise ValueError("squeeze parameter nu must be positive")
    c = math.cos(2.0 * alpha + 2.0 * theta)
    s = math.sin(2.0 * alpha + 2.0 * theta)
    denom = (nu**2 + (nu**2 - 1.0) * c + 1.0) ** 2
    f11 = (nu**2 + (nu**2 + 1.0) * c - 1.0) ** 2 / (2.0 * nu**2 * denom)
    f22 = 2.0 * (nu**2 - 1.0) ** 2 * s**2 / denom
    f12 = (1.0 - nu**2) * s * (nu**2 + (nu**2 + 1.0) * c - 1.0) / (nu * denom)
    return np.array([[f11, f12], [f12, f22]])


# ---------------------------------------------------------------------------
# common model interface
# ---------------------------------------------------------------------------


class StatisticalModel(ABC):
    """A parametric outcome distribution with settings, sampler and information.

    Subclasses provide sufficient statistics so that log-likelihoods can be
    evaluated for a whole matrix of parameter points at once (``params`` of
    shape (d,) or (M, d)).
    """

    name: str
    d: int
    d_m: int
    param_names: tuple
    setting_names: tuple
    param_space: ParamSpace
    setting_space: ParamSpace
    outcome_kind: str  # "continuous" | "discrete"

    @abstractmethod
    def batch_stats(self, outcomes):
        """Sufficient statistics of one batch of outcomes."""

    @abstractmethod
    def stats_log_likelihood(self, setting, stats, params):
        """Batch log-likelihood from sufficient statistics; vectorized over params rows."""

    @abstractmethod
    def sample(self, params, setting, n: int, rng: np.random.Generator):
        """n i.i.d. outcomes at (params, setting)."""

    @abstractmethod
    def fisher_single(self, params, setting) -> np.ndarray:
        """Per-copy (d x d) Fisher information at (params, setting)."""

    def batch_log_likelihood(self, setting, outcomes, params):
        return self.stats_log_likelihood(setting, self.batch_stats(outcomes), params)

    def known_params(self) -> dict:
        """Fixed model constants (serialized alongside configs)."""
        return {}

    def _params_matrix(self, params):
        p = np.asarray(params, dtype=float)
        if p.ndim == 1:
            if p.size != self.d:
                raise ValueError(f"expected {self.d} parameters, got {p.size}")
            return p[None, :], True
        if p.ndim != 2 or p.shape[1] != self.d:
            raise ValueError(f"params must have shape (d,) or (M, d) with d={self.d}")
        return p, False

    def _setting_vector(self, setting) -> np.ndarray:
        s = np.atleast_1d(np.asarray(setting, dtype=float))
        if s.shape != (self.d_m,):
            raise ValueError(f"expected {self.d_m} setting components, got shape {s.shape}")
        return s


class HomodynePhaseModel(StatisticalModel):
    """Unknown LO-relative phase phi of a squeezed-vacuum homodyne readout."""

    name = "homodyne"
    d = 1
    d_m = 1
    param_names = ("phi",)
    setting_names = ("theta",)
    outcome_kind = "continuous"

    def __init__(self, zeta: float, phi_range=(0.0, math.pi / 2.0), theta_range=(0.0, math.pi)):
        self.zeta = float(zeta)
        self.param_space = ParamSpace([phi_range[0]], [phi_range[1]])
        self.setting_space = ParamSpace([theta_range[0]], [theta_range[1]])

    def known_params(self) -> dict:
        return {"zeta": self.zeta}

    def batch_stats(self, outcomes):
        x = np.asarray(outcomes, dtype=float).reshape(-1)
        return x.size, float(np.sum(x**2))

    def stats_log_likelihood(self, setting, stats, params):
        theta = self._setting_vector(setting)[0]
        n, sum_sq = stats
        p, single = self._params_matrix(params)
        var = homodyne_phase_variance(p[:, 0], self.zeta, theta)
        ll = -0.5 * n * np.log(2.0 * math.pi * var) - sum_sq / (2.0 * var)
        return float(ll[0]) if single else ll

    def sample(self, params, setting, n: int, rng: np.random.Generator):
        p, _ = self._params_matrix(params)
        theta = self._setting_vector(setting)[0]
        sd = math.sqrt(homodyne_phase_variance(p[0, 0], self.zeta, theta))
        return rng.normal(0.0, sd, size=n)

    def fisher_single(self, params, setting) -> np.ndarray:
        p, _ = self._params_matrix(params)
        theta = self._setting_vector(setting)[0]
        return np.array([[float(_homodyne_fisher_per_copy(p[0, 0], self.zeta, theta))]])


class ThreePathModel(StatisticalModel):
    """Unknown relative phases (phi1, phi2) of a triple-Fock three-path interferometer."""

    name = "three-path"
    d = 2
    d_m = 2
    param_names = ("phi1", "phi2")
    setting_names = ("psi1", "psi2")
    outcome_kind = "discrete"
    n_outcomes = len(THREE_PATH_OUTCOMES)

    def __init__(self, phi_range=(0.0, math.pi / 2.0), psi_range=(0.0, 2.0 * math.pi)):
        self.param_space = ParamSpace([phi_range[0]] * 2, [phi_range[1]] * 2)
        self.setting_space = ParamSpace([psi_range[0]] * 2, [psi_range[1]] * 2)

    def batch_stats(self, outcomes):
        idx = np.asarray(outcomes, dtype=int).reshape(-1)
        if np.any(idx < 0) or np.any(idx >= self.n_outcomes):
            raise ValueError("three-path outcomes are indices 0..9")
        return np.bincount(idx, minlength=self.n_outcomes)

    def stats_log_likelihood(self, setting, stats, params):
        psi = self._setting_vector(setting)
        counts = stats
        p, single = self._params_matrix(params)
        probs = three_path_probs(psi[0], psi[1], p[:, 0], p[:, 1])
        ll = np.zeros(p.shape[0])
        with np.errstate(divide="ignore"):
            for o in np.nonzero(counts)[0]:
                ll += counts[o] * np.log(probs[:, o])
        return float(ll[0]) if single else ll

    def sample(self, params, setting, n: int, rng: np.random.Generator):
        p, _ = self._params_matrix(params)
        psi = self._setting_vector(setting)
        probs = three_path_probs(psi[0], psi[1], p[0, 0], p[0, 1])
        return rng.choice(self.n_outcomes, size=n, p=probs / probs.sum())

    def fisher_single(self, params, setting) -> np.ndarray:
        p, _ = self._params_matrix(params)
        psi = self._setting_vector(setting)
        return three_path_fisher(psi[0], psi[1], p[0, 0], p[0, 1]).matrix


class SqueezedPairModel(StatisticalModel):
    """Unknown squeeze/orientation (nu, alpha) probed at an LO-phase pair.

    One copy yields one quadrature sample at each of the two LO phases; the
    per-copy information is the sum of the two rank-one single-phase
    components, so a nondegenerate pair makes the problem identifiable.
    """

    name = "squeezed"
    d = 2
    d_m = 2
    param_names = ("nu", "alpha")
    setting_names = ("theta1", "theta2")
    outcome_kind = "continuous"

    def __init__(self, nu_range=(1.0, 5.0), alpha_range=(0.0, math.pi / 2.0), theta_range=(0.0, math.pi)):
        self.param_space = ParamSpace([nu_range[0], alpha_range[0]], [nu_range[1], alpha_range[1]])
        self.setting_space = ParamSpace([theta_range[0]] * 2, [theta_range[1]] * 2)

    def batch_stats(self, outcomes):
        x = np.asarray(outcomes, dtype=float)
        if x.ndim != 2 or x.shape[1] != 2:
            raise ValueError("squeezed-pair outcomes have shape (n, 2)")
        return x.shape[0], float(np.sum(x[:, 0] ** 2)), float(np.sum(x[:, 1] ** 2))

    def stats_log_likelihood(self, setting, stats, params):
        t1, t2 = self._setting_vector(setting)
        n, s1, s2 = stats
        p, single = self._params_matrix(params)
        var1 = squeezed_variance(p[:, 0], p[:, 1], t1)
        var2 = squeezed_variance(p[:, 0], p[:, 1], t2)
        ll = (
            -0.5 * n * (np.log(2.0 * math.pi * var1) + np.log(2.0 * math.pi * var2))
            - s1 / (2.0 * var1)
            - s2 / (2.0 * var2)
        )
        return float(ll[0]) if single else ll

    def sample(self, params, setting, n: int, rng: np.random.Generator):
        p, _ = self._params_matrix(params)
        t1, t2 = self._setting_vector(setting)
        sd1 = math.sqrt(squeezed_variance(p[0, 0], p[0, 1], t1))
        sd2 = math.sqrt(squeezed_variance(p[0, 0], p[0, 1], t2))
        return np.column_stack([rng.normal(0.0, sd1, size=n), rng.normal(0.0, sd2, size=n)])

    def fisher_single(self, params, setting) -> np.ndarray:
        p, _ = self._params_matrix(params)
        t1, t2 = self._setting_vector(setting)
        return squeezed_fisher_elements(p[0, 0], p[0, 1], t1) + squeezed_fisher_elements(p[0, 0], p[0, 1], t2)


def sample(model: StatisticalModel, params, setting, n: int, rng: np.random.Generator):
    """n i.i.d. outcomes from the model; deterministic given the generator state."""
    if n < 1:
        raise ValueError("n must be >= 1")
    params = np.atleast_1d(np.asarray(params, dtype=float))
    if not model.param_space.contains(params):
        raise ValueError(f"parameters {params.tolist()} outside the parameter space")
    return model.sample(params, setting, n, rng)
