"""Bayesian error-region accuracy toolkit.

Likelihood-ratio credible and plausible regions for maximum-likelihood
estimators under a uniform box prior, their region squared-error (RSE)
and mean region squared-error (MRSE) accuracy measures, brute-force
Monte Carlo validators, and greedy adaptive protocols that pick
measurement settings to minimize the MRSE.
"""

from bayesreg.region import (
    FisherMatrix,
    ParamSpace,
    RegionProps,
    RegionSpec,
    SingularFisherError,
)

__all__ = [
    "FisherMatrix",
    "ParamSpace",
    "RegionProps",
    "RegionSpec",
    "SingularFisherError",
]

__version__ = "0.1.0"
