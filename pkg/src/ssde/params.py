"""Validated parameter bundle and the three-regime classification.

The admissible set is alpha in (1,2), beta in [1 - 1/alpha, 1), theta >= 0.
Derived quantities: eta = 1 - alpha*(1-beta) in [0,1), self-similarity index
gamma_index = 1/(1-eta), and the two Gamma thresholds whose ordering
threshold_low < threshold_high splits theta into three regimes:

    theta <= threshold_low            no solution spending zero time at 0
    threshold_low < theta < high      unique such solution, still hits 0
    theta >= threshold_high           never hits 0

Classification is strict-comparison deterministic; equality within 1e-9 is
reported through advisory boundary flags, never by changing the tag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from . import specfun

__all__ = [
    "ParameterError",
    "RegimeError",
    "Parameters",
    "RegimeTag",
    "BoundaryFlag",
    "Regime",
    "derive",
    "classify_regime",
]

# Equality band for boundary flags only; tags use exact comparisons.
BOUNDARY_TOL = 1e-9


class ParameterError(ValueError):
    """A parameter violates the admissible set."""


class RegimeError(RuntimeError):
    """An operation was asked to run in a regime where it is undefined."""


class RegimeTag(str, Enum):
    NO_CLASS_S_SOLUTION = "NoClassSSolution"
    NON_UNIQUE_WITH_CLASS_S = "NonUniqueWithClassS"
    NEVER_HITS_ZERO = "NeverHitsZero"


class BoundaryFlag(str, Enum):
    BETA_AT_LOWER_EDGE = "BetaAtLowerEdge"
    THETA_AT_LOW_THRESHOLD = "ThetaAtLowThreshold"
    THETA_AT_HIGH_THRESHOLD = "ThetaAtHighThreshold"


@dataclass(frozen=True)
class Parameters:
    alpha: float
    beta: float
    theta: float
    eta: float
    gamma_index: float
    threshold_low: float
    threshold_high: float
    c_alpha: float


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    boundary_flags: frozenset = field(default_factory=frozenset)


def derive(alpha: float, beta: float, theta: float) -> Parameters:
    """Validate (alpha, beta, theta) and populate all derived fields.

    eta values within 1e-12 of 0 are snapped to exactly 0 so that the
    beta = 1 - 1/alpha edge (where 1/alpha is not a representable float)
    lands on the Gamma(0) = inf convention instead of a spurious tiny eta.
    """
    if not 1.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in (1,2), got {alpha}")
    eta = 1.0 - alpha * (1.0 - beta)
    if eta < -1e-12 or beta >= 1.0:
        raise ParameterError(
            f"beta must lie in [1 - 1/alpha, 1) = [{1.0 - 1.0 / alpha}, 1), got {beta}"
        )
    if theta < 0.0:
        raise ParameterError(f"theta must be >= 0, got {theta}")
    eta = max(eta, 0.0)
    if eta != 0.0 and eta < 1e-12:
        eta = 0.0
    if eta == 0.0:
        low = 0.0
    else:
        low = math.gamma(alpha * beta) / math.gamma(eta)
    return Parameters(
        alpha=alpha,
        beta=beta,
        theta=theta,
        eta=eta,
        gamma_index=1.0 / (1.0 - eta),
        threshold_low=low,
        threshold_high=math.gamma(alpha),
        c_alpha=specfun.c_alpha(alpha),
    )


def classify_regime(params: Parameters) -> Regime:
    """Map theta against the two thresholds; equalities count as boundary cases.

    theta = threshold_low belongs to the no-class-S regime and
    theta = threshold_high to the never-hits-zero regime; both equalities are
    additionally flagged.  beta at the lower edge (eta = 0) is flagged because
    pathwise uniqueness then holds for every theta.
    """
    theta = params.theta
    if theta <= params.threshold_low:
        tag = RegimeTag.NO_CLASS_S_SOLUTION
    elif theta < params.threshold_high:
        tag = RegimeTag.NON_UNIQUE_WITH_CLASS_S
    else:
        tag = RegimeTag.NEVER_HITS_ZERO
    flags = set()
    if params.eta == 0.0:
        flags.add(BoundaryFlag.BETA_AT_LOWER_EDGE)
    if abs(theta - params.threshold_low) <= BOUNDARY_TOL:
        flags.add(BoundaryFlag.THETA_AT_LOW_THRESHOLD)
    if abs(theta - params.threshold_high) <= BOUNDARY_TOL:
        flags.add(BoundaryFlag.THETA_AT_HIGH_THRESHOLD)
    return Regime(tag=tag, boundary_flags=frozenset(flags))
