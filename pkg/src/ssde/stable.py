"""Sampling primitives for the spectrally positive alpha-stable driver.

The driver L is pinned by its Laplace transform, log E[exp(-lam*L_1)] =
lam**alpha, not by any textbook parametrization; the empirical-Laplace test is
this module's acceptance gate.  Whole increments come from a Chambers-Mallows-
Stuck transformation of a uniform angle and an exponential variate.  For the
jump-adapted schemes the same law is decomposed into exact Poisson jumps above
a cutoff eps (Pareto sizes by inverse CDF) plus the compensator mass of those
jumps, with the discarded compensated small jumps optionally replaced by a
Gaussian of matching variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .params import Parameters

__all__ = [
    "JumpEvent",
    "RngStream",
    "sample_stable_increment",
    "jump_rate_above",
    "sample_jumps_above",
    "small_jump_moments",
]


@dataclass(frozen=True)
class JumpEvent:
    time: float
    size: float


@dataclass
class RngStream:
    """Reproducible random stream keyed by (seed, stream_id).

    Distinct pairs give statistically independent sequences; the same pair
    replays the identical sequence.  The underlying generator is numpy's
    PCG64 seeded through SeedSequence(seed, spawn_key=(stream_id,)).
    """

    seed: int
    stream_id: int = 0
    gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.gen = np.random.Generator(np.random.PCG64(ss))


def sample_stable_increment(dt: float, alpha: float, rng: RngStream, size=None):
    """Sample L_dt with log E[exp(-lam*L_dt)] = dt*lam**alpha.

    Chambers-Mallows-Stuck for the totally right-skewed case.  With angle
    V uniform on (-pi/2, pi/2), W standard exponential and
    B = arctan(tan(pi*alpha/2))/alpha, the variate

        sin(alpha*(V+B)) / cos(V)^(1/alpha)
            * (cos(V - alpha*(V+B)) / W)^((1-alpha)/alpha)

    already carries the correct scale: the skew-normalizing constant
    (1 + tan^2(pi*alpha/2))^(1/(2*alpha)) cancels exactly against the scale
    |cos(pi*alpha/2)|^(1/alpha) demanded by the lam**alpha transform.
    Self-similarity gives L_dt = dt^(1/alpha) * L_1 in law.

    size=None returns a scalar, otherwise an ndarray of that shape.
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (1,2), got {alpha}")
    g = rng.gen
    v = math.pi * (g.uniform(size=size) - 0.5)
    w = g.exponential(size=size)
    b = math.atan(math.tan(math.pi * alpha / 2.0)) / alpha
    phase = alpha * (v + b)
    x = (
        np.sin(phase)
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - phase) / w) ** ((1.0 - alpha) / alpha)
    )
    return dt ** (1.0 / alpha) * x


def jump_rate_above(eps: float, alpha: float) -> float:
    """Poisson rate of jumps exceeding eps: c_alpha * eps^(-alpha) / alpha."""
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    calpha = alpha * (alpha - 1.0) / math.gamma(2.0 - alpha)
    return calpha * eps ** (-alpha) / alpha


def _raw_jumps(eps: float, t0: float, t1: float, alpha: float, rng: RngStream):
    """(times, sizes) of the jumps above eps on (t0, t1], times sorted.

    Draw order is fixed (count, then times, then sizes) so replays are
    byte-identical.  Sizes use the Pareto inverse CDF x = eps * U^(-1/alpha).
    """
    g = rng.gen
    rate = jump_rate_above(eps, alpha)
    count = int(g.poisson(rate * (t1 - t0)))
    times = np.sort(t0 + (t1 - t0) * g.uniform(size=count))
    sizes = eps * g.uniform(size=count) ** (-1.0 / alpha)
    return times, sizes


def sample_jumps_above(
    eps: float, t0: float, t1: float, params: Parameters, rng: RngStream
) -> list[JumpEvent]:
    """Jumps of the driving Poisson measure above eps on (t0, t1]."""
    if t1 <= t0:
        raise ValueError(f"need t0 < t1, got [{t0}, {t1}]")
    times, sizes = _raw_jumps(eps, t0, t1, params.alpha, rng)
    return [JumpEvent(float(t), float(x)) for t, x in zip(times, sizes)]


def small_jump_moments(eps: float, params: Parameters) -> tuple[float, float]:
    """(mean_rate, variance_rate) controlling the truncation at eps.

    mean_rate = c_alpha * eps^(1-alpha) / (alpha-1) is the compensator mass
    attached to the jumps that are kept, int_eps^inf x c_alpha x^(-1-alpha) dx
    (the mass below eps diverges for alpha > 1, which is exactly why the small
    jumps must stay compensated); schemes subtract it as drift.  The caller
    owns the sign.  variance_rate = int_0^eps x^2 c_alpha x^(-1-alpha) dx =
    c_alpha * eps^(2-alpha) / (2-alpha) is the variance per unit time of the
    discarded compensated small jumps, used by the Gaussian refinement.
    """
    if eps <= 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    alpha = params.alpha
    mean_rate = params.c_alpha * eps ** (1.0 - alpha) / (alpha - 1.0)
    variance_rate = params.c_alpha * eps ** (2.0 - alpha) / (2.0 - alpha)
    return mean_rate, variance_rate
