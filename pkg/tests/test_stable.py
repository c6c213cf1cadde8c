"""Driver sampling primitives.

The sampler is pinned by the Laplace transform log E[exp(-lam*L_1)] =
lam**alpha, not by any textbook parametrization; the empirical-Laplace
test is the gate.  A cross-check against scipy's levy_stable (independent
implementation) guards the scale convention.
"""

import math

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import quad

from ssde import (
    RngStream,
    c_alpha,
    derive,
    jump_rate_above,
    sample_jumps_above,
    sample_stable_increment,
    small_jump_moments,
)
from ssde.mc import ks_two_sample


def test_increment_reproducible():
    a = sample_stable_increment(1.0, 1.5, RngStream(seed=5, stream_id=3), size=64)
    b = sample_stable_increment(1.0, 1.5, RngStream(seed=5, stream_id=3), size=64)
    c = sample_stable_increment(1.0, 1.5, RngStream(seed=5, stream_id=4), size=64)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_increment_domain():
    rng = RngStream(seed=0)
    with pytest.raises(ValueError):
        sample_stable_increment(0.0, 1.5, rng)
    with pytest.raises(ValueError):
        sample_stable_increment(1.0, 2.0, rng)
    with pytest.raises(ValueError):
        sample_stable_increment(1.0, 1.0, rng)


@pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
def test_laplace_transform_match(alpha):
    n = 120_000
    sample = sample_stable_increment(1.0, alpha, RngStream(seed=314, stream_id=int(alpha * 10)), size=n)
    for lam in (0.25, 0.5, 1.0):
        weights = np.exp(-lam * sample)
        mean = float(weights.mean())
        se = float(weights.std(ddof=1)) / math.sqrt(n)
        assert abs(math.log(mean) - lam**alpha) <= 3.0 * se / mean


def test_mean_zero():
    # compensated process: psi'(0) of lam^alpha vanishes at 0
    sample = sample_stable_increment(1.0, 1.5, RngStream(seed=2718, stream_id=0), size=200_000)
    se = float(sample.std(ddof=1)) / math.sqrt(sample.size)
    assert abs(float(sample.mean())) <= 3.0 * se


def test_increment_scaling_ks():
    n = 10_000
    direct = sample_stable_increment(16.0, 1.9, RngStream(seed=7, stream_id=0), size=n)
    unit = sample_stable_increment(1.0, 1.9, RngStream(seed=7, stream_id=1), size=n)
    report = ks_two_sample(direct, 16.0 ** (1.0 / 1.9) * unit)
    assert report.passed


def test_scipy_cross_check():
    # S1 parametrization, skew 1, scale |cos(pi*alpha/2)|^(1/alpha) has the
    # same Laplace transform exp(lam^alpha) and zero mean for alpha > 1
    alpha = 1.5
    n = 10_000
    ours = sample_stable_increment(1.0, alpha, RngStream(seed=99, stream_id=0), size=n)
    dist = stats.levy_stable
    old = dist.parameterization
    try:
        dist.parameterization = "S1"
        theirs = dist.rvs(
            alpha,
            1.0,
            loc=0.0,
            scale=abs(math.cos(math.pi * alpha / 2.0)) ** (1.0 / alpha),
            size=n,
            random_state=np.random.default_rng(1234),
        )
    finally:
        dist.parameterization = old
    assert ks_two_sample(ours, theirs).passed


def test_jump_rate_values():
    assert jump_rate_above(0.01, 1.5) == pytest.approx(282.0947918, rel=1e-9)
    assert jump_rate_above(1.0, 1.5) == pytest.approx(0.2820947918, rel=1e-9)
    assert jump_rate_above(1e6, 1.5) < 1e-8
    with pytest.raises(ValueError):
        jump_rate_above(0.0, 1.5)


def test_jump_events_properties():
    params = derive(1.5, 0.5, 0.5)
    eps = 0.01
    counts = []
    sizes_all = []
    for k in range(40):
        events = sample_jumps_above(eps, 0.0, 1.0, params, RngStream(seed=11, stream_id=k))
        counts.append(len(events))
        times = np.array([e.time for e in events])
        assert np.all(np.diff(times) >= 0.0)
        assert times.size == 0 or (times.min() > 0.0 and times.max() <= 1.0)
        sizes_all.append(np.array([e.size for e in events]))
    sizes = np.concatenate(sizes_all)
    assert np.all(sizes > eps)
    rate = jump_rate_above(eps, 1.5)
    se_count = math.sqrt(rate / len(counts))
    assert abs(np.mean(counts) - rate) <= 4.0 * se_count
    # Pareto tail ratio P(size > 2 eps) = 2^-alpha
    frac = float(np.mean(sizes > 2.0 * eps))
    se = math.sqrt(frac * (1.0 - frac) / sizes.size)
    assert abs(frac - 2.0**-1.5) <= 3.5 * se


def test_jump_events_reproducible_and_domain():
    params = derive(1.5, 0.5, 0.5)
    a = sample_jumps_above(0.05, 0.0, 2.0, params, RngStream(seed=21, stream_id=5))
    b = sample_jumps_above(0.05, 0.0, 2.0, params, RngStream(seed=21, stream_id=5))
    assert a == b
    with pytest.raises(ValueError):
        sample_jumps_above(0.05, 1.0, 1.0, params, RngStream(seed=21))


def test_small_jump_moments_values():
    params = derive(1.5, 0.5, 0.5)
    mean_rate, var_rate = small_jump_moments(1e-4, params)
    assert var_rate == pytest.approx(c_alpha(1.5) * 1e-4**0.5 / 0.5, rel=1e-12)
    assert var_rate == pytest.approx(8.4628e-3, rel=1e-4)
    assert mean_rate == pytest.approx(c_alpha(1.5) * 1e-4**-0.5 / 0.5, rel=1e-12)
    _, var_one = small_jump_moments(1.0, params)
    assert var_one == pytest.approx(0.8462843753, rel=1e-9)
    _, var_tiny = small_jump_moments(1e-12, params)
    assert var_tiny < 1e-6
    with pytest.raises(ValueError):
        small_jump_moments(0.0, params)


def test_small_jump_moments_quadrature():
    params = derive(1.3, 0.5, 0.0)
    eps = 0.37
    ca = c_alpha(1.3)
    mean_rate, var_rate = small_jump_moments(eps, params)
    tail_mean, _ = quad(lambda x: x * ca * x ** (-2.3), eps, np.inf)
    below_var, _ = quad(lambda x: x * x * ca * x ** (-2.3), 0.0, eps)
    assert mean_rate == pytest.approx(tail_mean, rel=1e-9)
    assert var_rate == pytest.approx(below_var, rel=1e-9)


def _truncated_increments(eps: float, alpha: float, n: int, rng: RngStream):
    # sum of jumps above eps on (0,1] minus their compensator mass
    g = rng.gen
    rate = jump_rate_above(eps, alpha)
    counts = g.poisson(rate, size=n)
    total = int(counts.sum())
    sizes = eps * g.uniform(size=total) ** (-1.0 / alpha)
    cum = np.concatenate(([0.0], np.cumsum(sizes)))
    ends = np.cumsum(counts)
    sums = cum[ends] - cum[ends - counts]
    mean_rate = c_alpha(alpha) * eps ** (1.0 - alpha) / (alpha - 1.0)
    return sums - mean_rate


def test_decomposition_consistency():
    # truncated-compensated sums converge in law to the direct increment
    alpha = 1.5
    n = 4000
    direct = sample_stable_increment(1.0, alpha, RngStream(seed=4242, stream_id=0), size=n)
    stats_by_eps = []
    for k, eps in enumerate((1e-1, 1e-2, 1e-3)):
        approx = _truncated_increments(eps, alpha, n, RngStream(seed=4242, stream_id=k + 1))
        stats_by_eps.append(ks_two_sample(direct, approx).statistic)
    assert stats_by_eps[1] < stats_by_eps[0]
    assert stats_by_eps[2] < stats_by_eps[0]
    assert ks_two_sample(
        direct,
        _truncated_increments(1e-3, alpha, n, RngStream(seed=4242, stream_id=3)),
    ).passed
