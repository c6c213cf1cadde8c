"""Lamperti route: the Levy process xi, exponential functional, time change."""

import math

import numpy as np
import pytest

from ssde import (
    HorizonExhausted,
    ParameterError,
    RngStream,
    cramer_condition_check,
    derive,
    exponential_functional,
    gamma_fn,
    lamperti_pssmp,
    laplace_exponent_xi,
    pssmp_marginal,
    simulate_xi,
    time_change_inverse,
    xi_marginal_sample,
    xi_mean_drift,
)
from ssde.lamperti import LevyPathXi
from ssde.mc import ks_two_sample

CANON = derive(1.5, 0.5, 0.5)


def test_xi_starts_at_zero_and_is_affine_between_jumps():
    path = simulate_xi(CANON, 2.0, 1e-2, RngStream(seed=8, stream_id=1))
    assert path.times[0] == 0.0
    assert path.values[0] == 0.0
    assert np.all(np.diff(path.times) > 0.0)
    # last recorded point is the horizon, reached by pure drift from the last jump
    dt = path.times[-1] - path.times[-2]
    drift_gain = path.values[-1] - path.values[-2]
    assert drift_gain == pytest.approx(path.slope * dt, rel=1e-12, abs=1e-15)
    # interior increments: affine part plus one positive jump log(1+x) > 0
    gaps = np.diff(path.times[:-1])
    rises = np.diff(path.values[:-1])
    assert np.all(rises - path.slope * gaps > 0.0)


def test_xi_replay():
    a = simulate_xi(CANON, 1.0, 1e-2, RngStream(seed=12, stream_id=2))
    b = simulate_xi(CANON, 1.0, 1e-2, RngStream(seed=12, stream_id=2))
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.values, b.values)


@pytest.mark.parametrize(
    "alpha,theta",
    [(1.5, 0.0), (1.5, 0.8862269254527579), (1.2, 1.0)],
)
def test_xi_mean_drift_monte_carlo(alpha, theta):
    params = derive(alpha, 0.5, theta)
    n = 100_000
    sample = xi_marginal_sample(params, 1.0, 1e-2, n, RngStream(seed=55, stream_id=int(alpha * 100)))
    se = float(sample.std(ddof=1)) / math.sqrt(n)
    assert abs(float(sample.mean()) - xi_mean_drift(params)) <= 3.0 * se


def test_xi_path_end_matches_marginal_sampler():
    # the vectorized marginal sampler and the path construction share the law
    n = 1500
    eps = 1e-2
    ends = np.array(
        [
            simulate_xi(CANON, 1.0, eps, RngStream(seed=77, stream_id=i)).values[-1]
            for i in range(n)
        ]
    )
    marginal = xi_marginal_sample(
        CANON, 1.0, eps, n, RngStream(seed=78, stream_id=0), refinement=False
    )
    assert ks_two_sample(ends, marginal).passed


def test_xi_laplace_exponent():
    n = 50_000
    for k, lam in enumerate((0.25, 0.5, 1.0 - CANON.eta)):
        sample = xi_marginal_sample(CANON, 1.0, 1e-2, n, RngStream(seed=91, stream_id=k))
        weights = np.exp(lam * sample)
        mean = float(weights.mean())
        se_log = float(weights.std(ddof=1)) / math.sqrt(n) / mean
        assert abs(math.log(mean) - laplace_exponent_xi(lam, CANON)) <= 3.0 * se_log


def test_exponential_functional_identity():
    flat = LevyPathXi(
        times=np.array([0.0, 3.0]),
        values=np.array([0.0, 0.0]),
        drift_used=0.0,
        cutoff_used=1e-3,
        comp_rate=0.0,
    )
    a = exponential_functional(flat, 1.0 - CANON.eta)
    assert float(a.values[-1]) == pytest.approx(3.0, rel=1e-14)
    assert time_change_inverse(a, 1.7) == pytest.approx(1.7, rel=1e-12)


def test_exponential_functional_pure_drift():
    slope = -0.9
    p = 1.0 - CANON.eta
    drift = LevyPathXi(
        times=np.array([0.0, 5.0]),
        values=np.array([0.0, slope * 5.0]),
        drift_used=slope,
        cutoff_used=1e-3,
        comp_rate=0.0,
    )
    a = exponential_functional(drift, p)
    want = (math.exp(p * slope * 5.0) - 1.0) / (p * slope)
    assert float(a.values[-1]) == pytest.approx(want, rel=1e-13)
    # closed-form inverse of the same segment
    t = 0.5 * want
    tau = time_change_inverse(a, t)
    assert tau == pytest.approx(math.log1p(p * slope * t) / (p * slope), rel=1e-11)


def test_time_change_round_trip():
    xi = simulate_xi(CANON, 4.0, 1e-2, RngStream(seed=101, stream_id=0))
    p = 1.0 - CANON.eta
    a = exponential_functional(xi, p)
    assert np.all(np.diff(a.values) > 0.0)
    top = float(a.values[-1])
    for t in np.linspace(0.0, 0.97 * top, 23):
        tau = time_change_inverse(a, float(t))
        # evaluate A at tau by re-integrating the segment it lands in
        k = int(np.searchsorted(a.times, tau, side="right")) - 1
        k = min(max(k, 0), a.times.size - 2)
        s = xi.values[k]
        dt = tau - float(a.times[k])
        w = p * xi.slope * dt
        if abs(w) < 1e-12:
            seg = math.exp(p * s) * dt
        else:
            seg = math.exp(p * s) * math.expm1(w) / (p * xi.slope)
        assert float(a.values[k]) + seg == pytest.approx(float(t), abs=1e-10 * max(top, 1.0))
    with pytest.raises(HorizonExhausted):
        time_change_inverse(a, top * 1.01)
    with pytest.raises(ParameterError):
        time_change_inverse(a, -0.1)


def test_pssmp_starts_at_x0():
    path = lamperti_pssmp(CANON, 2.0, 1.0, RngStream(seed=111, stream_id=0), eps=1e-2)
    assert path.times[0] == 0.0
    assert float(path.values[0]) == 2.0
    assert np.all(np.diff(path.times) > 0.0)
    assert np.all(path.values >= 0.0)
    assert path.times[-1] == pytest.approx(1.0, rel=1e-12)


def test_pssmp_absorbs_in_subcritical_regime():
    params = derive(1.5, 0.5, 0.0)
    absorbed = 0
    for i in range(40):
        path = lamperti_pssmp(params, 0.5, 50.0, RngStream(seed=121, stream_id=i), eps=1e-2)
        if path.absorbed_at is not None:
            absorbed += 1
            assert 0.0 < path.absorbed_at <= 50.0
            after = path.times >= path.absorbed_at
            assert np.all(path.values[after] == 0.0)
    assert absorbed >= 38  # theta=0 hits zero a.s.; horizon censoring is rare


def test_pssmp_marginal_basics():
    assert pssmp_marginal(CANON, 1.5, 0.0, RngStream(seed=7), eps=1e-2) == 1.5
    vals = np.array(
        [
            pssmp_marginal(derive(1.5, 0.5, 0.0), 0.5, 40.0, RngStream(seed=131, stream_id=i), eps=1e-2)
            for i in range(30)
        ]
    )
    assert np.all(vals >= 0.0)
    assert float(np.mean(vals == 0.0)) > 0.9


def test_cramer_examples():
    assert cramer_condition_check(CANON)
    assert not cramer_condition_check(derive(1.5, 0.5, 0.0))
    assert not cramer_condition_check(derive(1.5, 0.5, CANON.threshold_low))


def test_cramer_agrees_with_threshold_on_grid():
    alphas = np.linspace(1.05, 1.95, 8)
    for alpha in alphas:
        lo = 1.0 - 1.0 / alpha
        for beta in np.linspace(lo + 1e-3, 0.97, 8):
            for theta in np.linspace(0.0, 1.5, 8):
                params = derive(float(alpha), float(beta), float(theta))
                assert cramer_condition_check(params) == (params.theta > params.threshold_low)


def test_mean_drift_sign_dichotomy():
    high = gamma_fn(1.5)
    assert xi_mean_drift(derive(1.5, 0.5, high - 1e-9)) < 0.0
    assert xi_mean_drift(derive(1.5, 0.5, high + 1e-9)) > 0.0
    assert xi_mean_drift(derive(1.5, 0.5, high)) == 0.0
