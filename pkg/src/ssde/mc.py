"""Monte Carlo harness: estimators with error bars, two-sample KS tests, and
the distributional identity checks built from them.

Stream discipline: every estimator takes a base stream (seed, id) and gives
path i the stream (seed, id + 1 + i); a two-sample test gives side B the
block starting at id + 1 + n.  Results are therefore deterministic given
(seed, id, n, config) and independent of the worker count: per-path values
are assembled by index and reduced with compensated summation.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .lamperti import pssmp_marginal
from .params import ParameterError, Parameters, RegimeError, RegimeTag, classify_regime
from .sde import (
    SchemeConfig,
    simulate_v,
    simulate_z_absorbed,
    simulate_z_extended,
)
from .stable import RngStream

__all__ = [
    "McSummary",
    "KsReport",
    "summarize",
    "derive_stream",
    "ks_two_sample",
    "estimate_extinction_probability",
    "extinction_profile",
    "drift_identity_check",
    "self_similarity_test",
    "lamperti_vs_sde_test",
]


@dataclass(frozen=True)
class McSummary:
    n: int
    mean: float
    std_error: float
    ci95_low: float
    ci95_high: float


@dataclass(frozen=True)
class KsReport:
    statistic: float
    n1: int
    n2: int
    critical_value_1pct: float
    passed: bool


def derive_stream(seed: int, id: int) -> RngStream:
    """Independent reproducible stream; distinct ids give distinct sequences."""
    return RngStream(seed=seed, stream_id=id)


def _path_stream(rng: RngStream, i: int) -> RngStream:
    return RngStream(seed=rng.seed, stream_id=rng.stream_id + 1 + i)


def summarize(values) -> McSummary:
    """Mean, standard error and 95% CI; fsum keeps the reduction exact."""
    vals = np.asarray(values, dtype=float)
    n = int(vals.size)
    if n == 0:
        raise ParameterError("cannot summarize an empty sample")
    mean = math.fsum(vals.tolist()) / n
    if n > 1:
        var = math.fsum(((v - mean) ** 2 for v in vals.tolist())) / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = 0.0
    return McSummary(
        n=n,
        mean=mean,
        std_error=se,
        ci95_low=mean - 1.96 * se,
        ci95_high=mean + 1.96 * se,
    )


def ks_two_sample(xs, ys) -> KsReport:
    """Two-sample Kolmogorov-Smirnov at the 1% level.

    sup |F1 - F2| over the merged sorted grid (right-continuous CDFs, so
    ties contribute consistently on both sides); critical value
    1.628*sqrt((n1+n2)/(n1*n2)).
    """
    xs = np.sort(np.asarray(xs, dtype=float))
    ys = np.sort(np.asarray(ys, dtype=float))
    n1, n2 = int(xs.size), int(ys.size)
    if n1 == 0 or n2 == 0:
        raise ParameterError("ks_two_sample requires two nonempty samples")
    grid = np.concatenate((xs, ys))
    cdf1 = np.searchsorted(xs, grid, side="right") / n1
    cdf2 = np.searchsorted(ys, grid, side="right") / n2
    stat = float(np.max(np.abs(cdf1 - cdf2)))
    crit = 1.628 * math.sqrt((n1 + n2) / (n1 * n2))
    return KsReport(
        statistic=stat,
        n1=n1,
        n2=n2,
        critical_value_1pct=crit,
        passed=bool(stat < crit),
    )


# Per-path tasks are frozen dataclasses so a process pool can pickle them;
# each is a pure function of the path index.


@dataclass(frozen=True)
class _AbsorbTask:
    params: Parameters
    z0: float
    cfg: SchemeConfig
    seed: int
    base: int

    def __call__(self, i: int) -> float:
        rng = RngStream(seed=self.seed, stream_id=self.base + 1 + i)
        path = simulate_z_absorbed(self.params, self.z0, self.cfg, rng, record=False)
        return path.absorbed_at if path.absorbed_at is not None else math.inf


@dataclass(frozen=True)
class _MarginalTask:
    kind: str  # "absorbed" | "extended" | "v"
    params: Parameters
    x0: float
    cfg: SchemeConfig
    seed: int
    base: int
    scale: float = 1.0

    def __call__(self, i: int) -> float:
        rng = RngStream(seed=self.seed, stream_id=self.base + 1 + i)
        if self.kind == "v":
            path = simulate_v(self.params, self.x0, self.cfg, rng, record=False)
        elif self.kind == "extended":
            path = simulate_z_extended(self.params, self.x0, self.cfg, rng, record=False)
        else:
            path = simulate_z_absorbed(self.params, self.x0, self.cfg, rng, record=False)
        return self.scale * float(path.values[-1])


@dataclass(frozen=True)
class _PssmpTask:
    params: Parameters
    x0: float
    t: float
    eps: float | None
    seed: int
    base: int

    def __call__(self, i: int) -> float:
        rng = RngStream(seed=self.seed, stream_id=self.base + 1 + i)
        return pssmp_marginal(self.params, self.x0, self.t, rng, eps=self.eps)


def _run_indexed(task, n: int, workers: int) -> np.ndarray:
    if workers <= 1:
        return np.fromiter((task(i) for i in range(n)), dtype=float, count=n)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunk = max(1, n // (workers * 8))
        return np.fromiter(pool.map(task, range(n), chunksize=chunk), dtype=float, count=n)


def _resolve_cfg(cfg: SchemeConfig | None, horizon: float) -> SchemeConfig:
    if cfg is None:
        return SchemeConfig(grid_step=min(1e-3, horizon), horizon=horizon)
    return replace(cfg, grid_step=min(cfg.grid_step, horizon), horizon=horizon)


def estimate_extinction_probability(
    params: Parameters,
    z0: float,
    horizon: float,
    n: int,
    rng: RngStream,
    *,
    cfg: SchemeConfig | None = None,
    workers: int = 1,
) -> McSummary:
    """P(T0 <= horizon) as the absorbed fraction, with binomial standard error."""
    if n < 100:
        raise ParameterError(f"need n >= 100 paths, got {n}")
    task = _AbsorbTask(params, z0, _resolve_cfg(cfg, horizon), rng.seed, rng.stream_id)
    times = _run_indexed(task, n, workers)
    return _binomial_summary(times <= horizon)


def _binomial_summary(hits: np.ndarray) -> McSummary:
    n = int(hits.size)
    p = float(np.count_nonzero(hits)) / n
    se = math.sqrt(p * (1.0 - p) / n)
    return McSummary(
        n=n, mean=p, std_error=se, ci95_low=p - 1.96 * se, ci95_high=p + 1.96 * se
    )


def extinction_profile(
    params: Parameters,
    z0: float,
    n: int,
    rng: RngStream,
    horizons: tuple = (10.0, 25.0, 50.0),
    *,
    cfg: SchemeConfig | None = None,
    workers: int = 1,
) -> dict[float, McSummary]:
    """Censored extinction estimates at several horizons from one simulation.

    Paths are simulated to max(horizons); absorption by each smaller horizon
    is read off the recorded absorption times.  "T0 < infinity a.s." itself
    is not finite-horizon testable; the profile's monotone growth is the
    desk-scale surrogate.
    """
    if n < 100:
        raise ParameterError(f"need n >= 100 paths, got {n}")
    top = max(horizons)
    task = _AbsorbTask(params, z0, _resolve_cfg(cfg, top), rng.seed, rng.stream_id)
    times = _run_indexed(task, n, workers)
    return {float(h): _binomial_summary(times <= h) for h in horizons}


def drift_identity_check(
    params: Parameters,
    v0: float,
    t: float,
    n: int,
    rng: RngStream,
    *,
    cfg: SchemeConfig | None = None,
    workers: int = 1,
) -> McSummary:
    """Summary of V_t - (v0 + c*t); the mean should straddle 0.

    Only defined above the low threshold, where c > 0 and the expectation
    identity E[V_t] = v0 + c*t pins the transformed equation's drift.
    """
    if classify_regime(params).tag is RegimeTag.NO_CLASS_S_SOLUTION:
        raise RegimeError(
            f"theta={params.theta} <= threshold_low={params.threshold_low}: "
            "the drift identity applies above the low threshold"
        )
    if t < 0.0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    if t == 0.0:
        return McSummary(n=n, mean=0.0, std_error=0.0, ci95_low=0.0, ci95_high=0.0)
    task = _MarginalTask(
        "v", params, v0, _resolve_cfg(cfg, t), rng.seed, rng.stream_id
    )
    vals = _run_indexed(task, n, workers)
    c = (1.0 - params.eta) * (params.theta - params.threshold_low)
    return summarize(vals - (v0 + c * t))


def self_similarity_test(
    params: Parameters,
    x0: float,
    c: float,
    t: float,
    n: int,
    rng: RngStream,
    *,
    variant: str = "absorbed",
    index_exponent: float | None = None,
    cfg: SchemeConfig | None = None,
    workers: int = 1,
) -> KsReport:
    """KS between c*Z_{c^(-1/gamma)*t} from x0 and Z_t from c*x0.

    variant "absorbed" uses the absorbed scheme, "extended" the class-S
    extension.  index_exponent overrides gamma for negative controls: a
    wrong index must fail for large n.
    """
    if variant not in ("absorbed", "extended"):
        raise ParameterError(f"unknown variant {variant!r}")
    if n < 1000:
        raise ParameterError(f"need n >= 1000 paths per side, got {n}")
    if x0 <= 0.0 or c <= 0.0 or t <= 0.0:
        raise ParameterError("x0, c and t must all be positive")
    gamma = params.gamma_index if index_exponent is None else index_exponent
    t_a = c ** (-1.0 / gamma) * t
    kind = "extended" if variant == "extended" else "absorbed"
    task_a = _MarginalTask(
        kind, params, x0, _resolve_cfg(cfg, t_a), rng.seed, rng.stream_id, scale=c
    )
    task_b = _MarginalTask(
        kind, params, c * x0, _resolve_cfg(cfg, t), rng.seed, rng.stream_id + n
    )
    side_a = _run_indexed(task_a, n, workers)
    side_b = _run_indexed(task_b, n, workers)
    return ks_two_sample(side_a, side_b)


def lamperti_vs_sde_test(
    params: Parameters,
    x0: float,
    t: float,
    n: int,
    rng: RngStream,
    *,
    params_sde: Parameters | None = None,
    eps: float | None = None,
    cfg: SchemeConfig | None = None,
    workers: int = 1,
) -> KsReport:
    """KS between the Lamperti-built marginal and the direct scheme at time t.

    params_sde, when given, drives the SDE side with different parameters
    (negative control); absorbed paths enter as exact zeros on both sides.
    """
    if n < 1000:
        raise ParameterError(f"need n >= 1000 paths per side, got {n}")
    if x0 <= 0.0:
        raise ParameterError(f"x0 must be positive, got {x0}")
    if t < 0.0:
        raise ParameterError(f"t must be nonnegative, got {t}")
    if t == 0.0:
        crit = 1.628 * math.sqrt(2.0 / n)
        return KsReport(
            statistic=0.0, n1=n, n2=n, critical_value_1pct=crit, passed=True
        )
    task_a = _PssmpTask(params, x0, t, eps, rng.seed, rng.stream_id)
    task_b = _MarginalTask(
        "absorbed",
        params_sde if params_sde is not None else params,
        x0,
        _resolve_cfg(cfg, t),
        rng.seed,
        rng.stream_id + n,
    )
    side_a = _run_indexed(task_a, n, workers)
    side_b = _run_indexed(task_b, n, workers)
    return ks_two_sample(side_a, side_b)
