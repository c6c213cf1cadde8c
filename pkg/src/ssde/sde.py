"""Jump-adapted Euler schemes for the Z-equation, its V-transform, and helpers.

Z solves dZ = theta*Z^eta dt + Z_-^beta dL with L the spectrally positive
alpha-stable driver; V = Z^(1-eta) solves the transformed equation with
constant drift c = (1-eta)*(theta - Gamma(alpha*beta)/Gamma(eta)) and jump
map g.  Both schemes place grid points at every simulated jump above the
cutoff and take deterministic sub-steps of at most grid_step between them.
Jumps below the cutoff enter as compensator drift, optionally refined by a
centered Gaussian matching their variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from . import _kernels
from .params import Parameters, ParameterError, RegimeError, RegimeTag, classify_regime
from .stable import RngStream, _raw_jumps, jump_rate_above, small_jump_moments

__all__ = [
    "SamplePath",
    "SchemeConfig",
    "default_cutoff",
    "jump_map_g",
    "simulate_v",
    "simulate_z_absorbed",
    "simulate_z_extended",
    "power_transform",
    "hitting_time",
    "modulus_bound_check",
]

# Poisson events per window; bounds per-window memory, never affects the law.
_TARGET_EVENTS = 150_000.0
_EMPTY = np.empty(0)
_DUMMY_F = np.empty(1)
_DUMMY_B = np.empty(1, dtype=np.bool_)


@dataclass(frozen=True)
class SamplePath:
    """Cadlag path on [0, horizon]: times strictly increasing from 0, values >= 0.

    absorbed_at is the absorption time when the path was stopped at zero;
    values at and after it are 0.  jump_times lists the event times at which
    a jump above the cutoff was applied (None when the path was generated
    without recording).
    """

    times: np.ndarray
    values: np.ndarray
    absorbed_at: float | None = None
    jump_times: np.ndarray | None = None


@dataclass(frozen=True)
class SchemeConfig:
    grid_step: float = 1e-3
    jump_cutoff: float | None = None  # None: default_cutoff(alpha)
    gaussian_refinement: bool = False
    horizon: float = 1.0

    def __post_init__(self) -> None:
        if self.horizon <= 0.0:
            raise ParameterError(f"horizon must be positive, got {self.horizon}")
        if not 0.0 < self.grid_step <= self.horizon:
            raise ParameterError(
                f"grid_step must lie in (0, horizon], got {self.grid_step}"
            )
        if self.jump_cutoff is not None and not self.jump_cutoff > 0.0:
            raise ParameterError(f"jump_cutoff must be positive, got {self.jump_cutoff}")


def default_cutoff(alpha: float) -> float:
    """Truncation level balancing jump counts against truncation error."""
    return 1e-3 if alpha <= 1.6 else 1e-4


def jump_map_g(v, x, params: Parameters):
    """g(v, x) = v*(1 + v^(-1/alpha)*x)^(1-eta) - v, with g(0, x) = 0.

    Accepts scalars or arrays.  expm1/log1p keep precision when the relative
    jump v^(-1/alpha)*x is tiny.
    """
    p = 1.0 - params.eta
    v_arr = np.asarray(v, dtype=float)
    safe = np.where(v_arr > 0.0, v_arr, 1.0)
    u = safe ** (-1.0 / params.alpha) * x
    out = np.where(v_arr > 0.0, safe * np.expm1(p * np.log1p(u)), 0.0)
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def _g_tail_table(alpha: float, eta: float) -> tuple[float, float, np.ndarray]:
    """Log-log table of G(a) = c_alpha*int_a^inf ((1+y)^(1-eta)-1) y^(-1-alpha) dy.

    By the scaling g(v, x) = v*g(1, v^(-1/alpha)*x), the compensator of the
    kept jumps is int_eps^inf g(v,x) nu(dx) = G(eps*v^(-1/alpha)), so one
    1-argument table per (alpha, eta) serves every state.  Built by 16-point
    Gauss-Legendre panels on a 1025-point log grid over [1e-10, 1e10],
    accumulated from the top where a 3-term asymptotic expansion closes the
    integral.  logG is close to piecewise linear in log a (slopes 1-alpha and
    1-eta-alpha at the edges), so linear interpolation and edge extrapolation
    are accurate to ~1e-4 relative.
    """
    p = 1.0 - eta
    calpha = alpha * (alpha - 1.0) / math.gamma(2.0 - alpha)
    la = np.linspace(math.log(1e-10), math.log(1e10), 1025)
    a_top = 1e10
    tail = calpha * (
        a_top ** (p - alpha) / (alpha - p)
        + p * a_top ** (p - 1.0 - alpha) / (alpha + 1.0 - p)
        + 0.5 * p * (p - 1.0) * a_top ** (p - 2.0 - alpha) / (alpha + 2.0 - p)
        - a_top ** (-alpha) / alpha
    )
    nodes, weights = np.polynomial.legendre.leggauss(16)
    mid = 0.5 * (la[1:] + la[:-1])
    half = 0.5 * (la[1:] - la[:-1])
    u = mid[:, None] + half[:, None] * nodes[None, :]
    y = np.exp(u)
    integrand = calpha * np.expm1(p * np.log1p(y)) * y ** (-1.0 - alpha) * y
    panels = (integrand * weights[None, :]).sum(axis=1) * half
    g = np.empty(1025)
    g[-1] = tail
    g[:-1] = tail + np.cumsum(panels[::-1])[::-1]
    la0 = float(la[0])
    dla = float(la[1] - la[0])
    return la0, dla, np.log(g)


def _resolve_eps(cfg: SchemeConfig, alpha: float) -> float:
    return cfg.jump_cutoff if cfg.jump_cutoff is not None else default_cutoff(alpha)


def _plan_window(eps, alpha, grid_step, t0, t1, rng, refinement):
    """Pre-draw one window's randomness in the fixed order: jumps, then normals.

    The sub-step counts replicate the kernel's arithmetic exactly, so the
    normals drawn here are exactly the ones the kernel will consume; planned
    draw counts never depend on the path, which keeps replay byte-identical.
    """
    jt, jx = _raw_jumps(eps, t0, t1, alpha, rng)
    gaps = np.diff(np.concatenate(([t0], jt, [t1])))
    nsub = np.ceil(gaps / grid_step - 1e-9).astype(np.int64)
    nsub = np.where(gaps > 0.0, np.maximum(nsub, 1), 0)
    total = int(nsub.sum())
    normals = rng.gen.standard_normal(total) if refinement else _EMPTY
    return jt, jx, total, normals


def _windows(horizon: float, rate: float, grid_step: float):
    """Yield (t0, t1, is_final) cover of [0, horizon]."""
    width = _TARGET_EVENTS / rate if rate > 0.0 else math.inf
    width = max(width, 2.0 * grid_step)
    t = 0.0
    while t < horizon:
        t1 = t + width
        if t1 >= horizon - 1e-12 * horizon:
            t1 = horizon
        yield t, t1, t1 == horizon
        t = t1


def _assemble(x0, parts_t, parts_v, parts_j, absorbed_at, horizon):
    times = np.concatenate([np.array([0.0])] + parts_t)
    values = np.concatenate([np.array([x0])] + parts_v)
    jumps = np.concatenate(parts_j) if parts_j else _EMPTY
    jt = times[1:][jumps.astype(bool)] if jumps.size else np.empty(0)
    if absorbed_at is not None and absorbed_at < horizon:
        times = np.append(times, horizon)
        values = np.append(values, 0.0)
    return times, values, jt


def simulate_z_absorbed(
    params: Parameters,
    z0: float,
    cfg: SchemeConfig,
    rng: RngStream,
    *,
    record: bool = True,
) -> SamplePath:
    """Scheme on Z directly: drift theta*z^eta - M(eps)*z^beta, jump z^beta*x.

    M(eps) is the compensator mass of the kept jumps; the first sub-step
    reaching z <= 0 absorbs the path, which then holds at 0.
    """
    if z0 <= 0.0:
        raise ParameterError(f"z0 must be positive, got {z0}")
    eps = _resolve_eps(cfg, params.alpha)
    comp_mass, var_rate = small_jump_moments(eps, params)
    rate = jump_rate_above(eps, params.alpha) if math.isfinite(eps) else 0.0
    use_gauss = cfg.gaussian_refinement
    parts_t: list = []
    parts_v: list = []
    parts_j: list = []
    z = z0
    absorbed_at = None
    for t0, t1, final in _windows(cfg.horizon, rate, cfg.grid_step):
        jt, jx, total, normals = _plan_window(
            eps, params.alpha, cfg.grid_step, t0, t1, rng, use_gauss
        )
        if record:
            cap = total + jt.size + 4
            out_t = np.empty(cap)
            out_v = np.empty(cap)
            out_j = np.empty(cap, dtype=np.bool_)
        else:
            out_t, out_v, out_j = _DUMMY_F, _DUMMY_F, _DUMMY_B
        z, t_reached, n, _, absorbed, t_abs = _kernels.evolve_z(
            z,
            t0,
            t1,
            params.theta,
            params.eta,
            params.beta,
            comp_mass,
            cfg.grid_step,
            jt,
            jx,
            use_gauss,
            var_rate,
            normals,
            record,
            final,
            out_t,
            out_v,
            out_j,
        )
        if record:
            parts_t.append(out_t[:n].copy())
            parts_v.append(out_v[:n].copy())
            parts_j.append(out_j[:n].copy())
        if absorbed:
            absorbed_at = t_abs
            break
    if not record:
        if absorbed_at is None:
            times = np.array([0.0, cfg.horizon])
            values = np.array([z0, z])
        elif absorbed_at < cfg.horizon:
            times = np.array([0.0, absorbed_at, cfg.horizon])
            values = np.array([z0, 0.0, 0.0])
        else:
            times = np.array([0.0, absorbed_at])
            values = np.array([z0, 0.0])
        return SamplePath(times=times, values=values, absorbed_at=absorbed_at)
    times, values, jtimes = _assemble(z0, parts_t, parts_v, parts_j, absorbed_at, cfg.horizon)
    return SamplePath(times=times, values=values, absorbed_at=absorbed_at, jump_times=jtimes)


def simulate_v(
    params: Parameters,
    v0: float,
    cfg: SchemeConfig,
    rng: RngStream,
    *,
    record: bool = True,
) -> SamplePath:
    """Scheme on V = Z^(1-eta): constant drift c minus the kept-jump compensator.

    c = (1-eta)*(theta - Gamma(alpha*beta)/Gamma(eta)); jumps apply
    jump_map_g exactly; negative excursions clamp to 0 and continue.
    E[V_t] = v0 + c*t holds for the underlying equation and is the main
    bias check on the scheme.
    """
    if v0 < 0.0:
        raise ParameterError(f"v0 must be nonnegative, got {v0}")
    eps = _resolve_eps(cfg, params.alpha)
    _, var_rate = small_jump_moments(eps, params)
    rate = jump_rate_above(eps, params.alpha) if math.isfinite(eps) else 0.0
    c_drift = (1.0 - params.eta) * (params.theta - params.threshold_low)
    la0, dla, logg = _g_tail_table(params.alpha, params.eta)
    use_gauss = cfg.gaussian_refinement
    parts_t: list = []
    parts_v: list = []
    parts_j: list = []
    v = v0
    for t0, t1, final in _windows(cfg.horizon, rate, cfg.grid_step):
        jt, jx, total, normals = _plan_window(
            eps, params.alpha, cfg.grid_step, t0, t1, rng, use_gauss
        )
        if record:
            cap = total + jt.size + 4
            out_t = np.empty(cap)
            out_v = np.empty(cap)
            out_j = np.empty(cap, dtype=np.bool_)
        else:
            out_t, out_v, out_j = _DUMMY_F, _DUMMY_F, _DUMMY_B
        v, n, _ = _kernels.evolve_v(
            v,
            t0,
            t1,
            c_drift,
            params.eta,
            1.0 / params.alpha,
            eps,
            cfg.grid_step,
            la0,
            dla,
            logg,
            jt,
            jx,
            use_gauss,
            var_rate,
            normals,
            record,
            final,
            out_t,
            out_v,
            out_j,
        )
        if record:
            parts_t.append(out_t[:n].copy())
            parts_v.append(out_v[:n].copy())
            parts_j.append(out_j[:n].copy())
    if not record:
        return SamplePath(times=np.array([0.0, cfg.horizon]), values=np.array([v0, v]))
    times, values, jtimes = _assemble(v0, parts_t, parts_v, parts_j, None, cfg.horizon)
    return SamplePath(times=times, values=values, jump_times=jtimes)


def simulate_z_extended(
    params: Parameters,
    z0: float,
    cfg: SchemeConfig,
    rng: RngStream,
    *,
    record: bool = True,
) -> SamplePath:
    """Class-S solution: simulate V from z0^(1-eta), return V^(1/(1-eta)).

    Only defined above the low threshold, where the extension that leaves
    zero again exists; below it no such solution exists.
    """
    if z0 < 0.0:
        raise ParameterError(f"z0 must be nonnegative, got {z0}")
    regime = classify_regime(params)
    if regime.tag is RegimeTag.NO_CLASS_S_SOLUTION:
        raise RegimeError(
            f"theta={params.theta} <= threshold_low={params.threshold_low}: "
            "no extended solution to simulate"
        )
    vpath = simulate_v(params, z0 ** (1.0 - params.eta), cfg, rng, record=record)
    return power_transform(vpath, params.gamma_index)


def power_transform(path: SamplePath, exponent: float) -> SamplePath:
    """Pointwise values**exponent; times, absorption and jump times unchanged."""
    if exponent <= 0.0:
        raise ParameterError(f"exponent must be positive, got {exponent}")
    return replace(path, values=path.values**exponent)


def hitting_time(path: SamplePath, level: float):
    """First recorded time with value <= level, or None if never reached."""
    idx = np.flatnonzero(path.values <= level)
    return float(path.times[idx[0]]) if idx.size else None


def modulus_bound_check(v1, v2, x, params: Parameters):
    """|g(v2,x) - g(v1,x)| <= C*|v2-v1|^(1-1/alpha)*x with C = 2^(1-1/alpha)*(1-eta).

    Accepts scalars or arrays of triples; returns the boolean verdict(s).
    """
    lhs = np.abs(
        np.asarray(jump_map_g(v2, x, params)) - np.asarray(jump_map_g(v1, x, params))
    )
    cmod = 2.0 ** (1.0 - 1.0 / params.alpha) * (1.0 - params.eta)
    rhs = cmod * np.abs(np.asarray(v2, dtype=float) - v1) ** (1.0 - 1.0 / params.alpha) * x
    out = lhs <= rhs
    return bool(out) if np.ndim(out) == 0 else out
