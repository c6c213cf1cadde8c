"""Jit-compiled inner loops of the jump-adapted Euler schemes.

Kernels are pure functions: every random number they touch is pre-generated
by the caller from the owning stream, so replay determinism is decided
entirely outside.  Each call advances one path across one window whose jumps
(jt, jx) lie in (t, t_end].  Between consecutive event times the gap is split
into equal sub-steps no longer than grid_step; the final sub-step lands
exactly on the event time.

The deterministic drift leg uses a Heun (trapezoid) corrector rather than
plain left-point Euler: between jumps the paths saw steeply down against the
truncation compensator, and evaluating that compensator only at the gap
start over-subtracts it, which shows up directly as bias in E[V_t].  The
predictor state is clamped at 0 before fractional powers touch it.

Recording convention (cadlag): interior sub-step endpoints are recorded;
the arrival point at a jump time is not, the post-jump value at that time is.
The window endpoint is recorded only when final_window is set, so stitching
windows never duplicates a time.
"""

import math

from numba import njit


@njit(cache=True)
def substep_count(gap: float, grid_step: float) -> int:
    if gap <= 0.0:
        return 0
    n = int(math.ceil(gap / grid_step - 1e-9))
    return n if n >= 1 else 1


@njit(cache=True)
def drift_z(z, theta, eta, beta, comp_mass):
    # 0**0 == 1.0 makes the eta == 0 edge give the correct constant drift theta
    return theta * z**eta - comp_mass * z**beta


@njit(cache=True)
def lookup_logg(log_a, la0, dla, logg):
    """Linear interpolation of log G at log a; edge segments extrapolate
    with the exact asymptotic slopes."""
    u = (log_a - la0) / dla
    j = int(math.floor(u))
    if j < 0:
        j = 0
    elif j > logg.shape[0] - 2:
        j = logg.shape[0] - 2
    frac = u - j
    return math.exp(logg[j] + frac * (logg[j + 1] - logg[j]))


@njit(cache=True)
def drift_v(v, c_drift, inv_alpha, eps, la0, dla, logg):
    if v <= 0.0:
        return c_drift
    comp = lookup_logg(math.log(eps) - math.log(v) * inv_alpha, la0, dla, logg)
    return c_drift - comp


@njit(cache=True)
def evolve_z(
    z,
    t,
    t_end,
    theta,
    eta,
    beta,
    comp_mass,
    grid_step,
    jt,
    jx,
    use_gauss,
    var_rate,
    normals,
    record,
    final_window,
    out_t,
    out_v,
    out_jump,
):
    """Absorbed Z-scheme window: drift theta*z^eta - comp_mass*z^beta, jump z^beta*x.

    Returns (z, t_reached, n_recorded, n_normals_used, absorbed, absorbed_at).
    First sub-step taking z to <= 0 absorbs the path at that time (jumps are
    positive, so absorption only happens on the drift leg).
    """
    n_out = 0
    m = 0
    nj = jt.shape[0]
    for i in range(nj + 1):
        t_next = jt[i] if i < nj else t_end
        gap = t_next - t
        nsub = substep_count(gap, grid_step)
        if nsub > 0:
            h = gap / nsub
            for k in range(nsub):
                f0 = drift_z(z, theta, eta, beta, comp_mass)
                zs = z + f0 * h
                if zs < 0.0:
                    zs = 0.0
                dz = 0.5 * (f0 + drift_z(zs, theta, eta, beta, comp_mass)) * h
                if use_gauss:
                    dz += normals[m] * math.sqrt(var_rate * h) * z**beta
                    m += 1
                z += dz
                tcur = t_next if k == nsub - 1 else t + (k + 1) * h
                if z <= 0.0:
                    z = 0.0
                    if record:
                        out_t[n_out] = tcur
                        out_v[n_out] = 0.0
                        out_jump[n_out] = False
                        n_out += 1
                    return z, tcur, n_out, m, True, tcur
                if record and (k < nsub - 1 or (i == nj and final_window)):
                    out_t[n_out] = tcur
                    out_v[n_out] = z
                    out_jump[n_out] = False
                    n_out += 1
            t = t_next
        if i < nj:
            z += z**beta * jx[i]
            if record:
                out_t[n_out] = jt[i]
                out_v[n_out] = z
                out_jump[n_out] = True
                n_out += 1
    return z, t_end, n_out, m, False, 0.0


@njit(cache=True)
def evolve_v(
    v,
    t,
    t_end,
    c_drift,
    eta,
    inv_alpha,
    eps,
    grid_step,
    la0,
    dla,
    logg,
    jt,
    jx,
    use_gauss,
    var_rate,
    normals,
    record,
    final_window,
    out_t,
    out_v,
    out_jump,
):
    """Constant-drift V-scheme window.

    Drift is c_drift minus the compensator of the kept jumps,
    int_eps^inf g(v,x) nu(dx) = G(eps * v^(-1/alpha)), from the precomputed
    log-log table (la0, dla, logg).  Jumps apply g exactly.  Negative
    excursions clamp to 0 and the path continues (c_drift > 0 lifts it).

    Returns (v, n_recorded, n_normals_used).
    """
    n_out = 0
    m = 0
    p = 1.0 - eta
    nj = jt.shape[0]
    for i in range(nj + 1):
        t_next = jt[i] if i < nj else t_end
        gap = t_next - t
        nsub = substep_count(gap, grid_step)
        if nsub > 0:
            h = gap / nsub
            for k in range(nsub):
                f0 = drift_v(v, c_drift, inv_alpha, eps, la0, dla, logg)
                vs = v + f0 * h
                if vs < 0.0:
                    vs = 0.0
                dv = 0.5 * (f0 + drift_v(vs, c_drift, inv_alpha, eps, la0, dla, logg)) * h
                if use_gauss:
                    if v > 0.0:
                        dv += normals[m] * math.sqrt(var_rate * h) * p * v ** (1.0 - inv_alpha)
                    m += 1
                v += dv
                if v < 0.0:
                    v = 0.0
                tcur = t_next if k == nsub - 1 else t + (k + 1) * h
                if record and (k < nsub - 1 or (i == nj and final_window)):
                    out_t[n_out] = tcur
                    out_v[n_out] = v
                    out_jump[n_out] = False
                    n_out += 1
            t = t_next
        if i < nj:
            if v > 0.0:
                v *= (1.0 + v ** (-inv_alpha) * jx[i]) ** p
            if record:
                out_t[n_out] = jt[i]
                out_v[n_out] = v
                out_jump[n_out] = True
                n_out += 1
    return v, n_out, m
