"""Command-line front end.

Subcommands: classify, simulate, xi, extinction, laplace-check, selfsim,
drift-check, lamperti-check, report.  Flags can also come from a flat
key=value config file (--config); explicit flags win.  All outputs are
deterministic given (config, seed, workers): CSV uses 17-significant-digit
floats and LF endings, JSON uses round-trip float repr, so reruns are
byte-identical.  Exit codes: 0 success, 1 validation or I/O failure,
2 regime errors.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import lamperti, mc
from .params import ParameterError, RegimeError, classify_regime, derive
from .sde import (
    SamplePath,
    SchemeConfig,
    default_cutoff,
    simulate_v,
    simulate_z_absorbed,
    simulate_z_extended,
)
from .specfun import laplace_exponent_xi
from .stable import RngStream

__all__ = ["RunConfig", "parse_args", "run", "main"]

_COMMANDS = (
    "classify",
    "simulate",
    "xi",
    "extinction",
    "laplace-check",
    "selfsim",
    "drift-check",
    "lamperti-check",
    "report",
)

def _to_bool(raw) -> bool:
    if isinstance(raw, bool):
        return raw
    token = str(raw).strip().lower()
    if token in ("1", "true", "yes", "on"):
        return True
    if token in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {raw!r}")


# field -> (converter, default)
_FIELD_SPEC = {
    "alpha": (float, 1.5),
    "beta": (float, 0.5),
    "theta": (str, None),  # comma list for extinction, single float elsewhere
    "z0": (float, 1.0),
    "horizon": (float, None),  # command-dependent default
    "grid_step": (float, 1e-3),
    "cutoff": (float, None),  # None: per-alpha default (laplace-check: 1e-2)
    "refinement": (_to_bool, None),  # None: on for extinction, off elsewhere
    "n": (int, 10000),
    "seed": (int, None),  # None: SSDE_SEED env, else 0
    "workers": (int, 1),
    "out": (str, None),
    "format": (str, None),  # command-dependent default
    "sample_every": (int, 1),
    "process": (str, "absorbed"),
    "lambdas": (str, "0.25,0.5"),
    "t": (float, None),  # command-dependent default
    "scale_c": (float, 2.0),
    "variant": (str, "absorbed"),
}

_HORIZON_DEFAULT = {"simulate": 1.0, "xi": 1.0, "extinction": 50.0}
_T_DEFAULT = {"laplace-check": 1.0, "drift-check": 1.0, "selfsim": 0.5, "lamperti-check": 0.5}
_THETA_DEFAULT = {"extinction": "0,0.3,0.6,1.2"}
_JSON_COMMANDS = {"classify", "selfsim", "drift-check", "lamperti-check"}


@dataclass(frozen=True)
class RunConfig:
    command: str
    alpha: float
    beta: float
    theta: str
    z0: float
    horizon: float
    grid_step: float
    cutoff: float | None
    refinement: bool
    n: int
    seed: int
    workers: int
    out: str | None
    format: str
    sample_every: int
    process: str
    lambdas: str
    t: float
    scale_c: float
    variant: str


class _Parser(argparse.ArgumentParser):
    # spec reserves exit code 2 for regime errors; usage errors exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    for flag, help_text in [
        ("--alpha", "stability index in (1,2)"),
        ("--beta", "noise exponent in [1-1/alpha, 1)"),
        ("--theta", "drift coefficient >= 0 (comma list for extinction)"),
        ("--z0", "initial value"),
        ("--horizon", "simulation horizon"),
        ("--grid-step", "deterministic sub-step between jumps"),
        ("--cutoff", "jump truncation level eps"),
        ("--refinement", "small-jump Gaussian refinement, true/false (default: on for extinction)"),
        ("--n", "number of Monte Carlo paths"),
        ("--seed", "master seed (default: SSDE_SEED env, else 0)"),
        ("--workers", "parallel workers for path generation"),
        ("--out", "output file (default: stdout)"),
        ("--format", "output format: csv or json"),
        ("--config", "flat key=value config file; flags override"),
    ]:
        common.add_argument(flag, default=None, help=help_text)
    parser = _Parser(prog="ssde", description="simulate and verify the jump SDE")
    sub = parser.add_subparsers(dest="command", required=True)
    extras = {
        "simulate": [
            ("--process", "which scheme: absorbed, extended, or v"),
            ("--sample-every", "keep every k-th grid point (jump times always kept)"),
        ],
        "xi": [],
        "classify": [],
        "extinction": [],
        "laplace-check": [("--lambdas", "comma list of Laplace arguments"), ("--t", "marginal time")],
        "selfsim": [
            ("--scale-c", "scaling factor c"),
            ("--t", "marginal time"),
            ("--variant", "absorbed or extended"),
        ],
        "drift-check": [("--t", "marginal time")],
        "lamperti-check": [("--t", "marginal time")],
        "report": [],
    }
    for name in _COMMANDS:
        p = sub.add_parser(name, parents=[common])
        for flag, help_text in extras[name]:
            p.add_argument(flag, default=None, help=help_text)
    return parser


def _read_config_file(path: str) -> dict:
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key=value, got {raw.rstrip()!r}")
            key, value = line.split("=", 1)
            key = key.strip().replace("-", "_")
            if key not in _FIELD_SPEC:
                raise ParameterError(f"{path}:{lineno}: unknown config key {key!r}")
            values[key] = value.strip()
    return values


def parse_args(argv) -> RunConfig:
    """Merge defaults, config file and flags (flags win) into a RunConfig."""
    ns = _build_parser().parse_args(argv)
    command = ns.command
    merged = {}
    file_values = _read_config_file(ns.config) if ns.config else {}
    for name, (conv, default) in _FIELD_SPEC.items():
        flag_val = getattr(ns, name, None)
        raw = flag_val if flag_val is not None else file_values.get(name)
        if raw is not None:
            try:
                merged[name] = conv(raw)
            except ValueError:
                raise ParameterError(f"invalid value for {name}: {raw!r}")
        else:
            merged[name] = default
    if merged["theta"] is None:
        merged["theta"] = _THETA_DEFAULT.get(command, "0.5")
    if merged["horizon"] is None:
        merged["horizon"] = _HORIZON_DEFAULT.get(command, 1.0)
    if merged["t"] is None:
        merged["t"] = _T_DEFAULT.get(command, 1.0)
    if merged["refinement"] is None:
        # absorption at theta > 0 needs the two-sided small-jump fluctuation
        merged["refinement"] = command == "extinction"
    if merged["seed"] is None:
        merged["seed"] = int(os.environ.get("SSDE_SEED", "0"))
    if merged["format"] is None:
        merged["format"] = "json" if command in _JSON_COMMANDS else "csv"
    if merged["format"] not in ("csv", "json"):
        raise ParameterError(f"format must be csv or json, got {merged['format']!r}")
    return RunConfig(command=command, **merged)


def _floats(spec: str, what: str) -> list[float]:
    try:
        return [float(tok) for tok in spec.split(",") if tok.strip() != ""]
    except ValueError:
        raise ParameterError(f"invalid {what} list: {spec!r}")


def _theta_single(cfg: RunConfig) -> float:
    vals = _floats(cfg.theta, "theta")
    if len(vals) != 1:
        raise ParameterError(f"{cfg.command} takes a single theta, got {cfg.theta!r}")
    return vals[0]


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _emit_rows(rows: list[dict], header: list[str], cfg: RunConfig) -> None:
    if cfg.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", cfg.out)
    else:
        lines = [",".join(header)]
        lines += [",".join(_fmt(row[h]) for h in header) for row in rows]
        _emit("\n".join(lines) + "\n", cfg.out)


def _emit_record(record: dict, cfg: RunConfig) -> None:
    if cfg.format == "json":
        _emit(json.dumps(record, indent=2) + "\n", cfg.out)
    else:
        _emit_rows([record], list(record.keys()), cfg)


def _log(message: str) -> None:
    sys.stderr.write(f"[ssde] {message}\n")


def _scheme(cfg: RunConfig, horizon: float) -> SchemeConfig:
    return SchemeConfig(
        grid_step=min(cfg.grid_step, horizon),
        jump_cutoff=cfg.cutoff,
        gaussian_refinement=cfg.refinement,
        horizon=horizon,
    )


def _path_rows(path: SamplePath, every: int) -> list[dict]:
    times, values = path.times, path.values
    if every > 1:
        keep = np.zeros(times.size, dtype=bool)
        keep[::every] = True
        keep[0] = keep[-1] = True
        if path.jump_times is not None and path.jump_times.size:
            keep |= np.isin(times, path.jump_times)
        times, values = times[keep], values[keep]
    return [{"t": float(t), "value": float(v)} for t, v in zip(times, values)]


def _cmd_classify(cfg: RunConfig) -> None:
    params = derive(cfg.alpha, cfg.beta, _theta_single(cfg))
    regime = classify_regime(params)
    record = {
        "alpha": params.alpha,
        "beta": params.beta,
        "theta": params.theta,
        "eta": params.eta,
        "gamma": params.gamma_index,
        "threshold_low": params.threshold_low,
        "threshold_high": params.threshold_high,
        "regime": regime.tag.value,
        "boundary_flags": sorted(flag.value for flag in regime.boundary_flags),
    }
    if cfg.format == "csv":
        record = dict(record, boundary_flags=";".join(record["boundary_flags"]))
    _emit_record(record, cfg)


def _cmd_simulate(cfg: RunConfig) -> None:
    params = derive(cfg.alpha, cfg.beta, _theta_single(cfg))
    scheme = _scheme(cfg, cfg.horizon)
    rng = RngStream(seed=cfg.seed, stream_id=0)
    if cfg.process == "absorbed":
        path = simulate_z_absorbed(params, cfg.z0, scheme, rng)
    elif cfg.process == "extended":
        path = simulate_z_extended(params, cfg.z0, scheme, rng)
    elif cfg.process == "v":
        path = simulate_v(params, cfg.z0, scheme, rng)
    else:
        raise ParameterError(f"unknown process {cfg.process!r}")
    _log(f"simulate: {path.times.size} points, absorbed_at={path.absorbed_at}")
    _emit_rows(_path_rows(path, cfg.sample_every), ["t", "value"], cfg)


def _cmd_xi(cfg: RunConfig) -> None:
    params = derive(cfg.alpha, cfg.beta, _theta_single(cfg))
    eps = cfg.cutoff if cfg.cutoff is not None else default_cutoff(params.alpha)
    path = lamperti.simulate_xi(params, cfg.horizon, eps, RngStream(seed=cfg.seed, stream_id=0))
    _log(f"xi: {path.times.size} points, slope {path.slope}")
    rows = [{"t": float(t), "value": float(v)} for t, v in zip(path.times, path.values)]
    _emit_rows(rows, ["t", "value"], cfg)


def _cmd_extinction(cfg: RunConfig) -> None:
    thetas = _floats(cfg.theta, "theta")
    rows = []
    for j, theta in enumerate(thetas):
        params = derive(cfg.alpha, cfg.beta, theta)
        rng = mc.derive_stream(cfg.seed, j * (cfg.n + 1))
        summary = mc.estimate_extinction_probability(
            params,
            cfg.z0,
            cfg.horizon,
            cfg.n,
            rng,
            cfg=_scheme(cfg, cfg.horizon),
            workers=cfg.workers,
        )
        _log(f"extinction: theta={theta} p_hat={summary.mean:.4f}")
        rows.append(
            {
                "theta": theta,
                "p_hat": summary.mean,
                "se": summary.std_error,
                "ci_low": summary.ci95_low,
                "ci_high": summary.ci95_high,
            }
        )
    _emit_rows(rows, ["theta", "p_hat", "se", "ci_low", "ci_high"], cfg)


def _cmd_laplace_check(cfg: RunConfig) -> None:
    params = derive(cfg.alpha, cfg.beta, _theta_single(cfg))
    eps = cfg.cutoff if cfg.cutoff is not None else 1e-2
    rows = []
    for j, lam in enumerate(_floats(cfg.lambdas, "lambdas")):
        rng = mc.derive_stream(cfg.seed, j + 1)
        sample = lamperti.xi_marginal_sample(params, cfg.t, eps, cfg.n, rng)
        weights = np.exp(lam * sample)
        mean = math.fsum(weights.tolist()) / cfg.n
        se = float(np.std(weights, ddof=1)) / math.sqrt(cfg.n)
        estimate = math.log(mean)
        se_log = se / mean
        target = laplace_exponent_xi(lam, params) * cfg.t
        z = (estimate - target) / se_log if se_log > 0 else math.inf
        _log(f"laplace-check: lambda={lam} z={z:+.2f}")
        rows.append(
            {
                "lambda": lam,
                "estimate": estimate,
                "target": target,
                "std_error": se_log,
                "z_score": z,
            }
        )
    _emit_rows(rows, ["lambda", "estimate", "target", "std_error", "z_score"], cfg)


def _cmd_selfsim(cfg: RunConfig) -> None:
    params = derive(cfg.alpha, cfg.beta, _theta_single(cfg))
    report = mc.self_similarity_test(
        params,
        cfg.z0,
        cfg.scale_c,
        cfg.t,
        cfg.n,
        mc.derive_stream(cfg.seed, 0),
        variant=cfg.variant,
        cfg=_scheme(cfg, cfg.t),
        workers=cfg.workers,
    )
    _log(f"selfsim: stat={report.statistic:.4f} crit={report.critical_value_1pct:.4f}")
    _emit_record(
        {
            "variant": cfg.variant,
            "scale_c": cfg.scale_c,
            "t": cfg.t,
            "statistic": report.statistic,
            "n1": report.n1,
            "n2": report.n2,
            "critical_value_1pct": report.critical_value_1pct,
            "passed": report.passed,
        },
        cfg,
    )


def _cmd_drift_check(cfg: RunConfig) -> None:
    params = derive(cfg.alpha, cfg.beta, _theta_single(cfg))
    summary = mc.drift_identity_check(
        params,
        cfg.z0,
        cfg.t,
        cfg.n,
        mc.derive_stream(cfg.seed, 0),
        cfg=_scheme(cfg, max(cfg.t, cfg.grid_step)),
        workers=cfg.workers,
    )
    c = (1.0 - params.eta) * (params.theta - params.threshold_low)
    z = summary.mean / summary.std_error if summary.std_error > 0 else 0.0
    _log(f"drift-check: mean deviation {summary.mean:+.5f} z={z:+.2f}")
    _emit_record(
        {
            "n": summary.n,
            "mean_deviation": summary.mean,
            "std_error": summary.std_error,
            "ci95_low": summary.ci95_low,
            "ci95_high": summary.ci95_high,
            "predicted_mean": cfg.z0 + c * cfg.t,
            "z_score": z,
        },
        cfg,
    )


def _cmd_lamperti_check(cfg: RunConfig) -> None:
    params = derive(cfg.alpha, cfg.beta, _theta_single(cfg))
    report = mc.lamperti_vs_sde_test(
        params,
        cfg.z0,
        cfg.t,
        cfg.n,
        mc.derive_stream(cfg.seed, 0),
        eps=cfg.cutoff,
        cfg=_scheme(cfg, max(cfg.t, cfg.grid_step)),
        workers=cfg.workers,
    )
    _log(f"lamperti-check: stat={report.statistic:.4f} crit={report.critical_value_1pct:.4f}")
    _emit_record(
        {
            "t": cfg.t,
            "statistic": report.statistic,
            "n1": report.n1,
            "n2": report.n2,
            "critical_value_1pct": report.critical_value_1pct,
            "passed": report.passed,
        },
        cfg,
    )


def _report_rows(cfg: RunConfig) -> list[dict]:
    """The five verification suites at canonical parameters, one tidy row per check."""
    rows = []

    def add(suite, case, metric, value, threshold, comparison):
        ok = {"<=": value <= threshold, ">=": value >= threshold, "<": value < threshold}[comparison]
        rows.append(
            {
                "suite": suite,
                "case": case,
                "metric": metric,
                "value": value,
                "threshold": threshold,
                "comparison": comparison,
                "passed": ok,
            }
        )

    n = cfg.n
    seed = cfg.seed

    _log("report: laplace suite")
    eps = 1e-2
    for j, (alpha, theta) in enumerate([(1.5, 0.0), (1.5, 1.0), (1.2, 0.5)]):
        params = derive(alpha, 0.5, theta)
        for k, lam in enumerate([0.25, 0.5]):
            rng = mc.derive_stream(seed, 1_000_000 + j * 10 + k)
            sample = lamperti.xi_marginal_sample(params, 1.0, eps, max(n, 10000), rng)
            weights = np.exp(lam * sample)
            mean = math.fsum(weights.tolist()) / weights.size
            se_log = float(np.std(weights, ddof=1)) / math.sqrt(weights.size) / mean
            z = abs(math.log(mean) - laplace_exponent_xi(lam, params)) / se_log
            add("laplace", f"alpha={alpha} theta={theta} lambda={lam}", "abs_z_score", z, 3.0, "<=")

    _log("report: extinction suite")
    scheme = SchemeConfig(grid_step=1e-3, jump_cutoff=1e-2, gaussian_refinement=True, horizon=50.0)
    estimates = []
    for j, theta in enumerate([0.0, 0.3, 0.6, 1.2]):
        params = derive(1.5, 0.5, theta)
        rng = mc.derive_stream(seed, 2_000_000 + j * (n + 1))
        summary = mc.estimate_extinction_probability(
            params, 0.5, 50.0, n, rng, cfg=scheme, workers=cfg.workers
        )
        estimates.append((theta, summary))
        _log(f"report: extinction theta={theta} p_hat={summary.mean:.4f}")
    add("extinction", "theta=0", "p_hat", estimates[0][1].mean, 0.95, ">=")
    add("extinction", "theta=1.2", "p_hat", estimates[-1][1].mean, 0.05, "<=")
    violations = 0
    for (_, a), (_, b) in zip(estimates, estimates[1:]):
        if b.mean > a.mean and b.ci95_low > a.ci95_high:
            violations += 1
    add("extinction", "theta sweep", "monotone_violations_beyond_ci", float(violations), 0.0, "<=")

    _log("report: drift suite")
    params = derive(1.5, 0.5, 0.5)
    summary = mc.drift_identity_check(
        params, 1.0, 1.0, n, mc.derive_stream(seed, 3_000_000), workers=cfg.workers
    )
    z = abs(summary.mean) / summary.std_error if summary.std_error > 0 else 0.0
    add("drift", "alpha=1.5 theta=0.5 t=1", "abs_z_score", z, 3.0, "<=")

    _log("report: selfsim suite")
    report = mc.self_similarity_test(
        params, 1.0, 2.0, 0.5, n, mc.derive_stream(seed, 4_000_000), workers=cfg.workers
    )
    add("selfsim", "c=2 t=0.5", "ks_statistic", report.statistic, report.critical_value_1pct, "<")
    neg = mc.self_similarity_test(
        params,
        1.0,
        2.0,
        0.5,
        n,
        mc.derive_stream(seed, 4_000_000),
        index_exponent=params.gamma_index + 0.5,
        workers=cfg.workers,
    )
    add(
        "selfsim",
        "c=2 t=0.5 negative control",
        "ks_statistic_negative_control",
        neg.statistic,
        neg.critical_value_1pct,
        ">=",
    )

    _log("report: lamperti suite")
    report = mc.lamperti_vs_sde_test(
        params, 1.0, 0.5, n, mc.derive_stream(seed, 5_000_000), workers=cfg.workers
    )
    add("lamperti", "t=0.5", "ks_statistic", report.statistic, report.critical_value_1pct, "<")
    return rows


def _cmd_report(cfg: RunConfig) -> None:
    rows = _report_rows(cfg)
    _emit_rows(rows, ["suite", "case", "metric", "value", "threshold", "comparison", "passed"], cfg)


_DISPATCH = {
    "classify": _cmd_classify,
    "simulate": _cmd_simulate,
    "xi": _cmd_xi,
    "extinction": _cmd_extinction,
    "laplace-check": _cmd_laplace_check,
    "selfsim": _cmd_selfsim,
    "drift-check": _cmd_drift_check,
    "lamperti-check": _cmd_lamperti_check,
    "report": _cmd_report,
}


def run(config: RunConfig) -> int:
    """Dispatch a parsed RunConfig; returns the process exit code."""
    try:
        _DISPATCH[config.command](config)
        return 0
    except RegimeError as exc:
        sys.stderr.write(f"ssde: regime error: {exc}\n")
        return 2
    except (ParameterError, ValueError, OSError) as exc:
        sys.stderr.write(f"ssde: error: {exc}\n")
        return 1


def main(argv=None) -> int:
    try:
        config = parse_args(sys.argv[1:] if argv is None else argv)
    except (ParameterError, ValueError, OSError) as exc:
        sys.stderr.write(f"ssde: error: {exc}\n")
        return 1
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
