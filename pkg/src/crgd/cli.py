"""Command-line entry point.

One subcommand per experiment plus `check` for the invariant suite. Each
experiment writes CSV data, a vector figure, and a manifest recording the
resolved configuration, seed, and package version; --assert additionally
grades the run against the acceptance thresholds and fails the exit code on
a miss.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import __version__, checks, experiments, plotting, reports
from .dynamics import CrgdConfig
from .laws import law_from_name

DEFAULT_OUT_ROOT_ENV = "CRGD_OUT_ROOT"

_LAW_PARAM_NAMES = {
    "exponential": ("c",),
    "finite": ("c", "alpha"),
    "finite-time": ("c", "alpha"),
    "fixed": ("c1", "c2", "alpha", "p"),
    "fixed-time": ("c1", "c2", "alpha", "p"),
    "prescribed": ("T", "mu"),
    "prescribed-time": ("T", "mu"),
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems as config errors
    (exit code 1) instead of exiting with argparse's default code."""

    def error(self, message):
        raise ConfigError(f"{message}\n{self.format_usage().rstrip()}")


def load_config(path) -> dict:
    """Parse a `key = value` config file.

    Supported value forms: booleans (true/false), numbers, comma-separated
    number lists, and bare strings. '#' starts a comment. Returned keys use
    underscores; CLI flags override file values.
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    out = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{path}:{lineno}: empty key")
        out[key.replace("-", "_")] = _coerce(value)
    return out


def _coerce(value: str):
    low = value.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in value:
        return [_coerce(part.strip()) for part in value.split(",")]
    try:
        return int(value)
    except ValueError:
        pass
    try:
        return float(value)
    except ValueError:
        return value


def _resolve(args: argparse.Namespace, config: dict, key: str, default):
    flag = getattr(args, key, None)
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _floats(value, key: str) -> tuple[float, ...]:
    if isinstance(value, (int, float)):
        return (float(value),)
    try:
        return tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected a comma-separated number list, got {value!r}")


def _build_law(name: str, args, config):
    params = {}
    for pname in _LAW_PARAM_NAMES.get(name.lower().strip(), ()):
        value = _resolve(args, config, pname if pname != "T" else "law_t", None)
        if value is not None:
            params[pname] = float(value)
    return law_from_name(name, **params)


def _outdir(args, config, experiment: str) -> Path:
    root = _resolve(args, config, "out", None)
    if root is None:
        root = os.environ.get(DEFAULT_OUT_ROOT_ENV, "runs")
        return Path(root) / experiment
    return Path(root)


def _finish(outdir: Path, manifest: dict, check_results, assert_mode: bool) -> int:
    reports.write_manifest(outdir, manifest)
    print(f"outputs written to {outdir}")
    failed = [r for r in check_results if not r.passed]
    if check_results:
        for r in check_results:
            print(r.line())
    if assert_mode and failed:
        return 2
    return 0


def _add_common(parser):
    parser.add_argument("--out", help="output directory (default: "
                        f"${DEFAULT_OUT_ROOT_ENV} or ./runs, per experiment)")
    parser.add_argument("--config", help="key = value config file; flags override")
    parser.add_argument("--assert", dest="assert_mode", action="store_true",
                        default=None, help="fail (exit 2) if the run misses "
                        "its acceptance thresholds")
    parser.add_argument("--jobs", type=int, help="worker processes (default 1)")
    parser.add_argument("--seed", type=int, help="random seed (default 42)")


def build_parser() -> _Parser:
    parser = _Parser(prog="crgd", description=__doc__)
    parser.add_argument("--version", action="version", version=f"crgd {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command",
                                parser_class=_Parser)

    p = sub.add_parser("threefold",
                       help="2D landscape: trajectory split and decay profiles")
    _add_common(p)
    p.add_argument("--eta", type=float, help="cubic asymmetry (default 0.7)")
    p.add_argument("--beta", type=float, help="penalty weight (default 1.0)")
    p.add_argument("--eps-r", dest="eps_r", type=float,
                   help="gain regularizer (default 1e-12)")
    p.add_argument("--law", help="exponential | finite-time | fixed-time | "
                   "prescribed-time (default exponential)")
    p.add_argument("--c", type=float, help="rate constant for exponential/finite-time")
    p.add_argument("--alpha", type=float, help="sub-linear exponent")
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--p", type=float, help="super-linear exponent (fixed-time)")
    p.add_argument("--T", dest="law_t", type=float, help="prescribed settling time")
    p.add_argument("--mu", type=float, help="prescribed-time gain exponent")

    p = sub.add_parser("gap-sweep",
                       help="convergence time against the eigenvalue gap")
    _add_common(p)
    p.add_argument("--n", type=int, help="problem dimension (default 50)")
    p.add_argument("--beta", type=float, help="penalty weight (default 1.0)")
    p.add_argument("--deltas", help="comma-separated gaps "
                   "(default 0.1,0.05,0.02,0.01)")
    p.add_argument("--full-scale", dest="full_scale", action="store_true",
                   default=None, help="use the seven-gap list down to 0.001")

    p = sub.add_parser("monte-carlo",
                       help="SOSP rates over random starts")
    _add_common(p)
    p.add_argument("--n", type=int, help="problem dimension (default 50)")
    p.add_argument("--trials", type=int, help="trials per gap (default 100)")
    p.add_argument("--deltas", help="comma-separated gaps (default 0.1,0.001)")
    p.add_argument("--horizons", help="comma-separated horizons (default 10,1000)")
    p.add_argument("--full-scale", dest="full_scale", action="store_true",
                   default=None, help="2000 trials over four gaps")

    p = sub.add_parser("grid-scan",
                       help="mesh scan for spurious critical points")
    _add_common(p)
    p.add_argument("--resolution", type=int, help="mesh points per axis (default 500)")
    p.add_argument("--beta", type=float, help="penalty weight (default 1.0)")
    p.add_argument("--eta", type=float, help="cubic asymmetry (default 0.7)")
    p.add_argument("--bounds", help="lo,hi box bounds (default -2,2)")
    p.add_argument("--no-cells", dest="no_cells", action="store_true", default=None,
                   help="skip the full per-cell CSV dump")

    p = sub.add_parser("beta-sweep",
                       help="robustness of the penalty weight")
    _add_common(p)
    p.add_argument("--n", type=int, help="problem dimension (default 50)")
    p.add_argument("--delta", type=float, help="eigenvalue gap (default 0.01)")
    p.add_argument("--betas", help="comma-separated weights "
                   "(default 1,10,50,100,125,126)")

    p = sub.add_parser("check",
                       help="run the invariant suite (no experiment data)")
    _add_common(p)

    return parser


def cmd_threefold(args, config) -> int:
    beta = float(_resolve(args, config, "beta", 1.0))
    eta = float(_resolve(args, config, "eta", 0.7))
    eps_r = float(_resolve(args, config, "eps_r", 1e-12))
    law_name = str(_resolve(args, config, "law", "exponential"))
    law = _build_law(law_name, args, config)
    cfg = CrgdConfig(beta=beta, eps_r=eps_r, law=law)
    outdir = _outdir(args, config, "threefold")

    cmp = experiments.run_threefold_comparison(cfg=cfg, eta=eta)
    profiles = experiments.run_rate_profiles(beta=beta, eta=eta)

    outputs = [
        reports.trajectory_csv(cmp.gd, outdir / "trajectory_gd.csv"),
        reports.trajectory_csv(cmp.crgd, outdir / "trajectory_crgd.csv"),
        reports.threefold_summary_csv(cmp, outdir / "summary.csv"),
        reports.rate_profiles_csv(profiles, outdir / "rate_profiles.csv"),
        plotting.plot_threefold_comparison(cmp, outdir / "trajectories.svg"),
        plotting.plot_rate_profiles(profiles, outdir / "rate_profiles.svg"),
    ]
    print(f"gd:   {cmp.gd.status.value} at t={cmp.gd.t_final:.3f}, "
          f"J={cmp.gd.j[-1]:.5f}, lambda_min={cmp.gd.lambda_min[-1]:.4f}")
    print(f"crgd: {cmp.crgd.status.value} at t={cmp.crgd.t_final:.3f}, "
          f"J={cmp.crgd.j[-1]:.5f}, lambda_min={cmp.crgd.lambda_min[-1]:.4f}")
    manifest = {
        "experiment": "threefold", "version": __version__,
        "config": {"eta": eta, "beta": beta, "eps_r": eps_r, "law": law_name,
                   "law_params": {k: getattr(law, k) for k in vars(law)}},
        "outputs": [p.name for p in outputs],
    }
    results = []
    if _resolve(args, config, "assert_mode", False):
        results = checks.evaluate_threefold(cmp) + checks.evaluate_rate_profiles(profiles)
    return _finish(outdir, manifest, results, bool(_resolve(args, config, "assert_mode", False)))


def cmd_gap_sweep(args, config) -> int:
    n = int(_resolve(args, config, "n", 50))
    beta = float(_resolve(args, config, "beta", 1.0))
    jobs = int(_resolve(args, config, "jobs", 1))
    full = bool(_resolve(args, config, "full_scale", False))
    default_deltas = (experiments.GAP_SWEEP_DELTAS_FULL if full
                      else experiments.GAP_SWEEP_DELTAS)
    deltas = _floats(_resolve(args, config, "deltas", default_deltas), "deltas")
    outdir = _outdir(args, config, "gap-sweep")

    cfg = CrgdConfig(beta=beta)
    result = experiments.run_gap_sweep(deltas=deltas, n=n, cfg=cfg, jobs=jobs)
    outputs = [
        reports.gap_sweep_csv(result, outdir / "gap_sweep.csv"),
        plotting.plot_gap_sweep(result, outdir / "gap_sweep.svg"),
    ]
    print(f"gd slope:   {result.slope_gd:.4f} (rms residual {result.residual_gd:.4f})")
    print(f"crgd slope: {result.slope_crgd:.4f} (rms residual {result.residual_crgd:.4f})")
    manifest = {
        "experiment": "gap-sweep", "version": __version__,
        "config": {"n": n, "beta": beta, "deltas": list(deltas), "jobs": jobs},
        "results": {"slope_gd": result.slope_gd, "slope_crgd": result.slope_crgd},
        "outputs": [p.name for p in outputs],
    }
    assert_mode = bool(_resolve(args, config, "assert_mode", False))
    results = checks.evaluate_gap_sweep(result) if assert_mode else []
    return _finish(outdir, manifest, results, assert_mode)


def cmd_monte_carlo(args, config) -> int:
    n = int(_resolve(args, config, "n", 50))
    seed = int(_resolve(args, config, "seed", 42))
    jobs = int(_resolve(args, config, "jobs", 1))
    full = bool(_resolve(args, config, "full_scale", False))
    trials = int(_resolve(args, config, "trials", 2000 if full else 100))
    default_deltas = (experiments.MONTE_CARLO_DELTAS_FULL if full
                      else experiments.MONTE_CARLO_DELTAS)
    deltas = _floats(_resolve(args, config, "deltas", default_deltas), "deltas")
    horizons = _floats(_resolve(args, config, "horizons", (10.0, 1000.0)), "horizons")
    outdir = _outdir(args, config, "monte-carlo")

    report = experiments.run_monte_carlo(deltas=deltas, trials=trials,
                                         horizons=horizons, seed=seed, n=n,
                                         jobs=jobs)
    outputs = [
        reports.monte_carlo_csv(report, outdir / "monte_carlo.csv"),
        plotting.plot_monte_carlo(report, outdir / "monte_carlo.svg"),
    ]
    for row in report.rows:
        print(f"delta={row.delta:g} T={row.horizon:g} {row.method}: "
              f"{row.rate_percent:.1f}% ({row.sosp}/{row.trials}"
              + (f", {row.failures} solver failures)" if row.failures else ")"))
    manifest = {
        "experiment": "monte-carlo", "version": __version__,
        "config": {"n": n, "trials": trials, "deltas": list(deltas),
                   "horizons": list(horizons), "seed": seed, "jobs": jobs},
        "outputs": [p.name for p in outputs],
    }
    assert_mode = bool(_resolve(args, config, "assert_mode", False))
    results = checks.evaluate_monte_carlo(report) if assert_mode else []
    return _finish(outdir, manifest, results, assert_mode)


def cmd_grid_scan(args, config) -> int:
    resolution = int(_resolve(args, config, "resolution", 500))
    beta = float(_resolve(args, config, "beta", 1.0))
    eta = float(_resolve(args, config, "eta", 0.7))
    bounds = _floats(_resolve(args, config, "bounds", (-2.0, 2.0)), "bounds")
    if len(bounds) != 2:
        raise ConfigError(f"bounds: expected lo,hi, got {bounds}")
    outdir = _outdir(args, config, "grid-scan")

    result = experiments.run_grid_scan(bounds=(bounds[0], bounds[1]),
                                       resolution=resolution, beta=beta, eta=eta)
    outputs = [plotting.plot_grid_scan(result, outdir / "grid_scan.svg")]
    if not bool(_resolve(args, config, "no_cells", False)):
        outputs.append(reports.grid_scan_csv(result, outdir / "grid_scan.csv"))
    print(f"min ||grad phi|| over {result.n_negative_cells} negative-curvature "
          f"cells: {result.min_grad_phi:.4e} at {result.argmin_xy}")
    manifest = {
        "experiment": "grid-scan", "version": __version__,
        "config": {"resolution": resolution, "beta": beta, "eta": eta,
                   "bounds": list(bounds)},
        "results": {"min_grad_phi": result.min_grad_phi,
                    "n_negative_cells": result.n_negative_cells},
        "outputs": [p.name for p in outputs],
    }
    assert_mode = bool(_resolve(args, config, "assert_mode", False))
    results = checks.evaluate_grid_scan(result) if assert_mode else []
    return _finish(outdir, manifest, results, assert_mode)


def cmd_beta_sweep(args, config) -> int:
    n = int(_resolve(args, config, "n", 50))
    delta = float(_resolve(args, config, "delta", 0.01))
    betas = _floats(_resolve(args, config, "betas", experiments.BETA_SWEEP_BETAS),
                    "betas")
    outdir = _outdir(args, config, "beta-sweep")

    result = experiments.run_beta_sweep(betas=betas, n=n, delta=delta)
    outputs = [
        reports.beta_sweep_csv(result, outdir / "beta_sweep.csv"),
        plotting.plot_beta_sweep(result, outdir / "beta_sweep.svg"),
    ]
    for row in result.rows:
        print(f"beta={row.beta:g}: {row.status}"
              + (f" (t={row.t_conv:.4f})" if row.t_conv == row.t_conv else ""))
    print(f"observed bracket: largest success {result.largest_success:g}, "
          f"smallest failure {result.smallest_failure:g}")
    manifest = {
        "experiment": "beta-sweep", "version": __version__,
        "config": {"n": n, "delta": delta, "betas": list(betas)},
        "results": {"largest_success": result.largest_success,
                    "smallest_failure": result.smallest_failure},
        "outputs": [p.name for p in outputs],
    }
    assert_mode = bool(_resolve(args, config, "assert_mode", False))
    results = checks.evaluate_beta_sweep(result) if assert_mode else []
    return _finish(outdir, manifest, results, assert_mode)


def cmd_check(args, config) -> int:
    outdir = _outdir(args, config, "check")
    results = checks.run_property_checks()
    for r in results:
        print(r.line())
    reports.write_csv(outdir / "checks.csv", ["name", "passed", "detail"],
                      [(r.name, int(r.passed), r.detail) for r in results])
    manifest = {"experiment": "check", "version": __version__,
                "outputs": ["checks.csv"]}
    reports.write_manifest(outdir, manifest)
    print(f"outputs written to {outdir}")
    return 0 if all(r.passed for r in results) else 2


_COMMANDS = {
    "threefold": cmd_threefold,
    "gap-sweep": cmd_gap_sweep,
    "monte-carlo": cmd_monte_carlo,
    "grid-scan": cmd_grid_scan,
    "beta-sweep": cmd_beta_sweep,
    "check": cmd_check,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        config = load_config(args.config) if getattr(args, "config", None) else {}
        return _COMMANDS[args.command](args, config)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
