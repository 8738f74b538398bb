"""Static vector figures rendered alongside the CSV outputs.

Every experiment has one chart; all are written with the Agg backend so
runs work headless. CSV remains the canonical record, the figures are for
eyeballing.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .experiments import (
    BetaSweepResult,
    GapSweepResult,
    GridScanResult,
    MonteCarloReport,
    RateProfiles,
    ThreefoldComparison,
)
from .objective import ThreeFoldParams, threefold_problem

_LAW_COLORS = {
    "exponential": "tab:blue",
    "finite-time": "tab:orange",
    "fixed-time": "tab:green",
    "prescribed-time": "tab:red",
}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_threefold_comparison(cmp: ThreefoldComparison, path) -> Path:
    """Landscape contours with both trajectories overlaid."""
    problem = threefold_problem(ThreeFoldParams(eta=cmp.eta))
    grid = np.linspace(-2.0, 2.0, 300)
    gx, gy = np.meshgrid(grid, grid)
    z = np.array([[problem.value(np.array([a, b])) for a in grid] for b in grid])

    fig, ax = plt.subplots(figsize=(6.0, 5.2))
    levels = np.unique(np.percentile(z, np.linspace(1, 99, 30)))
    cs = ax.contour(gx, gy, z, levels=levels, colors="0.75", linewidths=0.6)
    ax.clabel(cs, cs.levels[::6], fontsize=6, fmt="%.2f")
    ax.plot(cmp.gd.x[:, 0], cmp.gd.x[:, 1], color="0.35", lw=1.8,
            label="gradient descent")
    ax.plot(cmp.crgd.x[:, 0], cmp.crgd.x[:, 1], color="tab:blue", lw=1.8,
            label="crgd")
    for angle in (0.0, 2 * np.pi / 3, -2 * np.pi / 3):
        ax.plot(cmp.r_saddle * np.cos(angle), cmp.r_saddle * np.sin(angle),
                "x", color="tab:red", ms=8, mew=2)
        ax.plot(cmp.r_minimum * np.cos(angle), cmp.r_minimum * np.sin(angle),
                "o", mfc="none", mec="tab:green", ms=8, mew=2)
    ax.plot(0, 0, "o", mfc="none", mec="tab:green", ms=8, mew=2)
    ax.plot(*cmp.x0, "k*", ms=10, label="start")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("saddles: x, minima: o")
    ax.set_aspect("equal")
    ax.legend(loc="upper left", fontsize=8)
    return _save(fig, path)


def plot_rate_profiles(profiles: RateProfiles, path) -> Path:
    """Augmented cost against time for each law, with references dashed.
    The gradient-descent curve shows the raw objective, which stalls at the
    saddle value."""
    fig, ax = plt.subplots(figsize=(6.4, 4.6))
    for run in profiles.runs:
        color = _LAW_COLORS.get(run.law_name, None)
        ax.semilogy(run.traj.t, run.traj.phi, color=color, lw=1.6,
                    label=run.law_name)
        ax.semilogy(run.traj.t, run.ref_phi, color=color, lw=1.0, ls="--",
                    alpha=0.7)
    ax.semilogy(profiles.gd.t, profiles.gd.j, color="0.4", lw=1.6,
                label="gradient descent (J)")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("augmented cost")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    return _save(fig, path)


def plot_gap_sweep(result: GapSweepResult, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.6))
    deltas = np.array([r.delta for r in result.rows])
    for method, color, marker in (("gd", "0.4", "s"), ("crgd", "tab:blue", "o")):
        times = np.array([getattr(r, f"t_conv_{method}") for r in result.rows])
        ok = np.isfinite(times)
        ax.loglog(deltas[ok], times[ok], marker, color=color, label=method)
        slope = getattr(result, f"slope_{method}")
        intercept = getattr(result, f"intercept_{method}")
        if np.isfinite(slope):
            fit = np.exp(intercept) * deltas ** slope
            ax.loglog(deltas, fit, "-", color=color, lw=1.0, alpha=0.7,
                      label=f"{method} fit: slope {slope:.2f}")
    ax.set_xlabel("eigenvalue gap delta")
    ax.set_ylabel("time to second-order stationarity [s]")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    return _save(fig, path)


def plot_monte_carlo(report: MonteCarloReport, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    labels, gd_rates, crgd_rates = [], [], []
    for delta in report.deltas:
        for horizon in report.horizons:
            labels.append(f"d={delta:g}\nT={horizon:g}")
            gd_rates.append(report.rate(delta, horizon, "gd"))
            crgd_rates.append(report.rate(delta, horizon, "crgd"))
    pos = np.arange(len(labels))
    width = 0.38
    ax.bar(pos - width / 2, gd_rates, width, color="0.5", label="gd")
    ax.bar(pos + width / 2, crgd_rates, width, color="tab:blue", label="crgd")
    ax.set_xticks(pos, labels, fontsize=8)
    ax.set_ylabel("SOSP rate [%]")
    ax.set_ylim(0, 105)
    ax.legend(fontsize=8)
    ax.set_title(f"{report.trials} trials per cell, seed {report.seed}")
    return _save(fig, path)


def plot_grid_scan(result: GridScanResult, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.2, 5.2))
    with np.errstate(divide="ignore"):
        field = np.log10(result.grad_phi_norm)
    mesh = ax.pcolormesh(result.xs, result.ys, field, shading="auto",
                         cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="log10 ||grad phi||")
    ax.contour(result.xs, result.ys, result.lambda_min,
               levels=[result.curvature_cutoff], colors="tab:red",
               linewidths=1.0)
    for m in result.minima:
        ax.plot(m[0], m[1], "o", mfc="none", mec="w", ms=8, mew=1.5)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_aspect("equal")
    ax.set_title(f"beta = {result.beta:g}; red contour: lambda_min = "
                 f"{result.curvature_cutoff:g}")
    return _save(fig, path)


def plot_beta_sweep(result: BetaSweepResult, path) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    ok = [(r.beta, r.t_conv) for r in result.rows if np.isfinite(r.t_conv)]
    bad = [r.beta for r in result.rows if not np.isfinite(r.t_conv)]
    if ok:
        bs, ts = zip(*ok)
        ax.loglog(bs, ts, "o", color="tab:blue", label="converged")
    for i, b in enumerate(bad):
        ax.axvline(b, color="tab:red", lw=1.0, ls=":",
                   label="failed" if i == 0 else None)
    ax.set_xlabel("penalty weight beta")
    ax.set_ylabel("time to second-order stationarity [s]")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    return _save(fig, path)
