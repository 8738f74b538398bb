"""Delimited output and run manifests.

All writers format floats with repr (shortest round-trip), so identical
results produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .experiments import (
    BetaSweepResult,
    GapSweepResult,
    GridScanResult,
    MonteCarloReport,
    RateProfiles,
    ThreefoldComparison,
)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_manifest(outdir, payload: dict) -> Path:
    """Record everything needed to reproduce a run: experiment name,
    configuration, seed, and package version."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / "manifest.json"
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def trajectory_csv(traj: Trajectory, path) -> Path:
    """Per-sample trajectory export. 2D runs include the state columns;
    higher-dimensional runs export the state norm instead."""
    dim = traj.x.shape[1]
    if dim <= 2:
        state_header = [f"x_{i + 1}" for i in range(dim)]
        state_cols = [traj.x[:, i] for i in range(dim)]
    else:
        state_header = ["x_norm"]
        state_cols = [np.linalg.norm(traj.x, axis=1)]
    header = ["t", *state_header, "J", "phi", "grad_norm", "lambda_min", "u_norm"]
    rows = zip(traj.t, *state_cols, traj.j, traj.phi, traj.grad_norm,
               traj.lambda_min, traj.u_norm)
    return write_csv(path, header, rows)


def threefold_summary_csv(cmp: ThreefoldComparison, path) -> Path:
    header = ["method", "status", "t_final", "final_J", "final_lambda_min",
              "final_grad_norm", "accepted", "rejected"]
    rows = [
        (name, traj.status.value, traj.t_final, traj.j[-1], traj.lambda_min[-1],
         traj.grad_norm[-1], traj.accepted, traj.rejected)
        for name, traj in (("gd", cmp.gd), ("crgd", cmp.crgd))
    ]
    return write_csv(path, header, rows)


def rate_profiles_csv(profiles: RateProfiles, path) -> Path:
    header = ["law", "t", "phi", "phi_ref", "J", "grad_norm", "lambda_min"]
    rows = []
    for run in profiles.runs:
        tr = run.traj
        for i in range(tr.t.size):
            rows.append((run.law_name, tr.t[i], tr.phi[i], run.ref_phi[i],
                         tr.j[i], tr.grad_norm[i], tr.lambda_min[i]))
    gd = profiles.gd
    for i in range(gd.t.size):
        rows.append(("gd", gd.t[i], gd.phi[i], float("nan"), gd.j[i],
                     gd.grad_norm[i], gd.lambda_min[i]))
    return write_csv(path, header, rows)


def gap_sweep_csv(result: GapSweepResult, path) -> Path:
    header = ["delta", "t_conv_gd", "t_conv_crgd", "status_gd", "status_crgd"]
    rows = [(r.delta, r.t_conv_gd, r.t_conv_crgd, r.status_gd, r.status_crgd)
            for r in result.rows]
    return write_csv(path, header, rows)


def monte_carlo_csv(report: MonteCarloReport, path) -> Path:
    header = ["delta", "horizon", "method", "trials", "sosp", "rate_percent",
              "failures"]
    rows = [(r.delta, r.horizon, r.method, r.trials, r.sosp, r.rate_percent,
             r.failures) for r in report.rows]
    return write_csv(path, header, rows)


def grid_scan_csv(result: GridScanResult, path) -> Path:
    """Full cell dump: one row per mesh point."""
    header = ["x1", "x2", "grad_phi_norm", "lambda_min"]

    def rows():
        res = result.resolution
        for iy in range(res):
            for ix in range(res):
                yield (result.xs[ix], result.ys[iy],
                       result.grad_phi_norm[iy, ix], result.lambda_min[iy, ix])

    return write_csv(path, header, rows())


def beta_sweep_csv(result: BetaSweepResult, path) -> Path:
    header = ["beta", "status", "t_conv", "final_grad_norm", "final_lambda_min"]
    rows = [(r.beta, r.status, r.t_conv, r.final_grad_norm, r.final_lambda_min)
            for r in result.rows]
    return write_csv(path, header, rows)
