"""Flow right-hand sides, adaptive integration, and termination logic.

The optimizer state follows dx/dt = u with u either the curvature-regularized
control (run_crgd) or plain steepest descent (run_gd). Integration uses an
explicit Dormand-Prince 5(4) embedded pair with PI step-size control; every
accepted step is logged and checked against the configured stop rules.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .curvature import DEGENERACY_GAP, augmented_eval, eigmin
from .laws import ConvergenceLaw, Exponential, PrescribedTime

Array = np.ndarray


class IntegrationError(RuntimeError):
    """Raised when the integrator cannot continue (non-finite initial state
    or exhausted step budget)."""


@dataclass(frozen=True)
class CrgdConfig:
    """Parameters of the curvature-regularized control law.

    beta weights the curvature penalty, eps_r regularizes the feedback gain,
    phi_star_estimate is the lower-bound substitute for the optimal augmented
    cost, and tol_grad/tol_eig define the second-order stationarity test.
    """

    beta: float = 1.0
    eps_r: float = 1e-12
    law: ConvergenceLaw = Exponential(c=2.0)
    phi_star_estimate: float = 0.0
    tol_grad: float = 1e-3
    tol_eig: float = 1e-4

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.eps_r > 0:
            raise ValueError(f"eps_r must be > 0, got {self.eps_r}")
        if not (self.tol_grad > 0 and self.tol_eig > 0):
            raise ValueError("tol_grad and tol_eig must be > 0")


@dataclass(frozen=True)
class SolverConfig:
    """Step-size and horizon settings for the adaptive integrator."""

    rtol: float = 1e-10
    atol: float = 1e-12
    h_init: float = 1e-6
    h_min: float = 1e-13
    h_max: float = 1.0
    t_max: float = 10.0
    max_steps: int = 500_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be > 0")
        if not 0 < self.h_min <= self.h_init <= self.h_max:
            raise ValueError(
                f"need 0 < h_min <= h_init <= h_max, got "
                f"({self.h_min}, {self.h_init}, {self.h_max})"
            )
        if not self.t_max > 0:
            raise ValueError(f"t_max must be > 0, got {self.t_max}")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


class StatusKind(str, enum.Enum):
    CONVERGED_SOSP = "converged_sosp"
    SADDLE_STALL = "saddle_stall"
    HORIZON = "horizon"
    PRESCRIBED_HORIZON = "prescribed_horizon"
    STEP_FLOOR = "step_floor"


class StepDiag(NamedTuple):
    """Per-sample diagnostics logged along a trajectory."""

    j: float
    phi: float
    grad_norm: float
    lambda_min: float
    u_norm: float
    degenerate: bool


@dataclass
class Trajectory:
    """Time-stamped record of one integration run.

    Columns are aligned: row i holds the state and diagnostics at t[i].
    degenerate_crossings counts accepted samples where lambda_min was
    negative and nearly degenerate.
    """

    t: Array
    x: Array
    j: Array
    phi: Array
    grad_norm: Array
    lambda_min: Array
    u_norm: Array
    status: StatusKind
    degenerate_crossings: int
    accepted: int
    rejected: int

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    @property
    def x_final(self) -> Array:
        return self.x[-1]


# Dormand-Prince 5(4) tableau. Seven stages, fifth-order propagation with an
# embedded fourth-order error estimate; FSAL is not exploited.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = (
    np.array([], dtype=float),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
)
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_ERR = np.array(
    [71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40]
)

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0
# PI controller exponents for a 5th-order pair (Hairer's beta = 0.04).
_PI_BETA = 0.04
_PI_ALPHA = 0.2 - 0.75 * _PI_BETA
_FLOOR_STRIKES = 10


def dp54_step(f, t: float, y: Array, h: float) -> tuple[Array, Array]:
    """One Dormand-Prince 5(4) step. Returns the fifth-order state and the
    embedded local error estimate."""
    k = np.empty((7, y.size))
    k[0] = f(t, y)
    for i in range(1, 7):
        k[i] = f(t + _DP_C[i] * h, y + h * (_DP_A[i] @ k[:i]))
    y_new = y + h * (_DP_B5 @ k)
    err = h * (_DP_ERR @ k)
    return y_new, err


def integrate(
    rhs: Callable[[float, Array], Array],
    x0: Array,
    solver: SolverConfig,
    stop: Optional[Callable[[float, Array, Optional[StepDiag]], Optional[StatusKind]]] = None,
    monitor: Optional[Callable[[float, Array], StepDiag]] = None,
    t0: float = 0.0,
    t_end: float | None = None,
    horizon_status: StatusKind = StatusKind.HORIZON,
) -> Trajectory:
    """Drive rhs(t, x) from x0 with adaptive steps, logging every accepted
    step.

    monitor supplies the per-sample diagnostics (NaN columns when omitted);
    stop is consulted after each accepted step and may end the run with a
    status. The run otherwise ends at t_end with horizon_status, or with
    STEP_FLOOR after the controller demands h < h_min ten times in a row.
    """
    y = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    if not np.all(np.isfinite(y)):
        raise IntegrationError(f"initial state is not finite: {y}")
    if t_end is None:
        t_end = t0 + solver.t_max
    if t_end <= t0:
        raise ValueError(f"t_end={t_end} must exceed t0={t0}")

    nan_diag = StepDiag(math.nan, math.nan, math.nan, math.nan, math.nan, False)
    ts, xs, diags = [t0], [y.copy()], []
    diag = monitor(t0, y) if monitor else nan_diag
    diags.append(diag)
    degenerate = int(diag.degenerate)
    accepted = rejected = 0
    status = horizon_status

    if stop is not None:
        early = stop(t0, y, diag)
        if early is not None:
            status = early
            t_end = t0  # skip the loop

    t = t0
    h = min(solver.h_init, t_end - t0) if t_end > t0 else solver.h_init
    err_prev = 1e-4
    floor_strikes = 0
    just_rejected = False
    attempts = 0

    while t < t_end * (1.0 - 1e-14) - 1e-300:
        attempts += 1
        if attempts > solver.max_steps:
            raise IntegrationError(
                f"step budget exhausted ({solver.max_steps} attempts) at t={t:.6g}"
            )
        h = min(h, t_end - t)
        y_new, err_vec = dp54_step(rhs, t, y, h)
        if np.all(np.isfinite(y_new)) and np.all(np.isfinite(err_vec)):
            scale = solver.atol + solver.rtol * np.maximum(np.abs(y), np.abs(y_new))
            err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        else:
            err = math.inf

        if err <= 1.0:
            t = t + h
            y = y_new
            accepted += 1
            diag = monitor(t, y) if monitor else nan_diag
            ts.append(t)
            xs.append(y.copy())
            diags.append(diag)
            degenerate += int(diag.degenerate)
            if stop is not None:
                hit = stop(t, y, diag)
                if hit is not None:
                    status = hit
                    break
            if err == 0.0:
                factor = _MAX_FACTOR
            else:
                factor = _SAFETY * err ** (-_PI_ALPHA) * err_prev ** _PI_BETA
            if just_rejected:
                factor = min(factor, 1.0)
            err_prev = max(err, 1e-10)
            just_rejected = False
        else:
            rejected += 1
            just_rejected = True
            factor = max(_MIN_FACTOR, _SAFETY * err ** (-_PI_ALPHA)) if math.isfinite(err) else _MIN_FACTOR

        h_new = h * min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
        if h_new < solver.h_min:
            floor_strikes += 1
            h_new = solver.h_min
            if floor_strikes >= _FLOOR_STRIKES:
                status = StatusKind.STEP_FLOOR
                break
        else:
            floor_strikes = 0
        h = min(h_new, solver.h_max)

    diag_arr = np.array(diags, dtype=float)  # bool column coerces to 0/1
    return Trajectory(
        t=np.array(ts),
        x=np.array(xs),
        j=diag_arr[:, 0],
        phi=diag_arr[:, 1],
        grad_norm=diag_arr[:, 2],
        lambda_min=diag_arr[:, 3],
        u_norm=diag_arr[:, 4],
        status=status,
        degenerate_crossings=degenerate,
        accepted=accepted,
        rejected=rejected,
    )


def crgd_rhs(problem, x: Array, t: float, cfg: CrgdConfig):
    """Curvature-regularized control u = -sigma(V, t) grad_phi /
    (||grad_phi||^2 + eps_r) with V = max(0, phi - phi_star_estimate).

    Returns the control together with the AugmentedEval used to build it.
    """
    aug = augmented_eval(problem, x, cfg.beta)
    v = aug.phi - cfg.phi_star_estimate
    if v < 0.0:
        v = 0.0
    s = cfg.law.sigma(v, t)
    gp = aug.grad_phi
    u = (-s / (float(gp @ gp) + cfg.eps_r)) * gp
    return u, aug


def gd_rhs(problem, x: Array) -> Array:
    """Steepest-descent flow dx/dt = -grad J."""
    return -problem.grad(x)


def is_sosp(problem, x: Array, cfg: CrgdConfig) -> bool:
    """Second-order stationarity test: ||grad J|| < tol_grad and
    lambda_min(hess J) > -tol_eig."""
    g = problem.grad(x)
    if float(np.linalg.norm(g)) >= cfg.tol_grad:
        return False
    return eigmin(problem.hess(x)).lambda_min > -cfg.tol_eig


class StopRules:
    """Stateful stop predicate combining the SOSP test and stall detection.

    Stall is declared when the gradient test passes while the curvature test
    fails for `patience` consecutive accepted steps.
    """

    def __init__(self, cfg: CrgdConfig, sosp: bool = True, stall: bool = False,
                 patience: int = 50):
        self.cfg = cfg
        self.sosp = sosp
        self.stall = stall
        self.patience = patience
        self._count = 0

    def __call__(self, t, x, diag: StepDiag):
        grad_ok = diag.grad_norm < self.cfg.tol_grad
        curv_ok = diag.lambda_min > -self.cfg.tol_eig
        if self.sosp and grad_ok and curv_ok:
            return StatusKind.CONVERGED_SOSP
        if self.stall:
            if grad_ok and not curv_ok:
                self._count += 1
                if self._count >= self.patience:
                    return StatusKind.SADDLE_STALL
            else:
                self._count = 0
        return None


def _crgd_horizon(solver: SolverConfig, law: ConvergenceLaw):
    """Effective end time and horizon status; prescribed-time laws are
    clamped short of their singularity."""
    if isinstance(law, PrescribedTime):
        clamp = law.clamped_horizon()
        if clamp <= solver.t_max:
            return clamp, StatusKind.PRESCRIBED_HORIZON
    return solver.t_max, StatusKind.HORIZON


def run_crgd(problem, x0: Array, cfg: CrgdConfig, solver: SolverConfig, *,
             sosp_stop: bool = True, stall_stop: bool = False,
             stall_patience: int = 50) -> Trajectory:
    """Integrate the curvature-regularized flow from x0."""

    def rhs(t, x):
        u, _ = crgd_rhs(problem, x, t, cfg)
        return u

    def monitor(t, x):
        u, aug = crgd_rhs(problem, x, t, cfg)
        return StepDiag(
            j=aug.j,
            phi=aug.phi,
            grad_norm=float(np.linalg.norm(aug.g)),
            lambda_min=aug.eigen.lambda_min,
            u_norm=float(np.linalg.norm(u)),
            degenerate=(aug.eigen.lambda_min < 0
                        and aug.eigen.gap_to_next < DEGENERACY_GAP),
        )

    t_end, horizon_status = _crgd_horizon(solver, cfg.law)
    stop = StopRules(cfg, sosp=sosp_stop, stall=stall_stop, patience=stall_patience)
    return integrate(rhs, x0, solver, stop=stop, monitor=monitor,
                     t_end=t_end, horizon_status=horizon_status)


def run_gd(problem, x0: Array, cfg: CrgdConfig, solver: SolverConfig, *,
           sosp_stop: bool = True, stall_stop: bool = False,
           stall_patience: int = 50) -> Trajectory:
    """Integrate plain gradient descent from x0.

    cfg supplies the stationarity tolerances and the beta used to log the
    augmented cost along the way; the flow itself is -grad J.
    """

    def rhs(t, x):
        return -problem.grad(x)

    def monitor(t, x):
        g = problem.grad(x)
        aug = augmented_eval(problem, x, cfg.beta)
        return StepDiag(
            j=aug.j,
            phi=aug.phi,
            grad_norm=float(np.linalg.norm(g)),
            lambda_min=aug.eigen.lambda_min,
            u_norm=float(np.linalg.norm(g)),
            degenerate=(aug.eigen.lambda_min < 0
                        and aug.eigen.gap_to_next < DEGENERACY_GAP),
        )

    stop = StopRules(cfg, sosp=sosp_stop, stall=stall_stop, patience=stall_patience)
    return integrate(rhs, x0, solver, stop=stop, monitor=monitor,
                     t_end=solver.t_max, horizon_status=StatusKind.HORIZON)
