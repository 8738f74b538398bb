"""Smallest-eigenvalue machinery for the curvature penalty.

Everything needed to evaluate the augmented cost: extremal eigenpair of the
Hessian, the curvature sensitivity vector (gradient of lambda_min in x), the
hinge penalty on negative curvature, and the gradient of the augmented cost.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:  # pragma: no cover - import cycle guard, typing only
    from .objective import ObjectiveProblem

Array = np.ndarray

# Below this eigenvalue spacing the minimal eigenvector is numerically
# ill-determined; such steps proceed with the solver's vector and are counted.
DEGENERACY_GAP = 1e-10


@dataclass(frozen=True)
class EigenPair:
    """Smallest eigenvalue of a symmetric matrix with its unit eigenvector.

    gap_to_next is the spacing to the second-smallest eigenvalue and serves
    as a degeneracy diagnostic.
    """

    lambda_min: float
    u_min: Array
    gap_to_next: float


@dataclass(frozen=True)
class AugmentedEval:
    """One evaluation of the augmented cost and its gradient.

    penalty >= 0 and vanishes exactly when lambda_min >= 0, in which case
    phi == j and grad_phi == g.
    """

    j: float
    phi: float
    grad_phi: Array
    penalty: float
    eigen: EigenPair
    g: Array


def eigmin(h: Array) -> EigenPair:
    """Extremal eigenpair of a symmetric matrix via full eigendecomposition.

    The eigenvector sign is fixed so its largest-magnitude component is
    positive, which keeps downstream logs deterministic. Input asymmetry
    beyond 1e-10 (relative to the largest entry) is rejected.
    """
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {h.shape}")
    asym = np.abs(h - h.T).max()
    if asym > 1e-10 * (1.0 + np.abs(h).max()):
        raise ValueError(f"matrix is not symmetric (asymmetry {asym:.3e})")
    vals, vecs = np.linalg.eigh(0.5 * (h + h.T))
    u = vecs[:, 0]
    k = int(np.argmax(np.abs(u)))
    if u[k] < 0:
        u = -u
    gap = float(vals[1] - vals[0]) if vals.size > 1 else 0.0
    return EigenPair(lambda_min=float(vals[0]), u_min=u, gap_to_next=max(gap, 0.0))


def smf_wmin(x: Array, u_min: Array) -> Array:
    """Closed-form curvature sensitivity for the matrix factorization
    landscape: w = 2x + 4 (x^T u) u. O(n), independent of the target matrix,
    and invariant under u -> -u.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u_min, dtype=float)
    return 2.0 * x + 4.0 * float(x @ u) * u


def wmin_generic(problem: "ObjectiveProblem", x: Array, u_min: Array,
                 h: float | None = None) -> Array:
    """Curvature sensitivity by central differences of the Hessian.

    Component j is u^T (dH/dx_j) u with dH/dx_j approximated by
    (H(x + h e_j) - H(x - h e_j)) / (2h).
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u_min, dtype=float)
    if h is None:
        h = 1e-4 * (1.0 + float(np.linalg.norm(x)))
    w = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        dh = (problem.hess(x + e) - problem.hess(x - e)) / (2.0 * h)
        w[j] = float(u @ (dh @ u))
    return w


def augmented_eval(problem: "ObjectiveProblem", x: Array, beta: float) -> AugmentedEval:
    """Evaluate the augmented cost phi = J + (beta^2/2) max(0, -lambda_min)^2
    and its gradient grad_phi = g - beta^2 max(0, -lambda_min) w_min.

    When lambda_min >= 0 no eigenvector-dependent correction is needed and
    grad_phi equals g exactly. The sensitivity w_min uses the problem's
    closed form when available, otherwise the finite-difference path.
    """
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    x = np.asarray(x, dtype=float)
    j = float(problem.value(x))
    g = problem.grad(x)
    eigen = eigmin(problem.hess(x))
    lam = eigen.lambda_min
    if lam >= 0.0:
        return AugmentedEval(j=j, phi=j, grad_phi=g, penalty=0.0, eigen=eigen, g=g)
    if problem.analytic_wmin is not None:
        w = problem.analytic_wmin(x, eigen.u_min)
    else:
        w = wmin_generic(problem, x, eigen.u_min)
    b2 = beta * beta
    penalty = 0.5 * b2 * lam * lam
    return AugmentedEval(
        j=j,
        phi=j + penalty,
        grad_phi=g + b2 * lam * w,
        penalty=penalty,
        eigen=eigen,
        g=g,
    )


def spurious_quadform(problem: "ObjectiveProblem", x: Array, beta: float,
                      h: float | None = None) -> float:
    """Quadratic form u_min^T (hessian of phi) u_min at a negative-curvature
    point, with the phi-Hessian taken by central differences of grad_phi.

    Used to spot-check that critical points of phi with lambda_min < 0 are
    saddles of phi. Rejected when lambda_min is nonnegative or degenerate
    (the direction u_min is then ill-defined).
    """
    x = np.asarray(x, dtype=float)
    eigen = eigmin(problem.hess(x))
    if eigen.lambda_min >= 0.0:
        raise ValueError("requires a point with lambda_min < 0")
    if eigen.gap_to_next <= 1e-8:
        raise ValueError(
            f"lambda_min is degenerate (gap {eigen.gap_to_next:.3e}); "
            "quadratic form along u_min is ill-defined"
        )
    if h is None:
        h = 1e-5 * (1.0 + float(np.linalg.norm(x)))
    u = eigen.u_min
    gp = augmented_eval(problem, x + h * u, beta).grad_phi
    gm = augmented_eval(problem, x - h * u, beta).grad_phi
    return float(u @ (gp - gm)) / (2.0 * h)
