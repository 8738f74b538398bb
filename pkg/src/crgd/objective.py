"""Objective-function interface and the two built-in benchmark landscapes.

Problems are immutable containers of callables (value, gradient, Hessian)
plus an optional closed-form curvature-sensitivity vector. Central
finite-difference oracles live here too; they are the reference every
analytic derivative is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .curvature import smf_wmin

Array = np.ndarray


@dataclass(frozen=True)
class ObjectiveProblem:
    """An objective J with analytic derivatives.

    Attributes:
        name: short identifier used in reports and CLI selection.
        dim: dimension n of the state space.
        value: x -> J(x).
        grad: x -> gradient of J, shape (n,).
        hess: x -> Hessian of J, shape (n, n), symmetric.
        analytic_wmin: optional (x, u) -> curvature sensitivity vector,
            present only when a closed form exists.
    """

    name: str
    dim: int
    value: Callable[[Array], float]
    grad: Callable[[Array], Array]
    hess: Callable[[Array], Array]
    analytic_wmin: Optional[Callable[[Array, Array], Array]] = None


@dataclass(frozen=True)
class ThreeFoldParams:
    """Parameters of the three-fold symmetric 2D landscape."""

    eta: float = 0.7

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")


@dataclass(frozen=True)
class MatFacParams:
    """Parameters of the rank-one symmetric matrix factorization landscape.

    The target matrix is M* = V diag(spectrum) V^T.
    """

    dim: int
    spectrum: Array
    basis: Array

    def __post_init__(self):
        spectrum = np.asarray(self.spectrum, dtype=float)
        basis = np.asarray(self.basis, dtype=float)
        object.__setattr__(self, "spectrum", spectrum)
        object.__setattr__(self, "basis", basis)
        if self.dim < 3:
            raise ValueError(f"dim must be >= 3, got {self.dim}")
        if spectrum.shape != (self.dim,):
            raise ValueError("spectrum length must equal dim")
        if np.any(np.diff(spectrum) >= 0):
            raise ValueError("spectrum must be strictly decreasing")
        if spectrum[-1] < 0:
            raise ValueError("spectrum must be nonnegative")
        if basis.shape != (self.dim, self.dim):
            raise ValueError("basis must be a dim x dim matrix")
        if np.abs(basis.T @ basis - np.eye(self.dim)).max() > 1e-12:
            raise ValueError("basis columns must be orthonormal to 1e-12")

    @property
    def gap(self) -> float:
        """Eigenvalue gap at the dominant saddle, lambda_1 - lambda_2."""
        return float(self.spectrum[0] - self.spectrum[1])

    def mstar(self) -> Array:
        """Assemble the target matrix M* = V diag(spectrum) V^T."""
        return (self.basis * self.spectrum) @ self.basis.T


def threefold_problem(params: ThreeFoldParams = ThreeFoldParams()) -> ObjectiveProblem:
    """2D landscape with a global minimum ringed by three saddles and three
    outer local minima.

    J(x) = ||x||^2/2 + ||x||^4/4 - eta*(x1^3 - 3 x1 x2^2)

    No closed-form curvature sensitivity is attached; the generic
    finite-difference path is used.
    """
    eta = params.eta

    def value(x: Array) -> float:
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        return 0.5 * r2 + 0.25 * r2 * r2 - eta * (x[0] ** 3 - 3.0 * x[0] * x[1] ** 2)

    def grad(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        cubic = np.array([3.0 * x[0] ** 2 - 3.0 * x[1] ** 2, -6.0 * x[0] * x[1]])
        return (1.0 + r2) * x - eta * cubic

    def hess(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        h00 = 1.0 + r2 + 2.0 * x[0] ** 2 - 6.0 * eta * x[0]
        h11 = 1.0 + r2 + 2.0 * x[1] ** 2 + 6.0 * eta * x[0]
        h01 = 2.0 * x[0] * x[1] + 6.0 * eta * x[1]
        return np.array([[h00, h01], [h01, h11]])

    return ObjectiveProblem(name="threefold", dim=2, value=value, grad=grad, hess=hess)


def threefold_critical_radii(eta: float = 0.7) -> tuple[float, float]:
    """Radii of the saddle ring and the outer minima on the x1 axis.

    Nonzero critical points on the axis solve r^2 - 3*eta*r + 1 = 0;
    the smaller root is the saddle radius, the larger the outer minimum.
    Requires eta >= 2/3 for the roots to be real.
    """
    disc = 9.0 * eta * eta - 4.0
    if disc < 0:
        raise ValueError(f"no nonzero critical radii for eta={eta} (need eta >= 2/3)")
    root = np.sqrt(disc)
    r_saddle = (3.0 * eta - root) / 2.0
    r_minimum = (3.0 * eta + root) / 2.0
    return r_saddle, r_minimum


def matfac_problem(params: MatFacParams) -> ObjectiveProblem:
    """Rank-one symmetric matrix factorization J(x) = ||x x^T - M*||_F^2 / 4.

    grad = (||x||^2 I - M*) x, hess = ||x||^2 I + 2 x x^T - M*.
    The curvature sensitivity has the closed form 2x + 4(x^T u) u, which is
    attached as analytic_wmin.
    """
    mstar = params.mstar()
    mstar_fro2 = float(np.sum(mstar * mstar))
    n = params.dim

    def value(x: Array) -> float:
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        return 0.25 * (r2 * r2 - 2.0 * float(x @ (mstar @ x)) + mstar_fro2)

    def grad(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        return r2 * x - mstar @ x

    def hess(x: Array) -> Array:
        x = np.asarray(x, dtype=float)
        r2 = float(x @ x)
        return r2 * np.eye(n) + 2.0 * np.outer(x, x) - mstar

    return ObjectiveProblem(
        name="matfac",
        dim=n,
        value=value,
        grad=grad,
        hess=hess,
        analytic_wmin=smf_wmin,
    )


def default_spectrum(n: int, delta: float) -> Array:
    """Canonical spectrum for matrix factorization benchmarks.

    lambda_1 = 1, lambda_2 = 1 - delta, and a fixed linear tail
    lambda_i = 0.5*(n - i)/(n - 2) for i >= 3 (so lambda_n = 0). The tail is
    pinned here so sweep and Monte Carlo results are reproducible
    run-to-run.
    """
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    tail = 0.5 * (n - np.arange(3, n + 1)) / (n - 2)
    if n > 3 and 1.0 - delta <= tail[0]:
        raise ValueError(
            f"delta={delta} gives lambda_2={1.0 - delta} <= lambda_3={tail[0]}; "
            "spectrum would not be strictly decreasing"
        )
    return np.concatenate(([1.0, 1.0 - delta], tail))


def random_orthogonal_basis(n: int, seed: int) -> Array:
    """Seeded random orthogonal matrix (QR of a Gaussian draw, signs fixed)."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def fd_grad(problem: ObjectiveProblem, x: Array, h: float | None = None) -> Array:
    """Central-difference gradient of problem.value."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-5 * (1.0 + float(np.linalg.norm(x)))
    if h <= 0:
        raise ValueError("h must be positive")
    g = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (problem.value(x + e) - problem.value(x - e)) / (2.0 * h)
    return g


def fd_hess(problem: ObjectiveProblem, x: Array, h: float | None = None) -> Array:
    """Central-difference Hessian from problem.grad, symmetrized."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = 1e-4 * (1.0 + float(np.linalg.norm(x)))
    if h <= 0:
        raise ValueError("h must be positive")
    n = x.size
    a = np.zeros((n, n))
    for j in range(n):
        e = np.zeros_like(x)
        e[j] = h
        a[:, j] = (problem.grad(x + e) - problem.grad(x - e)) / (2.0 * h)
    return 0.5 * (a + a.T)
