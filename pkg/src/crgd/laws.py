"""Convergence laws sigma(V, t) and their reference decay curves.

Each law prescribes the exact decay rate dV/dt = -sigma(V, t) that the
dynamics enforce. reference_solution solves that scalar ODE from V(0) = V0
and is the oracle the logged decay curves are compared against;
settling_bound gives the (possibly infinite) time bound for V to reach zero.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

from scipy.integrate import quad
from scipy.optimize import brentq

# Fraction of the prescribed horizon kept clear of the designed singularity:
# sigma is never evaluated at t beyond T*(1 - PRESCRIBED_CLAMP).
PRESCRIBED_CLAMP = 1e-6


class ConvergenceLaw:
    """Interface shared by the four decay laws.

    sigma(V, t) >= 0 with sigma(0, t) = 0 for all t in the law's domain.
    """

    def sigma(self, v: float, t: float) -> float:
        raise NotImplementedError

    def reference_solution(self, v0: float, t: float) -> float:
        raise NotImplementedError

    def settling_bound(self, v0: float) -> float:
        raise NotImplementedError

    def _check_v(self, v: float) -> None:
        if v < 0:
            raise ValueError(f"V must be nonnegative, got {v}")


@dataclass(frozen=True)
class Exponential(ConvergenceLaw):
    """sigma = c V; V decays as V0 exp(-c t), never reaching zero."""

    c: float = 2.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")

    def sigma(self, v, t):
        self._check_v(v)
        return self.c * v

    def reference_solution(self, v0, t):
        self._check_v(v0)
        return v0 * math.exp(-self.c * t)

    def settling_bound(self, v0):
        return math.inf


@dataclass(frozen=True)
class FiniteTime(ConvergenceLaw):
    """sigma = c V^alpha, 0 < alpha < 1; settles in finite time
    V0^(1-alpha) / (c (1-alpha)).
    """

    c: float = 2.0
    alpha: float = 0.5

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError(f"c must be > 0, got {self.c}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")

    def sigma(self, v, t):
        self._check_v(v)
        return self.c * v ** self.alpha

    def reference_solution(self, v0, t):
        self._check_v(v0)
        base = v0 ** (1.0 - self.alpha) - self.c * (1.0 - self.alpha) * t
        if base <= 0.0:
            return 0.0
        return base ** (1.0 / (1.0 - self.alpha))

    def settling_bound(self, v0):
        self._check_v(v0)
        return v0 ** (1.0 - self.alpha) / (self.c * (1.0 - self.alpha))


@dataclass(frozen=True)
class FixedTime(ConvergenceLaw):
    """sigma = c1 V^alpha + c2 V^p with 0 < alpha < 1 < p.

    Settling time is bounded by 1/(c1 (1-alpha)) + 1/(c2 (p-1)) regardless
    of V0. The decay curve has no elementary closed form; it is recovered by
    high-accuracy quadrature of the separable ODE and root finding, with the
    computed points memoized.
    """

    c1: float = 1.0
    c2: float = 1.0
    alpha: float = 0.5
    p: float = 1.5

    def __post_init__(self):
        if not (self.c1 > 0 and self.c2 > 0):
            raise ValueError("c1 and c2 must be > 0")
        if not 0.0 < self.alpha < 1.0 < self.p:
            raise ValueError(
                f"need 0 < alpha < 1 < p, got alpha={self.alpha}, p={self.p}"
            )

    def sigma(self, v, t):
        self._check_v(v)
        return self.c1 * v ** self.alpha + self.c2 * v ** self.p

    def _decay_time(self, v_hi: float, v_lo: float) -> float:
        """Time for V to fall from v_hi to v_lo, by quadrature of dV/sigma.

        The substitution V = w^q with q = 1/(1-alpha) removes the endpoint
        singularity at V = 0, leaving a smooth integrand.
        """
        q = 1.0 / (1.0 - self.alpha)
        m = q * (self.p - 1.0) + 1.0

        def integrand(w):
            return q / (self.c1 + self.c2 * w ** m)

        val, _ = quad(integrand, v_lo ** (1.0 / q), v_hi ** (1.0 / q),
                      epsabs=1e-12, epsrel=1e-12, limit=200)
        return val

    def reference_solution(self, v0, t):
        self._check_v(v0)
        if t < 0:
            raise ValueError(f"t must be nonnegative, got {t}")
        return _fixed_time_reference(self, float(v0), float(t))

    def settling_bound(self, v0):
        return 1.0 / (self.c1 * (1.0 - self.alpha)) + 1.0 / (self.c2 * (self.p - 1.0))


@functools.lru_cache(maxsize=65536)
def _fixed_time_reference(law: FixedTime, v0: float, t: float) -> float:
    if v0 == 0.0 or t == 0.0:
        return v0
    total = law._decay_time(v0, 0.0)
    if t >= total:
        return 0.0
    return float(brentq(lambda v: law._decay_time(v0, v) - t, 0.0, v0,
                        xtol=1e-15, rtol=8.9e-16, maxiter=200))


@dataclass(frozen=True)
class PrescribedTime(ConvergenceLaw):
    """sigma = mu V / (T - t); the time-varying gain drives V to zero exactly
    at the user-chosen instant T.

    The gain is undefined at t >= T, so sigma rejects such times, and
    evaluation is clamped to t <= T*(1 - 1e-6) to stay clear of the designed
    singularity. Integrations must stop at that clamped horizon.
    """

    T: float = 0.1
    mu: float = 2.0

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"T must be > 0, got {self.T}")
        if not self.mu > 1:
            raise ValueError(f"mu must be > 1, got {self.mu}")

    def clamped_horizon(self) -> float:
        return self.T * (1.0 - PRESCRIBED_CLAMP)

    def sigma(self, v, t):
        self._check_v(v)
        if t >= self.T:
            raise ValueError(f"t={t} is at or beyond the prescribed time T={self.T}")
        t_eff = min(t, self.clamped_horizon())
        return self.mu * v / (self.T - t_eff)

    def reference_solution(self, v0, t):
        self._check_v(v0)
        if not 0.0 <= t <= self.T:
            raise ValueError(f"t must lie in [0, T={self.T}], got {t}")
        return v0 * ((self.T - t) / self.T) ** self.mu

    def settling_bound(self, v0):
        return self.T


LAW_NAMES = {
    "exponential": Exponential,
    "finite": FiniteTime,
    "finite-time": FiniteTime,
    "fixed": FixedTime,
    "fixed-time": FixedTime,
    "prescribed": PrescribedTime,
    "prescribed-time": PrescribedTime,
}


def law_from_name(name: str, **params) -> ConvergenceLaw:
    """Build a law from its CLI name and keyword parameters."""
    key = name.strip().lower()
    if key not in LAW_NAMES:
        raise ValueError(
            f"unknown law {name!r}; choose from "
            "exponential, finite-time, fixed-time, prescribed-time"
        )
    return LAW_NAMES[key](**params)


def default_laws() -> dict[str, ConvergenceLaw]:
    """The four benchmark laws with their standard parameters."""
    return {
        "exponential": Exponential(c=2.0),
        "finite-time": FiniteTime(c=2.0, alpha=0.5),
        "fixed-time": FixedTime(c1=1.0, c2=1.0, alpha=0.5, p=1.5),
        "prescribed-time": PrescribedTime(T=0.1, mu=2.0),
    }
