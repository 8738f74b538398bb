import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from crgd.laws import (
    Exponential,
    FiniteTime,
    FixedTime,
    PrescribedTime,
    default_laws,
    law_from_name,
)

ALL_LAWS = list(default_laws().items())


class TestSigma:
    def test_exponential_value(self):
        assert Exponential(c=2.0).sigma(1.0, 0.0) == 2.0
        assert Exponential(c=2.0).sigma(1.0, 123.0) == 2.0

    @pytest.mark.parametrize("name,law", ALL_LAWS)
    def test_zero_at_equilibrium(self, name, law):
        for t in (0.0, 0.03, 0.09):
            assert law.sigma(0.0, t) == 0.0

    def test_prescribed_direct_substitution(self):
        assert PrescribedTime(T=0.1, mu=2.0).sigma(1.0, 0.05) == pytest.approx(40.0)

    def test_prescribed_rejects_beyond_horizon(self):
        law = PrescribedTime(T=0.1, mu=2.0)
        with pytest.raises(ValueError):
            law.sigma(1.0, 0.1)
        with pytest.raises(ValueError):
            law.sigma(1.0, 0.2)

    def test_prescribed_clamped_near_horizon(self):
        law = PrescribedTime(T=0.1, mu=2.0)
        # evaluation inside the clamped band equals the clamp-point value
        assert law.sigma(1.0, 0.1 * (1 - 1e-9)) == law.sigma(1.0, law.clamped_horizon())

    @pytest.mark.parametrize("name,law", ALL_LAWS)
    def test_rejects_negative_v(self, name, law):
        with pytest.raises(ValueError):
            law.sigma(-1.0, 0.0)


class TestReferenceSolutions:
    def test_exponential(self):
        assert Exponential(c=2.0).reference_solution(1.0, 1.0) == pytest.approx(
            math.exp(-2.0), rel=1e-12)

    def test_finite_time_settles_exactly(self):
        law = FiniteTime(c=2.0, alpha=0.5)
        assert law.settling_bound(1.0) == pytest.approx(1.0)
        assert law.reference_solution(1.0, 1.0) == 0.0
        assert law.reference_solution(1.0, 0.5) > 0.0

    def test_prescribed_zero_exactly_at_horizon(self):
        law = PrescribedTime(T=0.1, mu=2.0)
        assert law.reference_solution(5.0, 0.1) == 0.0
        assert law.reference_solution(5.0, 0.0) == 5.0

    def test_fixed_time_against_independent_integrator(self):
        # oracle: scipy RK45 on dV/dt = -sigma(V), independent of the
        # quadrature-plus-root-finding route
        law = FixedTime(c1=1.0, c2=1.0, alpha=0.5, p=1.5)
        v0 = 3.0
        times = [0.1, 0.5, 1.0, 2.0]
        sol = solve_ivp(lambda t, v: [-law.sigma(max(v[0], 0.0), t)], (0.0, 2.0),
                        [v0], t_eval=times, rtol=1e-12, atol=1e-14)
        for t, v_ivp in zip(times, sol.y[0]):
            assert law.reference_solution(v0, t) == pytest.approx(
                max(v_ivp, 0.0), abs=1e-8)

    @pytest.mark.parametrize("name,law", ALL_LAWS)
    def test_ode_residual(self, name, law, rng):
        dt = 1e-6
        for _ in range(3):
            v0 = float(rng.uniform(0.5, 10.0))
            t_hi = min(0.8 * law.settling_bound(v0), 2.0)
            for t in np.linspace(dt, t_hi - dt, 5):
                dref = (law.reference_solution(v0, t + dt)
                        - law.reference_solution(v0, t - dt)) / (2 * dt)
                s = law.sigma(law.reference_solution(v0, t), t)
                assert abs(dref + s) / max(abs(s), 1e-12) < 1e-6

    @pytest.mark.parametrize("name,law", ALL_LAWS)
    def test_monotone_nonincreasing(self, name, law, rng):
        v0 = float(rng.uniform(0.5, 10.0))
        t_hi = min(law.settling_bound(v0), 5.0)
        vals = [law.reference_solution(v0, t) for t in np.linspace(0.0, t_hi, 40)]
        assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("name,law", [kv for kv in ALL_LAWS
                                          if kv[0] != "exponential"])
    def test_settles_by_bound(self, name, law):
        v0 = 4.0
        bound = law.settling_bound(v0)
        t_check = min(bound + 1e-6, bound)  # prescribed-time domain ends at T
        assert law.reference_solution(v0, t_check) < 1e-9


class TestSettlingBounds:
    def test_fixed_time_bound_independent_of_v0(self):
        law = FixedTime(c1=1.0, c2=1.0, alpha=0.5, p=1.5)
        assert law.settling_bound(1.0) == pytest.approx(4.0)
        assert law.settling_bound(1e6) == pytest.approx(4.0)

    def test_finite_time_formula(self):
        assert FiniteTime(c=2.0, alpha=0.5).settling_bound(4.0) == pytest.approx(2.0)

    def test_prescribed_is_horizon(self):
        law = PrescribedTime(T=0.1, mu=2.0)
        assert law.settling_bound(1.0) == 0.1
        assert law.settling_bound(1e9) == 0.1

    def test_exponential_unbounded(self):
        assert Exponential(c=2.0).settling_bound(1.0) == math.inf


class TestValidationAndNames:
    @pytest.mark.parametrize("bad", [
        lambda: Exponential(c=0.0),
        lambda: FiniteTime(c=1.0, alpha=1.0),
        lambda: FiniteTime(c=-1.0, alpha=0.5),
        lambda: FixedTime(c1=0.0),
        lambda: FixedTime(alpha=0.5, p=1.0),
        lambda: PrescribedTime(T=0.0),
        lambda: PrescribedTime(mu=1.0),
    ])
    def test_bad_params_rejected(self, bad):
        with pytest.raises(ValueError):
            bad()

    def test_law_from_name(self):
        assert law_from_name("exponential", c=3.0) == Exponential(c=3.0)
        assert law_from_name("finite-time") == FiniteTime()
        assert law_from_name("prescribed", T=0.2, mu=3.0) == PrescribedTime(T=0.2, mu=3.0)
        with pytest.raises(ValueError):
            law_from_name("sublime")

    def test_default_laws_parameters(self):
        laws = default_laws()
        assert laws["exponential"] == Exponential(c=2.0)
        assert laws["finite-time"] == FiniteTime(c=2.0, alpha=0.5)
        assert laws["fixed-time"] == FixedTime(c1=1.0, c2=1.0, alpha=0.5, p=1.5)
        assert laws["prescribed-time"] == PrescribedTime(T=0.1, mu=2.0)
