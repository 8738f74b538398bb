import math

import numpy as np
import pytest

from crgd.curvature import augmented_eval, smf_wmin
from crgd.dynamics import (
    CrgdConfig,
    IntegrationError,
    SolverConfig,
    StatusKind,
    crgd_rhs,
    dp54_step,
    gd_rhs,
    integrate,
    is_sosp,
    run_crgd,
    run_gd,
)
from crgd.laws import Exponential, FiniteTime, FixedTime, PrescribedTime, default_laws
from crgd.objective import default_spectrum, threefold_critical_radii

THREEFOLD_SOLVER = SolverConfig(rtol=1e-10, atol=1e-12, h_max=0.1, t_max=20.0)


class TestIntegratorCore:
    def test_linear_ode_oracle(self):
        sol = integrate(lambda t, x: -x, np.array([1.0]), SolverConfig(t_max=1.0))
        assert abs(sol.x_final[0] - math.exp(-1.0)) < 1e-9
        assert sol.status == StatusKind.HORIZON

    def test_convergence_order_at_least_4p5(self):
        def global_err(h):
            t, y = 0.0, np.array([1.0])
            while t < 1.0 - 1e-12:
                step = min(h, 1.0 - t)
                y, _ = dp54_step(lambda tt, yy: -2.0 * yy, t, y, step)
                t += step
            return abs(y[0] - math.exp(-2.0))

        order = math.log2(global_err(0.05) / global_err(0.025))
        assert order >= 4.5

    def test_times_strictly_increasing(self):
        sol = integrate(lambda t, x: -x, np.array([1.0]), SolverConfig(t_max=2.0))
        assert np.all(np.diff(sol.t) > 0)
        assert sol.accepted == sol.t.size - 1

    def test_step_floor_on_pathological_rhs(self):
        def rhs(t, x):
            return -x if t < 0.3 else np.full_like(x, np.nan)

        sol = integrate(rhs, np.array([1.0]), SolverConfig(t_max=1.0))
        assert sol.status == StatusKind.STEP_FLOOR
        assert sol.t_final < 0.3 + 1e-6

    def test_nonfinite_initial_state_rejected(self):
        with pytest.raises(IntegrationError):
            integrate(lambda t, x: -x, np.array([np.nan]), SolverConfig(t_max=1.0))

    def test_solver_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(h_min=1e-3, h_init=1e-6)
        with pytest.raises(ValueError):
            SolverConfig(rtol=0.0)
        with pytest.raises(ValueError):
            SolverConfig(t_max=-1.0)


class TestRhs:
    def test_crgd_zero_at_estimated_optimum(self, threefold):
        x = np.array([0.9, 0.4])
        phi_here = augmented_eval(threefold, x, 1.0).phi
        cfg = CrgdConfig(beta=1.0, phi_star_estimate=phi_here)
        u, _ = crgd_rhs(threefold, x, 0.0, cfg)
        assert np.all(u == 0.0)

    def test_crgd_direction_at_matfac_saddle(self, matfac6):
        # substituting the saddle gradient into the control law gives
        # u = sigma * beta^2 * delta * w / (beta^4 delta^2 ||w||^2 + eps)
        spectrum = default_spectrum(6, 0.1)
        delta = spectrum[0] - spectrum[1]
        x = np.sqrt(spectrum[1]) * np.eye(6)[:, 1]
        cfg = CrgdConfig(beta=1.0, law=Exponential(c=2.0))
        u, aug = crgd_rhs(matfac6, x, 0.0, cfg)
        w = smf_wmin(x, aug.eigen.u_min)
        v = aug.phi - cfg.phi_star_estimate
        sigma = 2.0 * v
        expected = sigma * delta * w / (delta ** 2 * float(w @ w) + cfg.eps_r)
        assert np.allclose(u, expected, rtol=1e-12)
        assert u @ w > 0.0  # pushes along the curvature-ascent direction

    def test_decay_identity_pointwise(self, threefold, rng):
        # grad_phi . u == -sigma ||grad_phi||^2 / (||grad_phi||^2 + eps)
        cfg = CrgdConfig(beta=1.0, law=Exponential(c=2.0))
        for _ in range(20):
            x = rng.uniform(-1.5, 1.5, size=2)
            u, aug = crgd_rhs(threefold, x, 0.0, cfg)
            gp2 = float(aug.grad_phi @ aug.grad_phi)
            v = max(aug.phi, 0.0)
            expected = -cfg.law.sigma(v, 0.0) * gp2 / (gp2 + cfg.eps_r)
            assert float(aug.grad_phi @ u) == pytest.approx(expected, rel=1e-12)

    def test_gd_rhs_zero_at_critical_point(self, threefold):
        r_s, _ = threefold_critical_radii(0.7)
        assert np.linalg.norm(gd_rhs(threefold, np.array([r_s, 0.0]))) < 1e-12

    def test_gd_objective_nonincreasing(self, threefold):
        cfg = CrgdConfig()
        traj = run_gd(threefold, np.array([1.8, 0.9]), cfg,
                      SolverConfig(t_max=5.0, h_max=0.1))
        assert np.all(np.diff(traj.j) <= 1e-12)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            CrgdConfig(beta=0.0)
        with pytest.raises(ValueError):
            CrgdConfig(eps_r=0.0)
        with pytest.raises(ValueError):
            CrgdConfig(tol_grad=-1.0)


class TestIsSosp:
    def test_true_at_global_minimizer(self, matfac6):
        spectrum = default_spectrum(6, 0.1)
        x = np.sqrt(spectrum[0]) * np.eye(6)[:, 0]
        assert is_sosp(matfac6, x, CrgdConfig())

    def test_false_at_saddle(self, matfac6):
        spectrum = default_spectrum(6, 0.1)
        x = np.sqrt(spectrum[1]) * np.eye(6)[:, 1]
        assert not is_sosp(matfac6, x, CrgdConfig())

    def test_false_when_gradient_large(self, threefold):
        x = np.array([0.01, 0.0])  # positive curvature but ||g|| ~ 0.01
        assert not is_sosp(threefold, x, CrgdConfig())


class TestTrajectories:
    def test_gd_stalls_at_saddle(self, threefold):
        r_s, _ = threefold_critical_radii(0.7)
        traj = run_gd(threefold, np.array([r_s, 1e-4]), CrgdConfig(),
                      THREEFOLD_SOLVER, sosp_stop=True, stall_stop=True)
        assert traj.status == StatusKind.SADDLE_STALL
        assert traj.j[-1] == pytest.approx(0.0651, abs=2e-3)
        assert traj.lambda_min[-1] == pytest.approx(-0.467, abs=5e-3)

    def test_crgd_exponential_tracks_reference(self, threefold):
        r_s, _ = threefold_critical_radii(0.7)
        cfg = CrgdConfig(beta=1.0, law=Exponential(c=2.0))
        traj = run_crgd(threefold, np.array([r_s, 1e-4]), cfg, THREEFOLD_SOLVER)
        assert traj.status == StatusKind.CONVERGED_SOSP
        mask = traj.phi > 1.1 * traj.phi[-1]
        ref = traj.phi[0] * np.exp(-2.0 * traj.t[mask])
        assert np.max(np.abs(traj.phi[mask] - ref) / ref) < 0.01

    def test_converged_status_implies_sosp(self, threefold):
        r_s, _ = threefold_critical_radii(0.7)
        cfg = CrgdConfig(beta=1.0, law=Exponential(c=2.0))
        traj = run_crgd(threefold, np.array([r_s, 1e-4]), cfg, THREEFOLD_SOLVER)
        assert traj.status == StatusKind.CONVERGED_SOSP
        assert traj.grad_norm[-1] < cfg.tol_grad
        assert traj.lambda_min[-1] > -cfg.tol_eig
        assert is_sosp(threefold, traj.x_final, cfg)

    def test_phi_nonincreasing_along_crgd(self, threefold):
        r_s, _ = threefold_critical_radii(0.7)
        cfg = CrgdConfig(beta=1.0, law=Exponential(c=2.0))
        traj = run_crgd(threefold, np.array([r_s, 1e-4]), cfg, THREEFOLD_SOLVER)
        slack = 10.0 * THREEFOLD_SOLVER.rtol
        assert np.all(np.diff(traj.phi) <= slack * np.abs(traj.phi[:-1]))

    def test_saddle_non_equilibrium_all_laws(self, threefold, matfac6):
        r_s, _ = threefold_critical_radii(0.7)
        spectrum = default_spectrum(6, 0.1)
        saddles = [(threefold, np.array([r_s, 0.0]))]
        for i in (1, 2, 3):
            x = np.zeros(6)
            x[i] = np.sqrt(spectrum[i])
            saddles.append((matfac6, x))
        for problem, x in saddles:
            for law in default_laws().values():
                cfg = CrgdConfig(beta=1.0, law=law)
                u, _ = crgd_rhs(problem, x, 0.0, cfg)
                assert np.linalg.norm(u) > 1e-8

    def test_prescribed_time_respects_clamped_horizon(self, threefold):
        r_s, _ = threefold_critical_radii(0.7)

        seen = []

        class Probe(PrescribedTime):
            def sigma(self, v, t):
                seen.append(t)
                return super().sigma(v, t)

        law = Probe(T=0.1, mu=2.0)
        cfg = CrgdConfig(beta=1.0, law=law)
        traj = run_crgd(threefold, np.array([r_s, 1e-4]), cfg, THREEFOLD_SOLVER)
        assert traj.status == StatusKind.CONVERGED_SOSP
        assert traj.t_final <= 0.1
        assert max(seen) <= 0.1 * (1.0 - 1e-6) + 1e-15

    def test_prescribed_horizon_status_with_equilibrium_extension(self, threefold):
        # once phi reaches the optimum estimate the control is zero (the
        # equilibrium extension), so the run cruises to the clamped horizon
        # without ever evaluating the singular gain
        law = PrescribedTime(T=0.05, mu=2.0)
        x0 = np.array([1.0, 0.5])
        phi0 = augmented_eval(threefold, x0, 1.0).phi
        cfg = CrgdConfig(beta=1.0, law=law, phi_star_estimate=0.5 * phi0)
        traj = run_crgd(threefold, x0, cfg,
                        SolverConfig(t_max=1.0, h_max=0.01, rtol=1e-8, atol=1e-10),
                        sosp_stop=False)
        assert traj.status == StatusKind.PRESCRIBED_HORIZON
        assert traj.t_final <= law.clamped_horizon() + 1e-12
        assert traj.phi[-1] == pytest.approx(cfg.phi_star_estimate, rel=1e-6)
        assert traj.u_norm[-1] < 1.0  # gain stays tame at the parked state

    def test_step_floor_surfaces_parked_state_without_stop(self, threefold):
        # with the stationarity stop disabled, a converging run parks at a
        # minimizer with V > 0; the explicit pair cannot integrate that
        # regime and reports STEP_FLOOR rather than silently stalling
        law = PrescribedTime(T=0.05, mu=2.0)
        cfg = CrgdConfig(beta=1.0, law=law)
        traj = run_crgd(threefold, np.array([1.0, 0.5]), cfg,
                        SolverConfig(t_max=1.0, h_max=0.01, rtol=1e-8, atol=1e-10),
                        sosp_stop=False)
        assert traj.status == StatusKind.STEP_FLOOR
        assert traj.grad_norm[-1] < 1e-3  # it had already reached the minimizer

    def test_horizon_status(self, threefold):
        cfg = CrgdConfig(beta=1.0, law=Exponential(c=2.0))
        traj = run_crgd(threefold, np.array([1.8, 0.9]), cfg,
                        SolverConfig(t_max=0.01, h_max=0.1), sosp_stop=False)
        assert traj.status == StatusKind.HORIZON
        assert traj.t_final == pytest.approx(0.01, rel=1e-9)

    def test_finite_and_fixed_time_settle_within_bounds(self, threefold):
        r_s, _ = threefold_critical_radii(0.7)
        x0 = np.array([r_s, 1e-4])
        for law in (FiniteTime(c=2.0, alpha=0.5), FixedTime()):
            cfg = CrgdConfig(beta=1.0, law=law)
            traj = run_crgd(threefold, x0, cfg, THREEFOLD_SOLVER)
            assert traj.status == StatusKind.CONVERGED_SOSP
            v0 = traj.phi[0]
            assert traj.t_final <= law.settling_bound(v0) + 1e-6
