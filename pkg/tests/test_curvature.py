import numpy as np
import pytest

from crgd.curvature import (
    augmented_eval,
    eigmin,
    smf_wmin,
    spurious_quadform,
    wmin_generic,
)
from crgd.objective import (
    ObjectiveProblem,
    default_spectrum,
    threefold_critical_radii,
)


def quadratic_problem(diag):
    """J(x) = x^T diag x / 2: constant Hessian, handy degenerate oracle."""
    a = np.diag(np.asarray(diag, dtype=float))
    return ObjectiveProblem(
        name="quadratic", dim=a.shape[0],
        value=lambda x: 0.5 * float(x @ (a @ x)),
        grad=lambda x: a @ x,
        hess=lambda x: a,
    )


class TestEigmin:
    def test_identity(self):
        pair = eigmin(np.eye(3))
        assert pair.lambda_min == 1.0
        assert pair.gap_to_next == 0.0

    def test_diagonal(self):
        pair = eigmin(np.diag([3.0, -2.0, 5.0]))
        assert pair.lambda_min == -2.0
        assert np.allclose(pair.u_min, [0.0, 1.0, 0.0])
        assert pair.gap_to_next == pytest.approx(5.0)

    def test_matfac_saddle(self, matfac6):
        spectrum = default_spectrum(6, 0.1)
        x = np.sqrt(spectrum[1]) * np.eye(6)[:, 1]
        assert eigmin(matfac6.hess(x)).lambda_min == pytest.approx(-0.1)

    def test_rejects_asymmetric(self):
        h = np.eye(3)
        h[0, 1] = 1e-6
        with pytest.raises(ValueError):
            eigmin(h)

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            eigmin(np.ones((2, 3)))

    def test_sign_convention(self):
        # largest-magnitude component of u_min comes out positive
        h = np.array([[1.0, 2.0], [2.0, 1.0]])
        pair = eigmin(h)
        assert pair.u_min[np.argmax(np.abs(pair.u_min))] > 0

    def test_invariants_random(self, rng):
        for _ in range(50):
            a = rng.standard_normal((7, 7))
            h = a + a.T
            pair = eigmin(h)
            assert abs(np.linalg.norm(pair.u_min) - 1.0) < 1e-12
            resid = np.linalg.norm(h @ pair.u_min - pair.lambda_min * pair.u_min)
            assert resid <= 1e-10 * (1.0 + np.linalg.norm(h))
            for _ in range(5):
                v = rng.standard_normal(7)
                v /= np.linalg.norm(v)
                assert pair.lambda_min <= v @ (h @ v) + 1e-12


class TestWmin:
    def test_smf_at_origin(self):
        assert np.all(smf_wmin(np.zeros(4), np.eye(4)[:, 0]) == 0.0)

    def test_smf_aligned(self):
        e1 = np.eye(3)[:, 0]
        assert np.allclose(smf_wmin(e1, e1), 6.0 * e1)

    def test_smf_sign_invariance(self, rng):
        x = rng.standard_normal(5)
        u = rng.standard_normal(5)
        u /= np.linalg.norm(u)
        assert np.allclose(smf_wmin(x, u), smf_wmin(x, -u))

    def test_generic_vanishes_for_constant_hessian(self, rng):
        problem = quadratic_problem([-2.0, 1.0, 3.0])
        x = rng.standard_normal(3)
        u = np.eye(3)[:, 0]
        assert np.all(np.abs(wmin_generic(problem, x, u)) < 1e-12)

    def test_generic_matches_closed_form(self, matfac50, rng):
        for _ in range(100):
            x = rng.uniform(-2.0, 2.0, size=50)
            u = rng.standard_normal(50)
            u /= np.linalg.norm(u)
            w_fd = wmin_generic(matfac50, x, u)
            w = smf_wmin(x, u)
            assert np.linalg.norm(w_fd - w) / max(1.0, np.linalg.norm(w)) < 1e-6

    def test_threefold_saddle_sensitivity_nonzero(self, threefold):
        r_s, _ = threefold_critical_radii(0.7)
        x = np.array([r_s, 0.0])
        pair = eigmin(threefold.hess(x))
        w = wmin_generic(threefold, x, pair.u_min)
        assert np.linalg.norm(w) > 0.1


class TestAugmentedEval:
    def test_inactive_when_curvature_nonnegative(self, threefold):
        x = np.array([0.1, 0.05])  # near the origin the Hessian is ~identity
        aug = augmented_eval(threefold, x, beta=1.0)
        assert aug.penalty == 0.0
        assert aug.phi == aug.j
        assert np.array_equal(aug.grad_phi, aug.g)

    def test_saddle_gradient_matches_closed_form(self, matfac6):
        spectrum = default_spectrum(6, 0.1)
        x = np.sqrt(spectrum[1]) * np.eye(6)[:, 1]
        beta = 1.3
        aug = augmented_eval(matfac6, x, beta=beta)
        delta = spectrum[0] - spectrum[1]
        assert aug.eigen.lambda_min == pytest.approx(-delta)
        expected = -beta ** 2 * delta * smf_wmin(x, aug.eigen.u_min)
        assert np.allclose(aug.grad_phi, expected, atol=1e-10)
        assert np.linalg.norm(aug.grad_phi) > 0.01

    def test_penalty_hinge_on_grids(self, threefold, matfac6, rng):
        for problem in (threefold, matfac6):
            for _ in range(80):
                x = rng.uniform(-1.5, 1.5, size=problem.dim)
                aug = augmented_eval(problem, x, beta=1.0)
                assert aug.penalty >= 0.0
                assert aug.phi >= aug.j
                if aug.eigen.lambda_min >= 0:
                    assert aug.penalty == 0.0
                else:
                    assert aug.penalty > 0.0

    def test_grad_phi_matches_finite_differences(self, threefold, rng):
        beta = 1.0
        checked = 0
        for _ in range(100):
            x = rng.uniform(-2.0, 2.0, size=2)
            aug = augmented_eval(threefold, x, beta)
            if abs(aug.eigen.lambda_min) <= 1e-6 or aug.eigen.gap_to_next <= 1e-6:
                continue
            h = 1e-5 * (1.0 + np.linalg.norm(x))
            fd = np.zeros(2)
            for j in range(2):
                e = np.zeros(2)
                e[j] = h
                fd[j] = (augmented_eval(threefold, x + e, beta).phi
                         - augmented_eval(threefold, x - e, beta).phi) / (2 * h)
            rel = np.linalg.norm(fd - aug.grad_phi) / max(1.0, np.linalg.norm(aug.grad_phi))
            assert rel < 1e-5
            checked += 1
        assert checked >= 90

    def test_no_hessian_gradient_product(self, matfac6):
        # engineered g = 0 with negative curvature: the correction alone
        # must keep grad phi nonzero
        spectrum = default_spectrum(6, 0.1)
        x = np.sqrt(spectrum[2]) * np.eye(6)[:, 2]
        aug = augmented_eval(matfac6, x, beta=1.0)
        assert np.linalg.norm(aug.g) < 1e-12
        assert aug.eigen.lambda_min < 0
        assert np.linalg.norm(aug.grad_phi) > 0.01

    def test_rejects_nonpositive_beta(self, threefold):
        with pytest.raises(ValueError):
            augmented_eval(threefold, np.zeros(2), beta=0.0)


class TestSpuriousQuadform:
    def test_constant_hessian_gives_lambda_min(self, rng):
        problem = quadratic_problem([-2.0, 1.0, 3.0])
        x = rng.standard_normal(3)
        for beta in (0.5, 1.0, 7.0):
            assert spurious_quadform(problem, x, beta) == pytest.approx(-2.0, abs=1e-6)

    def test_small_beta_limit_at_matfac_origin(self, matfac6):
        # the origin is a critical point of phi with negative curvature; as
        # beta -> 0 the quadratic form tends to lambda_min = -lambda_1
        x = np.zeros(6)
        val = spurious_quadform(matfac6, x, beta=0.01)
        assert val == pytest.approx(-1.0, abs=1e-2)
        assert val < 0.0

    def test_negative_at_matfac_origin_for_moderate_beta(self, matfac6):
        assert spurious_quadform(matfac6, np.zeros(6), beta=0.5) < 0.0

    def test_rejects_nonnegative_curvature(self, threefold):
        with pytest.raises(ValueError):
            spurious_quadform(threefold, np.zeros(2), beta=1.0)

    def test_rejects_degenerate(self):
        problem = quadratic_problem([-2.0, -2.0, 5.0])
        with pytest.raises(ValueError):
            spurious_quadform(problem, np.zeros(3), beta=1.0)
