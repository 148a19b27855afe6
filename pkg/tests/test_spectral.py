import numpy as np
import pytest

import pulsefront.profiles as pr
import pulsefront.spectral as sp


def make_inst(theta=0.3, a_amp=0.0, L=1.0, theta_amp=0.0):
    curve = pr.CosineCurve(2.0, a_amp) if a_amp else pr.ConstantCurve(1.0)
    coeff = pr.CoefficientProfile.from_curve(curve)
    th = pr.CosineCurve(theta, theta_amp) if theta_amp else pr.ConstantCurve(theta)
    return pr.ProblemInstance(coeff=coeff, reaction=pr.make_cubic(th), L=L)


ZERO = lambda x: np.zeros_like(np.asarray(x, dtype=float))


class TestDirichlet:
    def test_constant_case_value(self):
        # potential q = df(x, 0) = -0.3, a = 1: lambda = q - (pi/(2R))^2
        inst = make_inst(0.3)
        R = np.pi / 2
        pair = sp.dirichlet_principal_eigen(inst, ZERO, R, n_nodes=2048)
        assert pair.value == pytest.approx(-0.3 - 1.0, abs=1e-6)

    def test_eigenfunction_is_cosine(self):
        inst = make_inst(0.3)
        R = np.pi / 2
        pair = sp.dirichlet_principal_eigen(inst, ZERO, R, n_nodes=2048)
        exact = np.cos(np.pi * pair.x / (2 * R))
        l2 = np.sqrt(np.trapezoid((pair.psi - exact) ** 2, pair.x))
        assert l2 < 1e-6

    def test_increases_with_radius(self):
        inst = make_inst(0.3)
        v1 = sp.dirichlet_principal_eigen(inst, ZERO, np.pi / 2, 1024).value
        v2 = sp.dirichlet_principal_eigen(inst, ZERO, np.pi, 1024).value
        assert v2 > v1
        assert v2 == pytest.approx(-0.3 - 0.25, abs=1e-5)

    def test_residual_invariant(self):
        inst = make_inst(0.3, a_amp=1.0)
        pair = sp.dirichlet_principal_eigen(
            inst, lambda x: np.asarray(inst.theta_L(x)), 4.0, 1024)
        assert pair.residual <= 1e-8
        assert np.all(pair.psi[1:-1] > 0.0)

    def test_node_floor(self):
        inst = make_inst()
        with pytest.raises(ValueError):
            sp.dirichlet_principal_eigen(inst, ZERO, 1.0, n_nodes=32)


class TestPeriodic:
    def test_constant_potential_exact(self):
        inst = make_inst(0.3)
        pair = sp.periodic_principal_eigen(inst, ZERO, n_nodes=256)
        assert pair.value == pytest.approx(-0.3, abs=1e-10)
        np.testing.assert_allclose(pair.psi, 1.0, atol=1e-9)

    def test_intermediate_constant_state(self):
        inst = make_inst(0.3)
        pair = sp.periodic_principal_eigen(
            inst, lambda x: np.full_like(np.asarray(x, dtype=float), 0.3), 256)
        assert pair.value == pytest.approx(0.21, abs=1e-10)

    def test_comparison_bounds(self):
        inst = make_inst(0.3, a_amp=1.0, L=0.7, theta_amp=0.0)
        ubar = lambda x: 0.4 + 0.05 * np.cos(2 * np.pi * np.asarray(x) / 0.7)
        pair = sp.periodic_principal_eigen(inst, ubar, 512)
        x = np.linspace(0, 0.7, 2048, endpoint=False)
        q = np.asarray(inst.df_L(x, ubar(x)))
        assert q.min() - 1e-9 <= pair.value <= q.max() + 1e-9

    def test_grid_convergence_order_two(self):
        inst = make_inst(0.3, a_amp=1.0, L=1.0, theta_amp=0.05)
        ubar = lambda x: 0.45 + 0.1 * np.cos(2 * np.pi * np.asarray(x, dtype=float))
        vals = [sp.periodic_principal_eigen(inst, ubar, n).value
                for n in (128, 256, 512)]
        e1 = abs(vals[0] - vals[2])
        e2 = abs(vals[1] - vals[2])
        assert e1 / max(e2, 1e-15) > 3.0  # about 4x per halving


class TestStabilityLimit:
    def test_monotone_trace_to_periodic_value(self):
        inst = make_inst(0.3)
        lim = sp.stability_limit(inst, ZERO, [2.0, 4.0, 8.0, 16.0])
        assert all(b > a for a, b in zip(lim.lambdas, lim.lambdas[1:]))
        assert lim.periodic_value == pytest.approx(-0.3, abs=1e-9)
        assert lim.terminal_gap < 1.5 * (np.pi / 32) ** 2
        assert lim.cls == "stable"

    def test_intermediate_state_trace(self):
        inst = make_inst(0.3)
        theta = lambda x: np.full_like(np.asarray(x, dtype=float), 0.3)
        lim = sp.stability_limit(inst, theta, [2.0, 4.0, 8.0])
        assert all(b > a for a, b in zip(lim.lambdas, lim.lambdas[1:]))
        assert lim.lambdas[-1] < 0.21 < lim.lambdas[-1] + 0.2
        assert lim.cls == "unstable"


class TestSteadyStates:
    def test_homogeneous_unique_interior_state(self):
        inst = make_inst(0.3)
        states = sp.find_periodic_steady_states(inst)
        assert len(states) == 1
        s = states[0]
        np.testing.assert_allclose(s.u, 0.3, atol=1e-9)
        assert s.cls == "unstable"
        assert s.lambda1 == pytest.approx(0.21, abs=1e-8)
        assert s.residual < 1e-11

    def test_small_period_oscillating_theta(self):
        inst = make_inst(0.5, theta_amp=0.1, L=0.1)
        states = sp.find_periodic_steady_states(inst)
        assert states, "expected a steady state near the averaged zero"
        s = min(states, key=lambda s: abs(float(np.mean(s.u)) - 0.5))
        assert abs(float(np.mean(s.u)) - 0.5) < 0.05
        assert s.lambda1 > 0.0

    def test_out_of_range_seeds_rejected(self):
        inst = make_inst(0.3)
        states = sp.find_periodic_steady_states(inst, seeds=[-0.5, 1.7])
        assert len(states) == 1  # extra seeds ignored, builtin ones remain


class TestDecayRoots:
    def test_constant_margin_rate(self):
        inst = make_inst(0.3)
        g = inst.reaction.gamma
        mu = sp.decay_root_mu(inst, 0.0, "right", "margin")
        assert mu == pytest.approx(np.sqrt(g), abs=1e-6)

    def test_moving_margin_roots_both_sides(self):
        inst = make_inst(0.3)
        g = inst.reaction.gamma
        c = 0.4 / np.sqrt(2.0)
        mu_r = sp.decay_root_mu(inst, c, "right", "margin")
        mu_l = sp.decay_root_mu(inst, c, "left", "margin")
        assert mu_r == pytest.approx((c + np.sqrt(c * c + 4 * g)) / 2, abs=1e-8)
        assert mu_l == pytest.approx((-c + np.sqrt(c * c + 4 * g)) / 2, abs=1e-8)

    def test_linearized_matches_characteristic_roots(self):
        inst = make_inst(0.3)
        c = 0.4 / np.sqrt(2.0)
        mu_r = sp.decay_root_mu(inst, c, "right", "linearized")
        mu_l = sp.decay_root_mu(inst, c, "left", "linearized")
        assert mu_r == pytest.approx((c + np.sqrt(c * c + 1.2)) / 2, abs=1e-8)
        assert mu_l == pytest.approx((-c + np.sqrt(c * c + 2.8)) / 2, abs=1e-8)

    def test_curve_starts_at_minus_gamma_and_grows(self):
        inst = make_inst(0.3, a_amp=1.0, L=0.5)
        g = inst.reaction.gamma
        lam0 = sp.decay_eigenvalue(inst, 0.1, 0.0, "right", "margin")
        assert lam0 == pytest.approx(-g, abs=1e-8)
        mus = np.linspace(0.0, 8.0, 9)
        lams = [sp.decay_eigenvalue(inst, 0.1, m, "right", "margin", n_nodes=512)
                for m in mus]
        assert all(np.isfinite(lams))
        # quadratic growth floor at large rates
        alpha = (lams[-1] - lams[-2]) / (mus[-1] ** 2 - mus[-2] ** 2)
        beta = alpha * mus[-1] ** 2 - lams[-1]
        assert alpha > 0
        assert all(l >= alpha * m * m - beta - 1e-8 for m, l in zip(mus, lams))

    def test_no_root_below_cap_errors(self):
        inst = make_inst(0.3)
        with pytest.raises(RuntimeError):
            sp.decay_root_mu(inst, 0.0, "right", "margin", mu_max=0.05)


def make_inst_with_d(d, theta):
    coeff = pr.CoefficientProfile.from_curve(pr.ConstantCurve(d))
    return pr.ProblemInstance(coeff=coeff, reaction=pr.make_cubic(theta), L=1.0)


def test_constant_diffusivity_scaling_of_margin_root():
    inst = make_inst_with_d(2.0, 0.3)
    g = inst.reaction.gamma
    mu = sp.decay_root_mu(inst, 0.0, "right", "margin")
    assert mu == pytest.approx(np.sqrt(g / 2.0), abs=1e-8)
