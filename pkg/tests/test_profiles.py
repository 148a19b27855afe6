import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import pulsefront.profiles as pr


def const_coeff(d=1.0):
    return pr.CoefficientProfile.from_curve(pr.ConstantCurve(d))


def cos_coeff(mean=2.0, amp=1.0):
    return pr.CoefficientProfile.from_curve(pr.CosineCurve(mean, amp))


class TestValidateHypotheses:
    def test_cubic_passes(self):
        rx = pr.make_cubic(0.3, gamma=0.05, delta=0.05)
        rep = pr.validate_hypotheses(rx, n_samples=32)
        assert rep.passed
        assert rep.violations == ()

    def test_delta_exceeding_theta_fails_between(self):
        # delta = 0.4 > theta = 0.3 breaks the margin condition on (0.3, 0.4)
        base = pr.make_cubic(0.3, gamma=0.05, delta=0.05)
        bad = pr.ReactionProfile(f=base.f, df=base.df, theta=base.theta,
                                 gamma=0.05, delta=0.4, lip_k=base.lip_k)
        rep = pr.validate_hypotheses(bad, n_samples=64)
        assert not rep.passed
        margin_hits = [v for v in rep.violations if v.kind == "margin-0"
                       and 0.3 < v.u < 0.4 + 1e-9]
        assert margin_hits

    def test_zero_reaction_fails(self):
        zero = pr.ReactionProfile(
            f=lambda y, u: np.zeros_like(np.asarray(u, dtype=float)),
            df=lambda y, u: np.zeros_like(np.asarray(u, dtype=float)),
            theta=pr.ConstantCurve(0.5), gamma=0.1, delta=0.1, lip_k=1.0)
        rep = pr.validate_hypotheses(zero, n_samples=32)
        assert not rep.passed

    def test_nonfinite_sampler_rejected(self):
        nan = pr.ReactionProfile(
            f=lambda y, u: np.full_like(np.asarray(u, dtype=float), np.nan),
            df=lambda y, u: np.zeros_like(np.asarray(u, dtype=float)),
            theta=pr.ConstantCurve(0.5), gamma=0.1, delta=0.1, lip_k=1.0)
        with pytest.raises(pr.ProfileError):
            pr.validate_hypotheses(nan, n_samples=32)

    def test_sample_count_floor(self):
        rx = pr.make_cubic(0.3)
        with pytest.raises(ValueError):
            pr.validate_hypotheses(rx, n_samples=8)


class TestExtendReaction:
    def test_negative_side_slope(self):
        # d_u f(y, 0) = -theta for the cubic, so f(-0.1) = 0.03
        rx = pr.extend_reaction(pr.make_cubic(0.3))
        val = float(rx.f(np.asarray(0.2), np.asarray(-0.1)))
        assert val == pytest.approx(0.03, abs=1e-12)

    def test_splice_continuity_at_zero(self):
        rx = pr.extend_reaction(pr.make_cubic(0.37))
        assert float(rx.f(np.asarray(0.1), np.asarray(0.0))) == 0.0

    def test_above_one_slope(self):
        rx = pr.extend_reaction(pr.make_cubic(0.3))
        val = float(rx.f(np.asarray(0.9), np.asarray(1.1)))
        assert val == pytest.approx(-0.07, abs=1e-12)

    def test_agrees_inside(self):
        base = pr.make_cubic(0.41)
        ext = pr.extend_reaction(base)
        y = np.linspace(0, 1, 33)
        u = np.linspace(0, 1, 17)
        np.testing.assert_allclose(ext.f(y[:, None], u[None, :]),
                                   base.f(y[:, None], u[None, :]), atol=1e-14)

    @given(st.floats(-3.0, 3.0), st.floats(-3.0, 3.0))
    @settings(max_examples=40, deadline=None)
    def test_global_lipschitz(self, u1, u2):
        rx = pr.extend_reaction(pr.make_cubic(0.3))
        y = np.asarray(0.25)
        d = abs(float(rx.f(y, np.asarray(u1))) - float(rx.f(y, np.asarray(u2))))
        assert d <= rx.lip_k * abs(u1 - u2) + 1e-12


class TestHarmonicMean:
    def test_constant(self):
        assert float(pr.harmonic_mean(const_coeff(2.5))) == pytest.approx(2.5, rel=1e-12)

    def test_two_plus_cos(self):
        # closed form: (int dy / (A + cos 2 pi y))^-1 = sqrt(A^2 - 1)
        val = pr.harmonic_mean(cos_coeff(2.0, 1.0))
        assert float(val) == pytest.approx(np.sqrt(3.0), rel=1e-10)
        assert val.rel_error < 1e-8

    def test_reciprocal_cosine(self):
        class Recip:
            def __call__(self, y):
                return 1.0 / (2.0 - np.cos(2 * np.pi * np.asarray(y)))
            def deriv(self, y):
                y = np.asarray(y)
                return -2 * np.pi * np.sin(2 * np.pi * y) / (2 - np.cos(2 * np.pi * y)) ** 2
        coeff = pr.CoefficientProfile.from_curve(Recip())
        assert float(pr.harmonic_mean(coeff)) == pytest.approx(0.5, rel=1e-10)

    def test_nonpositive_rejected(self):
        with pytest.raises(pr.ProfileError):
            pr.CoefficientProfile.from_curve(pr.CosineCurve(0.5, 1.0))

    @given(st.floats(0.1, 2.0), st.floats(0.0, 0.9))
    @settings(max_examples=30, deadline=None)
    def test_am_hm_inequality(self, mean_scale, rel_amp):
        mean = 1.0 + mean_scale
        amp = rel_amp * mean * 0.9
        coeff = pr.CoefficientProfile.from_curve(pr.CosineCurve(mean, amp))
        hm = float(pr.harmonic_mean(coeff))
        am = float(np.mean(coeff.a(np.linspace(0, 1, 4097))))
        assert hm <= am + 1e-12
        if amp > 1e-3:
            assert hm < am


class TestFbar:
    def test_symmetric_integral_zero(self):
        _, i_fbar = pr.fbar_and_integral(pr.make_cubic(0.5))
        assert i_fbar == pytest.approx(0.0, abs=1e-14)

    def test_cubic_integral_closed_form(self):
        _, i_fbar = pr.fbar_and_integral(pr.make_cubic(0.3))
        assert i_fbar == pytest.approx(1.0 / 30.0, rel=1e-10)

    def test_oscillating_theta_averages_out(self):
        rx = pr.make_cubic(pr.CosineCurve(0.5, 0.2))
        fbar, i_fbar = pr.fbar_and_integral(rx)
        assert i_fbar == pytest.approx(0.0, abs=1e-12)
        u = np.linspace(0, 1, 101)
        np.testing.assert_allclose(fbar(u), u * (1 - u) * (u - 0.5), atol=1e-10)

    def test_slopes(self):
        fbar, _ = pr.fbar_and_integral(pr.make_cubic(0.3))
        assert fbar.slope0 == pytest.approx(-0.3, rel=1e-10)
        assert fbar.slope1 == pytest.approx(-0.7, rel=1e-10)

    def test_zeros_inside(self):
        fbar, _ = pr.fbar_and_integral(pr.make_cubic(0.3))
        zeros = fbar.zeros_inside()
        assert len(zeros) == 1
        assert zeros[0] == pytest.approx(0.3, abs=1e-9)


class TestCorrector:
    def test_constant_coefficient_gives_zero(self):
        coeff = const_coeff(3.0)
        chi = pr.corrector_chi(coeff, 3.0)
        y = np.linspace(0, 1, 17)
        np.testing.assert_allclose(chi(y), 0.0, atol=1e-14)

    def test_two_plus_cos_slope_at_zero(self):
        coeff = cos_coeff()
        a_h = float(pr.harmonic_mean(coeff))
        chi = pr.corrector_chi(coeff, a_h)
        assert chi.deriv(0.0) == pytest.approx(np.sqrt(3) / 3 - 1, rel=1e-10)

    def test_mean_zero_and_periodic(self):
        coeff = cos_coeff(1.5, 0.7)
        a_h = float(pr.harmonic_mean(coeff))
        chi = pr.corrector_chi(coeff, a_h)
        y = np.linspace(0, 1, 2049)
        dchi = chi.deriv(y)
        assert np.trapezoid(dchi, y) == pytest.approx(0.0, abs=1e-8)
        assert abs(chi(np.asarray(1.0)) - chi(np.asarray(0.0))) < 1e-10

    @given(st.floats(0.05, 0.45))
    @settings(max_examples=20, deadline=None)
    def test_flux_identity(self, rel_amp):
        coeff = pr.CoefficientProfile.from_curve(pr.CosineCurve(1.0, rel_amp))
        a_h = float(pr.harmonic_mean(coeff))
        chi = pr.corrector_chi(coeff, a_h)
        y = np.linspace(0, 1, 513)
        dev = np.asarray(coeff.a(y)) * (chi.deriv(y) + 1.0) - a_h
        assert np.max(np.abs(dev)) < 1e-10


class TestMakeCubic:
    def test_theta_is_zero(self):
        rx = pr.make_cubic(0.3)
        y = np.linspace(0, 1, 9)
        np.testing.assert_allclose(rx.f(y, np.full_like(y, 0.3)), 0.0, atol=1e-15)

    def test_derivative_at_theta(self):
        rx = pr.make_cubic(0.3)
        val = float(rx.df(np.asarray(0.0), np.asarray(0.3)))
        assert val == pytest.approx(0.3 * 0.7, rel=1e-12)

    def test_cosine_theta_midpoint(self):
        rx = pr.make_cubic(pr.CosineCurve(0.5, 0.2))
        assert float(rx.theta(np.asarray(0.25))) == pytest.approx(0.5, abs=1e-12)

    def test_out_of_range_theta_rejected(self):
        with pytest.raises(pr.ProfileError):
            pr.make_cubic(pr.CosineCurve(0.5, 0.6))

    def test_margin_too_large_rejected(self):
        with pytest.raises(pr.ProfileError):
            pr.make_cubic(0.3, gamma=0.4, delta=0.05)


class TestXinExample:
    def test_lambda_zero_degenerates(self):
        inst = pr.make_xin_example(0.1, 0.0, 1.0)
        y = np.linspace(0, 1, 33)
        np.testing.assert_allclose(inst.coeff.a(y), 1.0, atol=1e-14)
        assert float(inst.reaction.theta(np.asarray(0.3))) == pytest.approx(0.4)

    def test_quarter_period_value(self):
        inst = pr.make_xin_example(0.2, 2.0, 1.0)
        assert float(inst.coeff.a(np.asarray(0.25))) == pytest.approx(1.4, rel=1e-12)

    def test_positivity_boundary_rejected(self):
        with pytest.raises(pr.ProfileError):
            pr.make_xin_example(0.2, 5.0, 1.0)


class TestProblemInstance:
    def test_scaled_periodicity(self):
        inst = pr.ProblemInstance(coeff=cos_coeff(), reaction=pr.make_cubic(0.3), L=0.7)
        x = np.linspace(-2, 2, 101)
        np.testing.assert_allclose(inst.a_L(x + 0.7), inst.a_L(x), atol=1e-12)
        u = np.full_like(x, 0.6)
        np.testing.assert_allclose(inst.f_L(x + 0.7, u), inst.f_L(x, u), atol=1e-12)

    def test_positive_minimum(self):
        inst = pr.ProblemInstance(coeff=cos_coeff(), reaction=pr.make_cubic(0.3), L=2.0)
        x = np.linspace(0, 2, 513)
        assert np.min(inst.a_L(x)) > 0

    def test_bad_period_rejected(self):
        with pytest.raises(pr.ProfileError):
            pr.ProblemInstance(coeff=const_coeff(), reaction=pr.make_cubic(0.3), L=0.0)


class TestTabulated:
    def test_round_trip(self, tmp_path):
        y = np.arange(64) / 64
        vals = 2.0 + np.cos(2 * np.pi * y)
        path = tmp_path / "a.txt"
        with open(path, "w") as fh:
            fh.write("# period=1\n")
            for yy, vv in zip(y, vals):
                fh.write(f"{yy} {vv}\n")
        curve = pr.TabulatedPeriodicCurve.from_file(path)
        yy = np.linspace(0, 1, 257)
        np.testing.assert_allclose(curve(yy), 2.0 + np.cos(2 * np.pi * yy), atol=2e-6)

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "a.txt"
        with open(path, "w") as fh:
            fh.write("0.0 1.0\n0.5 2.0\n0.75 1.5\n0.9 1.2\n")
        with pytest.raises(pr.ProfileError):
            pr.TabulatedPeriodicCurve.from_file(path)

    def test_locate_theta_bisection(self):
        rx = pr.make_cubic(pr.CosineCurve(0.45, 0.1))
        th = pr.locate_theta(rx.f, 0.2, rx.delta)
        assert th == pytest.approx(float(rx.theta(np.asarray(0.2))), abs=1e-10)


def test_homogenized_data_bundle():
    hd = pr.homogenized_data(cos_coeff(), pr.make_cubic(0.3))
    assert hd.a_h == pytest.approx(np.sqrt(3.0), rel=1e-10)
    assert hd.i_fbar == pytest.approx(1 / 30, rel=1e-9)
    assert hd.theta_bar[0] == pytest.approx(0.3, abs=1e-9)
    assert hd.slope0 < 0 and hd.slope1 < 0
