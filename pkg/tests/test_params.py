from __future__ import annotations

import math

import pytest

from cavx.params import (
    Constants,
    PhysicalParams,
    RB_D2,
    ScaledParams,
    detuning_for_theta_eff,
    pattern_period,
    scale_params,
    sideband_angle,
    theta_eff_of,
)

TWO_PI = 2.0 * math.pi


def make_scaled(C=0.02, sigma=24.3, Delta=50.0, Theta=-2.0, d=0.01, b0=1.0, T=0.01):
    return ScaledParams(
        kappa=1.5e7, C=C, sigma=sigma, a=1.24e-9, d=d, k0=TWO_PI / 780e-9,
        Theta=Theta, Delta=Delta, b0=b0, T_loss=T, T1=0.006,
    )


class TestScaleParams:
    def test_sigma_matches_reported_value(self):
        sp = scale_params(PhysicalParams(Delta=50.0, temperature=150e-6))
        assert sp.sigma == pytest.approx(24.3, abs=0.3)

    def test_zero_detuning_kills_sigma(self):
        sp = scale_params(PhysicalParams(Delta=0.0))
        assert sp.sigma == 0.0
        assert sp.C == pytest.approx(sp.b0 / (2.0 * sp.T_loss))

    def test_cooperativity_direct_value(self):
        p = PhysicalParams(b0=1.0, R_eff=math.exp(-0.01), Delta=50.0)
        sp = scale_params(p)
        assert sp.C == pytest.approx(1.0 / 50.02, rel=1e-12)

    def test_kappa_inverse_in_cavity_length(self):
        p1 = PhysicalParams(L_cav=0.1)
        p3 = PhysicalParams(L_cav=0.3)
        assert scale_params(p1).kappa == pytest.approx(3.0 * scale_params(p3).kappa, rel=1e-14)

    def test_sigma_linear_in_delta_and_inverse_in_temperature(self):
        base = scale_params(PhysicalParams(Delta=10.0, temperature=100e-6))
        assert scale_params(PhysicalParams(Delta=30.0, temperature=100e-6)).sigma == pytest.approx(3.0 * base.sigma, rel=1e-14)
        assert scale_params(PhysicalParams(Delta=10.0, temperature=200e-6)).sigma == pytest.approx(base.sigma / 2.0, rel=1e-14)

    def test_default_dimensionless_diffusivity(self):
        assert scale_params(PhysicalParams(D_diff=None)).d == 0.01

    def test_explicit_diffusivity(self):
        sp0 = scale_params(PhysicalParams())
        sp = scale_params(PhysicalParams(D_diff=0.05 * sp0.kappa * sp0.a))
        assert sp.d == pytest.approx(0.05, rel=1e-12)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            PhysicalParams(temperature=0.0)
        with pytest.raises(ValueError):
            PhysicalParams(temperature=-1e-6)
        with pytest.raises(ValueError):
            PhysicalParams(R_eff=1.0)
        with pytest.raises(ValueError):
            PhysicalParams(R_eff=0.0)
        with pytest.raises(ValueError):
            PhysicalParams(l_eff=0.0)
        with pytest.raises(ValueError):
            PhysicalParams(l_eff=0.2, L_cav=0.1)

    def test_t_loss_positive(self):
        p = PhysicalParams(R_eff=math.exp(-0.01))
        assert p.T_loss == pytest.approx(0.01, rel=1e-12)

    def test_constants_positive(self):
        with pytest.raises(ValueError):
            Constants(I_sat=-1.0)


class TestPatternPeriod:
    def test_long_cavity_700um(self):
        lam = pattern_period(0.1, 780e-9, 1.0)
        assert lam == pytest.approx(7.0e-4, rel=0.05)

    def test_confocal_prefactor_22um(self):
        lam = pattern_period(100e-6, 780e-9, 1.0)
        assert lam == pytest.approx(2.214e-5, rel=1e-3)

    def test_quadrupling_dephasing_halves_period(self):
        lam1 = pattern_period(0.1, 780e-9, 0.5)
        lam4 = pattern_period(0.1, 780e-9, 2.0)
        assert lam4 == pytest.approx(lam1 / 2.0, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            pattern_period(0.1, 780e-9, 0.0)
        with pytest.raises(ValueError):
            pattern_period(0.1, 780e-9, -1.0)
        with pytest.raises(ValueError):
            pattern_period(-0.1, 780e-9, 1.0)


class TestSidebandAngle:
    def test_zero_dephasing_on_axis(self):
        assert sideband_angle(0.0, TWO_PI / 780e-9, 0.1) == 0.0

    def test_direct_value(self):
        k0 = TWO_PI / 780e-9
        phi = sideband_angle(1.0, k0, 0.1)
        assert phi == pytest.approx(math.sqrt(780e-9 / (TWO_PI * 0.1)), rel=1e-12)
        assert phi == pytest.approx(1.114e-3, rel=1e-3)

    def test_square_root_scaling(self):
        k0 = TWO_PI / 780e-9
        assert sideband_angle(4.0, k0, 0.1) == pytest.approx(2.0 * sideband_angle(1.0, k0, 0.1), rel=1e-12)

    def test_rejects_negative_dephasing(self):
        with pytest.raises(ValueError):
            sideband_angle(-0.1, TWO_PI / 780e-9, 0.1)


class TestRoundTripConsistency:
    def test_angle_times_k0_equals_pattern_wavenumber_exactly(self):
        # k0 * phi == 2 pi / Lambda is an exact algebraic identity
        k0 = TWO_PI / 780e-9
        for dphi in (1e-4, 1e-2, 0.3, 1.0, 5.0):
            for L in (100e-6, 1e-3, 0.1):
                phi = sideband_angle(dphi, k0, L)
                lam = pattern_period(L, 780e-9, dphi)
                assert k0 * phi == pytest.approx(TWO_PI / lam, rel=1e-12)

    def test_small_angle_sine_consistency(self):
        # with sin(phi), the identity holds to phi^2/6; below phi ~ 2e-3 that
        # is inside the 1e-6 budget
        k0 = TWO_PI / 780e-9
        for dphi in (0.01, 0.1, 1.0):
            L = 0.1
            phi = sideband_angle(dphi, k0, L)
            assert phi < 2.4e-3
            lam = pattern_period(L, 780e-9, dphi)
            assert k0 * math.sin(phi) == pytest.approx(TWO_PI / lam, rel=1e-6)


class TestDetuningForThetaEff:
    def test_empty_cavity(self):
        sp = make_scaled(C=0.0)
        assert detuning_for_theta_eff(-1.0, 0.5, sp) == -1.0

    def test_direct_value(self):
        sp = make_scaled(C=0.02, Delta=50.0)
        assert detuning_for_theta_eff(-1.0, 0.0, sp) == pytest.approx(-2.0, rel=1e-12)

    def test_saturated_medium_limit(self):
        sp = make_scaled(C=0.02, Delta=50.0)
        assert detuning_for_theta_eff(-1.0, 1e12, sp) == pytest.approx(-1.0, abs=1e-9)

    def test_inverse_of_theta_eff_of(self):
        sp = make_scaled()
        for s0 in (0.0, 0.1, 3.0):
            theta = detuning_for_theta_eff(-1.7, s0, sp)
            assert theta_eff_of(theta, s0, sp) == pytest.approx(-1.7, rel=1e-12)

    def test_rejects_negative_s0(self):
        with pytest.raises(ValueError):
            detuning_for_theta_eff(-1.0, -0.1, make_scaled())


def test_rb_defaults():
    assert RB_D2.Gamma_Rb == pytest.approx(TWO_PI * 6.065e6)
    assert RB_D2.I_sat == 1.6
