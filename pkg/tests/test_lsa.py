from __future__ import annotations

import math

import numpy as np
import pytest

from cavx import lsa
from cavx.dynamics import DensityGrid, FieldGrid, PumpProfile, rhs_density, rhs_field
from cavx.params import ScaledParams, detuning_for_theta_eff

TWO_PI = 2.0 * math.pi


def make_scaled(C=0.019992003198720512, sigma=24.3, Delta=50.0, Theta=-2.0,
                d=0.01, b0=1.0, T=0.01):
    return ScaledParams(
        kappa=1.5e7, C=C, sigma=sigma, a=1.24e-9, d=d, k0=TWO_PI / 780e-9,
        Theta=Theta, Delta=Delta, b0=b0, T_loss=T, T1=0.006,
    )


PAPER = make_scaled()  # T=0.01, Delta=50, sigma=24.3, b0=1


class TestHomogeneousState:
    def test_empty_resonant_cavity(self):
        sp = make_scaled(C=0.0, Theta=0.0)
        st = lsa.homogeneous_state(1.0, sp)
        assert st.Y == pytest.approx(1.0, rel=1e-14)
        assert st.n0 == 1.0

    def test_empty_detuned_cavity(self):
        sp = make_scaled(C=0.0, Theta=-3.0)
        for s0 in (0.1, 1.0, 4.0):
            st = lsa.homogeneous_state(s0, sp)
            assert st.Y == pytest.approx(s0 * (1 + 9.0), rel=1e-14)

    def test_dressed_cavity_value(self):
        sp = make_scaled(C=0.02)
        s0 = 0.0412
        theta = detuning_for_theta_eff(-1.0, s0, sp)
        st = lsa.homogeneous_state(s0, sp.with_theta(theta))
        assert st.theta_eff == pytest.approx(-1.0, rel=1e-12)
        assert st.Y == pytest.approx(0.0840, abs=5e-4)

    def test_gauge_real_field(self):
        st = lsa.homogeneous_state(0.25, PAPER)
        assert st.E0 == complex(0.5)

    def test_pump_inversion_round_trip(self):
        for s0 in (0.0, 0.01, 0.4, 2.0):
            Y = lsa.pump_for_saturation(s0, PAPER)
            assert lsa.saturation_for_pump(Y, PAPER) == pytest.approx(s0, abs=1e-9)

    def test_rejects_negative_s0(self):
        with pytest.raises(ValueError):
            lsa.homogeneous_state(-0.1, PAPER)


class TestBuildMatrix:
    def test_conjugate_row_structure(self):
        m = lsa.build_matrix(1.7, 0.3, PAPER)
        assert m[1, 0] == np.conj(m[0, 1])
        assert m[1, 1] == np.conj(m[0, 0])
        assert m[1, 2] == np.conj(m[0, 2])

    def test_density_row_real_and_diffusive(self):
        for k2 in (0.1, 1.0, 10.0):
            m = lsa.build_matrix(k2, 0.2, PAPER)
            row = m[2]
            assert np.allclose(row.imag, 0.0)
            assert row[2] == pytest.approx(-PAPER.d * k2, rel=1e-14)
            assert row[0] == row[1]

    def test_neutral_mass_mode_at_k_zero(self):
        m = lsa.build_matrix(0.0, 0.5, PAPER)
        assert np.all(m[2] == 0.0)

    def test_zero_field_decouples(self):
        m = lsa.build_matrix(2.0, 0.0, PAPER)
        assert m[0, 2] == 0.0
        assert m[1, 2] == 0.0
        assert m[2, 0] == m[2, 1] == 0.0
        assert m[2, 2] == pytest.approx(-PAPER.d * 2.0)

    def test_batched_shape(self):
        m = lsa.build_matrix(np.array([0.5, 1.0, 2.0]), 0.1, PAPER)
        assert m.shape == (3, 3, 3)
        single = lsa.build_matrix(1.0, 0.1, PAPER)
        assert np.allclose(m[1], single)


def _plane_wave_jacobian(k: float, s0: float, sp: ScaledParams, h: float = 1e-6):
    """Central finite differences of the nonlinear tendencies on plane waves."""
    nx, ny = 64, 16
    # choose dx so that k sits exactly on the grid: k = m_idx * 2 pi / (nx dx)
    m_idx = 8
    dx = TWO_PI * m_idx / (nx * k)
    x = np.arange(nx) * dx
    mode = np.exp(1j * k * x)[:, None] * np.ones((1, ny))
    pump = PumpProfile(kind="plane", amplitude=0.0)

    def tendencies(E_arr, n_arr):
        E = FieldGrid(values=E_arr, dx=dx, dy=dx)
        n = DensityGrid(values=n_arr, dx=dx, dy=dx)
        return rhs_field(E, n, sp, pump), rhs_density(n, E, sp)

    def project(arr, sign=+1):
        ref = mode if sign > 0 else np.conj(mode)
        return np.vdot(ref, arr) / ref.size

    E0 = np.full((nx, ny), math.sqrt(s0), dtype=complex)
    n0 = np.ones((nx, ny))
    M = np.zeros((3, 3), dtype=complex)
    # column 0: perturb dE by h e^{ikx}
    fp, gp = tendencies(E0 + h * mode, n0)
    fm, gm = tendencies(E0 - h * mode, n0)
    M[0, 0] = project((fp - fm) / (2 * h))
    M[1, 0] = np.conj(project((fp - fm) / (2 * h), sign=-1))
    M[2, 0] = project((gp - gm) / (2 * h))
    # column 1: perturb dE* by h e^{ikx}, i.e. E by h e^{-ikx}
    fp, gp = tendencies(E0 + h * np.conj(mode), n0)
    fm, gm = tendencies(E0 - h * np.conj(mode), n0)
    M[0, 1] = project((fp - fm) / (2 * h))
    M[1, 1] = np.conj(project((fp - fm) / (2 * h), sign=-1))
    M[2, 1] = project((gp - gm) / (2 * h))
    # column 2: perturb dn by h (e^{ikx} + e^{-ikx}), keeping n real
    dn = h * 2.0 * np.real(mode)
    fp, gp = tendencies(E0, n0 + dn)
    fm, gm = tendencies(E0, n0 - dn)
    M[0, 2] = project((fp - fm) / (2 * h))
    M[1, 2] = np.conj(project((fp - fm) / (2 * h), sign=-1))
    M[2, 2] = project((gp - gm) / (2 * h))
    return M


class TestJacobianFidelity:
    def test_matches_finite_differences_on_random_samples(self):
        rng = np.random.default_rng(2024)
        for _ in range(20):
            k = float(rng.uniform(0.3, 3.0))
            s0 = float(rng.uniform(0.005, 1.5))
            M_fd = _plane_wave_jacobian(k, s0, PAPER)
            M = lsa.build_matrix(k * k, s0, PAPER)
            err = np.abs(M_fd - M).max() / np.abs(M).max()
            assert err < 1e-5, f"k={k} s0={s0} err={err}"

    def test_matches_on_random_parameter_sets(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            sp = make_scaled(
                C=float(rng.uniform(0.005, 0.3)),
                sigma=float(rng.uniform(1.0, 30.0)),
                Delta=float(rng.uniform(5.0, 80.0)),
                Theta=float(rng.uniform(-8.0, 1.0)),
                d=float(rng.uniform(0.005, 0.2)),
            )
            k = float(rng.uniform(0.4, 2.5))
            s0 = float(rng.uniform(0.01, 1.0))
            M_fd = _plane_wave_jacobian(k, s0, sp)
            M = lsa.build_matrix(k * k, s0, sp)
            err = np.abs(M_fd - M).max() / np.abs(M).max()
            assert err < 1e-5


class TestGrowthRate:
    def test_empty_cavity_always_stable(self):
        sp = make_scaled(C=0.0)
        for k2 in (0.01, 1.0, 50.0):
            assert lsa.growth_rate(k2, 1.0, sp) == pytest.approx(max(-1.0, -sp.d * k2), rel=1e-9)

    def test_neutral_mode_excluded_at_k_zero(self):
        # without exclusion the answer would be exactly 0
        rate = lsa.growth_rate(0.0, 0.3, PAPER)
        assert rate < -0.5

    def test_threshold_bracketing(self):
        th = lsa.threshold_at(PAPER, -1.0)
        k2 = th.k_c**2
        sp_lo = PAPER.with_theta(detuning_for_theta_eff(-1.0, 0.98 * th.s0_th, PAPER))
        sp_hi = PAPER.with_theta(detuning_for_theta_eff(-1.0, 1.02 * th.s0_th, PAPER))
        assert lsa.growth_rate(k2, 0.98 * th.s0_th, sp_lo) < 0
        assert lsa.growth_rate(k2, 1.02 * th.s0_th, sp_hi) > 0

    def test_determinant_zero_at_threshold(self):
        th = lsa.threshold_at(PAPER, -1.0)
        sp = PAPER.with_theta(detuning_for_theta_eff(-1.0, th.s0_th, PAPER))
        m = lsa.build_matrix(th.k_c**2, th.s0_th, sp)
        norm = np.linalg.norm(m)
        assert abs(np.linalg.det(m)) < 1e-8 * norm**3


class TestThresholdAt:
    def test_agrees_with_analytic_at_b0_1(self):
        th = lsa.threshold_at(PAPER, -1.0)
        assert th.converged
        assert th.s0_th == pytest.approx(lsa.analytic_threshold(PAPER), rel=0.05)

    def test_critical_wavenumber_matches_detuned_optimum(self):
        # independent oracle: minimizing the stationary condition over the
        # sideband detuning Y = k^2 + theta_eff gives
        # Y* = X * (sqrt(1 + Delta^2) - 1) / Delta with X = 1 + C/(1 + s0)
        th = lsa.threshold_at(PAPER, -1.0)
        X = 1.0 + PAPER.C / (1.0 + th.s0_th)
        y_star = X * (math.sqrt(1.0 + PAPER.Delta**2) - 1.0) / PAPER.Delta
        k2_pred = y_star - (-1.0)
        assert th.k_c**2 == pytest.approx(k2_pred, rel=0.01)

    def test_threshold_independent_of_theta_eff(self):
        th1 = lsa.threshold_at(PAPER, -1.0)
        th5 = lsa.threshold_at(PAPER, -5.0)
        assert th5.s0_th == pytest.approx(th1.s0_th, rel=1e-4)
        assert th5.k_c**2 - th1.k_c**2 == pytest.approx(4.0, rel=0.01)

    def test_doubling_b0_halves_threshold(self):
        th1 = lsa.threshold_at(PAPER, -1.0)
        th2 = lsa.threshold_at(PAPER.with_b0(2.0), -1.0)
        assert th2.s0_th == pytest.approx(th1.s0_th / 2.0, rel=0.05)

    def test_no_instability_reported(self):
        th = lsa.threshold_at(make_scaled(C=0.0), -1.0)
        assert not th.converged
        assert "no instability" in th.message
        assert math.isnan(th.s0_th)

    def test_diffusivity_independence(self):
        ref = lsa.threshold_at(make_scaled(d=1e-3), -1.0)
        for d in (0.01, 1.0, 10.0):
            th = lsa.threshold_at(make_scaled(d=d), -1.0)
            assert th.s0_th == pytest.approx(ref.s0_th, rel=1e-3)
            assert th.k_c == pytest.approx(ref.k_c, rel=1e-3)

    def test_analytic_limit_convergence(self):
        # joint low-saturation large-detuning limit: C*Delta fixed, sigma
        # scaled with Delta so the analytic threshold itself goes to zero
        ratios = []
        for Delta, sigma in ((50.0, 24.3), (500.0, 243.0)):
            sp = make_scaled(C=0.9996 / Delta, sigma=sigma, Delta=Delta)
            th = lsa.threshold_at(sp, -1.0)
            ratios.append(th.s0_th / lsa.analytic_threshold(sp))
        assert abs(ratios[-1] - 1.0) < 0.01
        assert abs(ratios[-1] - 1.0) < abs(ratios[0] - 1.0)

    def test_fixed_theta_variant_close_to_pinned_theta_eff(self):
        th = lsa.threshold_at(PAPER, -1.0)
        theta = detuning_for_theta_eff(-1.0, th.s0_th, PAPER)
        th_fixed = lsa.threshold_at_fixed_theta(PAPER.with_theta(theta))
        assert th_fixed.s0_th == pytest.approx(th.s0_th, rel=1e-3)


class TestAnalyticThreshold:
    def test_paper_parameter_value(self):
        assert lsa.analytic_threshold(PAPER) == pytest.approx(0.0411687, rel=1e-4)

    def test_inverse_in_b0(self):
        a1 = lsa.analytic_threshold(PAPER)
        a10 = lsa.analytic_threshold(PAPER.with_b0(10.0))
        assert a10 == pytest.approx(a1 / 10.0, rel=1e-12)

    def test_linear_in_losses(self):
        sp1 = make_scaled(T=0.01)
        sp2 = make_scaled(T=0.1, C=0.019992003198720512 / 10.0)
        assert lsa.analytic_threshold(sp2) == pytest.approx(10.0 * lsa.analytic_threshold(sp1), rel=1e-12)

    def test_rejects_degenerate_denominators(self):
        with pytest.raises(ValueError):
            lsa.analytic_threshold(make_scaled(C=0.0))
        with pytest.raises(ValueError):
            lsa.analytic_threshold(make_scaled(sigma=0.0))
        with pytest.raises(ValueError):
            lsa.analytic_threshold(make_scaled(Delta=0.0))


class TestExtraCavityIntensity:
    def test_unit_buildup_convention(self):
        th = lsa.threshold_at(PAPER, -1.0)
        sp = make_scaled(T=math.sqrt(0.006))  # T1 == T_loss^2
        i_ext = lsa.extra_cavity_intensity(th, sp, -1.0)
        s0 = th.s0_th
        y = s0 * ((1 + sp.C / (1 + s0)) ** 2 + 1.0)
        assert i_ext == pytest.approx(1.6 * y, rel=1e-12)

    def test_detuning_ratio_matches_pump_invariant(self):
        th = lsa.threshold_at(PAPER, -1.0)
        i1 = lsa.extra_cavity_intensity(th, PAPER, -1.0)
        i5 = lsa.extra_cavity_intensity(th, PAPER, -5.0)
        s0 = th.s0_th
        x2 = (1 + PAPER.C / (1 + s0)) ** 2
        assert i5 / i1 == pytest.approx((x2 + 25.0) / (x2 + 1.0), rel=1e-12)
        assert i5 / i1 == pytest.approx(13.0, rel=0.03)

    def test_rejects_unconverged(self):
        bad = lsa.ThresholdResult(math.nan, math.nan, math.nan, converged=False)
        with pytest.raises(ValueError):
            lsa.extra_cavity_intensity(bad, PAPER, -1.0)


class TestScanB0:
    def test_rows_sorted_and_failures_recorded(self):
        result = lsa.scan_b0(PAPER, [1.0, 0.1, 3.0])
        b0s = [r.b0 for r in result.rows]
        assert b0s == sorted(b0s)
        by_b0 = {r.b0: r for r in result.rows}
        # b0 = 0.1 at these parameters has no instability: saturation caps the
        # optomechanical gain below threshold for every s0
        assert not by_b0[0.1].converged
        assert math.isnan(by_b0[0.1].s0_th)
        assert by_b0[1.0].converged
        assert by_b0[3.0].converged

    def test_csv_shape_and_determinism(self):
        result = lsa.scan_b0(PAPER, [1.0, 3.0])
        text = result.to_csv()
        lines = text.strip().split("\n")
        assert lines[0] == "b0,s0_th,s0_analytic,k_c,I_ext_m1,I_ext_m5,converged"
        assert len(lines) == 3
        again = lsa.scan_b0(PAPER, [1.0, 3.0]).to_csv()
        assert again == text

    def test_low_b0_slope(self):
        result = lsa.scan_b0(PAPER, [1.0, 2.0, 3.0])
        xs = [math.log(r.b0) for r in result.rows]
        ys = [math.log(r.s0_th) for r in result.rows]
        slope = np.polyfit(xs, ys, 1)[0]
        assert slope == pytest.approx(-1.0, abs=0.05)

    def test_high_b0_departure_monotone(self):
        result = lsa.scan_b0(PAPER, [10.0, 30.0, 100.0])
        devs = [abs(r.s0_th - r.s0_analytic) / r.s0_analytic for r in result.rows]
        assert devs[0] < devs[1] < devs[2]
