import math
from dataclasses import replace

import numpy as np
import pytest

from kjpa import circuit as cc
from kjpa import device
from kjpa.errors import FluxAtFrustration, InsufficientData

from conftest import TWO_PI, rel_err

FLUX_OP = device.FLUX_OP


class TestCircuitParams:
    def test_squid_capacitance_from_plasma_frequency(self, fitted):
        # C_S = 2 C_J with C_J = 2e I_c / (hbar omega_pl^2)
        assert rel_err(fitted.C_S, 192.4e-15) < 1e-3

    def test_josephson_energy(self, fitted):
        assert rel_err(fitted.E_J, 2.633e-21) < 1e-3

    def test_screening_parameter(self, fitted):
        assert rel_err(fitted.beta_L, 0.0375) < 2e-3

    def test_quarter_wave_frequency(self, fitted):
        assert rel_err(fitted.omega_quarter / TWO_PI, 6.179e9) < 1e-4

    def test_positive_field_validation(self, fitted):
        with pytest.raises(ValueError):
            replace(fitted, I_c=-1e-6)

    def test_screening_must_stay_subunity(self, fitted):
        with pytest.raises(ValueError):
            replace(fitted, L_loop=2.6e-10)

    def test_frustration_guard(self, fitted):
        with pytest.raises(FluxAtFrustration):
            fitted.squid_energy(0.5)


class TestModeConstraint:
    def test_residual_of_exact_root(self, fitted):
        for flux in (0.0, 0.15, FLUX_OP, 0.45):
            m = cc.solve_mode_constraint(fitted, flux)
            resid = (m.kd * math.tan(m.kd) - fitted.squid_energy(flux) / fitted.E_L_cav
                     + (fitted.C_S / fitted.C_cav) * m.kd**2)
            assert abs(resid) < 1e-10

    def test_omega_definition_consistency(self, fitted):
        m = cc.solve_mode_constraint(fitted, FLUX_OP)
        assert rel_err(m.omega_0, m.kd / math.sqrt(fitted.L_cav * fitted.C_cav)) < 1e-12

    def test_zero_participation_limit_is_quarter_wave(self, fitted):
        m = cc.mode_from_inductance(fitted, 0.0)
        assert m.kd == math.pi / 2.0
        assert m.chi == 0.0

    def test_fitted_mode_values(self, fitted):
        # mode block of the extracted-parameter column
        m = cc.solve_mode_constraint(fitted, FLUX_OP)
        assert rel_err(m.kd, 1.536) < 5e-3
        assert rel_err(m.f0_hz, 6.042e9) < 5e-3
        assert rel_err(m.C_k, 413.8e-15) < 5e-3
        assert rel_err(m.phi_zpf, 0.1760) < 5e-3

    def test_design_mode_values(self, designed):
        m = cc.solve_mode_constraint(designed, FLUX_OP)
        assert rel_err(m.kd, 1.532) < 5e-3
        assert rel_err(m.f0_hz, 6.454e9) < 5e-3
        assert rel_err(m.C_k, 381.8e-15) < 5e-3
        assert rel_err(m.phi_zpf, 0.1773) < 5e-3

    def test_approximate_vs_exact_root(self, fitted):
        # (pi/2)/(1+chi) tracks the exact root to 0.5% for chi < 0.05
        for flux in np.linspace(0.0, 0.44, 12):
            m = cc.solve_mode_constraint(fitted, flux)
            if m.chi < 0.05:
                assert rel_err(m.kd_approx, m.kd) < 5e-3

    def test_mode_from_resonance_round_trips_frequency(self, fitted):
        m = cc.mode_from_resonance(fitted, TWO_PI * 6.042e9)
        assert rel_err(m.f0_hz, 6.042e9) < 1e-12
        assert rel_err(m.chi * fitted.L_cav, 45.94e-12) < 0.01


class TestSquidInductance:
    def test_zero_flux_is_bare_squid(self, fitted):
        ls = cc.squid_inductance(fitted, 0.0)
        assert rel_err(ls, cc.PHI0 / (4.0 * math.pi * fitted.I_c)) < 1e-12

    def test_zero_loop_reduces_to_cosine(self, fitted):
        bare = replace(fitted, L_loop=0.0)
        ls = cc.squid_inductance(bare, FLUX_OP)
        expect = cc.PHI0 / (4.0 * math.pi * fitted.I_c
                            * math.cos(math.pi * FLUX_OP))
        assert rel_err(ls, expect) < 1e-12

    def test_golden_section_against_independent_oracle(self, fitted):
        # coarse grid scan to bracket the minimum, then bisection on the
        # stationarity condition 2(phi - x)/(pi beta) + sin(phi) = 0
        x = math.pi * FLUX_OP
        beta = fitted.beta_L
        phi = np.linspace(x - math.pi / 2, x + math.pi / 2, 200_001)
        u = (phi - x) ** 2 / (math.pi * beta) - np.cos(phi)
        i = int(np.argmin(u))
        lo, hi = phi[i - 1], phi[i + 1]

        def slope(p):
            return 2.0 * (p - x) / (math.pi * beta) + math.sin(p)

        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if slope(lo) * slope(mid) <= 0.0:
                hi = mid
            else:
                lo = mid
        phi_star = 0.5 * (lo + hi)
        ls_oracle = cc.PHI0 / (4.0 * math.pi * fitted.I_c * math.cos(phi_star))
        assert rel_err(cc.squid_inductance(fitted, FLUX_OP), ls_oracle) < 1e-9

    def test_screening_shifts_inductance_down(self, fitted):
        with_loop = cc.squid_inductance(fitted, FLUX_OP)
        without = cc.squid_inductance(replace(fitted, L_loop=0.0), FLUX_OP)
        assert with_loop < without
        # the relative shift is set by the screening parameter
        assert 0.05 < (without - with_loop) / without < 0.15

    def test_frustration(self, fitted):
        with pytest.raises(FluxAtFrustration):
            cc.squid_inductance(fitted, 0.5)


class TestResonanceFrequency:
    def test_zero_flux_value(self, fitted):
        f0 = cc.resonance_frequency(fitted, 0.0) / TWO_PI
        assert abs(f0 - 6.117e9) < 2e6

    def test_zero_participation_limit(self, fitted):
        # enormous critical current drives L_S -> 0
        stiff = replace(fitted, I_c=1.0, L_loop=0.0)
        assert rel_err(cc.resonance_frequency(stiff, 0.0),
                       fitted.omega_quarter) < 1e-6

    def test_strictly_decreasing_in_flux(self, fitted):
        flux = np.linspace(0.0, 0.49, 40)
        w = [cc.resonance_frequency(fitted, f) for f in flux]
        assert all(b < a for a, b in zip(w, w[1:]))


class TestNonlinearCoefficients:
    def test_signs_everywhere(self, fitted):
        for flux in np.linspace(0.0, 0.45, 10):
            m = cc.solve_mode_constraint(fitted, flux)
            kerr, lam = cc.nonlinear_coefficients(fitted, flux, m)
            assert kerr < 0.0
            assert lam > 0.0

    def test_vanish_in_zero_participation_limit(self, fitted):
        m_small = cc.mode_from_inductance(fitted, 1e-15)
        m_op = cc.solve_mode_constraint(fitted, FLUX_OP)
        k_small, l_small = cc.nonlinear_coefficients(fitted, FLUX_OP, m_small)
        k_op, l_op = cc.nonlinear_coefficients(fitted, FLUX_OP, m_op)
        assert abs(k_small) < 1e-6 * abs(k_op)
        assert l_small < 1e-6 * l_op

    def test_values_at_measured_operating_frequency(self, fitted):
        # anchored on the measured 6.042 GHz resonance the Kerr and sextic
        # coefficients land on the published values
        m = cc.mode_from_resonance(fitted, TWO_PI * 6.042e9)
        kerr, lam = cc.nonlinear_coefficients(fitted, FLUX_OP, m)
        assert rel_err(kerr / TWO_PI, -208.4) < 0.01
        assert rel_err(lam / TWO_PI, 2.604e-4) < 0.01

    def test_sextic_to_kerr_ratio(self, fitted):
        m = cc.mode_from_resonance(fitted, TWO_PI * 6.042e9)
        kerr, lam = cc.nonlinear_coefficients(fitted, FLUX_OP, m)
        assert 1.0e-6 < lam / abs(kerr) < 1.6e-6


class TestPumpAmplitude:
    def test_zero_flux_gives_zero(self, fitted):
        m = cc.solve_mode_constraint(fitted, 0.0)
        assert cc.pump_amplitude(fitted, 0.0, 1e-3, m) == 0.0

    def test_large_pump_flux_warns(self, fitted):
        m = cc.solve_mode_constraint(fitted, FLUX_OP)
        with pytest.warns(UserWarning):
            cc.pump_amplitude(fitted, FLUX_OP, 0.05, m)

    def test_inversion_and_exact_cross_check(self, fitted):
        m = cc.mode_from_resonance(fitted, TWO_PI * 6.042e9)
        target = 0.51 * TWO_PI * 6.74e6
        pf = cc.pump_flux_for_amplitude(fitted, FLUX_OP, target, m)
        approx = cc.pump_amplitude(fitted, FLUX_OP, pf, m)
        exact = cc.pump_amplitude_exact(fitted, FLUX_OP, pf, m)
        assert rel_err(approx, target) < 1e-12
        # participation-ratio approximation is accurate to O(chi)
        assert rel_err(approx, exact) < 1.5 * m.chi


class TestDcSweepFit:
    def _generator(self, fitted):
        # effective critical current placing the screened operating-point
        # inductance at 45.94 pH
        from scipy.optimize import brentq
        ic = brentq(lambda i: cc.squid_inductance(replace(fitted, I_c=i),
                                                  FLUX_OP) - 45.94e-12,
                    7e-6, 8.5e-6, xtol=1e-14)
        return replace(fitted, I_c=ic)

    def test_noise_free_roundtrip(self, fitted):
        gen = self._generator(fitted)
        flux = np.linspace(0.0, 0.45, 24)
        data = [(f, cc.resonance_frequency(gen, f)) for f in flux]
        guess = replace(fitted, I_c=8.4e-6, L_cav=2.1e-9)
        fit = cc.fit_dc_sweep(data, guess)
        assert rel_err(fit.omega_quarter, gen.omega_quarter) < 1e-3
        assert rel_err(cc.squid_inductance(fit.params, FLUX_OP),
                       45.94e-12) < 1e-3

    def test_noisy_monte_carlo_recovery(self, fitted):
        gen = self._generator(fitted)
        flux = np.linspace(0.0, 0.45, 24)
        clean = [(f, cc.resonance_frequency(gen, f)) for f in flux]
        guess = replace(fitted, I_c=8.2e-6)
        rng = np.random.default_rng(8)
        for _ in range(25):
            noisy = [(f, w + TWO_PI * rng.normal(0.0, 100e3))
                     for f, w in clean]
            fit = cc.fit_dc_sweep(noisy, guess)
            assert rel_err(cc.squid_inductance(fit.params, FLUX_OP),
                           45.94e-12) < 0.01
            assert rel_err(fit.omega_quarter, gen.omega_quarter) < 0.01

    def test_single_point_rejected(self, fitted):
        with pytest.raises(InsufficientData):
            cc.fit_dc_sweep([(0.1, TWO_PI * 6.1e9)], fitted)

    def test_covariance_and_residuals_shape(self, fitted):
        gen = self._generator(fitted)
        flux = np.linspace(0.0, 0.4, 12)
        data = [(f, cc.resonance_frequency(gen, f)) for f in flux]
        fit = cc.fit_dc_sweep(data, fitted)
        assert fit.covariance.shape == (2, 2)
        assert len(fit.residuals_hz) == 12


def test_mode_summary_unit_suffixes(fitted):
    m = cc.solve_mode_constraint(fitted, FLUX_OP)
    summary = cc.mode_summary_hz(fitted, FLUX_OP, m)
    for key in ("f0_hz", "kerr_hz", "sextic_hz"):
        assert key in summary
