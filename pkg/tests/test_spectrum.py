import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opencavity.errors import NumericalError
from opencavity.hilbert import make_space
from opencavity.lindblad import SystemParams
from opencavity.spectrum import (
    AXIS_FREQUENCY,
    AXIS_WAVELENGTH,
    C_NM_GHZ,
    ScalingParams,
    Spectrum,
    cooperativity,
    dip_contrast,
    finesse,
    frequency_ghz_to_wavelength_nm,
    fsr_from_length_ghz,
    fsr_length_bound,
    linear_response,
    mode_amplitudes,
    mode_photon_numbers,
    quality_factor,
    symmetric_grid,
    total_decay,
    transmission_point,
    transmission_scan,
    wavelength_nm_to_frequency_ghz,
)

from conftest import (
    REF_COOPERATIVITY_H,
    REF_GAMMA_TOTAL_1,
    REF_KAPPA_H,
    REF_KAPPA_V,
    REF_NU_H,
    REF_NU_V,
    REF_SPLIT,
    random_system_params,
    reference_params,
)


def single_mode_params(**overrides) -> SystemParams:
    # idle V sector keeps nonzero decay so the joint steady state stays unique
    base = dict(kappa_h=16.04, kappa_v=1.0, g_h=1.37, gamma_1=0.16,
                gamma_2=0.16, gamma_d1=0.05, eta_h=0.1)
    base.update(overrides)
    return SystemParams(**base)


class TestSpectrumType:
    def test_requires_increasing_abscissa(self):
        with pytest.raises(ValueError):
            Spectrum(np.array([0.0, 0.0, 1.0]), np.zeros(3))
        with pytest.raises(ValueError):
            Spectrum(np.array([1.0, 0.0]), np.zeros(2))

    def test_rejects_unknown_axis(self):
        with pytest.raises(ValueError):
            Spectrum(np.array([0.0, 1.0]), np.zeros(2), "energy")

    def test_scaling_params_validation(self):
        with pytest.raises(ValueError):
            ScalingParams(a_h=-1.0)

    def test_symmetric_grid(self):
        g = symmetric_grid(5.0, 2.0, 5)
        np.testing.assert_allclose(g, [3.0, 4.0, 5.0, 6.0, 7.0])
        with pytest.raises(ValueError):
            symmetric_grid(0.0, -1.0)

    def test_wavelength_frequency_round_trip(self):
        nu = wavelength_nm_to_frequency_ghz(970.0)
        assert nu == pytest.approx(C_NM_GHZ / 970.0)
        assert frequency_ghz_to_wavelength_nm(nu) == pytest.approx(970.0, rel=1e-14)


class TestTransmissionPoint:
    def test_no_drive_gives_offset(self, space_small):
        p = reference_params(eta_h=0.0, eta_v=0.0)
        s = ScalingParams(a_h=2.0, a_v=3.0, a_0=0.7)
        assert transmission_point(space_small, p, s, 0.0) == pytest.approx(0.7, abs=1e-12)

    def test_bare_cavity_analytic(self):
        space = make_space(3, 1)
        p = single_mode_params(g_h=0.0)
        s = ScalingParams(a_h=2.5, a_v=0.0, a_0=0.0)
        t = transmission_point(space, p, s, 0.0)
        assert t == pytest.approx(2.5 * 4 * 0.1**2 / 16.04**2, rel=1e-9)

    def test_scan_matches_pointwise(self, space_small):
        p = reference_params()
        s = ScalingParams(1.0, 0.8, 0.05)
        grid = np.linspace(-10.0, 10.0, 5)
        spec = transmission_scan(space_small, p, s, grid)
        for x, y in zip(spec.x, spec.y):
            assert y == pytest.approx(
                transmission_point(space_small, p, s, x), abs=1e-12
            )

    def test_dip_exceeds_coherent_floor(self):
        # Total photon number at the dip sits above the coherent-part value
        # (1+C)^-2 because dephasing feeds incoherent fluorescence into the
        # mode; the coherent part itself follows the oracle.
        space = make_space(3, 3)
        p = reference_params()
        b = reference_params(g_h=0.0, g_v=0.0)
        s = ScalingParams(1.0, 0.0, 0.0)
        ratio = transmission_point(space, p, s, 0.0) / transmission_point(space, b, s, 0.0)
        floor = (1 + cooperativity(1.37, 16.04, 0.26)) ** -2
        assert floor < ratio < 2.1 * floor

    def test_coherent_suppression_matches_cooperativity(self):
        p = reference_params()
        b = reference_params(g_h=0.0, g_v=0.0)
        amp = mode_amplitudes(p, "H", np.array([0.0]), 3)[0]
        amp_bare = mode_amplitudes(b, "H", np.array([0.0]), 3)[0]
        suppression = abs(amp) ** 2 / abs(amp_bare) ** 2
        expected = (1 + cooperativity(1.37, 16.04, 0.26)) ** -2
        assert suppression == pytest.approx(expected, rel=0.02)


class TestTransmissionScan:
    def test_zero_scales_give_constant_offset(self, space_small):
        p = reference_params()
        spec = transmission_scan(space_small, p, ScalingParams(0.0, 0.0, 0.3),
                                 np.linspace(-5, 5, 11))
        np.testing.assert_allclose(spec.y, 0.3, atol=1e-15)

    def test_bare_lorentzian_fwhm(self):
        from opencavity.fit import fit_lorentzian

        space = make_space(3, 1)
        p = single_mode_params(g_h=0.0)
        grid = symmetric_grid(0.0, 3 * 16.04, points=301)  # step = kappa/50
        spec = transmission_scan(space, p, ScalingParams(1.0, 0.0, 0.0), grid)
        fit = fit_lorentzian(spec)
        assert fit.converged
        assert fit.values["fwhm"] == pytest.approx(16.04, rel=0.01)
        assert abs(fit.values["center"]) < 16.04 / 100

    def test_doublet_resolved(self, space_small):
        p = reference_params(g_h=0.0, g_v=0.0)
        grid = np.linspace(-40.0, REF_SPLIT + 40.0, 467)
        spec = transmission_scan(space_small, p, ScalingParams(1.0, 1.0, 0.0), grid)
        y = spec.y
        peaks = [i for i in range(1, y.size - 1) if y[i - 1] < y[i] > y[i + 1]
                 and y[i] > 0.2 * y.max()]
        assert len(peaks) == 2
        assert spec.x[peaks[0]] == pytest.approx(0.0, abs=0.2)
        assert spec.x[peaks[1]] == pytest.approx(REF_SPLIT, abs=0.2)

    def test_drive_doubling_scales_quartically(self):
        # Weak-drive intensity scales as eta^2; doubling the drive scales the
        # offset-free spectrum by 4 within 1% of the spectrum scale at the
        # reference drive strength.
        grid = symmetric_grid(0.0, 48.0, 301)
        n1 = mode_photon_numbers(single_mode_params(eta_h=0.05), "H", grid, 3)
        n2 = mode_photon_numbers(single_mode_params(eta_h=0.1), "H", grid, 3)
        assert np.max(np.abs(n2 - 4 * n1)) / n2.max() < 0.01

    def test_mirror_symmetry_about_dot(self):
        # Detuning the cavity by +D or -D from the dot produces mirror-image
        # spectra about the dot frequency.
        grid = symmetric_grid(0.0, 40.0, 401)
        up = mode_photon_numbers(single_mode_params(delta_h=5.0), "H", grid, 3)
        down = mode_photon_numbers(single_mode_params(delta_h=-5.0), "H", grid, 3)
        assert np.max(np.abs(up - down[::-1])) / up.max() < 1e-10

    def test_resonant_spectrum_is_even(self):
        grid = symmetric_grid(0.0, 30.0, 301)
        n = mode_photon_numbers(single_mode_params(), "H", grid, 3)
        assert np.max(np.abs(n - n[::-1])) / n.max() < 1e-10

    def test_sector_engine_matches_full_solver(self, rng):
        space = make_space(2, 1)
        s = ScalingParams(1.3, 0.7, 0.01)
        for _ in range(2):
            p = random_system_params(rng)
            dl = float(rng.uniform(-10, 10))
            spec = transmission_scan(space, p, s, np.array([dl - 1.0, dl]))
            assert spec.y[1] == pytest.approx(
                transmission_point(space, p, s, dl), rel=1e-9, abs=1e-13
            )

    def test_nonmonotonic_grid_rejected(self, space_small):
        p = reference_params()
        with pytest.raises(ValueError):
            transmission_scan(space_small, p, ScalingParams(), np.array([1.0, 0.0]))


class TestLinearResponse:
    def test_bare_on_resonance(self):
        p = single_mode_params(g_h=0.0)
        assert linear_response(p, 0.0, "H") == pytest.approx(2 * 0.1 / 16.04)

    def test_suppression_algebra(self):
        p = single_mode_params()
        bare = single_mode_params(g_h=0.0)
        s = abs(linear_response(p, 0.0, "H")) ** 2 / abs(linear_response(bare, 0.0, "H")) ** 2
        C = cooperativity(1.37, 16.04, total_decay(0.16, 0.05))
        assert s == pytest.approx((1 + C) ** -2, rel=1e-12)
        assert C == pytest.approx(REF_COOPERATIVITY_H, abs=0.01)
        assert s == pytest.approx(0.1276, abs=2e-4)

    def test_weak_drive_agreement_with_steady_state(self):
        # Coherent photon number from the exact steady state vs the analytic
        # formula, well inside the linear regime.
        p = reference_params(eta_h=0.01, eta_v=0.01)
        grid = symmetric_grid(0.0, 2 * REF_KAPPA_H, 21)
        amps = mode_amplitudes(p, "H", grid, 3)
        oracle = np.array([abs(linear_response(p, dl, "H")) ** 2 for dl in grid])
        assert np.max(np.abs(np.abs(amps) ** 2 / oracle - 1)) < 0.005

    def test_mode_selector(self):
        p = reference_params()
        assert linear_response(p, REF_SPLIT, "V") != linear_response(p, REF_SPLIT, "H")
        with pytest.raises(ValueError):
            linear_response(p, 0.0, "X")


class TestDerivedMetrics:
    def test_cooperativity_reference_devices(self):
        assert cooperativity(1.37, 16.04, 0.26) == pytest.approx(1.80, abs=0.005)
        assert cooperativity(1.83, 13.5, 0.4) == pytest.approx(2.48, abs=0.005)
        assert cooperativity(0.0, 10.0, 1.0) == 0.0

    def test_cooperativity_invalid(self):
        with pytest.raises(ValueError):
            cooperativity(1.0, 0.0, 0.1)
        with pytest.raises(ValueError):
            cooperativity(1.0, 1.0, 0.0)

    def test_total_decay(self):
        assert total_decay(0.16, 0.05) == REF_GAMMA_TOTAL_1
        assert total_decay(0.16, 0.17) == 0.50
        assert total_decay(0.3, 0.0) == 0.3
        with pytest.raises(ValueError):
            total_decay(-0.1, 0.0)

    def test_quality_factor(self):
        assert quality_factor(REF_NU_H, REF_KAPPA_H) == pytest.approx(19265, abs=1)
        assert quality_factor(REF_NU_V, REF_KAPPA_V) == pytest.approx(17132, abs=1)
        assert quality_factor(5.0, 5.0) == 1.0

    def test_fsr_length_bound(self):
        assert fsr_length_bound(1000.0, 500.0) == 0.5
        assert fsr_length_bound(1001.5, 938.5) == pytest.approx(7.4596, abs=2e-4)
        assert 1001.5 - 938.5 == pytest.approx(63.0)
        with pytest.raises(ValueError):
            fsr_length_bound(500.0, 1000.0)

    @given(st.floats(500.0, 2000.0), st.floats(1.0, 400.0), st.floats(0.01, 100.0))
    @settings(max_examples=100)
    def test_fsr_length_bound_homogeneous(self, lam_short, gap, s):
        lam_long = lam_short + gap
        base = fsr_length_bound(lam_long, lam_short)
        scaled = fsr_length_bound(s * lam_long, s * lam_short)
        assert scaled == pytest.approx(s * base, rel=1e-12)

    def test_finesse(self):
        fsr = fsr_from_length_ghz(7.36)
        assert fsr == pytest.approx(20366, abs=1)
        assert finesse(fsr, REF_KAPPA_V) == pytest.approx(1129, abs=1)
        assert finesse(fsr, REF_KAPPA_H) == pytest.approx(1270, abs=1)
        assert finesse(5.0, 5.0) == 1.0


class TestDipContrast:
    def test_flat_spectrum(self):
        x = np.linspace(-10, 10, 101)
        spec = Spectrum(x, np.full_like(x, 2.0))
        assert dip_contrast(spec, (-1.0, 1.0)) == 0.0

    def test_synthetic_dit_contrast(self):
        # Spectrum built from the weak-drive oracle at cooperativity 1.8 and
        # zero offset; the window excludes the dip from the baseline fit.
        p = single_mode_params()
        grid = symmetric_grid(0.0, 48.0, 401)
        y = np.array([abs(linear_response(p, dl, "H")) ** 2 for dl in grid])
        contrast = dip_contrast(Spectrum(grid, y), (-2.5, 2.5))
        assert contrast == pytest.approx(1 - 0.1276, abs=0.01)

    def test_threshold_classifies_coupled_device(self):
        p = single_mode_params()
        grid = symmetric_grid(0.0, 48.0, 401)
        y = np.array([abs(linear_response(p, dl, "H")) ** 2 for dl in grid])
        assert dip_contrast(Spectrum(grid, y), (-2.5, 2.5)) > 0.25

    def test_window_validation(self):
        x = np.linspace(-10, 10, 101)
        spec = Spectrum(x, np.ones_like(x))
        with pytest.raises(ValueError):
            dip_contrast(spec, (1.0, -1.0))
        with pytest.raises(ValueError):
            dip_contrast(spec, (100.0, 200.0))
        with pytest.raises(ValueError):
            dip_contrast(spec, (-50.0, 50.0))


class TestSectorEngine:
    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            mode_photon_numbers(reference_params(), "Q", np.array([0.0]), 3)

    def test_degenerate_sector_fails_loudly(self):
        p = SystemParams(kappa_h=16.0, eta_h=0.1)  # V sector has no decay
        with pytest.raises(NumericalError):
            mode_photon_numbers(p, "V", np.array([0.0]), 3)

    def test_axis_kinds(self, space_small):
        spec = transmission_scan(space_small, reference_params(), ScalingParams(),
                                 np.linspace(-1, 1, 3))
        assert spec.axis_kind == AXIS_FREQUENCY
        assert AXIS_WAVELENGTH == "wavelength"
