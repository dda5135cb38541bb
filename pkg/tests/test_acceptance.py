"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Every tolerance is fixed
here, not calibrated at runtime; stated runtime budgets are asserted.
"""

import time

import numpy as np
import pytest

from opencavity.fit import fit_full_spectrum, fit_lorentzian_doublet, doublet_quality_factors
from opencavity.hilbert import make_space, number_operator
from opencavity.lindblad import (
    build_hamiltonian,
    evolve,
    jump_operators,
    liouvillian,
    steady_state,
    trace_distance,
)
from opencavity.spectrum import (
    C_NM_GHZ,
    ScalingParams,
    Spectrum,
    cooperativity,
    dip_contrast,
    finesse,
    fsr_from_length_ghz,
    fsr_length_bound,
    linear_response,
    mode_amplitudes,
    quality_factor,
    symmetric_grid,
    total_decay,
    transmission_scan,
)
from opencavity.tmm import (
    Layer,
    LayerStack,
    default_cavity_stack,
    find_peaks,
    quarter_wave_dbr,
    stack_rt,
    transmission_spectrum,
)

from conftest import (
    REF_KAPPA_H,
    REF_KAPPA_V,
    REF_NU_H,
    REF_NU_V,
    REF_SPLIT,
    reference_params,
)


class Budget:
    def __init__(self, seconds: float):
        self.limit = seconds
        self.start = time.perf_counter()

    def check(self) -> float:
        elapsed = time.perf_counter() - self.start
        assert elapsed < self.limit, f"runtime {elapsed:.1f}s exceeds {self.limit}s"
        return elapsed


def report(criterion: int, text: str, elapsed: float) -> None:
    print(f"ACCEPTANCE {criterion:02d}: PASS ({elapsed:.1f}s) {text}")


def test_c01_cooperativity_table():
    budget = Budget(1.0)
    rows = [
        (1.37, 16.04, 0.26, 1.8, 0.2),
        (1.83, 13.5, 0.4, 2.5, 0.6),
        (1.82, 28.7, 0.2, 2.8, 0.5),
        (1.0, 13.6, 0.60, 0.5, 0.1),
    ]
    for g, kappa, gamma_total, printed, uncertainty in rows:
        value = cooperativity(g, kappa, gamma_total)
        assert abs(value - printed) <= uncertainty, (g, kappa, gamma_total, value)
    report(1, "cooperativity matches all four quoted devices", budget.check())


def test_c02_total_decay_identities():
    budget = Budget(1.0)
    assert total_decay(0.16, 0.05) == 0.26
    assert total_decay(0.16, 0.17) == 0.50
    report(2, "total decay identities exact", budget.check())


def test_c03_quality_factors():
    budget = Budget(1.0)
    q_h = quality_factor(REF_NU_H, REF_KAPPA_H)
    q_v = quality_factor(REF_NU_V, REF_KAPPA_V)
    assert 19200 - 200 <= q_h <= 19200 + 200, q_h
    assert 17100 - 200 <= q_v <= 17100 + 200, q_v
    report(3, f"Q = {q_h:.0f} and {q_v:.0f} inside quoted windows", budget.check())


def test_c04_finesse_lower_bounds():
    budget = Budget(1.0)
    fsr = fsr_from_length_ghz(7.36)
    f_v = finesse(fsr, REF_KAPPA_V)
    f_h = finesse(fsr, REF_KAPPA_H)
    assert 1100 <= f_v < 1200, f_v
    assert 1200 <= f_h < 1300, f_h
    report(4, f"finesse {f_v:.0f} and {f_h:.0f} in the stated hundreds", budget.check())


def test_c05_steady_state_vs_time_evolution():
    budget = Budget(120.0)
    space = make_space(3, 3)
    p = reference_params()
    t_final = 50.0 / p.kappa_h
    detunings = np.linspace(-2 * p.kappa_h, 2 * p.kappa_h, 11)
    for dl in detunings:
        h = build_hamiltonian(space, p, float(dl))
        jumps = jump_operators(space, p)
        rho_ss = steady_state(liouvillian(h, jumps))
        max_rate = max(
            float(np.max(np.abs(np.linalg.eigvalsh(j.conj().T @ j)))) for j in jumps
        )
        rho_t = evolve(h, jumps, rho_ss, t_final, 0.099 / max_rate)
        assert trace_distance(rho_ss, rho_t) < 1e-6, dl
    report(5, "independent integrator confirms the steady state at 11 detunings",
           budget.check())


def test_c06_linear_response_agreement():
    budget = Budget(60.0)
    # Pointwise agreement of the coherent photon number with the analytic
    # weak-drive response, deep in the linear regime.
    weak = reference_params(eta_h=0.01, eta_v=0.01)
    grid = np.linspace(-2 * REF_KAPPA_H, 2 * REF_KAPPA_H, 21)
    coherent = np.abs(mode_amplitudes(weak, "H", grid, 3)) ** 2
    oracle = np.array([abs(linear_response(weak, dl, "H")) ** 2 for dl in grid])
    worst = float(np.max(np.abs(coherent / oracle - 1)))
    assert worst < 0.005, worst

    # Dipole-induced suppression of the coherent response at the quoted
    # drive matches (1 + C)^-2 for C_H = 1.8.
    p = reference_params()
    bare = reference_params(g_h=0.0, g_v=0.0)
    amp = mode_amplitudes(p, "H", np.array([0.0]), 3)[0]
    amp0 = mode_amplitudes(bare, "H", np.array([0.0]), 3)[0]
    suppression = abs(amp) ** 2 / abs(amp0) ** 2
    c_h = cooperativity(1.37, 16.04, 0.26)
    assert abs(suppression * (1 + c_h) ** 2 - 1) < 0.02, suppression
    report(6, f"linear response within {worst:.2e}; suppression (1+C)^-2 within 2%",
           budget.check())


def test_c07_bare_cavity_doublet():
    budget = Budget(60.0)
    space = make_space(3, 3)
    p = reference_params(g_h=0.0, g_v=0.0)
    grid = np.linspace(-50.0, REF_SPLIT + 50.0, 683)
    spec = transmission_scan(space, p, ScalingParams(1.0, 1.0, 0.0), grid)
    fit = fit_lorentzian_doublet(spec)
    assert fit.converged
    v = fit.values
    lo, hi = ("1", "2") if v["center_1"] < v["center_2"] else ("2", "1")
    assert abs(v[f"center_{lo}"] - 0.0) < REF_KAPPA_H / 100
    assert abs(v[f"center_{hi}"] - REF_SPLIT) < REF_KAPPA_V / 100
    assert abs(v[f"fwhm_{lo}"] / REF_KAPPA_H - 1) < 0.01
    assert abs(v[f"fwhm_{hi}"] / REF_KAPPA_V - 1) < 0.01
    # Absolute-frequency linewidths reproduce the quoted quality factors.
    q_h = quality_factor(REF_NU_H, v[f"fwhm_{lo}"])
    q_v = quality_factor(REF_NU_V, v[f"fwhm_{hi}"])
    assert abs(q_h - 19265) < 200 and abs(q_v - 17132) < 200
    report(7, "bare doublet fit recovers both linewidths within 1%", budget.check())


def test_c08_saturation_monotonicity():
    budget = Budget(120.0)
    drives = [0.1, 1.0, 3.0, 10.0]
    contrasts = []
    grid = symmetric_grid(0.0, 3 * REF_KAPPA_H, 301)
    for eta in drives:
        p = reference_params(eta_h=eta, eta_v=0.0)
        space = make_space(8, 1)  # ~1.6 photons at the strongest drive
        spec = transmission_scan(space, p, ScalingParams(1.0, 0.0, 0.0), grid)
        contrasts.append(dip_contrast(spec, (-3.0, 3.0)))
    assert all(a > b for a, b in zip(contrasts, contrasts[1:])), contrasts
    report(8, "dip contrast %s strictly decreasing with drive" %
           ", ".join(f"{c:.3f}" for c in contrasts), budget.check())


def test_c09_fano_mirror_symmetry():
    budget = Budget(60.0)
    grid = symmetric_grid(0.0, 40.0, 401)  # symmetric about the dot frequency
    scale = ScalingParams(1.0, 0.0, 0.0)
    space = make_space(3, 1)
    up = transmission_scan(space, reference_params(delta_h=5.0, eta_v=0.0), scale, grid)
    down = transmission_scan(space, reference_params(delta_h=-5.0, eta_v=0.0), scale, grid)
    rel = np.max(np.abs(up.y - down.y[::-1])) / np.max(np.abs(up.y))
    assert rel < 1e-6, rel
    report(9, f"detuned spectra mirror to {rel:.1e} relative", budget.check())


def quarter_wave_peak_reflectivity(stack: LayerStack) -> float:
    y = complex(stack.substrate_n)
    for layer in reversed(stack.layers):
        y = layer.n**2 / y
    r = (stack.ambient_n - y) / (stack.ambient_n + y)
    return abs(r) ** 2


def test_c10_tmm_oracles():
    budget = Budget(30.0)
    for n_h, n_l, pairs in ((2.0, 1.45, 12.5), (3.48, 2.94, 29.5)):
        stack = quarter_wave_dbr(n_h, n_l, 970.0, pairs)
        _, _, big_r, _ = stack_rt(stack, 970.0)
        assert abs(big_r - quarter_wave_peak_reflectivity(stack)) < 1e-10

    rng = np.random.default_rng(20260810)
    for _ in range(200):
        layers = tuple(
            Layer(float(rng.uniform(1.05, 4.0)), float(rng.uniform(5.0, 600.0)))
            for _ in range(int(rng.integers(1, 14)))
        )
        stack = LayerStack(float(rng.uniform(1.0, 2.0)), layers,
                           float(rng.uniform(1.0, 4.0)))
        wl = float(rng.uniform(400.0, 1600.0))
        _, _, big_r, big_t = stack_rt(stack, wl)
        assert abs(big_r + big_t - 1.0) < 1e-12
        _, _, _, t_rev = stack_rt(stack.reversed(), wl)
        assert abs(big_t - t_rev) < 1e-12
    report(10, "closed-form mirror reflectivity, energy and reciprocity hold",
           budget.check())


def test_c11_band_edge_fsr_overestimates_length():
    budget = Budget(300.0)
    gap = 5000.0
    active = 400.0
    stack = default_cavity_stack(gap, active)
    grid = np.linspace(900.0, 1060.0, 8001)
    spec = transmission_spectrum(stack, grid)
    peaks = sorted(find_peaks(spec.x, spec.y, prominence_floor=0.02))
    assert len(peaks) >= 2, peaks
    lam_short, lam_long = peaks[0], peaks[1]
    apparent_fsr = C_NM_GHZ / lam_short - C_NM_GHZ / lam_long
    geometric = gap + 3.48 * active  # optical length between the mirrors
    ideal_fsr = C_NM_GHZ / (2.0 * geometric)
    assert apparent_fsr < ideal_fsr, (apparent_fsr, ideal_fsr)
    inferred = fsr_length_bound(lam_long, lam_short) * 1e3
    assert inferred > geometric, (inferred, geometric)
    report(11, f"apparent FSR {apparent_fsr:.0f} GHz < c/2L {ideal_fsr:.0f} GHz; "
               f"inferred length {inferred:.0f} nm > {geometric:.0f} nm",
           budget.check())


FIT_FIXED = {
    "kappa_h": 16.04, "kappa_v": 18.04,
    "delta_h": 0.0, "delta_v": REF_SPLIT,
    "gamma_1": 0.16, "gamma_2": 0.16,
    "eta_h": 0.1, "eta_v": 0.1,
}
FIT_TRUTH = {"g_h": 1.37, "g_v": 1.64, "gamma_d1": 0.05, "gamma_d2": 0.17,
             "a_h": 1.3, "a_v": 1.1, "a_0": 0.02}
FIT_START = {"g_h": 1.0, "g_v": 1.0, "gamma_d1": 0.1, "gamma_d2": 0.1}


def test_c12_round_trip_fitting():
    budget = Budget(600.0)
    space = make_space(3, 3)
    p = reference_params()
    scale = ScalingParams(FIT_TRUTH["a_h"], FIT_TRUTH["a_v"], FIT_TRUTH["a_0"])
    grid = np.linspace(-40.0, REF_SPLIT + 40.0, 321)
    clean = transmission_scan(space, p, scale, grid)

    result = fit_full_spectrum(clean, FIT_FIXED, initial=FIT_START)
    assert result.converged
    for name, truth in FIT_TRUTH.items():
        assert abs(result.values[name] / truth - 1) < 1e-3, (name, result.values[name])

    noise_scale = 0.01 * float(clean.y.max())
    covered = 0
    for seed in range(50):
        rng = np.random.default_rng(seed)
        noisy = Spectrum(grid, clean.y + noise_scale * rng.standard_normal(grid.size))
        fit = fit_full_spectrum(noisy, FIT_FIXED, initial=FIT_START)
        if abs(fit.values["g_h"] - FIT_TRUTH["g_h"]) <= 3 * fit.sigmas["g_h"]:
            covered += 1
    assert covered >= 47, covered
    report(12, f"noiseless round trip < 1e-3; g_h 3-sigma coverage {covered}/50",
           budget.check())


def test_c13_fsr_length_bound_formula():
    budget = Budget(1.0)
    assert fsr_length_bound(1000.0, 500.0) == 0.5
    rng = np.random.default_rng(13)
    for _ in range(100):
        lam_short = float(rng.uniform(500.0, 1500.0))
        lam_long = lam_short + float(rng.uniform(1.0, 400.0))
        s = float(rng.uniform(0.01, 100.0))
        base = fsr_length_bound(lam_long, lam_short)
        scaled = fsr_length_bound(s * lam_long, s * lam_short)
        assert abs(scaled / (s * base) - 1) < 1e-12
    report(13, "half-wave identity exact; formula homogeneous of degree 1",
           budget.check())
