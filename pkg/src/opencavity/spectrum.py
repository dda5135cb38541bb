"""Cross-polarized transmission observable, spectral scans, and derived metrics.

The transmission at a laser detuning dL is

    T(dL) = A_H Tr[rho_ss a^dag a] + A_V Tr[rho_ss b^dag b] + A_0

with rho_ss the steady state of the driven two-mode / two-dot system.
``transmission_point`` evaluates this through the full joint-space solver.
``transmission_scan`` exploits that the model couples each dot only to its
own mode: the generator is a sum of two commuting pieces acting on disjoint
tensor factors, so the joint steady state factorizes exactly into an (H,
dot 1) part and a (V, dot 2) part.  Scans therefore batch many small
per-sector linear solves instead of repeating the full-dimension solve; the
two routes are identical to solver precision and are cross-checked in the
test suite.

Axis conventions: frequency axes are laser detunings in GHz from the
reference frequency, wavelength axes are nm.  The vacuum speed of light is
exact, 299 792 458 m/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .hilbert import SIGMA_LOWER, SpaceSpec, fock_lowering, number_operator
from .lindblad import (
    SystemParams,
    _dot_projector_2x2,
    liouvillian,
    solve_steady_state,
)

C_M_PER_S = 299_792_458.0
# lambda [nm] * nu [GHz] = this constant
C_NM_GHZ = C_M_PER_S * 1e9 / 1e9  # 2.99792458e8

AXIS_FREQUENCY = "frequency-offset"
AXIS_WAVELENGTH = "wavelength"


@dataclass(frozen=True)
class ScalingParams:
    """Intensity scale factors relating photon numbers to detector units."""

    a_h: float = 1.0
    a_v: float = 1.0
    a_0: float = 0.0

    def __post_init__(self) -> None:
        if self.a_h < 0 or self.a_v < 0:
            raise ValueError("a_h and a_v must be >= 0")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ordered (x, y) samples with a tagged abscissa kind."""

    x: np.ndarray
    y: np.ndarray
    axis_kind: str = AXIS_FREQUENCY
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-D arrays of equal length")
        if x.size == 0:
            raise ValueError("spectrum must contain at least one point")
        if x.size > 1 and not np.all(np.diff(x) > 0):
            raise ValueError("abscissa must be strictly increasing")
        if self.axis_kind not in (AXIS_FREQUENCY, AXIS_WAVELENGTH):
            raise ValueError(f"unknown axis kind {self.axis_kind!r}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return int(self.x.size)


@dataclass(frozen=True)
class DerivedMetrics:
    """Scalar figures of merit; entries are None when inputs were not given."""

    cooperativity: float | None = None
    total_decay: float | None = None
    q_factor: float | None = None
    finesse: float | None = None
    nl_max: float | None = None
    dip_contrast: float | None = None


def symmetric_grid(center: float, half_span: float, points: int = 401) -> np.ndarray:
    """Evenly spaced grid of `points` values spanning center +- half_span."""
    if points < 2 or half_span <= 0:
        raise ValueError("need points >= 2 and half_span > 0")
    return np.linspace(center - half_span, center + half_span, points)


def wavelength_nm_to_frequency_ghz(wavelength_nm: float) -> float:
    if wavelength_nm <= 0:
        raise ValueError("wavelength must be positive")
    return C_NM_GHZ / wavelength_nm


def frequency_ghz_to_wavelength_nm(frequency_ghz: float) -> float:
    if frequency_ghz <= 0:
        raise ValueError("frequency must be positive")
    return C_NM_GHZ / frequency_ghz


# ---------------------------------------------------------------------------
# Steady-state transmission
# ---------------------------------------------------------------------------

def transmission_point(
    space: SpaceSpec,
    p: SystemParams,
    s: ScalingParams,
    laser_detuning: float,
    dot_projector: str = "excited",
) -> float:
    """Single transmission sample through the full joint-space steady state."""
    rho = solve_steady_state(space, p, laser_detuning, dot_projector)
    n_h = np.trace(rho @ number_operator(space, "H")).real
    n_v = np.trace(rho @ number_operator(space, "V")).real
    return s.a_h * n_h + s.a_v * n_v + s.a_0


def _sector_pieces(
    n_max: int,
    kappa: float,
    gamma: float,
    gamma_d: float,
    g: float,
    eta: float,
    delta_c: float,
    delta_e: float,
    dot_projector: str,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Generator pieces for one (mode, dot) sector.

    Returns (L0, shift, n_diag): the generator at zero laser detuning, the
    diagonal that multiplies -i * dL, and the photon-number diagonal.
    """
    eye2 = np.eye(2, dtype=complex)
    a = np.kron(fock_lowering(n_max + 1), eye2)
    sig = np.kron(np.eye(n_max + 1, dtype=complex), SIGMA_LOWER)
    proj = np.kron(np.eye(n_max + 1, dtype=complex), _dot_projector_2x2(dot_projector))
    num = a.conj().T @ a

    h0 = delta_c * num + delta_e * proj
    h0 += 1j * g * (a.conj().T @ sig - a @ sig.conj().T)
    h0 += eta * (a.conj().T + a)
    jumps = [
        np.sqrt(kappa) * a,
        np.sqrt(gamma) * sig,
        np.sqrt(2.0 * gamma_d) * proj,
    ]
    gen0 = liouvillian(h0, jumps)

    # H(dL) = H0 - dL * D with D diagonal, so the generator shifts by
    # +i * dL * (D_i - D_j) on coherence rows; populations are untouched.
    d_diag = np.diagonal(num + proj).real
    shift = (d_diag[:, None] - d_diag[None, :]).flatten(order="F")
    n_diag = np.diagonal(num).real
    return gen0, shift, n_diag


def mode_photon_numbers(
    p: SystemParams,
    mode: str,
    grid: np.ndarray,
    n_max: int,
    dot_projector: str = "excited",
    chunk: int = 128,
) -> np.ndarray:
    """Steady-state photon number of one mode over a grid of laser detunings.

    Solves the (mode, dot) sector steady state in batches; each grid point is
    an independent row-replaced linear solve.
    """
    if mode == "H":
        args = (p.kappa_h, p.gamma_1, p.gamma_d1, p.g_h, p.eta_h, p.delta_h, p.delta_1)
    elif mode == "V":
        args = (p.kappa_v, p.gamma_2, p.gamma_d2, p.g_v, p.eta_v, p.delta_v, p.delta_2)
    else:
        raise ValueError(f"mode must be 'H' or 'V', got {mode!r}")
    gen0, shift, n_diag = _sector_pieces(n_max, *args, dot_projector)

    m2 = gen0.shape[0]
    m = math.isqrt(m2)
    base = gen0.copy()
    base[0, :] = 0.0
    base[0, :: m + 1] = 1.0  # trace row; its own diagonal shift is zero
    rhs = np.zeros((m2, 1), dtype=complex)
    rhs[0, 0] = 1.0
    pop_idx = np.arange(m) * (m + 1)

    grid = np.asarray(grid, dtype=float)
    out = np.empty(grid.shape, dtype=float)
    diag_idx = np.arange(m2)
    for start in range(0, grid.size, chunk):
        dl = grid[start : start + chunk]
        batch = np.broadcast_to(base, (dl.size, m2, m2)).copy()
        batch[:, diag_idx, diag_idx] += 1j * dl[:, None] * shift[None, :]
        try:
            sol = np.linalg.solve(batch, np.broadcast_to(rhs, (dl.size, m2, 1)))
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"sector steady-state solve failed: {exc}") from exc
        pops = sol[:, pop_idx, 0].real
        out[start : start + dl.size] = pops @ n_diag
    if not np.all(np.isfinite(out)):
        raise NumericalError("sector steady-state solve produced non-finite values")
    return out


def mode_amplitudes(
    p: SystemParams,
    mode: str,
    grid: np.ndarray,
    n_max: int,
    dot_projector: str = "excited",
) -> np.ndarray:
    """Coherent intracavity amplitude Tr[rho a] of one mode over a grid.

    |amplitude|^2 is the coherent part of the photon number; the total
    Tr[rho a^dag a] exceeds it whenever pure dephasing feeds incoherent
    fluorescence into the mode.  This is what the weak-drive oracle
    :func:`linear_response` describes.
    """
    if mode == "H":
        args = (p.kappa_h, p.gamma_1, p.gamma_d1, p.g_h, p.eta_h, p.delta_h, p.delta_1)
    elif mode == "V":
        args = (p.kappa_v, p.gamma_2, p.gamma_d2, p.g_v, p.eta_v, p.delta_v, p.delta_2)
    else:
        raise ValueError(f"mode must be 'H' or 'V', got {mode!r}")
    gen0, shift, _ = _sector_pieces(n_max, *args, dot_projector)
    m2 = gen0.shape[0]
    m = math.isqrt(m2)
    base = gen0.copy()
    base[0, :] = 0.0
    base[0, :: m + 1] = 1.0
    rhs = np.zeros((m2, 1), dtype=complex)
    rhs[0, 0] = 1.0
    # Tr[rho a] = sum_ij rho_ij a_ji; with column stacking this is a dot
    # product against vec(a^T).
    a_sector = np.kron(fock_lowering(n_max + 1), np.eye(2, dtype=complex))
    weights = a_sector.T.flatten(order="F")

    grid = np.asarray(grid, dtype=float)
    diag_idx = np.arange(m2)
    batch = np.broadcast_to(base, (grid.size, m2, m2)).copy()
    batch[:, diag_idx, diag_idx] += 1j * grid[:, None] * shift[None, :]
    sol = np.linalg.solve(batch, np.broadcast_to(rhs, (grid.size, m2, 1)))
    return sol[:, :, 0] @ weights


def transmission_scan(
    space: SpaceSpec,
    p: SystemParams,
    s: ScalingParams,
    grid: np.ndarray,
    dot_projector: str = "excited",
) -> Spectrum:
    """Transmission spectrum over a monotonic grid of laser detunings."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-D array")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ValueError("grid must be strictly increasing")
    n_h = mode_photon_numbers(p, "H", grid, space.n_max_h, dot_projector)
    n_v = mode_photon_numbers(p, "V", grid, space.n_max_v, dot_projector)
    y = s.a_h * n_h + s.a_v * n_v + s.a_0
    return Spectrum(grid, y, AXIS_FREQUENCY, {"kind": "transmission"})


def _sector_steady_state(
    p: SystemParams,
    mode: str,
    laser_detuning: float,
    n_max: int,
    dot_projector: str = "excited",
) -> np.ndarray:
    """Steady state of a single (mode, dot) sector as a dense matrix."""
    if mode == "H":
        args = (p.kappa_h, p.gamma_1, p.gamma_d1, p.g_h, p.eta_h, p.delta_h, p.delta_1)
    else:
        args = (p.kappa_v, p.gamma_2, p.gamma_d2, p.g_v, p.eta_v, p.delta_v, p.delta_2)
    gen0, shift, _ = _sector_pieces(n_max, *args, dot_projector)
    m2 = gen0.shape[0]
    m = math.isqrt(m2)
    mat = gen0 + np.diag(1j * laser_detuning * shift)
    mat[0, :] = 0.0
    mat[0, :: m + 1] = 1.0
    rhs = np.zeros(m2, dtype=complex)
    rhs[0] = 1.0
    rho = np.linalg.solve(mat, rhs).reshape((m, m), order="F")
    return 0.5 * (rho + rho.conj().T)


def joint_from_sectors(rho_h: np.ndarray, rho_v: np.ndarray) -> np.ndarray:
    """Assemble a joint-space state from (H, dot1) and (V, dot2) sector states.

    Reorders the tensor factors from (H, dot1, V, dot2) to the fixed joint
    order (H, V, dot1, dot2).
    """
    nh2 = rho_h.shape[0] // 2
    nv2 = rho_v.shape[0] // 2
    prod = np.kron(rho_h, rho_v)
    t = prod.reshape(nh2, 2, nv2, 2, nh2, 2, nv2, 2)
    t = t.transpose(0, 2, 1, 3, 4, 6, 5, 7)
    d = nh2 * nv2 * 4
    return t.reshape(d, d)


# ---------------------------------------------------------------------------
# Weak-drive analytic response
# ---------------------------------------------------------------------------

def linear_response(p: SystemParams, laser_detuning: float, mode: str) -> complex:
    """Weak-drive intracavity amplitude of one mode / dot pair.

    <a> = eta / (i (dc - dL) + kappa/2 + g^2 / (i (de - dL) + gamma/2 + gamma_d))

    The squared magnitude is the weak-drive photon number; this is the
    independent analytic oracle for the steady-state scan.
    """
    if mode == "H":
        kappa, gamma, gamma_d = p.kappa_h, p.gamma_1, p.gamma_d1
        g, eta, delta_c, delta_e = p.g_h, p.eta_h, p.delta_h, p.delta_1
    elif mode == "V":
        kappa, gamma, gamma_d = p.kappa_v, p.gamma_2, p.gamma_d2
        g, eta, delta_c, delta_e = p.g_v, p.eta_v, p.delta_v, p.delta_2
    else:
        raise ValueError(f"mode must be 'H' or 'V', got {mode!r}")
    dot_term = g * g / (1j * (delta_e - laser_detuning) + 0.5 * gamma + gamma_d)
    return eta / (1j * (delta_c - laser_detuning) + 0.5 * kappa + dot_term)


# ---------------------------------------------------------------------------
# Scalar derived metrics
# ---------------------------------------------------------------------------

def cooperativity(g: float, kappa: float, gamma_total: float) -> float:
    """C = 4 g^2 / (kappa * Gamma)."""
    if kappa <= 0 or gamma_total <= 0:
        raise ValueError("kappa and gamma_total must be positive")
    return 4.0 * g * g / (kappa * gamma_total)


def total_decay(gamma: float, gamma_d: float) -> float:
    """Total dot linewidth Gamma = gamma + 2 gamma_d."""
    if gamma < 0 or gamma_d < 0:
        raise ValueError("rates must be >= 0")
    return gamma + 2.0 * gamma_d


def quality_factor(nu0: float, kappa: float) -> float:
    """Q = nu0 / kappa."""
    if nu0 <= 0 or kappa <= 0:
        raise ValueError("nu0 and kappa must be positive")
    return nu0 / kappa


def fsr_length_bound(lambda_q_nm: float, lambda_q1_nm: float) -> float:
    """Optical-length upper bound from two adjacent resonance wavelengths, in um.

    (nL)_max = lambda_{q+1} * lambda_q / (2 (lambda_q - lambda_{q+1})),
    with lambda_q the longer of the two wavelengths.
    """
    if lambda_q1_nm <= 0 or lambda_q_nm <= lambda_q1_nm:
        raise ValueError("need lambda_q > lambda_q1 > 0 (positive spectral range)")
    return lambda_q1_nm * lambda_q_nm / (2.0 * (lambda_q_nm - lambda_q1_nm)) / 1e3


def fsr_from_length_ghz(nl_um: float) -> float:
    """Free spectral range c / (2 nL) in GHz for an optical length in um."""
    if nl_um <= 0:
        raise ValueError("optical length must be positive")
    return C_NM_GHZ / (2.0 * nl_um * 1e3)


def finesse(fsr_ghz: float, kappa: float) -> float:
    """Finesse = FSR / linewidth."""
    if fsr_ghz <= 0 or kappa <= 0:
        raise ValueError("fsr and kappa must be positive")
    return fsr_ghz / kappa


def dip_contrast(spec: Spectrum, dip_window: tuple[float, float]) -> float:
    """Depth of the dip inside the window, relative to the fitted cavity peak.

    The baseline is the peak of a Lorentzian-plus-offset fit to all points
    outside the window; the contrast is (baseline - min inside window) /
    (baseline - offset), clamped to [0, 1].
    """
    lo, hi = dip_window
    if not lo < hi:
        raise ValueError("dip window must satisfy lo < hi")
    x, y = spec.x, spec.y
    inside = (x >= lo) & (x <= hi)
    if not inside.any():
        raise ValueError("dip window contains no spectrum points")
    if inside.all():
        raise ValueError("dip window must leave baseline points outside")

    from .fit import fit_lorentzian  # local import; fit builds on this module

    baseline_fit = fit_lorentzian(Spectrum(x[~inside], y[~inside], spec.axis_kind))
    if not baseline_fit.converged:
        raise NumericalError("baseline Lorentzian fit did not converge")
    offset = baseline_fit.values["offset"]
    baseline = offset + baseline_fit.values["amplitude"]

    span = baseline - offset
    floor = 1e-12 * max(1.0, float(np.max(np.abs(y))))
    if span <= floor:
        return 0.0
    contrast = (baseline - float(y[inside].min())) / span
    return float(min(1.0, max(0.0, contrast)))
