"""Transfer-matrix optics for planar multilayer stacks at normal incidence.

Uses the characteristic-matrix formulation: each layer contributes

    M = [[cos(delta), -i sin(delta) / n],
         [-i n sin(delta), cos(delta)]],    delta = 2 pi n d / lambda,

and the stack response follows from [B, C]^T = (M_1 ... M_N) [1, n_sub]^T
with r = (n_amb B - C) / (n_amb B + C) and t = 2 n_amb / (n_amb B + C).
Waves run as exp(+i k z - i w t), so absorbing media carry Im(n) >= 0.
Fields are scalar (polarization plays no role in 1-D) and incidence is
strictly normal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import StopbandNotFoundError
from .spectrum import AXIS_WAVELENGTH, Spectrum

# Default dispersionless indices near 970 nm; every value can be overridden.
N_AIR = 1.0
N_GAAS = 3.48
N_ALAS = 2.94
N_SIO2 = 1.45
N_SIN = 2.00
N_SILICA = 1.45


@dataclass(frozen=True)
class Layer:
    """One homogeneous layer: complex index and physical thickness in nm."""

    n: complex
    thickness: float

    def __post_init__(self) -> None:
        n = complex(self.n)
        if not (np.isfinite(n.real) and np.isfinite(n.imag)) or n.real <= 0:
            raise ValueError(f"refractive index must have Re(n) > 0, got {n}")
        if n.imag < 0:
            raise ValueError(f"absorbing media need Im(n) >= 0, got {n}")
        if not np.isfinite(self.thickness) or self.thickness <= 0:
            raise ValueError(f"thickness must be finite and > 0, got {self.thickness}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "thickness", float(self.thickness))


@dataclass(frozen=True)
class LayerStack:
    """Ordered layers between an ambient and a substrate half-space.

    Light enters from the ambient; ``layers[0]`` is hit first.  An empty
    layer list describes a bare interface.
    """

    ambient_n: complex = 1.0
    layers: tuple[Layer, ...] = field(default_factory=tuple)
    substrate_n: complex = 1.0

    def __post_init__(self) -> None:
        amb = complex(self.ambient_n)
        sub = complex(self.substrate_n)
        if amb.real <= 0 or abs(amb.imag) > 0:
            raise ValueError(f"ambient index must be real and positive, got {amb}")
        if sub.real <= 0 or sub.imag < 0:
            raise ValueError(f"substrate index must have Re > 0, Im >= 0, got {sub}")
        object.__setattr__(self, "ambient_n", amb)
        object.__setattr__(self, "substrate_n", sub)
        object.__setattr__(self, "layers", tuple(self.layers))

    def reversed(self) -> "LayerStack":
        """Stack seen from the other side (ambient and substrate swapped)."""
        return LayerStack(self.substrate_n, tuple(reversed(self.layers)), self.ambient_n)

    @property
    def total_thickness(self) -> float:
        return sum(layer.thickness for layer in self.layers)


def _rt_grid(stack: LayerStack, wavelengths: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Amplitude coefficients (r, t) over a wavelength array."""
    wl = np.asarray(wavelengths, dtype=float)
    if np.any(wl <= 0):
        raise ValueError("wavelengths must be positive")
    b = np.ones(wl.shape, dtype=complex)
    c = np.full(wl.shape, stack.substrate_n, dtype=complex)
    # Apply layer matrices from the substrate side: [B, C] = M_1 ... M_N [1, n_sub].
    for layer in reversed(stack.layers):
        delta = 2.0 * np.pi * layer.n * layer.thickness / wl
        cos_d = np.cos(delta)
        sin_d = np.sin(delta)
        b, c = (
            cos_d * b - 1j * sin_d / layer.n * c,
            -1j * layer.n * sin_d * b + cos_d * c,
        )
    n_amb = stack.ambient_n
    denom = n_amb * b + c
    r = (n_amb * b - c) / denom
    t = 2.0 * n_amb / denom
    return r, t


def stack_rt(stack: LayerStack, wavelength: float) -> tuple[complex, complex, float, float]:
    """Reflection/transmission of the stack at one wavelength.

    Returns (r, t, R, T) with R = |r|^2 and T = Re(n_sub)/Re(n_amb) |t|^2.
    For lossless stacks R + T = 1 to roundoff.
    """
    r, t = _rt_grid(stack, np.array([wavelength]))
    r_amp = complex(r[0])
    t_amp = complex(t[0])
    big_r = abs(r_amp) ** 2
    big_t = (stack.substrate_n.real / stack.ambient_n.real) * abs(t_amp) ** 2
    return r_amp, t_amp, big_r, big_t


def characteristic_matrix(layer: Layer, wavelength: float) -> np.ndarray:
    """2x2 characteristic matrix of a single layer (unit determinant)."""
    delta = 2.0 * np.pi * layer.n * layer.thickness / wavelength
    return np.array(
        [
            [np.cos(delta), -1j * np.sin(delta) / layer.n],
            [-1j * layer.n * np.sin(delta), np.cos(delta)],
        ],
        dtype=complex,
    )


def quarter_wave_dbr(
    n_h: float,
    n_l: float,
    lambda0: float,
    pairs: float,
    ambient_n: complex = N_AIR,
    substrate_n: complex = N_SILICA,
) -> LayerStack:
    """Quarter-wave Bragg mirror with an integer or half-integer pair count.

    Layers alternate starting from the high index; a ``.5`` pair count
    appends one extra high-index layer so the stack ends high-index on both
    sides.  Optical thickness of every layer is lambda0/4.
    """
    if n_h <= 0 or n_l <= 0 or lambda0 <= 0:
        raise ValueError("indices and design wavelength must be positive")
    doubled = round(2.0 * pairs)
    if abs(2.0 * pairs - doubled) > 1e-9 or doubled < 2:
        raise ValueError(f"pairs must be k or k + 0.5 with k >= 1, got {pairs}")
    layers = []
    for i in range(doubled):
        n = n_h if i % 2 == 0 else n_l
        layers.append(Layer(n, lambda0 / (4.0 * n)))
    return LayerStack(ambient_n, tuple(layers), substrate_n)


def transmission_spectrum(stack: LayerStack, grid: np.ndarray) -> Spectrum:
    """Power transmission sampled over a monotonic wavelength grid (nm)."""
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a nonempty 1-D array")
    _, t = _rt_grid(stack, grid)
    big_t = (stack.substrate_n.real / stack.ambient_n.real) * np.abs(t) ** 2
    return Spectrum(grid, big_t, AXIS_WAVELENGTH, {"kind": "transmission"})


def reflection_spectrum(stack: LayerStack, grid: np.ndarray) -> Spectrum:
    """Power reflection sampled over a monotonic wavelength grid (nm)."""
    grid = np.asarray(grid, dtype=float)
    r, _ = _rt_grid(stack, grid)
    return Spectrum(grid, np.abs(r) ** 2, AXIS_WAVELENGTH, {"kind": "reflection"})


def stopband(spec: Spectrum, threshold: float) -> tuple[float, float]:
    """Center and width of the contiguous region with transmission below threshold.

    Crossings are located by linear interpolation; if several regions dip
    below threshold, the one containing the global minimum is used.
    """
    x, y = spec.x, spec.y
    below = y < threshold
    if not below.any():
        raise StopbandNotFoundError(f"no region below threshold {threshold}")
    i_min = int(np.argmin(y))
    if not below[i_min]:  # global min above threshold cannot happen, but guard
        i_min = int(np.flatnonzero(below)[0])
    lo = i_min
    while lo > 0 and below[lo - 1]:
        lo -= 1
    hi = i_min
    while hi < y.size - 1 and below[hi + 1]:
        hi += 1
    if lo > 0:
        frac = (threshold - y[lo - 1]) / (y[lo] - y[lo - 1])
        left = x[lo - 1] + frac * (x[lo] - x[lo - 1])
    else:
        left = x[0]
    if hi < y.size - 1:
        frac = (threshold - y[hi]) / (y[hi + 1] - y[hi])
        right = x[hi] + frac * (x[hi + 1] - x[hi])
    else:
        right = x[-1]
    return 0.5 * (left + right), right - left


def cavity_stack(
    top: LayerStack,
    air_gap: float,
    active_thickness: float,
    active_n: complex,
    bottom: LayerStack,
) -> LayerStack:
    """Top mirror, air gap, active layer, bottom mirror, in traversal order."""
    if air_gap <= 0 or active_thickness <= 0:
        raise ValueError("air gap and active thickness must be positive")
    layers = top.layers + (Layer(N_AIR, air_gap), Layer(active_n, active_thickness))
    layers += bottom.layers
    return LayerStack(top.ambient_n, layers, bottom.substrate_n)


def default_cavity_stack(air_gap: float, active_thickness: float = 400.0) -> LayerStack:
    """Reference geometry: silica-backed SiN/SiO2 top mirror, air gap, GaAs
    active layer, GaAs/AlAs bottom mirror on a GaAs substrate, stopbands
    centered at 970 nm."""
    top = quarter_wave_dbr(N_SIN, N_SIO2, 970.0, 12.5, ambient_n=N_SILICA,
                           substrate_n=N_AIR)
    bottom = quarter_wave_dbr(N_GAAS, N_ALAS, 970.0, 29.5, ambient_n=N_AIR,
                              substrate_n=N_GAAS)
    return cavity_stack(top, air_gap, active_thickness, N_GAAS, bottom)


def find_peaks(
    x: np.ndarray, y: np.ndarray, prominence_floor: float = 0.05
) -> list[float]:
    """Local maxima above ``prominence_floor * max(y)``, parabolically refined."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    floor = prominence_floor * float(y.max(initial=0.0))
    peaks = []
    for i in range(1, y.size - 1):
        if y[i] > y[i - 1] and y[i] > y[i + 1] and y[i] >= floor:
            coeffs = np.polyfit(x[i - 1 : i + 2], y[i - 1 : i + 2], 2)
            if coeffs[0] < 0:
                peaks.append(float(-0.5 * coeffs[1] / coeffs[0]))
            else:
                peaks.append(float(x[i]))
    return peaks


def resonance_map(
    template,
    gap_grid: np.ndarray,
    lambda_grid: np.ndarray,
    prominence_floor: float = 0.05,
) -> list[tuple[float, list[float]]]:
    """Transmission resonances versus air-gap length.

    ``template`` maps a gap length (nm) to a LayerStack.  For each gap the
    local maxima of T(lambda) above the prominence floor are returned,
    refined by a three-point parabola; empty lists are allowed.
    """
    gap_grid = np.asarray(gap_grid, dtype=float)
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    out = []
    for gap in gap_grid:
        spec = transmission_spectrum(template(gap), lambda_grid)
        out.append((float(gap), find_peaks(spec.x, spec.y, prominence_floor)))
    return out


@dataclass(frozen=True, eq=False)
class FieldProfile:
    """|E(z)|^2 samples along the stack, z in nm from the ambient interface."""

    z: np.ndarray
    intensity: np.ndarray

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=float)
        inten = np.asarray(self.intensity, dtype=float)
        if z.ndim != 1 or z.shape != inten.shape:
            raise ValueError("z and intensity must be 1-D arrays of equal length")
        if z.size > 1 and not np.all(np.diff(z) > 0):
            raise ValueError("z must be strictly increasing")
        if np.any(inten < 0):
            raise ValueError("intensity must be >= 0")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "intensity", inten)


def layer_amplitudes(stack: LayerStack, wavelength: float) -> list[tuple[complex, complex]]:
    """Forward/backward field amplitudes at the left edge of every layer.

    Normalized to a unit incident wave; the first entry is the ambient
    half-space (E+ = 1, E- = r) and the last is the substrate (E+ = t, E- = 0).
    """
    if wavelength <= 0:
        raise ValueError("wavelength must be positive")
    indices = [stack.ambient_n] + [l.n for l in stack.layers] + [stack.substrate_n]
    # Walk from the substrate: unit transmitted wave, then interface matching
    # (continuity of E and n E) and intra-layer propagation.
    e_plus, e_minus = 1.0 + 0.0j, 0.0 + 0.0j
    amps = [(e_plus, e_minus)]
    for k in range(len(stack.layers), -1, -1):
        n_left, n_right = indices[k], indices[k + 1]
        ratio = n_right / n_left
        ep = 0.5 * (1 + ratio) * e_plus + 0.5 * (1 - ratio) * e_minus
        em = 0.5 * (1 - ratio) * e_plus + 0.5 * (1 + ratio) * e_minus
        if k > 0:
            delta = 2.0 * np.pi * indices[k] * stack.layers[k - 1].thickness / wavelength
            ep, em = ep * np.exp(-1j * delta), em * np.exp(1j * delta)
        e_plus, e_minus = ep, em
        amps.append((e_plus, e_minus))
    amps.reverse()
    incident = amps[0][0]
    return [(ep / incident, em / incident) for ep, em in amps]


def field_profile(stack: LayerStack, wavelength: float, samples_per_layer: int) -> FieldProfile:
    """Standing-wave intensity |E(z)|^2 through the stack at one wavelength."""
    if samples_per_layer < 2:
        raise ValueError("samples_per_layer must be >= 2")
    amps = layer_amplitudes(stack, wavelength)
    zs: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    z0 = 0.0
    for j, layer in enumerate(stack.layers):
        ep, em = amps[j + 1]
        local = np.linspace(0.0, layer.thickness, samples_per_layer)
        if j > 0:
            local = local[1:]  # boundary point already emitted by previous layer
        k = 2.0 * np.pi * layer.n / wavelength
        e_field = ep * np.exp(1j * k * local) + em * np.exp(-1j * k * local)
        zs.append(z0 + local)
        vals.append(np.abs(e_field) ** 2)
        z0 += layer.thickness
    if not zs:
        raise ValueError("field profile needs at least one layer")
    return FieldProfile(np.concatenate(zs), np.concatenate(vals))
