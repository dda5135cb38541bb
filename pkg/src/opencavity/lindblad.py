"""Rotating-frame Hamiltonian, Lindblad generator, and steady-state solvers.

Unit convention: every frequency and rate is a linear-frequency value in GHz
(an omega/2pi figure); no 2pi factors are introduced anywhere.  The steady
state is invariant under a uniform rescaling of all rates, couplings, drives
and detunings, so this choice has no observable consequence.  Only detunings
from ``omega_ref`` enter the Hamiltonian; absolute frequencies are
bookkeeping.

Vectorization is column-stacking throughout: ``vec(A @ X @ B) =
kron(B.T, A) @ vec(X)`` with ``vec(X) = X.flatten(order="F")``.

The dot energy term and the dephasing jump can be written with either dot
population projector.  ``dot_projector="excited"`` (default) uses the
excited-state projector sigma^dag sigma; ``"ground"`` uses the
lowering-then-raising ordering sigma sigma^dag.  The two choices differ by a
multiple of the identity in the Hamiltonian and generate the identical
dephasing channel, so all observables agree; both are exposed rather than
silently assuming one.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sps

from .errors import DegenerateSteadyStateError, IntegrationStepError
from .hilbert import (
    SLOT_DOT_1,
    SLOT_DOT_2,
    SIGMA_LOWER,
    SpaceSpec,
    annihilation,
    check_density_matrix,
    embed,
)

DOT_PROJECTORS = ("excited", "ground")

# Condition-number threshold below which the row-replaced system is treated
# as numerically singular and the least-squares fallback engages.
_RCOND_FLOOR = 1e-14


@dataclass(frozen=True)
class SystemParams:
    """Physical rates and detunings of the two-mode / two-dot model.

    All values in GHz.  ``delta_*`` are detunings from ``omega_ref``;
    ``omega_ref`` itself is reporting-only (0 means "not reported").
    Decay rates and drive amplitudes must be nonnegative; couplings and
    drives are real.
    """

    kappa_h: float = 0.0
    kappa_v: float = 0.0
    delta_h: float = 0.0
    delta_v: float = 0.0
    delta_1: float = 0.0
    delta_2: float = 0.0
    g_h: float = 0.0
    g_v: float = 0.0
    gamma_1: float = 0.0
    gamma_2: float = 0.0
    gamma_d1: float = 0.0
    gamma_d2: float = 0.0
    eta_h: float = 0.0
    eta_v: float = 0.0
    omega_ref: float = 0.0

    def __post_init__(self) -> None:
        for name in ("kappa_h", "kappa_v", "gamma_1", "gamma_2",
                     "gamma_d1", "gamma_d2", "eta_h", "eta_v"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        for name in ("delta_h", "delta_v", "delta_1", "delta_2",
                     "g_h", "g_v", "omega_ref"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if self.omega_ref < 0.0:
            raise ValueError("omega_ref must be positive when reported")


def _dot_projector_2x2(dot_projector: str) -> np.ndarray:
    if dot_projector == "excited":
        return SIGMA_LOWER.conj().T @ SIGMA_LOWER
    if dot_projector == "ground":
        return SIGMA_LOWER @ SIGMA_LOWER.conj().T
    raise ValueError(f"dot_projector must be one of {DOT_PROJECTORS}, got {dot_projector!r}")


def build_hamiltonian(
    space: SpaceSpec,
    p: SystemParams,
    laser_detuning: float,
    dot_projector: str = "excited",
) -> np.ndarray:
    """Rotating-frame Hamiltonian at laser detuning omega_L - omega_ref.

    H = (dh - dL) a^dag a + (dv - dL) b^dag b + (d1 - dL) P1 + (d2 - dL) P2
        + i g_h (a^dag s1 - a s1^dag) + i g_v (b^dag s2 - b s2^dag)
        + eta_h (a^dag + a) + eta_v (b^dag + b)

    with P the chosen dot population projector.
    """
    a = annihilation(space, "H")
    b = annihilation(space, "V")
    s1 = embed(space, SIGMA_LOWER, SLOT_DOT_1)
    s2 = embed(space, SIGMA_LOWER, SLOT_DOT_2)
    proj = _dot_projector_2x2(dot_projector)
    p1 = embed(space, proj, SLOT_DOT_1)
    p2 = embed(space, proj, SLOT_DOT_2)

    h = (p.delta_h - laser_detuning) * (a.conj().T @ a)
    h += (p.delta_v - laser_detuning) * (b.conj().T @ b)
    h += (p.delta_1 - laser_detuning) * p1
    h += (p.delta_2 - laser_detuning) * p2
    h += 1j * p.g_h * (a.conj().T @ s1 - a @ s1.conj().T)
    h += 1j * p.g_v * (b.conj().T @ s2 - b @ s2.conj().T)
    h += p.eta_h * (a.conj().T + a)
    h += p.eta_v * (b.conj().T + b)
    return h


def jump_operators(
    space: SpaceSpec,
    p: SystemParams,
    dot_projector: str = "excited",
) -> list[np.ndarray]:
    """The six loss channels, in fixed order.

    [sqrt(kappa_h) a, sqrt(kappa_v) b, sqrt(gamma_1) s1, sqrt(gamma_2) s2,
     sqrt(2 gamma_d1) P1, sqrt(2 gamma_d2) P2]

    The dephasing amplitude carries sqrt(2 gamma_d) so that gamma_d adds
    exactly gamma_d to the dot coherence decay rate, making the total
    linewidth gamma + 2 gamma_d and the cooperativity 4 g^2 / (kappa Gamma)
    consistent with each other.  P is the chosen dot population projector;
    both projector choices generate the same dephasing channel.
    """
    a = annihilation(space, "H")
    b = annihilation(space, "V")
    s1 = embed(space, SIGMA_LOWER, SLOT_DOT_1)
    s2 = embed(space, SIGMA_LOWER, SLOT_DOT_2)
    proj = _dot_projector_2x2(dot_projector)
    p1 = embed(space, proj, SLOT_DOT_1)
    p2 = embed(space, proj, SLOT_DOT_2)
    return [
        np.sqrt(p.kappa_h) * a,
        np.sqrt(p.kappa_v) * b,
        np.sqrt(p.gamma_1) * s1,
        np.sqrt(p.gamma_2) * s2,
        np.sqrt(2.0 * p.gamma_d1) * p1,
        np.sqrt(2.0 * p.gamma_d2) * p2,
    ]


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stack a matrix."""
    return np.asarray(rho, dtype=complex).flatten(order="F")


def unvectorize(vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    vec = np.asarray(vec)
    d = math.isqrt(vec.size)
    if d * d != vec.size:
        raise ValueError(f"vector length {vec.size} is not a perfect square")
    return vec.reshape((d, d), order="F")


def _generator_csr(h: np.ndarray, jumps: list[np.ndarray]) -> sps.csr_matrix:
    """Sparse column-stacked generator; the Kronecker factors are sparse, so
    assembling in CSR is far cheaper than dense kron products."""
    h = np.asarray(h, dtype=complex)
    d = h.shape[0]
    if h.ndim != 2 or h.shape != (d, d):
        raise ValueError(f"Hamiltonian must be square, got {h.shape}")
    eye = sps.identity(d, format="csr", dtype=complex)
    hs = sps.csr_matrix(h)
    gen = -1j * (sps.kron(eye, hs, format="csr") - sps.kron(hs.T, eye, format="csr"))
    for jump in jumps:
        jump = np.asarray(jump, dtype=complex)
        if jump.shape != (d, d):
            raise ValueError(f"jump shape {jump.shape} does not match dimension {d}")
        js = sps.csr_matrix(jump)
        jdj = (js.conj().T @ js).tocsr()
        gen = gen + sps.kron(js.conj(), js, format="csr")
        gen = gen - 0.5 * sps.kron(eye, jdj, format="csr")
        gen = gen - 0.5 * sps.kron(jdj.T, eye, format="csr")
    return gen.tocsr()


def _liouvillian_dense(h: np.ndarray, jumps: list[np.ndarray]) -> np.ndarray:
    """Dense assembly; cheaper than sparse bookkeeping for small dimensions."""
    h = np.asarray(h, dtype=complex)
    d = h.shape[0]
    if h.ndim != 2 or h.shape != (d, d):
        raise ValueError(f"Hamiltonian must be square, got {h.shape}")
    eye = np.eye(d, dtype=complex)
    sup = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for jump in jumps:
        jump = np.asarray(jump, dtype=complex)
        if jump.shape != (d, d):
            raise ValueError(f"jump shape {jump.shape} does not match dimension {d}")
        jdj = jump.conj().T @ jump
        sup += np.kron(jump.conj(), jump)
        sup -= 0.5 * np.kron(eye, jdj)
        sup -= 0.5 * np.kron(jdj.T, eye)
    return sup


def liouvillian(h: np.ndarray, jumps: list[np.ndarray]) -> np.ndarray:
    """Column-stacked superoperator of the master equation, as a dense array.

    Acting on vec(rho) it yields vec(-i[H, rho] + sum_i D[L_i] rho) with
    D[L] rho = L rho L^dag - (1/2){L^dag L, rho}.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape[0] <= 32:
        return _liouvillian_dense(h, jumps)
    return _generator_csr(h, jumps).toarray()


def apply_dissipator(h: np.ndarray, jumps: list[np.ndarray], rho: np.ndarray) -> np.ndarray:
    """Right-hand side -i[H, rho] + sum_i D[L_i] rho, computed elementwise."""
    out = -1j * (h @ rho - rho @ h)
    for jump in jumps:
        jdj = jump.conj().T @ jump
        out += jump @ rho @ jump.conj().T - 0.5 * (jdj @ rho + rho @ jdj)
    return out


def _trace_row(d: int) -> np.ndarray:
    """Covector extracting Tr(unvec(x)) under column stacking."""
    row = np.zeros(d * d, dtype=complex)
    row[:: d + 1] = 1.0
    return row


def steady_state(sup: np.ndarray) -> np.ndarray:
    """Steady-state density matrix: the unit-trace null vector of the generator.

    Replaces the first row of the superoperator with the trace constraint and
    solves the square system by dense LU.  If the modified system is
    numerically singular (1-norm condition estimate above 1/_RCOND_FLOOR), a
    least-squares solve with an explicit trace row is used instead; an
    ambiguous null space or a large fallback residual raises
    DegenerateSteadyStateError.
    """
    sup = np.asarray(sup, dtype=complex)
    d2 = sup.shape[0]
    d = math.isqrt(d2)
    if sup.shape != (d2, d2) or d * d != d2:
        raise ValueError(f"superoperator shape {sup.shape} is not (d^2, d^2)")

    trace_row = _trace_row(d)
    modified = sup.copy()
    modified[0, :] = trace_row
    rhs = np.zeros(d2, dtype=complex)
    rhs[0] = 1.0

    rho = None
    try:
        with warnings.catch_warnings():
            # exact singularity is handled by the rcond check and fallback
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(modified, check_finite=False)
        anorm = np.linalg.norm(modified, 1)
        rcond, info = scipy.linalg.lapack.zgecon(lu, anorm, norm="1")
        if info == 0 and rcond > _RCOND_FLOOR:
            rho = unvectorize(scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False))
    except scipy.linalg.LinAlgError:
        rho = None

    if rho is None or not np.all(np.isfinite(rho)):
        rho = _steady_state_fallback(sup, trace_row)

    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if not np.isfinite(tr) or abs(tr) < 1e-12:
        raise DegenerateSteadyStateError("steady-state solve produced a traceless result")
    rho = rho / tr

    scale = np.linalg.norm(sup) * np.linalg.norm(rho) + 1e-300
    residual = np.linalg.norm(sup @ vectorize(rho)) / scale
    if residual > 1e-9:
        rho = _steady_state_fallback(sup, trace_row)
        rho = 0.5 * (rho + rho.conj().T)
        rho = rho / np.trace(rho).real
        residual = np.linalg.norm(sup @ vectorize(rho)) / scale
        if residual > 1e-9:
            raise DegenerateSteadyStateError(
                f"steady-state residual {residual:.3e} exceeds 1e-9"
            )
    check_density_matrix(rho)
    return rho


def _steady_state_fallback(sup: np.ndarray, trace_row: np.ndarray) -> np.ndarray:
    """Least-squares solve of the stacked [generator; trace] system."""
    d2 = sup.shape[0]
    stacked = np.vstack([sup, trace_row[None, :]])
    rhs = np.zeros(d2 + 1, dtype=complex)
    rhs[-1] = 1.0
    x, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)

    generator_residual = np.linalg.norm(sup @ x) / (np.linalg.norm(sup) + 1e-300)
    if generator_residual > 1e-6:
        raise DegenerateSteadyStateError(
            f"fallback residual {generator_residual:.3e} exceeds 1e-6"
        )
    # Null-space multiplicity means the trace constraint no longer pins a
    # unique state.
    svals = np.linalg.svd(sup, compute_uv=False)
    null_tol = max(svals) * d2 * np.finfo(float).eps if svals.size else 0.0
    if np.count_nonzero(svals <= max(null_tol, 1e-12 * max(svals, default=1.0))) > 1:
        raise DegenerateSteadyStateError("generator null space is degenerate")
    return unvectorize(x)


def solve_steady_state(
    space: SpaceSpec,
    p: SystemParams,
    laser_detuning: float,
    dot_projector: str = "excited",
) -> np.ndarray:
    """Convenience wrapper: build the generator and solve for its steady state."""
    h = build_hamiltonian(space, p, laser_detuning, dot_projector)
    jumps = jump_operators(space, p, dot_projector)
    return steady_state(liouvillian(h, jumps))


def _spectral_norm_hermitian(m: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvalsh(m)))) if m.size else 0.0


def evolve(
    h: np.ndarray,
    jumps: list[np.ndarray],
    rho0: np.ndarray,
    t_final: float,
    dt: float,
) -> np.ndarray:
    """Fixed-step classical RK4 integration of the master equation.

    The step must satisfy dt * max_rate < 0.1, where max_rate is the spectral
    norm of the strongest decay channel L^dag L; a separate stability guard
    requires dt * ||H|| < 1 so every generator eigenvalue stays well inside
    the RK4 stability region.  Trace is preserved to roundoff because the
    right-hand side is traceless; drift beyond 1e-4 aborts the run.  rho0
    must be Hermitian; the generator maps Hermitian to Hermitian, so the
    output is Hermitian to roundoff.
    """
    h = np.asarray(h, dtype=complex)
    rho = np.asarray(rho0, dtype=complex).copy()
    if dt <= 0 or t_final < 0:
        raise ValueError("t_final must be >= 0 and dt > 0")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise ValueError("rho0 must be Hermitian")

    jumps = [np.asarray(j, dtype=complex) for j in jumps]
    jdj_sum = np.zeros_like(h)
    max_rate = 0.0
    for jump in jumps:
        jdj = jump.conj().T @ jump
        jdj_sum += jdj
        max_rate = max(max_rate, _spectral_norm_hermitian(jdj))
    if dt * max_rate >= 0.1:
        raise IntegrationStepError(
            f"dt * max_rate = {dt * max_rate:.3g} >= 0.1; reduce the step"
        )
    h_norm = _spectral_norm_hermitian(h)
    if dt * h_norm >= 1.0:
        raise IntegrationStepError(
            f"dt * ||H|| = {dt * h_norm:.3g} >= 1; RK4 would be unstable"
        )

    # RK4 in vectorized form; the sparse generator makes each stage a cheap
    # matvec.  The right-hand side is traceless, so trace is conserved to
    # roundoff at any stable step.
    gen = _generator_csr(h, jumps)
    d = h.shape[0]
    vec = rho.flatten(order="F")
    trace0 = float(np.trace(rho).real)
    trace_idx = slice(0, d * d, d + 1)

    n_steps = int(math.ceil(t_final / dt - 1e-12))
    t = 0.0
    for step in range(n_steps):
        step_dt = min(dt, t_final - t)
        k1 = gen @ vec
        k2 = gen @ (vec + 0.5 * step_dt * k1)
        k3 = gen @ (vec + 0.5 * step_dt * k2)
        k4 = gen @ (vec + step_dt * k3)
        vec += (step_dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += step_dt
        if step % 128 == 0 or step == n_steps - 1:
            drift = abs(float(np.sum(vec[trace_idx]).real) - trace0)
            if not np.isfinite(drift) or drift > 1e-4:
                raise IntegrationStepError(
                    f"trace drift {drift:.3e} at t = {t:.4g}; step too large"
                )
    return vec.reshape((d, d), order="F")


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the trace norm of rho - sigma."""
    diff = np.asarray(rho) - np.asarray(sigma)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))
