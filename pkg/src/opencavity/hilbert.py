"""Truncated joint Hilbert space of two bosonic modes and two two-level dots.

The subsystem order is fixed as [mode H, mode V, dot 1, dot 2].  A joint
basis state |n_h, n_v, s1, s2> maps to a flat index in row-major order over
the subsystem dimensions (n_max_h+1, n_max_v+1, 2, 2), with s = 0 the dot
ground state and s = 1 the excited state.  All operators are dense complex
numpy arrays; at the dimensions used here (d <= a few hundred) sparse
bookkeeping costs more than it saves.

Everything in this module is an immutable value after construction and safe
to share across concurrent workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Subsystem slots, in the fixed embedding order.
SLOT_MODE_H = 0
SLOT_MODE_V = 1
SLOT_DOT_1 = 2
SLOT_DOT_2 = 3


@dataclass(frozen=True)
class SpaceSpec:
    """Fock cutoffs for the two cavity modes; dots are always two-level."""

    n_max_h: int
    n_max_v: int

    def __post_init__(self) -> None:
        for name in ("n_max_h", "n_max_v"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 1:
                raise ValueError(f"{name} must be an integer >= 1, got {n!r}")

    @property
    def dims(self) -> tuple[int, int, int, int]:
        return (self.n_max_h + 1, self.n_max_v + 1, 2, 2)

    @property
    def dim(self) -> int:
        return math.prod(self.dims)


def make_space(n_max_h: int, n_max_v: int) -> SpaceSpec:
    """Build the joint space with the given per-mode Fock cutoffs."""
    return SpaceSpec(n_max_h, n_max_v)


def fock_lowering(n_levels: int) -> np.ndarray:
    """Truncated single-mode lowering operator, <n-1|a|n> = sqrt(n)."""
    return np.diag(np.sqrt(np.arange(1, n_levels, dtype=float)), k=1).astype(complex)


# Two-level lowering operator |g><e| in the (g, e) basis.
SIGMA_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)


def embed(space: SpaceSpec, op: np.ndarray, slot: int) -> np.ndarray:
    """Kronecker-embed a single-subsystem operator into the joint space.

    Identities fill all other slots; the fixed subsystem order is respected.
    """
    dims = space.dims
    if not 0 <= slot < len(dims):
        raise ValueError(f"slot must be in 0..{len(dims) - 1}, got {slot}")
    op = np.asarray(op, dtype=complex)
    if op.shape != (dims[slot], dims[slot]):
        raise ValueError(
            f"operator shape {op.shape} does not match subsystem dimension "
            f"{dims[slot]} at slot {slot}"
        )
    out = np.eye(1, dtype=complex)
    for k, dk in enumerate(dims):
        out = np.kron(out, op if k == slot else np.eye(dk, dtype=complex))
    return out


def annihilation(space: SpaceSpec, mode: str) -> np.ndarray:
    """Joint-space lowering operator of cavity mode "H" or "V"."""
    if mode == "H":
        return embed(space, fock_lowering(space.n_max_h + 1), SLOT_MODE_H)
    if mode == "V":
        return embed(space, fock_lowering(space.n_max_v + 1), SLOT_MODE_V)
    raise ValueError(f"mode must be 'H' or 'V', got {mode!r}")


def lowering(space: SpaceSpec, dot: int) -> np.ndarray:
    """Joint-space lowering operator |g><e| of dot 1 or 2."""
    if dot == 1:
        return embed(space, SIGMA_LOWER, SLOT_DOT_1)
    if dot == 2:
        return embed(space, SIGMA_LOWER, SLOT_DOT_2)
    raise ValueError(f"dot must be 1 or 2, got {dot!r}")


def number_operator(space: SpaceSpec, mode: str) -> np.ndarray:
    """Joint-space photon number operator of the chosen mode."""
    a = annihilation(space, mode)
    return a.conj().T @ a


def basis_index(space: SpaceSpec, n_h: int, n_v: int, s1: int, s2: int) -> int:
    """Flat index of the joint basis state |n_h, n_v, s1, s2>."""
    dims = space.dims
    labels = (n_h, n_v, s1, s2)
    idx = 0
    for lab, dk in zip(labels, dims):
        if not 0 <= lab < dk:
            raise ValueError(f"basis label {labels} outside subsystem dims {dims}")
        idx = idx * dk + lab
    return idx


def ground_state_density(space: SpaceSpec) -> np.ndarray:
    """|vac, g, g><vac, g, g| on the joint space."""
    rho = np.zeros((space.dim, space.dim), dtype=complex)
    rho[0, 0] = 1.0
    return rho


def check_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-10,
    trace_tol: float = 1e-9,
    eig_floor: float = -1e-9,
) -> None:
    """Raise if rho violates the density-matrix invariants.

    Hermitian to herm_tol (elementwise max), unit trace to trace_tol,
    eigenvalues above eig_floor.
    """
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"not Hermitian: max |rho - rho^dag| = {herm:.3e}")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr} differs from 1 beyond {trace_tol}")
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if eigs.min() < eig_floor:
        raise ValueError(f"negative eigenvalue {eigs.min():.3e} below {eig_floor}")
