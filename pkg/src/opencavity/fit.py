"""Damped Gauss-Newton least squares and the spectrum fitting protocols.

The optimizer is a plain Levenberg-Marquardt loop with fixed, reproducible
settings: central finite-difference Jacobians (relative step 1e-6, absolute
floor 1e-9, one-sided at an active bound), multiplicative damping of the
normal equations, convergence when the relative cost decrease drops below
1e-10 or the step norm below 1e-10 (relative to the parameter scale), and a
hard cap of 500 iterations.  Parameter uncertainties are
sigma_i = sqrt(chi2_red * [(J^T J)^-1]_ii); weights are uniform.

Registered models: "lorentzian", "lorentzian-doublet",
"single-mode-spectrum" (one cavity mode coupled to one dot) and
"full-spectrum" (both modes, both dots).  The spectrum models evaluate the
exact steady-state photon numbers from :mod:`opencavity.spectrum`, not a
linearized response.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .lindblad import SystemParams
from .spectrum import Spectrum, mode_photon_numbers

MAX_ITERATIONS = 500
COST_TOL = 1e-10
STEP_TOL = 1e-10
FD_RELATIVE_STEP = 1e-6
FD_ABSOLUTE_FLOOR = 1e-9


@dataclass(frozen=True)
class FreeParam:
    """One fitted parameter: name, starting value, optional [lo, hi] bounds."""

    name: str
    start: float
    bounds: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self) -> None:
        lo, hi = self.bounds
        if not lo < hi:
            raise ValueError(f"bounds for {self.name} must satisfy lo < hi, got {self.bounds}")
        if not lo <= self.start <= hi:
            raise ValueError(
                f"start {self.start} for {self.name} outside bounds {self.bounds}"
            )


@dataclass(frozen=True, eq=False)
class FitProblem:
    model: str
    free: tuple[FreeParam, ...]
    fixed: dict[str, float]
    data: Spectrum
    context: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; registered: {sorted(MODELS)}")
        object.__setattr__(self, "free", tuple(self.free))
        names = [f.name for f in self.free]
        if len(set(names)) != len(names):
            raise ValueError("duplicate free parameter names")
        overlap = set(names) & set(self.fixed)
        if overlap:
            raise ValueError(f"parameters both free and fixed: {sorted(overlap)}")
        expected = set(MODELS[self.model].params)
        got = set(names) | set(self.fixed)
        if got != expected:
            missing = expected - got
            extra = got - expected
            raise ValueError(
                f"free+fixed must cover the model parameters exactly; "
                f"missing {sorted(missing)}, extraneous {sorted(extra)}"
            )
        if len(self.data) == 0:
            raise ValueError("fit data is empty")


@dataclass(frozen=True, eq=False)
class FitResult:
    values: dict[str, float]
    sigmas: dict[str, float]
    covariance: np.ndarray
    residual_norm: float
    reduced_chi2: float
    converged: bool
    iterations: int
    message: str = ""
    cost_trace: tuple[float, ...] = ()


# ---------------------------------------------------------------------------
# Model registry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelDef:
    params: tuple[str, ...]
    fn: object  # callable(values: dict, x: ndarray, context: dict) -> ndarray


def _lorentzian(v: dict, x: np.ndarray, context: dict) -> np.ndarray:
    hw2 = (0.5 * v["fwhm"]) ** 2
    return v["offset"] + v["amplitude"] * hw2 / ((x - v["center"]) ** 2 + hw2)


def _lorentzian_doublet(v: dict, x: np.ndarray, context: dict) -> np.ndarray:
    out = np.full_like(x, v["offset"], dtype=float)
    for k in ("1", "2"):
        hw2 = (0.5 * v[f"fwhm_{k}"]) ** 2
        out += v[f"amplitude_{k}"] * hw2 / ((x - v[f"center_{k}"]) ** 2 + hw2)
    return out


def _single_mode_spectrum(v: dict, x: np.ndarray, context: dict) -> np.ndarray:
    p = SystemParams(
        kappa_h=v["kappa"],
        kappa_v=1.0,  # idle sector, never observed
        delta_h=v["delta_c"],
        delta_1=v["delta_e"],
        g_h=v["g"],
        gamma_1=v["gamma"],
        gamma_d1=v["gamma_d"],
        eta_h=v["eta"],
    )
    n_max = context.get("n_max", 3)
    n = mode_photon_numbers(p, "H", x, n_max, context.get("dot_projector", "excited"))
    return v["a_scale"] * n + v["a_0"]


_FULL_PHYSICAL = (
    "kappa_h", "kappa_v", "delta_h", "delta_v", "delta_1", "delta_2",
    "g_h", "g_v", "gamma_1", "gamma_2", "gamma_d1", "gamma_d2",
    "eta_h", "eta_v",
)


def _full_spectrum(v: dict, x: np.ndarray, context: dict) -> np.ndarray:
    # Photon numbers factorize into independent (mode, dot) sectors and the
    # scaling parameters enter linearly, so per-sector caching makes every
    # finite-difference column touch at most one steady-state solve.
    p = SystemParams(**{name: v[name] for name in _FULL_PHYSICAL})
    projector = context.get("dot_projector", "excited")
    sectors = {}
    for mode, names, n_max in (
        ("H", ("kappa_h", "delta_h", "delta_1", "g_h", "gamma_1", "gamma_d1", "eta_h"),
         context.get("n_max_h", 3)),
        ("V", ("kappa_v", "delta_v", "delta_2", "g_v", "gamma_2", "gamma_d2", "eta_v"),
         context.get("n_max_v", 3)),
    ):
        key = tuple(v[name] for name in names)
        cache = context.setdefault(f"_photon_cache_{mode}", {})
        if key not in cache:
            if len(cache) >= 8:
                cache.pop(next(iter(cache)))
            cache[key] = mode_photon_numbers(p, mode, x, n_max, projector)
        sectors[mode] = cache[key]
    return v["a_h"] * sectors["H"] + v["a_v"] * sectors["V"] + v["a_0"]


MODELS: dict[str, ModelDef] = {
    "lorentzian": ModelDef(("center", "fwhm", "amplitude", "offset"), _lorentzian),
    "lorentzian-doublet": ModelDef(
        ("center_1", "fwhm_1", "amplitude_1", "center_2", "fwhm_2", "amplitude_2",
         "offset"),
        _lorentzian_doublet,
    ),
    "single-mode-spectrum": ModelDef(
        ("kappa", "delta_c", "delta_e", "g", "gamma", "gamma_d", "eta",
         "a_scale", "a_0"),
        _single_mode_spectrum,
    ),
    "full-spectrum": ModelDef(_FULL_PHYSICAL + ("a_h", "a_v", "a_0"), _full_spectrum),
}


def evaluate_model(problem: FitProblem, values: dict[str, float]) -> np.ndarray:
    """Model curve on the problem's abscissa for a complete value set."""
    return np.asarray(
        MODELS[problem.model].fn(values, problem.data.x, problem.context), dtype=float
    )


# ---------------------------------------------------------------------------
# Levenberg-Marquardt core
# ---------------------------------------------------------------------------

def _fd_jacobian(residual_fn, x, r0, lo, hi):
    m = x.size
    jac = np.empty((r0.size, m))
    for i in range(m):
        h = max(FD_RELATIVE_STEP * abs(x[i]), FD_ABSOLUTE_FLOOR)
        up_ok = x[i] + h <= hi[i]
        dn_ok = x[i] - h >= lo[i]
        if up_ok and dn_ok:
            xp = x.copy(); xp[i] += h
            xm = x.copy(); xm[i] -= h
            jac[:, i] = (residual_fn(xp) - residual_fn(xm)) / (2.0 * h)
        elif up_ok:
            xp = x.copy(); xp[i] += h
            jac[:, i] = (residual_fn(xp) - r0) / h
        else:
            xm = x.copy(); xm[i] -= h
            jac[:, i] = (r0 - residual_fn(xm)) / h
    return jac


def least_squares(problem: FitProblem) -> FitResult:
    """Minimize sum((model - data)^2) over the free parameters.

    Non-convergence is reported through ``converged=False``, not raised; a
    singular normal matrix falls back to the pseudo-inverse and is noted in
    ``message``.
    """
    names = [f.name for f in problem.free]
    x = np.array([f.start for f in problem.free], dtype=float)
    lo = np.array([f.bounds[0] for f in problem.free], dtype=float)
    hi = np.array([f.bounds[1] for f in problem.free], dtype=float)
    data_y = problem.data.y
    n_pts = data_y.size

    def residual_fn(vec: np.ndarray) -> np.ndarray:
        values = dict(problem.fixed)
        values.update(zip(names, vec))
        return evaluate_model(problem, values) - data_y

    if not names:
        r = residual_fn(x)
        cost = float(r @ r)
        return FitResult(
            values=dict(problem.fixed),
            sigmas={},
            covariance=np.zeros((0, 0)),
            residual_norm=math.sqrt(cost),
            reduced_chi2=cost / max(n_pts, 1),
            converged=True,
            iterations=0,
            cost_trace=(cost,),
        )

    r = residual_fn(x)
    cost = float(r @ r)
    cost_trace = [cost]
    lam = 1e-3
    converged = False
    message = ""
    iterations = 0

    for iterations in range(1, MAX_ITERATIONS + 1):
        jac = _fd_jacobian(residual_fn, x, r, lo, hi)
        jtj = jac.T @ jac
        jtr = jac.T @ r
        diag = np.diag(jtj).copy()
        diag[diag <= 0] = max(diag.max(initial=0.0), 1.0) * 1e-12

        accepted = False
        while lam < 1e14:
            try:
                step = np.linalg.solve(jtj + lam * np.diag(diag), -jtr)
            except np.linalg.LinAlgError:
                step = np.linalg.pinv(jtj + lam * np.diag(diag)) @ (-jtr)
                message = "singular damped normal matrix; pseudo-inverse step"
            x_trial = np.clip(x + step, lo, hi)
            r_trial = residual_fn(x_trial)
            cost_trial = float(r_trial @ r_trial)
            if np.isfinite(cost_trial) and cost_trial <= cost:
                accepted = True
                break
            lam *= 10.0

        if not accepted:
            message = message or "no downhill step found; damping exhausted"
            break

        step_norm = float(np.linalg.norm(x_trial - x))
        decrease = cost - cost_trial
        x, r, cost = x_trial, r_trial, cost_trial
        cost_trace.append(cost)
        lam = max(lam / 3.0, 1e-12)
        if decrease <= COST_TOL * max(cost, 1e-300) or step_norm <= STEP_TOL * (
            1.0 + float(np.linalg.norm(x))
        ):
            converged = True
            break
    else:
        message = "iteration limit reached"

    # Uncertainties from the curvature at the final point.  The symmetric
    # eigendecomposition keeps the covariance PSD even when J^T J is
    # (numerically) singular; degenerate directions are pseudo-inverted away
    # and flagged.
    jac = _fd_jacobian(residual_fn, x, r, lo, hi)
    jtj = jac.T @ jac
    dof = max(n_pts - len(names), 1)
    chi2_red = cost / dof
    eigvals, eigvecs = np.linalg.eigh(0.5 * (jtj + jtj.T))
    floor = max(eigvals.max(initial=0.0), 0.0) * len(names) * np.finfo(float).eps
    keep = eigvals > max(floor, 1e-300)
    if not keep.all():
        message = message or "singular J^T J; covariance from pseudo-inverse"
    inv_eigs = np.where(keep, 1.0 / np.where(keep, eigvals, 1.0), 0.0)
    jtj_inv = (eigvecs * inv_eigs) @ eigvecs.T
    covariance = chi2_red * 0.5 * (jtj_inv + jtj_inv.T)
    sigmas = {
        name: float(math.sqrt(max(covariance[i, i], 0.0)))
        for i, name in enumerate(names)
    }
    values = dict(problem.fixed)
    values.update(zip(names, x))
    return FitResult(
        values=values,
        sigmas=sigmas,
        covariance=covariance,
        residual_norm=math.sqrt(cost),
        reduced_chi2=chi2_red,
        converged=converged,
        iterations=iterations,
        message=message,
        cost_trace=tuple(cost_trace),
    )


def max_abs_correlation(result: FitResult) -> float:
    """Largest off-diagonal |correlation| between fitted parameters."""
    cov = result.covariance
    if cov.shape[0] < 2:
        return 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        corr = np.nan_to_num(cov / np.outer(d, d))
    off = corr - np.diag(np.diag(corr))
    return float(np.max(np.abs(off)))


# ---------------------------------------------------------------------------
# Fitting protocols
# ---------------------------------------------------------------------------

_FULL_FREE = ("g_h", "g_v", "gamma_d1", "gamma_d2", "a_h", "a_v", "a_0")
_FULL_REQUIRED_FIXED = (
    "kappa_h", "kappa_v", "delta_h", "delta_v", "gamma_1", "gamma_2",
    "eta_h", "eta_v",
)

# Protocol defaults for the reference device (GHz).  The drive-series
# protocol fixes slightly different coupling/dephasing values (1.39, 0.04)
# than the full-spectrum fit results (1.37, 0.05); both sets are kept as-is,
# do not unify them.  Intensity scales are instrument-specific and must be
# supplied by the caller.
TWO_MODE_PROTOCOL_FIXED = {
    "kappa_h": 16.04, "kappa_v": 18.04,
    "delta_h": 0.0, "delta_v": 36.3,
    "gamma_1": 0.16, "gamma_2": 0.16,
    "eta_h": 0.1, "eta_v": 0.1,
}
DRIVE_SERIES_PROTOCOL_FIXED = {
    "kappa": 16.04, "delta_c": 0.0, "delta_e": 0.0,
    "g": 1.39, "gamma": 0.16, "gamma_d": 0.04,
}
DETUNING_SERIES_PROTOCOL_FIXED = {
    "kappa": 16.04, "delta_e": 0.0,
    "g": 1.37, "gamma": 0.16, "gamma_d": 0.05, "eta": 0.1,
}


def fit_full_spectrum(
    data: Spectrum,
    fixed: dict[str, float],
    initial: dict[str, float] | None = None,
    bounds: dict[str, tuple[float, float]] | None = None,
    n_max_h: int = 3,
    n_max_v: int = 3,
    dot_projector: str = "excited",
) -> FitResult:
    """Two-mode fit with couplings, dephasings and scalings free.

    ``fixed`` must provide both cavity linewidths and detunings, both
    spontaneous rates and both drives; each dot defaults to resonance with
    its mode unless ``delta_1``/``delta_2`` are given explicitly.
    """
    missing = [k for k in _FULL_REQUIRED_FIXED if k not in fixed]
    if missing:
        raise ValueError(f"fixed set must include {missing}")
    fixed = dict(fixed)
    fixed.setdefault("delta_1", fixed["delta_h"])
    fixed.setdefault("delta_2", fixed["delta_v"])

    initial = dict(initial or {})
    bounds = dict(bounds or {})
    default_bounds = {
        "g_h": (0.0, 10.0),
        "g_v": (0.0, 10.0),
        "gamma_d1": (0.0, 2.0),
        "gamma_d2": (0.0, 2.0),
        "a_h": (0.0, math.inf),
        "a_v": (0.0, math.inf),
        "a_0": (-math.inf, math.inf),
    }
    # Scaling starts come from the data extent via the bare-cavity photon
    # number estimate; rates start at mid-bounds unless supplied.
    n_peak = (2.0 * fixed["eta_h"] / fixed["kappa_h"]) ** 2
    span = float(data.y.max() - data.y.min())
    amp_start = span / n_peak if n_peak > 0 else 1.0
    defaults = {
        "g_h": 5.0, "g_v": 5.0, "gamma_d1": 1.0, "gamma_d2": 1.0,
        "a_h": amp_start, "a_v": amp_start, "a_0": float(data.y.min()),
    }
    free = tuple(
        FreeParam(
            name,
            initial.get(name, defaults[name]),
            bounds.get(name, default_bounds[name]),
        )
        for name in _FULL_FREE
    )
    problem = FitProblem(
        model="full-spectrum",
        free=free,
        fixed=fixed,
        data=data,
        context={"n_max_h": n_max_h, "n_max_v": n_max_v, "dot_projector": dot_projector},
    )
    return least_squares(problem)


_SINGLE_REQUIRED_FIXED = ("kappa", "delta_c", "delta_e", "g", "gamma", "gamma_d",
                          "a_scale")


def fit_power_series(
    data_set: list[Spectrum],
    fixed: dict[str, float],
    n_max: int = 3,
    dot_projector: str = "excited",
) -> list[FitResult]:
    """Per-spectrum fit of a drive series with only eta and a_0 free."""
    missing = [k for k in _SINGLE_REQUIRED_FIXED if k not in fixed]
    if missing:
        raise ValueError(f"fixed set must include {missing}")
    results = []
    for data in data_set:
        span = float(data.y.max() - data.y.min())
        n_peak = span / fixed["a_scale"] if fixed["a_scale"] > 0 else span
        eta_start = 0.5 * fixed["kappa"] * math.sqrt(max(n_peak, 1e-12))
        free = (
            FreeParam("eta", eta_start, (0.0, math.inf)),
            FreeParam("a_0", float(data.y.min())),
        )
        problem = FitProblem(
            model="single-mode-spectrum",
            free=free,
            fixed=dict(fixed),
            data=data,
            context={"n_max": n_max, "dot_projector": dot_projector},
        )
        results.append(least_squares(problem))
    return results


_DETUNING_REQUIRED_FIXED = ("kappa", "delta_e", "g", "gamma", "gamma_d", "eta",
                            "a_scale", "a_0")


def fit_detuning_series(
    data_set: list[Spectrum],
    fixed: dict[str, float],
    n_max: int = 3,
    dot_projector: str = "excited",
) -> list[FitResult]:
    """Per-spectrum fit of a cavity-tuning series with the cavity frequency free."""
    missing = [k for k in _DETUNING_REQUIRED_FIXED if k not in fixed]
    if missing:
        raise ValueError(f"fixed set must include {missing}")
    results = []
    for data in data_set:
        start = float(data.x[int(np.argmax(data.y))])
        problem = FitProblem(
            model="single-mode-spectrum",
            free=(FreeParam("delta_c", start),),
            fixed=dict(fixed),
            data=data,
            context={"n_max": n_max, "dot_projector": dot_projector},
        )
        results.append(least_squares(problem))
    return results


def _lorentzian_initials(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    offset = float(y.min())
    amplitude = float(y.max() - y.min())
    center = float(x[int(np.argmax(y))])
    if amplitude > 0:
        above = y >= offset + 0.5 * amplitude
        width = float(np.count_nonzero(above)) * float(np.median(np.diff(x)))
    else:
        width = 0.0
    if width <= 0:
        width = (x[-1] - x[0]) / 10.0 or 1.0
    return center, width, amplitude, offset


def fit_lorentzian(data: Spectrum, initial: dict[str, float] | None = None) -> FitResult:
    """Single Lorentzian plus constant offset."""
    center, fwhm, amplitude, offset = _lorentzian_initials(data.x, data.y)
    values = {"center": center, "fwhm": fwhm, "amplitude": amplitude, "offset": offset}
    values.update(initial or {})
    free = tuple(FreeParam(k, values[k]) for k in ("center", "fwhm", "amplitude", "offset"))
    return least_squares(FitProblem("lorentzian", free, {}, data))


def fit_lorentzian_doublet(data: Spectrum) -> FitResult:
    """Sum of two Lorentzians plus a constant offset.

    Starting points come from the two most prominent separated maxima; Q per
    peak follows as center / FWHM.
    """
    x, y = data.x, data.y
    offset = float(y.min())
    i1 = int(np.argmax(y))
    exclusion = max((x[-1] - x[0]) / 10.0, 4.0 * float(np.median(np.diff(x))))
    masked = np.where(np.abs(x - x[i1]) > exclusion, y, -np.inf)
    i2 = int(np.argmax(masked))
    if not np.isfinite(masked[i2]):
        i2 = 0 if i1 != 0 else y.size - 1
    c1, w1 = float(x[i1]), exclusion / 2.0
    c2, w2 = float(x[i2]), exclusion / 2.0
    a1 = float(y[i1] - offset)
    a2 = max(float(y[i2] - offset), 0.0)
    free = (
        FreeParam("center_1", c1),
        FreeParam("fwhm_1", w1),
        FreeParam("amplitude_1", a1),
        FreeParam("center_2", c2),
        FreeParam("fwhm_2", w2),
        FreeParam("amplitude_2", a2),
        FreeParam("offset", offset),
    )
    return least_squares(FitProblem("lorentzian-doublet", free, {}, data))


def doublet_quality_factors(result: FitResult) -> tuple[float, float]:
    """Q = center / FWHM for each peak of a doublet fit."""
    from .spectrum import quality_factor

    return (
        quality_factor(abs(result.values["center_1"]), abs(result.values["fwhm_1"])),
        quality_factor(abs(result.values["center_2"]), abs(result.values["fwhm_2"])),
    )
