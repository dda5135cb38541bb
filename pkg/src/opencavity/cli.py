"""Batch command-line front end.

Runs one of four modes from a single YAML config file:

* ``simulate`` -- steady-state transmission scan, written as CSV
* ``fit``      -- least-squares fit of a measured spectrum; results as JSON
                  plus the best-fit curve as CSV
* ``tmm``      -- multilayer transmission spectrum and/or resonance-vs-gap map
* ``derive``   -- scalar metrics (cooperativity, total decay, Q, finesse,
                  length bound, dip contrast) printed as JSON

Usage: ``opencavity CONFIG.yaml [--mode MODE]``.  Exit codes: 0 success
(including fits that merely failed to converge), 2 config/schema violation,
3 file I/O trouble, 4 numerical failure.  Errors are reported as a JSON
object on stderr.  Outputs are deterministic: no timestamps, floats at 12
significant digits, and a config digest for provenance.

Units in all files: frequencies and rates in GHz (omega/2pi values),
wavelengths and lengths in nm.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import NumericalError, SpectrumFormatError
from .fit import FitProblem, FitResult, FreeParam, MODELS, evaluate_model, least_squares
from .hilbert import make_space
from .lindblad import SystemParams
from .spectrum import (
    AXIS_FREQUENCY,
    AXIS_WAVELENGTH,
    ScalingParams,
    Spectrum,
    cooperativity,
    dip_contrast,
    finesse,
    fsr_from_length_ghz,
    fsr_length_bound,
    quality_factor,
    total_decay,
    transmission_scan,
)
from . import tmm

MODES = ("simulate", "fit", "tmm", "derive")


class ConfigError(ValueError):
    """Config file violates the schema."""


# ---------------------------------------------------------------------------
# Spectrum CSV I/O
# ---------------------------------------------------------------------------

def read_spectrum_csv(path: str | Path) -> Spectrum:
    """Read an ``x,y`` CSV with optional ``# axis:`` comment.

    Rows may arrive unsorted (sorted with a warning); duplicate abscissa
    values and malformed rows are rejected with their line number.
    """
    path = Path(path)
    axis = AXIS_FREQUENCY
    xs: list[float] = []
    ys: list[float] = []
    with path.open("r", encoding="utf-8") as fh:
        header_seen = False
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.lower().startswith("axis:"):
                    value = body.split(":", 1)[1].strip()
                    if value not in (AXIS_FREQUENCY, AXIS_WAVELENGTH):
                        raise SpectrumFormatError(
                            f"{path}:{lineno}: unknown axis kind {value!r}"
                        )
                    axis = value
                continue
            if not header_seen:
                cols = [c.strip().lower() for c in line.split(",")]
                if cols != ["x", "y"]:
                    raise SpectrumFormatError(
                        f"{path}:{lineno}: expected header 'x,y', got {line!r}"
                    )
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise SpectrumFormatError(
                    f"{path}:{lineno}: expected two comma-separated values"
                )
            try:
                xs.append(float(parts[0]))
                ys.append(float(parts[1]))
            except ValueError as exc:
                raise SpectrumFormatError(f"{path}:{lineno}: {exc}") from exc
    if not xs:
        raise SpectrumFormatError(f"{path}: no data rows")
    x = np.array(xs)
    y = np.array(ys)
    order = np.argsort(x, kind="stable")
    if not np.array_equal(order, np.arange(x.size)):
        warnings.warn(f"{path}: rows were not sorted by x; sorting", stacklevel=2)
        x, y = x[order], y[order]
    dupes = np.flatnonzero(np.diff(x) == 0)
    if dupes.size:
        orig_line = int(order[dupes[0] + 1]) + 2  # 1-based, after the header
        raise SpectrumFormatError(
            f"{path}: duplicate x value {x[dupes[0]]!r} (data line {orig_line})"
        )
    return Spectrum(x, y, axis)


def write_spectrum_csv(spec: Spectrum, path: str | Path, mode: str) -> None:
    """Write a spectrum with a comment header naming mode, axis and units."""
    x_unit = "GHz" if spec.axis_kind == AXIS_FREQUENCY else "nm"
    lines = [
        f"# mode: {mode}",
        f"# axis: {spec.axis_kind}",
        f"# units: x={x_unit}, y=arb",
        "x,y",
    ]
    lines += [f"{_fmt(xv)},{_fmt(yv)}" for xv, yv in zip(spec.x, spec.y)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _fmt(v: float) -> str:
    return f"{float(v):.12g}"


def _round_floats(obj):
    if isinstance(obj, float):
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def config_digest(config: dict) -> str:
    """Hash of the canonicalized config; changes when any field changes."""
    canon = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def write_results(result: FitResult, path: str | Path, digest: str = "") -> None:
    """Serialize a fit result as JSON with a stable key order."""
    payload = {
        "values": {k: result.values[k] for k in sorted(result.values)},
        "sigmas": {k: result.sigmas[k] for k in sorted(result.sigmas)},
        "covariance": [list(row) for row in np.asarray(result.covariance)],
        "residual_norm": result.residual_norm,
        "reduced_chi2": result.reduced_chi2,
        "converged": bool(result.converged),
        "iterations": int(result.iterations),
        "tool_version": __version__,
        "config_digest": digest,
    }
    Path(path).write_text(
        json.dumps(_round_floats(payload), indent=2) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# Config handling
# ---------------------------------------------------------------------------

def _require(config: dict, key: str, kind=dict):
    if key not in config:
        raise ConfigError(f"missing required section {key!r}")
    value = config[key]
    if not isinstance(value, kind):
        raise ConfigError(f"section {key!r} must be a {kind.__name__}")
    return value


def _grid_from_config(block) -> np.ndarray:
    if isinstance(block, list):
        grid = np.asarray(block, dtype=float)
    elif isinstance(block, dict):
        try:
            center = float(block["center"])
            span = float(block["span"])
            points = int(block.get("points", 401))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"grid block needs center/span[/points]: {exc}") from exc
        if span <= 0 or points < 2:
            raise ConfigError("grid span must be > 0 and points >= 2")
        grid = np.linspace(center - span / 2.0, center + span / 2.0, points)
    else:
        raise ConfigError("grid must be a list or a {center, span, points} mapping")
    if grid.size < 1 or not np.all(np.diff(grid) > 0):
        raise ConfigError("grid must be strictly increasing")
    return grid


def _system_from_config(block: dict) -> SystemParams:
    try:
        return SystemParams(**{k: float(v) for k, v in block.items()})
    except TypeError as exc:
        raise ConfigError(f"unknown system parameter: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"invalid system parameter: {exc}") from exc


def _stack_from_config(block: dict) -> tmm.LayerStack:
    def parse_n(v) -> complex:
        return complex(v) if not isinstance(v, dict) else complex(v["re"], v.get("im", 0.0))

    try:
        if "dbr" in block:
            d = block["dbr"]
            return tmm.quarter_wave_dbr(
                float(d["n_high"]), float(d["n_low"]), float(d["lambda0"]),
                float(d["pairs"]),
                ambient_n=parse_n(d.get("ambient", 1.0)),
                substrate_n=parse_n(d.get("substrate", 1.0)),
            )
        if "cavity" in block:
            c = block["cavity"]
            if c.get("default", False):
                return tmm.default_cavity_stack(
                    float(c["air_gap"]), float(c.get("active_thickness", 400.0))
                )
            top = _stack_from_config(c["top"])
            bottom = _stack_from_config(c["bottom"])
            return tmm.cavity_stack(
                top, float(c["air_gap"]), float(c["active_thickness"]),
                parse_n(c.get("active_n", tmm.N_GAAS)), bottom,
            )
        layers = tuple(
            tmm.Layer(parse_n(l["n"]), float(l["thickness"])) for l in block["layers"]
        )
        return tmm.LayerStack(
            parse_n(block.get("ambient", 1.0)), layers, parse_n(block.get("substrate", 1.0))
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad stack description: {exc}") from exc


# ---------------------------------------------------------------------------
# Modes
# ---------------------------------------------------------------------------

def _run_simulate(config: dict, base: Path) -> int:
    system = _system_from_config(_require(config, "system"))
    scaling_block = config.get("scaling", {})
    try:
        scaling = ScalingParams(**{k: float(v) for k, v in scaling_block.items()})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scaling block: {exc}") from exc
    space_block = config.get("space", {})
    space = make_space(int(space_block.get("n_max_h", 3)), int(space_block.get("n_max_v", 3)))
    grid = _grid_from_config(_require(config, "grid", (dict, list)))
    out = _output_path(config, base)
    spec = transmission_scan(space, system, scaling, grid)
    write_spectrum_csv(spec, out, "simulate")
    return 0


def _run_fit(config: dict, base: Path) -> int:
    io_block = _require(config, "io")
    if "input" not in io_block:
        raise ConfigError("fit mode needs io.input")
    data = read_spectrum_csv(base / str(io_block["input"]))
    fit_block = _require(config, "fit")
    model = fit_block.get("model")
    if model not in MODELS:
        raise ConfigError(f"fit.model must be one of {sorted(MODELS)}, got {model!r}")
    free_block = _require(fit_block, "free")
    free = []
    for name, desc in free_block.items():
        if isinstance(desc, dict):
            start = float(desc.get("start", 0.0))
            bounds = desc.get("bounds")
            bounds = tuple(float(b) for b in bounds) if bounds else (-math.inf, math.inf)
        else:
            start, bounds = float(desc), (-math.inf, math.inf)
        try:
            free.append(FreeParam(name, start, bounds))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    fixed = {k: float(v) for k, v in fit_block.get("fixed", {}).items()}
    context = dict(fit_block.get("context", {}))
    try:
        problem = FitProblem(model, tuple(free), fixed, data, context)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = least_squares(problem)

    digest = config_digest(config)
    out = _output_path(config, base, default="fit_results.json")
    write_results(result, out, digest)
    curve_path = io_block.get("curve")
    if curve_path is None:
        curve_path = Path(out).with_name(Path(out).stem + "_curve.csv")
    else:
        curve_path = base / str(curve_path)
    curve = evaluate_model(problem, result.values)
    write_spectrum_csv(Spectrum(data.x, curve, data.axis_kind), curve_path, "fit")
    return 0


def _run_tmm(config: dict, base: Path) -> int:
    block = _require(config, "tmm")
    task = block.get("task", "spectrum")
    if task == "spectrum":
        stack = _stack_from_config(_require(config, "stack"))
        grid = _grid_from_config(_require(block, "lambda_grid", (dict, list)))
        out = _output_path(config, base)
        write_spectrum_csv(tmm.transmission_spectrum(stack, grid), out, "tmm")
        return 0
    if task == "map":
        gap_grid = _grid_from_config(block.get("gap_grid",
                                                {"center": 5000.0, "span": 4000.0,
                                                 "points": 41}))
        lambda_grid = _grid_from_config(block.get("lambda_grid",
                                                   {"center": 970.0, "span": 120.0,
                                                    "points": 1201}))
        if "stack" in config:
            stack_cfg = config["stack"]

            def template(gap: float) -> tmm.LayerStack:
                cfg = dict(stack_cfg)
                cavity = dict(cfg.get("cavity", {}))
                cavity["air_gap"] = gap
                cfg["cavity"] = cavity
                return _stack_from_config(cfg)
        else:
            def template(gap: float) -> tmm.LayerStack:
                return tmm.default_cavity_stack(gap)

        rows = tmm.resonance_map(template, gap_grid, lambda_grid)
        out = _output_path(config, base)
        lines = [
            "# mode: tmm",
            "# axis: wavelength",
            "# units: gap=nm, resonance=nm",
            "gap,resonance",
        ]
        for gap, peaks in rows:
            for peak in peaks:
                lines.append(f"{_fmt(gap)},{_fmt(peak)}")
        Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        return 0
    raise ConfigError(f"tmm.task must be 'spectrum' or 'map', got {task!r}")


def _run_derive(config: dict, base: Path) -> int:
    block = _require(config, "derive")
    out: dict[str, float] = {}
    try:
        if "gamma" in block and "gamma_d" in block:
            out["total_decay"] = total_decay(float(block["gamma"]), float(block["gamma_d"]))
        if "g" in block and "kappa" in block:
            gamma_total = out.get("total_decay", block.get("gamma_total"))
            if gamma_total is not None:
                out["cooperativity"] = cooperativity(
                    float(block["g"]), float(block["kappa"]), float(gamma_total)
                )
        if "nu0" in block and "kappa" in block:
            out["q_factor"] = quality_factor(float(block["nu0"]), float(block["kappa"]))
        if "lambda_q" in block and "lambda_q1" in block:
            out["nl_max"] = fsr_length_bound(float(block["lambda_q"]), float(block["lambda_q1"]))
        fsr = None
        if "fsr_ghz" in block:
            fsr = float(block["fsr_ghz"])
        elif "nl_um" in block:
            fsr = fsr_from_length_ghz(float(block["nl_um"]))
        elif "nl_max" in out:
            fsr = fsr_from_length_ghz(out["nl_max"])
        if fsr is not None and "kappa" in block:
            out["finesse"] = finesse(fsr, float(block["kappa"]))
        if "spectrum" in block:
            spec = read_spectrum_csv(base / str(block["spectrum"]))
            window = block.get("dip_window")
            if not (isinstance(window, list) and len(window) == 2):
                raise ConfigError("derive.dip_window must be a [lo, hi] list")
            out["dip_contrast"] = dip_contrast(spec, (float(window[0]), float(window[1])))
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise NumericalError(str(exc)) from exc

    ordered = ["cooperativity", "total_decay", "q_factor", "finesse", "nl_max",
               "dip_contrast"]
    payload = {k: out[k] for k in ordered if k in out}
    payload["tool_version"] = __version__
    payload["config_digest"] = config_digest(config)
    text = json.dumps(_round_floats(payload), indent=2)
    print(text)
    if "io" in config and isinstance(config["io"], dict) and "output" in config["io"]:
        (base / str(config["io"]["output"])).write_text(text + "\n", encoding="utf-8")
    return 0


def _output_path(config: dict, base: Path, default: str | None = None) -> Path:
    io_block = config.get("io", {})
    name = io_block.get("output", default)
    if name is None:
        raise ConfigError("io.output is required for this mode")
    return base / str(name)


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def run(config_path: str | Path, mode_override: str | None = None) -> int:
    """Execute one config file; returns the process exit status."""
    config_path = Path(config_path)
    try:
        text = config_path.read_text(encoding="utf-8")
    except OSError as exc:
        _emit_error("io-error", str(exc))
        return 3
    try:
        config = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        _emit_error("schema-error", f"config is not valid YAML: {exc}")
        return 2
    if not isinstance(config, dict):
        _emit_error("schema-error", "config root must be a mapping")
        return 2
    mode = mode_override or config.get("mode")
    if mode not in MODES:
        _emit_error("schema-error", f"mode must be one of {MODES}, got {mode!r}")
        return 2

    base = config_path.parent
    runner = {"simulate": _run_simulate, "fit": _run_fit, "tmm": _run_tmm,
              "derive": _run_derive}[mode]
    try:
        return runner(config, base)
    except ConfigError as exc:
        _emit_error("schema-error", str(exc))
        return 2
    except SpectrumFormatError as exc:
        _emit_error("io-error", str(exc))
        return 3
    except OSError as exc:
        _emit_error("io-error", str(exc))
        return 3
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        _emit_error("numerical-error", str(exc))
        return 4


def _emit_error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="opencavity",
        description="Cavity transmission simulation, spectrum fitting, and "
                    "multilayer mirror calculations driven by a YAML config.",
    )
    parser.add_argument("config", help="path to the YAML run configuration")
    parser.add_argument("--mode", choices=MODES, default=None,
                        help="override the mode given in the config")
    args = parser.parse_args(argv)
    return run(args.config, args.mode)


if __name__ == "__main__":
    sys.exit(main())
