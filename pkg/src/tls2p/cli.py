"""Command-line front end: ``tls2p <config.json> [overrides]``.

A scenario file is a JSON object.  Example::

    {"mode": "one_channel_time", "kappa": 1.0,
     "pulse": {"type": "gaussian", "omega": 2.92},
     "grid": {"start": -6, "stop": 14, "points": 512}}

Results go to ``<output>/field.csv``, ``<output>/meta.json`` and
``<output>/plot.gp``.  Exit status: 0 success, 1 configuration error,
2 numerical failure, 3 failed validation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import ConfigError, Tls2pError
from .lti_response import (
    EmitterParams,
    TwoChannelParams,
    absorbed_energy,
    check_grid,
    default_time_axis,
    scalar_response,
)
from .numerics import Grid1D, Grid2D, frequency_axis
from .one_channel import eta_freq, eta_time, time_density
from .pulse_shapes import Gaussian, PulseSpec, RisingExp, Sampled, TwoPhotonInput
from .two_channel import PAIRS, T_ij_freq, channel_probabilities, eta_ij_time, hom_difference
from .validation import CHECKS, diagonal_peak_count, run_checks

__all__ = ["ScenarioConfig", "parse_config", "run", "main"]

MODES = ("one_channel_time", "one_channel_freq", "two_channel_time", "two_channel_freq", "single_photon", "validate")
TOP_KEYS = {
    "mode", "kappa", "omega_d", "kappa1", "kappa2", "pulse", "pulses", "grid",
    "tolerance_profile", "output", "scale", "absorption_time", "checks",
}
PULSE_KEYS = {"gaussian": {"type", "omega", "tau"}, "rising_exp": {"type", "gamma"}, "sampled": {"type", "path"}}
EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATION = 0, 1, 2, 3


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario.

    ``grid`` is ``None`` when the default window should be derived from the
    pulses and the emitter.
    """

    mode: str
    emitter: EmitterParams | TwoChannelParams | None
    pulses: tuple[PulseSpec, ...]
    grid: Grid1D | None
    points: int = 512
    tolerance_profile: str = "figure"
    output: Path = Path("tls2p_out")
    scale: str = "normalized"
    absorption_time: float = 4.0
    checks: tuple[str, ...] = ()
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def inputs(self) -> TwoPhotonInput:
        if len(self.pulses) == 1:
            return TwoPhotonInput.fock(self.pulses[0])
        return TwoPhotonInput(self.pulses[0], self.pulses[1])


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def _number(block: dict, key: str, where: str, *, positive: bool = False, default=None) -> float:
    if key not in block:
        if default is not None:
            return default
        raise ConfigError(f"{where}{key}: required field is missing")
    value = block[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}{key}: expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise ConfigError(f"{where}{key}: must be finite")
    if positive and value <= 0:
        raise ConfigError(f"{where}{key}: must be positive, got {value:g}")
    return value


def _pulse(spec: Any, where: str, base: Path) -> PulseSpec:
    if not isinstance(spec, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = spec.get("type")
    if kind not in PULSE_KEYS:
        raise ConfigError(f"{where}.type: expected one of {sorted(PULSE_KEYS)}, got {kind!r}")
    unknown = set(spec) - PULSE_KEYS[kind]
    if unknown:
        raise ConfigError(f"{where}.{sorted(unknown)[0]}: unknown key for a {kind} pulse")
    prefix = f"{where}."
    if kind == "gaussian":
        return Gaussian(_number(spec, "omega", prefix, positive=True), _number(spec, "tau", prefix, default=0.0))
    if kind == "rising_exp":
        return RisingExp(_number(spec, "gamma", prefix, positive=True))
    path = spec.get("path")
    if not isinstance(path, str):
        raise ConfigError(f"{where}.path: expected a file name")
    full = (base / path) if not Path(path).is_absolute() else Path(path)
    try:
        data = np.loadtxt(full, delimiter=",", ndmin=2, comments="#")
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{where}.path: cannot read {full}: {exc}") from None
    if data.shape[1] not in (2, 3):
        raise ConfigError(f"{where}.path: expected columns t,re[,im]")
    values = data[:, 1] + (1j * data[:, 2] if data.shape[1] == 3 else 0.0)
    try:
        return Sampled.from_samples(data[:, 0], values, normalize=True)
    except ValueError as exc:
        raise ConfigError(f"{where}.path: {exc}") from None


def _apply_pulse_overrides(pulses, gamma, omega):
    out = []
    for p in pulses:
        if gamma is not None and isinstance(p, RisingExp):
            p = RisingExp(gamma)
        if omega is not None and isinstance(p, Gaussian):
            p = Gaussian(omega, p.tau)
        out.append(p)
    return tuple(out)


def parse_config(path: str | Path, overrides: dict | None = None) -> ScenarioConfig:
    """Read and validate a scenario file.

    Parameters
    ----------
    overrides : dict, optional
        Values for ``kappa``, ``gamma``, ``omega``, ``grid_points`` or ``out``
        that replace the corresponding config entries.

    Raises
    ------
    ConfigError
        Naming the offending field (and line, for JSON syntax errors).
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be an object")
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")

    mode = raw.get("mode")
    if mode not in MODES:
        raise ConfigError(f"mode: expected one of {list(MODES)}, got {mode!r}")
    if "kappa" in overrides:
        raw = dict(raw, kappa=overrides["kappa"])

    profile = raw.get("tolerance_profile", "figure")
    if profile not in ("tight", "figure"):
        raise ConfigError(f"tolerance_profile: expected 'tight' or 'figure', got {profile!r}")
    scale = raw.get("scale", "normalized")
    if scale not in ("normalized", "paper_fock"):
        raise ConfigError(f"scale: expected 'normalized' or 'paper_fock', got {scale!r}")
    output = overrides.get("out", raw.get("output", "tls2p_out"))
    if not isinstance(output, str):
        raise ConfigError("output: expected a directory name")
    checks = raw.get("checks", [])
    if not isinstance(checks, list) or any(c not in CHECKS for c in checks):
        raise ConfigError(f"checks: expected a list drawn from {list(CHECKS)}")

    if mode == "validate":
        return ScenarioConfig(mode, None, (), None, tolerance_profile=profile, output=Path(output),
                              checks=tuple(checks), raw=raw)

    emitter = _emitter(raw, mode)
    pulses = _pulses(raw, mode, path.parent)
    pulses = _apply_pulse_overrides(pulses, overrides.get("gamma"), overrides.get("omega"))

    points = 512
    grid = None
    if "grid" in raw:
        block = raw["grid"]
        if not isinstance(block, dict):
            raise ConfigError("grid: expected an object with start, stop, points")
        extra = set(block) - {"start", "stop", "points"}
        if extra:
            raise ConfigError(f"grid.{sorted(extra)[0]}: unknown key")
        points = block.get("points", 512)
        if isinstance(points, bool) or not isinstance(points, int) or points < 8:
            raise ConfigError(f"grid.points: expected an integer >= 8, got {points!r}")
        if "start" in block or "stop" in block:
            start = _number(block, "start", "grid.")
            stop = _number(block, "stop", "grid.")
            if stop <= start:
                raise ConfigError("grid.stop: must exceed grid.start")
            grid = Grid1D.from_range(start, stop, points)
    if "grid_points" in overrides:
        points = int(overrides["grid_points"])
        if points < 8:
            raise ConfigError("--grid-points: expected an integer >= 8")
        if grid is not None:
            grid = Grid1D.from_range(grid.start, grid.stop, points)
    absorption = _number(raw, "absorption_time", "", default=4.0)
    return ScenarioConfig(
        mode=mode, emitter=emitter, pulses=pulses, grid=grid, points=points,
        tolerance_profile=profile, output=Path(output), scale=scale,
        absorption_time=absorption, raw=raw,
    )


def _emitter(raw: dict, mode: str):
    if mode.startswith("two_channel"):
        if "omega_d" in raw:
            raise ConfigError("omega_d: two-channel scenarios have no detuning")
        if "kappa1" in raw or "kappa2" in raw:
            if "kappa" in raw:
                raise ConfigError("kappa: give either kappa or kappa1/kappa2, not both")
            return TwoChannelParams(_number(raw, "kappa1", "", positive=True), _number(raw, "kappa2", "", positive=True))
        return TwoChannelParams.equal(_number(raw, "kappa", "", positive=True))
    for key in ("kappa1", "kappa2"):
        if key in raw:
            raise ConfigError(f"{key}: only valid in two-channel modes")
    return EmitterParams(_number(raw, "kappa", "", positive=True), _number(raw, "omega_d", "", default=0.0))


def _pulses(raw: dict, mode: str, base: Path) -> tuple[PulseSpec, ...]:
    if ("pulse" in raw) == ("pulses" in raw):
        raise ConfigError("pulse: give exactly one of 'pulse' or 'pulses'")
    if "pulse" in raw:
        return (_pulse(raw["pulse"], "pulse", base),)
    specs = raw["pulses"]
    limit = 1 if mode == "single_photon" else 2
    if not isinstance(specs, list) or not 1 <= len(specs) <= limit:
        raise ConfigError(f"pulses: expected a list of 1 to {limit} pulse objects")
    return tuple(_pulse(s, f"pulses[{k}]", base) for k, s in enumerate(specs))


# ---------------------------------------------------------------------------
# Scenarios
# ---------------------------------------------------------------------------


def _time_axis(cfg: ScenarioConfig, decay: float) -> Grid1D:
    return cfg.grid or default_time_axis(cfg.pulses, decay, cfg.points)


def _frequency_grid(cfg: ScenarioConfig, decay: float) -> Grid2D:
    if cfg.grid is not None:
        return Grid2D.square(cfg.grid)
    return Grid2D.square(frequency_axis(default_time_axis(cfg.pulses, decay, cfg.points)))


def _params_dict(emitter) -> dict:
    if isinstance(emitter, EmitterParams):
        return {"kappa": emitter.kappa, "omega_d": emitter.omega_d}
    return {"kappa1": emitter.kappa1, "kappa2": emitter.kappa2}


def _grid_dict(axis: Grid1D) -> dict:
    return {"start": axis.start, "stop": axis.stop, "points": axis.count, "step": axis.step}


def _pulse_dict(p: PulseSpec) -> dict:
    if isinstance(p, Gaussian):
        return {"type": "gaussian", "omega": p.omega, "tau": p.tau}
    if isinstance(p, RisingExp):
        return {"type": "rising_exp", "gamma": p.gamma}
    return {"type": "sampled", "start": p.grid.start, "stop": p.grid.stop, "points": p.grid.count}


def _write_table(path: Path, header: str, columns: Sequence[np.ndarray], int_first: bool = False) -> None:
    data = np.column_stack(columns)
    fmt = ["%d"] + ["%.17g"] * (data.shape[1] - 1) if int_first else "%.17g"
    np.savetxt(path, data, fmt=fmt, delimiter=",", header=header, comments="")


def _heatmap_script(xlabel: str, ylabel: str, title: str, expr: str, select: str = "") -> str:
    using = f"($1):($2):({expr})" if not select else f"($2):($3):(({select}) ? {expr} : 1/0)"
    return "\n".join([
        "# gnuplot heatmap of field.csv",
        "set datafile separator ','",
        "set view map",
        "set size ratio -1",
        f"set xlabel '{xlabel}'",
        f"set ylabel '{ylabel}'",
        f"set title '{title}'",
        "set palette rgbformulae 33,13,10",
        f"splot 'field.csv' every ::1 using {using} with points pointtype 5 pointsize 0.3 palette notitle",
        "",
    ])


def _run_one_channel_time(cfg: ScenarioConfig) -> dict:
    params, inp = cfg.emitter, cfg.inputs
    axis = _time_axis(cfg, params.kappa)
    amp = eta_time(params, inp, Grid2D.square(axis), profile=cfg.tolerance_profile)
    p1, p2 = amp.grid.mesh()
    _write_table(cfg.output / "field.csv", "p1,p2,re,im",
                 [p1.ravel(), p2.ravel(), amp.values.real.ravel(), amp.values.imag.ravel()])
    density = time_density(amp, cfg.scale)
    factor = 2 * amp.n2 if cfg.scale == "normalized" else 8.0
    (cfg.output / "plot.gp").write_text(
        _heatmap_script("p1", "p2", f"|eta|^2/{factor:g}", f"($3**2+$4**2)/{factor:g}"))
    return {
        "grid": _grid_dict(axis),
        "n2": amp.n2,
        "norm_check": {
            "target": 2 * amp.n2,
            "norm_sq": amp.norm_sq,
            "grid_norm_sq": amp.grid_norm_sq(),
            "relative_deviation": abs(amp.norm_sq - 2 * amp.n2) / (2 * amp.n2),
        },
        "symmetry_error": amp.symmetry_error(),
        "diagonal_peak_count": diagonal_peak_count(density),
    }


def _run_one_channel_freq(cfg: ScenarioConfig) -> dict:
    params, inp = cfg.emitter, cfg.inputs
    grid = _frequency_grid(cfg, params.kappa)
    amp = eta_freq(params, inp, grid, profile=cfg.tolerance_profile)
    w1, w2 = grid.mesh()
    _write_table(cfg.output / "field.csv", "w1,w2,re,im",
                 [w1.ravel(), w2.ravel(), amp.values.real.ravel(), amp.values.imag.ravel()])
    (cfg.output / "plot.gp").write_text(_heatmap_script("w1", "w2", "|eta[w1,w2]|^2", "$3**2+$4**2"))
    norm = amp.grid_norm_sq()
    mag = np.abs(amp.values) ** 2
    i, j = np.unravel_index(np.argmax(mag), mag.shape)
    return {
        "grid": _grid_dict(grid.axis1),
        "n2": amp.n2,
        "norm_check": {
            "target": 2 * amp.n2,
            "grid_norm_sq": norm,
            "relative_deviation": abs(norm - 2 * amp.n2) / (2 * amp.n2),
            "note": "trapezoid over the frequency window; spectral tails outside it are not counted",
        },
        "symmetry_error": amp.symmetry_error(),
        "spectral_maximum": [float(grid.axis1.points[i]), float(grid.axis2.points[j])],
    }


def _write_channels(cfg: ScenarioConfig, fld, names: tuple[str, str]) -> None:
    a, b = fld.grid.mesh()
    cols = [[], [], [], [], []]
    for pair in PAIRS:
        vals = fld.pair(pair)
        cols[0].append(np.full(vals.size, int(pair)))
        cols[1].append(a.ravel())
        cols[2].append(b.ravel())
        cols[3].append(vals.real.ravel())
        cols[4].append(vals.imag.ravel())
    _write_table(cfg.output / "field.csv", f"channel_pair,{names[0]},{names[1]},re,im",
                 [np.concatenate(c) for c in cols], int_first=True)
    (cfg.output / "plot.gp").write_text(
        _heatmap_script(names[0], names[1], "split-channel |amplitude|^2 (channel_pair 12)",
                        "$4**2+$5**2", select="$1 == 12"))


def _run_two_channel_time(cfg: ScenarioConfig) -> dict:
    params, inp = cfg.emitter, cfg.inputs
    axis = _time_axis(cfg, params.total)
    fld = eta_ij_time(params, inp, Grid2D.square(axis), profile=cfg.tolerance_profile)
    _write_channels(cfg, fld, ("p1", "p2"))
    probs = channel_probabilities(fld)
    grid_probs = channel_probabilities(replace(fld, probabilities=None))
    return {
        "grid": _grid_dict(axis),
        "probabilities": dict(zip(("both_channel_1", "split", "both_channel_2"), probs)),
        "norm_check": {"total_probability": sum(probs), "grid_total_probability": sum(grid_probs),
                       "deviation": abs(sum(probs) - 1.0)},
    }


def _run_two_channel_freq(cfg: ScenarioConfig) -> dict:
    params, inp = cfg.emitter, cfg.inputs
    grid = _frequency_grid(cfg, params.total)
    fld = T_ij_freq(params, inp, grid, profile=cfg.tolerance_profile)
    _write_channels(cfg, fld, ("w1", "w2"))
    probs = channel_probabilities(fld)
    hom = hom_difference(fld)
    return {
        "grid": _grid_dict(grid.axis1),
        "probabilities": dict(zip(("both_channel_1", "split", "both_channel_2"), probs)),
        "norm_check": {"total_probability": sum(probs), "deviation": abs(sum(probs) - 1.0),
                       "note": "trapezoid over the frequency window; spectral tails outside it are not counted"},
        "hom_positive_fraction": float(np.mean(hom > 0)),
        "symmetry_errors": fld.symmetry_errors(),
    }


def _run_single_photon(cfg: ScenarioConfig) -> dict:
    params = cfg.emitter
    if not isinstance(params, EmitterParams):
        raise ConfigError("mode: single_photon needs a one-channel emitter")
    pulse = cfg.pulses[0]
    axis = _time_axis(cfg, params.kappa)
    check_grid(axis, [pulse], params.kappa)
    response = scalar_response(params, pulse, cfg.tolerance_profile)
    t = axis.points
    nu = response(t)
    xi = pulse.evaluate(t)
    _write_table(cfg.output / "field.csv", "t,re,im,xi_re,xi_im", [t, nu.real, nu.imag, xi.real, xi.imag])
    (cfg.output / "plot.gp").write_text("\n".join([
        "set datafile separator ','",
        "set xlabel 't'",
        "plot 'field.csv' every ::1 using 1:($4**2+$5**2) with lines title '|xi|^2', \\",
        "     '' every ::1 using 1:($2**2+$3**2) with lines title '|nu|^2'",
        "",
    ]))
    mesh = response.mesh
    norm = float(np.real(mesh.integral(np.abs(response.on_mesh) ** 2)))
    until = cfg.absorption_time
    return {
        "grid": _grid_dict(axis),
        f"absorbed_by_t{until:g}": absorbed_energy(params, pulse, until, cfg.tolerance_profile),
        "norm_check": {"target": 1.0, "norm_sq": norm, "deviation": abs(norm - 1.0)},
    }


def _run_validate(cfg: ScenarioConfig) -> tuple[dict, bool]:
    results = run_checks(cfg.checks or None)
    for r in results:
        print(r.line())
    ok = all(r.passed for r in results)
    return {
        "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail, "seconds": r.seconds} for r in results],
        "norm_check": {"all_passed": ok},
    }, ok


RUNNERS = {
    "one_channel_time": _run_one_channel_time,
    "one_channel_freq": _run_one_channel_freq,
    "two_channel_time": _run_two_channel_time,
    "two_channel_freq": _run_two_channel_freq,
    "single_photon": _run_single_photon,
}


def run(cfg: ScenarioConfig) -> int:
    """Execute a scenario, write its files and return the exit status."""
    cfg.output.mkdir(parents=True, exist_ok=True)
    meta: dict[str, Any] = {"mode": cfg.mode, "tolerance_profile": cfg.tolerance_profile}
    status = EXIT_OK
    if cfg.mode == "validate":
        body, ok = _run_validate(cfg)
        status = EXIT_OK if ok else EXIT_VALIDATION
    else:
        meta["params"] = _params_dict(cfg.emitter)
        meta["pulses"] = [_pulse_dict(p) for p in cfg.pulses]
        meta["scale"] = cfg.scale
        body = RUNNERS[cfg.mode](cfg)
    meta.update(body)
    (cfg.output / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tls2p", description="Two-photon scattering off a two-level emitter.")
    parser.add_argument("config", help="scenario file (JSON)")
    parser.add_argument("--kappa", type=float, help="override the coupling rate")
    parser.add_argument("--gamma", type=float, help="override the width of rising-exponential pulses")
    parser.add_argument("--omega", type=float, help="override the bandwidth of Gaussian pulses")
    parser.add_argument("--grid-points", type=int, help="override the number of grid points per axis")
    parser.add_argument("--out", help="override the output directory")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"kappa": args.kappa, "gamma": args.gamma, "omega": args.omega,
                 "grid_points": args.grid_points, "out": args.out}
    try:
        cfg = parse_config(args.config, overrides)
    except (ConfigError, ValueError) as exc:
        print(f"tls2p: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg)
    except ConfigError as exc:
        print(f"tls2p: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Tls2pError as exc:
        print(f"tls2p: {cfg.mode} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
