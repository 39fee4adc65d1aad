"""Command-line front end.

Config files are flat `key = value` lines under bracketed section headers.
Frequencies accept hz/khz/mhz suffixes (bare numbers are Hz), lengths nm/um
(bare = meters), temperatures uk (bare = K). The config stores boundary units;
conversion to internal angular rates happens when physics objects are built.

Subcommands write CSV/JSON artifacts named <subcommand>_<hash>.<ext> into the
output directory and print a one-line summary. Exit codes: 0 success,
1 validation error, 2 numerical failure.
"""

import argparse
import hashlib
import json
import re
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import arrays, dynamics, metrics, spectra, sweep
from .constants import TWO_PI, M_RB87
from .params import (CavityParams, ThermalModel, cooperativity, g_from_cooperativity,
                     thermal_sigma)
from .steady import ConditioningError, DriveConfig, broadenings, collective_coupling, \
    resonance_shifts

__all__ = ["RunConfig", "ConfigError", "parse_config", "dump_config", "run_subcommand", "main"]


class ConfigError(ValueError):
    """Config rejection; message carries the offending line number."""


_FREQ_UNITS = {"": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6}
_LENGTH_UNITS = {"": 1.0, "nm": 1e-9, "um": 1e-6}
_TEMP_UNITS = {"": 1.0, "uk": 1e-6}

# (section, key) -> (kind, default in base units)
_SCHEMA = {
    ("cavity", "kappa"): ("freq", 33.6e3),
    ("cavity", "gamma"): ("freq", 6.07e6),
    ("cavity", "cooperativity"): ("plain", 12.5),
    ("cavity", "eta_in"): ("plain", 0.03),
    ("cavity", "eta_out"): ("plain", 0.28),
    ("cavity", "wavelength"): ("length", 780e-9),
    ("cavity", "fsr"): ("freq", 1472.091e6),
    ("cavity", "waist_y"): ("length", 6.5e-6),
    ("cavity", "waist_z"): ("length", 8.7e-6),
    ("thermal", "temperature"): ("temp", 5.2e-6),
    ("thermal", "trap_frequency"): ("freq", 120e3),
    ("thermal", "atom_mass"): ("plain", M_RB87),
    ("array", "atoms"): ("atoms", ("lattice", 4, 0.5, 0.0)),
    ("drive", "delta_atom"): ("freq", 30e6),
    ("drive", "e_in"): ("plain", 1.0),
    ("scan", "delta_min"): ("freq_opt", None),
    ("scan", "delta_max"): ("freq_opt", None),
    ("scan", "points"): ("int", 1401),
    ("sweep", "n_max"): ("int", 9),
    ("sweep", "target_s"): ("plain", 0.9),
    ("sweep", "contour_level"): ("plain", 0.05),
    ("sweep", "nc_min"): ("plain", 2.0),
    ("sweep", "nc_max"): ("plain", 2000.0),
    ("sweep", "contour_delta_min"): ("freq", 1e6),
    ("sweep", "contour_delta_max"): ("freq", 200e6),
    ("sweep", "resolution"): ("int", 128),
    ("sweep", "trials"): ("int", 1000),
    ("sweep", "fringe_max"): ("plain", 11.0),
    ("sweep", "fringe_step"): ("plain", 0.025),
    ("sweep", "waist_axis"): ("str", "y"),
    ("sweep", "waist_max"): ("length", 15e-6),
    ("sweep", "waist_points"): ("int", 61),
    ("phase", "displacement"): ("length", 195e-9),
    ("run", "seed"): ("int", 12345),
    ("run", "threads"): ("int", 1),
}

_FIELD_BY_KEY = {
    ("cavity", "kappa"): "kappa_hz",
    ("cavity", "gamma"): "gamma_hz",
    ("cavity", "cooperativity"): "coop",
    ("cavity", "eta_in"): "eta_in",
    ("cavity", "eta_out"): "eta_out",
    ("cavity", "wavelength"): "wavelength_m",
    ("cavity", "fsr"): "fsr_hz",
    ("cavity", "waist_y"): "waist_y_m",
    ("cavity", "waist_z"): "waist_z_m",
    ("thermal", "temperature"): "temperature_k",
    ("thermal", "trap_frequency"): "trap_frequency_hz",
    ("thermal", "atom_mass"): "atom_mass_kg",
    ("array", "atoms"): "atoms",
    ("drive", "delta_atom"): "delta_atom_hz",
    ("drive", "e_in"): "e_in",
    ("scan", "delta_min"): "scan_min_hz",
    ("scan", "delta_max"): "scan_max_hz",
    ("scan", "points"): "scan_points",
    ("sweep", "n_max"): "n_max",
    ("sweep", "target_s"): "target_s",
    ("sweep", "contour_level"): "contour_level",
    ("sweep", "nc_min"): "nc_min",
    ("sweep", "nc_max"): "nc_max",
    ("sweep", "contour_delta_min"): "contour_delta_min_hz",
    ("sweep", "contour_delta_max"): "contour_delta_max_hz",
    ("sweep", "resolution"): "resolution",
    ("sweep", "trials"): "trials",
    ("sweep", "waist_axis"): "waist_axis",
    ("sweep", "waist_max"): "waist_max_m",
    ("sweep", "waist_points"): "waist_points",
    ("sweep", "fringe_max"): "fringe_max_lambda",
    ("sweep", "fringe_step"): "fringe_step_lambda",
    ("phase", "displacement"): "displacement_m",
    ("run", "seed"): "seed",
    ("run", "threads"): "threads",
}
_KEY_BY_FIELD = {v: k for k, v in _FIELD_BY_KEY.items()}


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters in boundary units (Hz, m, K)."""

    kappa_hz: float
    gamma_hz: float
    coop: float
    eta_in: float
    eta_out: float
    wavelength_m: float
    fsr_hz: float
    waist_y_m: float
    waist_z_m: float
    temperature_k: float
    trap_frequency_hz: float
    atom_mass_kg: float
    atoms: tuple
    delta_atom_hz: float
    e_in: float
    scan_min_hz: float | None
    scan_max_hz: float | None
    scan_points: int
    n_max: int
    target_s: float
    contour_level: float
    nc_min: float
    nc_max: float
    contour_delta_min_hz: float
    contour_delta_max_hz: float
    resolution: int
    trials: int
    fringe_max_lambda: float
    fringe_step_lambda: float
    waist_axis: str
    waist_max_m: float
    waist_points: int
    displacement_m: float
    seed: int
    threads: int

    def cavity_params(self) -> CavityParams:
        kappa = TWO_PI * self.kappa_hz
        gamma = TWO_PI * self.gamma_hz
        return CavityParams(
            kappa=kappa,
            kappa_in=self.eta_in * kappa,
            kappa_out=self.eta_out * kappa,
            gamma=gamma,
            g=g_from_cooperativity(self.coop, kappa, gamma),
            wavelength=self.wavelength_m,
            fsr=self.fsr_hz,
            waist_y=self.waist_y_m,
            waist_z=self.waist_z_m,
        )

    def thermal_model(self) -> ThermalModel:
        return ThermalModel(self.temperature_k, TWO_PI * self.trap_frequency_hz,
                            self.atom_mass_kg)

    def atom_array(self) -> arrays.AtomArray:
        kind = self.atoms[0]
        if kind == "lattice":
            _, n, spacing, origin = self.atoms
            return arrays.lattice(n, spacing, wavelength=self.wavelength_m, origin=origin)
        if kind == "target_s":
            _, n, s = self.atoms
            return arrays.with_target_s(n, s, wavelength=self.wavelength_m)
        if kind == "positions":
            return arrays.array_from_lambda(self.atoms[1], wavelength=self.wavelength_m)
        if kind == "empty":
            return arrays.AtomArray(np.empty(0))
        raise ConfigError(f"unknown array spec kind {kind!r}")

    @property
    def delta_atom(self) -> float:
        return TWO_PI * self.delta_atom_hz


def _parse_number(token: str, kind: str, where: str) -> float:
    match = re.fullmatch(r"([-+0-9.eE]+)\s*([a-zA-Z]*)", token.strip())
    if not match:
        raise ConfigError(f"{where}: cannot parse value {token!r}")
    try:
        value = float(match.group(1))
    except ValueError:
        raise ConfigError(f"{where}: cannot parse number {match.group(1)!r}") from None
    unit = match.group(2).lower()
    tables = {"freq": _FREQ_UNITS, "freq_opt": _FREQ_UNITS, "length": _LENGTH_UNITS,
              "temp": _TEMP_UNITS, "plain": {"": 1.0}, "int": {"": 1.0}}
    table = tables[kind]
    if unit not in table:
        raise ConfigError(f"{where}: unit {unit!r} not valid here (expected one of "
                          f"{sorted(u for u in table if u)} or none)")
    return value * table[unit]


def _parse_atoms(token: str, where: str) -> tuple:
    match = re.fullmatch(r"(\w+)\s*\((.*)\)", token.strip())
    if not match:
        raise ConfigError(f"{where}: array spec must look like lattice(...), "
                          f"target_s(...), positions(...) or empty()")
    name, body = match.group(1), match.group(2).strip()
    if name == "empty":
        if body:
            raise ConfigError(f"{where}: empty() takes no arguments")
        return ("empty",)
    if name == "positions":
        try:
            values = tuple(float(v) for v in body.split(",") if v.strip())
        except ValueError:
            raise ConfigError(f"{where}: positions(...) needs a comma-separated "
                              f"list of coordinates in wavelength units") from None
        if not values:
            raise ConfigError(f"{where}: positions(...) needs at least one coordinate")
        return ("positions", values)
    kwargs = {}
    if body:
        for item in body.split(","):
            if "=" not in item:
                raise ConfigError(f"{where}: expected key=value in {name}(...)")
            key, _, val = item.partition("=")
            try:
                kwargs[key.strip()] = float(val)
            except ValueError:
                raise ConfigError(f"{where}: cannot parse {val.strip()!r}") from None
    if name == "lattice":
        extra = set(kwargs) - {"n", "spacing", "origin"}
        if extra or "n" not in kwargs:
            raise ConfigError(f"{where}: lattice needs n, optional spacing/origin")
        return ("lattice", int(kwargs["n"]), kwargs.get("spacing", 0.5),
                kwargs.get("origin", 0.0))
    if name == "target_s":
        extra = set(kwargs) - {"n", "s"}
        if extra or "n" not in kwargs or "s" not in kwargs:
            raise ConfigError(f"{where}: target_s needs n and s")
        return ("target_s", int(kwargs["n"]), kwargs["s"])
    raise ConfigError(f"{where}: unknown array constructor {name!r}")


def _collect_entries(text: str) -> dict:
    entries = {}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip().lower()
            if section not in {s for s, _ in _SCHEMA}:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        if section is None:
            raise ConfigError(f"line {lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if (section, key) not in _SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        entries[(section, key)] = (value.strip(), f"line {lineno}")
    return entries


def _build_config(entries: dict) -> "RunConfig":
    values = {}
    for (section, key), (kind, default) in _SCHEMA.items():
        field = _FIELD_BY_KEY[(section, key)]
        if (section, key) not in entries:
            values[field] = default
            continue
        token, where = entries[(section, key)]
        if kind == "atoms":
            values[field] = _parse_atoms(token, where)
        elif kind == "str":
            values[field] = token.lower()
        elif kind == "int":
            num = _parse_number(token, kind, where)
            if num != int(num):
                raise ConfigError(f"{where}: {key} must be an integer")
            values[field] = int(num)
        else:
            values[field] = _parse_number(token, kind, where)
    cfg = RunConfig(**values)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    try:
        cfg.cavity_params()
        cfg.thermal_model()
        cfg.atom_array()
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    if not 0 <= cfg.target_s <= 1:
        raise ConfigError("sweep target_s must lie in [0, 1]")
    if cfg.scan_points < 3:
        raise ConfigError("scan points must be at least 3")
    if (cfg.scan_min_hz is None) != (cfg.scan_max_hz is None):
        raise ConfigError("scan delta_min and delta_max must be set together")
    if cfg.scan_min_hz is not None and cfg.scan_min_hz >= cfg.scan_max_hz:
        raise ConfigError("scan delta_min must be below delta_max")
    if cfg.n_max < 1 or cfg.resolution < 2 or cfg.trials < 2:
        raise ConfigError("n_max >= 1, resolution >= 2, trials >= 2 required")
    if cfg.waist_axis not in ("y", "z"):
        raise ConfigError("sweep waist_axis must be y or z")
    if cfg.fringe_step_lambda <= 0 or cfg.fringe_max_lambda <= cfg.fringe_step_lambda:
        raise ConfigError("fringe_step must be positive and below fringe_max")
    if cfg.contour_level <= 0:
        raise ConfigError("contour_level must be strictly positive")
    if cfg.seed < 0 or cfg.threads < 1:
        raise ConfigError("seed must be >= 0 and threads >= 1")


def parse_config(text: str) -> RunConfig:
    """Parse and validate config text; missing keys fall back to the reported
    experiment parameters."""
    return _build_config(_collect_entries(text))


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def _dump_atoms(spec: tuple) -> str:
    kind = spec[0]
    if kind == "lattice":
        return f"lattice(n={spec[1]}, spacing={_fmt(spec[2])}, origin={_fmt(spec[3])})"
    if kind == "target_s":
        return f"target_s(n={spec[1]}, s={_fmt(spec[2])})"
    if kind == "positions":
        return "positions(" + ", ".join(_fmt(v) for v in spec[1]) + ")"
    return "empty()"


def dump_config(cfg: RunConfig) -> str:
    """Canonical config text in base units; reparses to an equal RunConfig."""
    lines = []
    current = None
    for field in fields(RunConfig):
        section, key = _KEY_BY_FIELD[field.name]
        value = getattr(cfg, field.name)
        if value is None:
            continue
        if section != current:
            if current is not None:
                lines.append("")
            lines.append(f"[{section}]")
            current = section
        if key == "atoms":
            lines.append(f"atoms = {_dump_atoms(value)}")
        else:
            lines.append(f"{key} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: RunConfig) -> str:
    """Git-style blob hash of the canonical config dump."""
    blob = dump_config(cfg).encode()
    return hashlib.sha1(b"blob %d\x00" % len(blob) + blob).hexdigest()[:12]


# ---------------------------------------------------------------------------
# subcommands

def _subseed(cfg: RunConfig, name: str) -> int:
    """Counter-based child seed so each subcommand's randomness is independent."""
    index = sorted(_RUNNERS).index(name)
    return int(np.random.SeedSequence(cfg.seed, spawn_key=(index,)).generate_state(1)[0])


def _auto_scan_range(p: CavityParams, a, delta_atom: float) -> tuple[float, float]:
    n_eff, s_eff = collective_coupling(p, a)
    if n_eff == 0:
        return -5.0 * p.kappa, 5.0 * p.kappa
    dw1, dw2 = resonance_shifts(p, n_eff, abs(s_eff), delta_atom)
    dk1, dk2 = broadenings(p, n_eff, abs(s_eff), delta_atom)
    lo = min(0.0, dw2, dw1) - 5.0 * (p.kappa + dk2)
    hi = max(0.0, dw2, dw1) + 5.0 * (p.kappa + dk1)
    return lo, hi


def _write_sidecar(out: Path, stem: str, cfg: RunConfig, extra: dict | None = None) -> None:
    payload = {"config": dump_config(cfg), "seed": cfg.seed, "hash": config_hash(cfg)}
    if extra:
        payload.update(extra)
    with open(out / f"{stem}.json", "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _cmd_spectrum(cfg: RunConfig, out: Path, stem: str) -> str:
    p = cfg.cavity_params()
    a = cfg.atom_array()
    if cfg.scan_min_hz is not None:
        lo, hi = TWO_PI * cfg.scan_min_hz, TWO_PI * cfg.scan_max_hz
    else:
        lo, hi = _auto_scan_range(p, a, cfg.delta_atom)
    s = spectra.scan(p, a, cfg.delta_atom, lo, hi, cfg.scan_points, cfg.e_in)
    spectra.scan_to_csv(s, out / f"{stem}.csv")
    _write_sidecar(out, stem, cfg)
    try:
        fit = spectra.fit_double_lorentzian(s)
        return (f"spectrum: peaks at {fit.first.center / TWO_PI / 1e3:.3f} / "
                f"{fit.second.center / TWO_PI / 1e3:.3f} kHz, "
                f"fwhm {fit.first.fwhm / TWO_PI / 1e3:.3f} / "
                f"{fit.second.fwhm / TWO_PI / 1e3:.3f} kHz")
    except (spectra.IdentifiabilityError, spectra.FitConvergenceError):
        fit = spectra.fit_lorentzian(s)
        return (f"spectrum: single peak at {fit.center / TWO_PI / 1e3:.3f} kHz, "
                f"fwhm {fit.fwhm / TWO_PI / 1e3:.3f} kHz")


def _cmd_purity(cfg: RunConfig, out: Path, stem: str) -> str:
    p = cfg.cavity_params()
    a = cfg.atom_array()
    n_eff, s_eff = collective_coupling(p, a)
    closed = metrics.dark_purity(p, n_eff, abs(s_eff), cfg.delta_atom)
    fitted = metrics.dark_purity_fitted(p, a.n_atoms, abs(s_eff), cfg.delta_atom)
    with open(out / f"{stem}.json", "w") as fh:
        json.dump({"closed_form": json.loads(metrics.report_to_json(closed)),
                   "fitted": json.loads(metrics.report_to_json(fitted)),
                   "hash": config_hash(cfg)}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return f"purity: D={closed.d:.6f} (closed form), {fitted.d:.6f} (fitted scan)"


def _cmd_contour(cfg: RunConfig, out: Path, stem: str) -> str:
    p = cfg.cavity_params()
    d_grid, k_grid = sweep.purity_contour(
        p, cfg.target_s, (cfg.nc_min, cfg.nc_max),
        (TWO_PI * cfg.contour_delta_min_hz, TWO_PI * cfg.contour_delta_max_hz),
        cfg.resolution)
    sweep.grid_to_csv(d_grid, out / f"{stem}_purity.csv")
    sweep.grid_to_csv(k_grid, out / f"{stem}_broadening.csv")
    lines = sweep.contour_polyline(k_grid, cfg.contour_level)
    points = np.vstack(lines) if lines else np.empty((0, 2))
    series = sweep.CurveSeries(points[:, 0], points[:, 1],
                               label=f"delta_rad_s_at_dk_{cfg.contour_level:g}")
    sweep.curve_to_csv(series, out / f"{stem}_level.csv")
    _write_sidecar(out, stem, cfg, {"contour_level": cfg.contour_level})
    return (f"contour: {cfg.resolution}x{cfg.resolution} grids at |S|={cfg.target_s:g}, "
            f"{points.shape[0]} polyline points at dk/kappa={cfg.contour_level:g}")


def _cmd_conversion(cfg: RunConfig, out: Path, stem: str) -> str:
    p = cfg.cavity_params()
    dark, bright = sweep.conversion_vs_n(p, cfg.n_max, cfg.target_s, cfg.contour_level)
    sweep.curve_to_csv(dark, out / f"{stem}_dark.csv")
    sweep.curve_to_csv(bright, out / f"{stem}_bright.csv")
    _write_sidecar(out, stem, cfg)
    return (f"conversion: normalized chi reaches {dark.y.max():.4f} (dark) vs "
            f"{bright.y.max():.4f} (bright) by N={cfg.n_max}")


def _cmd_phase(cfg: RunConfig, out: Path, stem: str) -> str:
    p = cfg.cavity_params()
    a = cfg.atom_array()
    report = metrics.phase_shift(p, a, cfg.displacement_m, cfg.delta_atom)
    pts = metrics.interference_correlation(report.delta_phi, 200,
                                           seed=_subseed(cfg, "phase"))
    fit = metrics.ellipse_fit(pts)
    metrics.points_to_csv(pts, out / f"{stem}_correlation.csv")
    with open(out / f"{stem}.json", "w") as fh:
        json.dump({"delta_phi_rad": report.delta_phi,
                   "two_k_x_rad": 2.0 * p.k * report.displacement,
                   "displacement_m": report.displacement,
                   "ellipse_fit_rad": fit.delta_phi,
                   "ellipse_degenerate": fit.degenerate,
                   "hash": config_hash(cfg)}, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return (f"phase: delta_phi={report.delta_phi:.9f} rad for X={cfg.displacement_m * 1e9:.3f} nm "
            f"(2kX={2.0 * p.k * report.displacement:.9f})")


def _cmd_thermal_s(cfg: RunConfig, out: Path, stem: str) -> str:
    sigma = thermal_sigma(cfg.thermal_model())
    series = sweep.thermal_s_curve(sigma, range(1, cfg.n_max + 1), cfg.trials,
                                   seed=_subseed(cfg, "thermal-s"),
                                   wavelength=cfg.wavelength_m)
    sweep.curve_to_csv(series, out / f"{stem}.csv")
    _write_sidecar(out, stem, cfg, {"sigma_m": sigma})
    return (f"thermal-s: sigma={sigma * 1e9:.2f} nm, mean |S|={series.y[-1]:.4f} "
            f"at N={cfg.n_max} over {cfg.trials} trials")


def _cmd_fringe(cfg: RunConfig, out: Path, stem: str) -> str:
    p = cfg.cavity_params()
    seps = np.arange(0.0, cfg.fringe_max_lambda, cfg.fringe_step_lambda) * cfg.wavelength_m
    series = sweep.fringe_scan(p, cfg.delta_atom, seps)
    sweep.curve_to_csv(series, out / f"{stem}.csv")
    _write_sidecar(out, stem, cfg)
    period = sweep.fringe_period(series)
    return (f"fringe: modulation period {period * 1e9:.4f} nm "
            f"(lambda/2 = {cfg.wavelength_m / 2 * 1e9:.4f} nm)")


def _cmd_waists(cfg: RunConfig, out: Path, stem: str) -> str:
    p = cfg.cavity_params()
    offsets = np.linspace(-cfg.waist_max_m, cfg.waist_max_m, cfg.waist_points)
    series = sweep.waist_scan(p, cfg.waist_axis, offsets)
    sweep.curve_to_csv(series, out / f"{stem}.csv")
    _write_sidecar(out, stem, cfg)
    _, fitted = sweep.fit_waist_profile(series)
    true = p.waist_y if cfg.waist_axis == "y" else p.waist_z
    return (f"waists: fitted w_{cfg.waist_axis}={fitted * 1e6:.4f} um "
            f"(input {true * 1e6:.4f} um)")


def _cmd_dispersive(cfg: RunConfig, out: Path, stem: str) -> str:
    p = cfg.cavity_params()
    a = cfg.atom_array()
    n_eff, s_eff = collective_coupling(p, a)
    deltas = np.linspace(TWO_PI * cfg.contour_delta_min_hz,
                         TWO_PI * cfg.contour_delta_max_hz, 241)
    bright, dark = sweep.dispersive_shift_scan(p, n_eff, abs(s_eff), deltas)
    sweep.curve_to_csv(bright, out / f"{stem}_bright.csv")
    sweep.curve_to_csv(dark, out / f"{stem}_dark.csv")
    _write_sidecar(out, stem, cfg)
    i_max = int(np.argmax(np.abs(bright.y)))
    return (f"dispersive: |bright shift| extremal at Delta/2pi="
            f"{deltas[i_max] / TWO_PI / 1e6:.3f} MHz (gamma/2 => "
            f"{cfg.gamma_hz / 2e6:.3f} MHz)")


def _cmd_dynamics_check(cfg: RunConfig, out: Path, stem: str) -> str:
    p = cfg.cavity_params()
    a = cfg.atom_array()
    d = DriveConfig(0.0, cfg.delta_atom, cfg.e_in)
    icfg = dynamics.IntegratorConfig(t_end=100.0 / p.kappa)
    t_eval = np.linspace(0.0, icfg.t_end, 501)
    full = dynamics.integrate_full(p, a, d, icfg, t_eval=t_eval)
    reduced = dynamics.integrate_reduced(p, a, d, icfg, t_eval=t_eval)
    from .steady import steady_modes
    ss = steady_modes(p, a, d)
    ss_vec = np.array([ss.a_plus, ss.a_minus])
    final = np.array([full.a_plus[-1], full.a_minus[-1]])
    final_dev = float(np.linalg.norm(final - ss_vec) / np.linalg.norm(ss_vec))
    traj_full = np.vstack([full.a_plus, full.a_minus])
    traj_red = np.vstack([reduced.a_plus, reduced.a_minus])
    traj_dev = float(np.max(np.abs(traj_full - traj_red)) / np.max(np.abs(traj_red)))
    excitation = dynamics.weak_excitation_check(full)
    dynamics.trajectory_to_csv(full, out / f"{stem}_full.csv")
    _write_sidecar(out, stem, cfg, {"final_rel_dev": final_dev, "traj_rel_dev": traj_dev,
                                    "max_excitation": excitation})
    if final_dev >= 1e-3:
        raise ArithmeticError(
            f"dynamics-check failed: final-state deviation {final_dev:.3e} >= 1e-3")
    return (f"dynamics-check: final-state dev {final_dev:.3e}, trajectory "
            f"full-vs-reduced dev {traj_dev:.3e}, max excitation {excitation:.3e}")


def _cmd_reproduce(cfg: RunConfig, out: Path, stem: str, figure: str) -> str:
    p = cfg.cavity_params()
    wrote = []

    def save_curve(series, part):
        sweep.curve_to_csv(series, out / f"{stem}_{part}.csv")
        wrote.append(part)

    if figure == "fig2":
        for part, a in (("a_empty", arrays.AtomArray(np.empty(0))),
                        ("a_s0", arrays.with_target_s(4, 0.0, wavelength=p.wavelength)),
                        ("a_s1", arrays.lattice(4, wavelength=p.wavelength))):
            lo, hi = _auto_scan_range(p, a, cfg.delta_atom)
            lo = min(lo, -5.0 * p.kappa)
            s = spectra.scan(p, a, cfg.delta_atom, lo, hi, cfg.scan_points, cfg.e_in)
            spectra.scan_to_csv(s, out / f"{stem}_{part}.csv")
            wrote.append(part)
        b1, b2 = sweep.shifts_vs_s(p, 4.0, cfg.delta_atom, np.linspace(0, 1, 51))
        save_curve(b1, "b_bright")
        save_curve(b2, "b_dark")
        for s_val, tag in ((1.0, "c_s1"), (0.9, "c_s09")):
            c1, c2 = sweep.shifts_vs_n(p, cfg.n_max, cfg.delta_atom, s_val)
            save_curve(c1, f"{tag}_bright")
            save_curve(c2, f"{tag}_dark")
    elif figure in ("fig3", "figs6"):
        s_values = (cfg.target_s,) if figure == "fig3" else (0.9, 0.6)
        for s_val in s_values:
            d_grid, k_grid = sweep.purity_contour(
                p, s_val, (cfg.nc_min, cfg.nc_max),
                (TWO_PI * cfg.contour_delta_min_hz, TWO_PI * cfg.contour_delta_max_hz),
                cfg.resolution)
            sweep.grid_to_csv(d_grid, out / f"{stem}_purity_S{s_val:g}.csv")
            sweep.grid_to_csv(k_grid, out / f"{stem}_broadening_S{s_val:g}.csv")
            wrote += [f"purity_S{s_val:g}", f"broadening_S{s_val:g}"]
        if figure == "fig3":
            ns = np.arange(1, cfg.n_max + 1, dtype=float)
            purities, relks = [], []
            for n in ns:
                delta = sweep.delta_on_contour(p, n, cfg.target_s, cfg.contour_level)
                purities.append(metrics.dark_purity(p, n, cfg.target_s, delta).d)
                relks.append(broadenings(p, n, cfg.target_s, delta)[1] / p.kappa)
            save_curve(sweep.CurveSeries(ns, purities, label="purity_on_contour"), "b_purity")
            save_curve(sweep.CurveSeries(ns, relks, label="dk_over_kappa"), "c_broadening")
    elif figure == "fig4":
        dark, bright = sweep.conversion_vs_n(p, cfg.n_max, cfg.target_s, cfg.contour_level)
        save_curve(dark, "dark")
        save_curve(bright, "bright")
    elif figure == "fig5":
        a = cfg.atom_array()
        xs = np.linspace(0.0, 2.5 * p.wavelength, 26)
        phis = [metrics.phase_shift(p, a, x, cfg.delta_atom).delta_phi for x in xs]
        save_curve(sweep.CurveSeries(xs, phis, label="delta_phi_rad"), "b_phase")
        report = metrics.phase_shift(p, a, cfg.displacement_m, cfg.delta_atom)
        pts = metrics.interference_correlation(report.delta_phi, 200,
                                               seed=_subseed(cfg, "reproduce"))
        metrics.points_to_csv(pts, out / f"{stem}_c_correlation.csv")
        wrote.append("c_correlation")
    elif figure == "figs2":
        deltas = np.linspace(TWO_PI * cfg.contour_delta_min_hz,
                             TWO_PI * cfg.contour_delta_max_hz, 241)
        a = cfg.atom_array()
        n_eff, s_eff = collective_coupling(p, a)
        bright, dark = sweep.dispersive_shift_scan(p, n_eff, abs(s_eff), deltas)
        save_curve(bright, "a_bright")
        save_curve(dark, "a_dark")
        lo, hi = _auto_scan_range(p, a, cfg.delta_atom)
        s = spectra.scan(p, a, cfg.delta_atom, lo, hi, cfg.scan_points, cfg.e_in)
        spectra.scan_to_csv(s, out / f"{stem}_b_spectrum.csv")
        wrote.append("b_spectrum")
    elif figure == "figs4":
        seps = np.arange(0.0, cfg.fringe_max_lambda, cfg.fringe_step_lambda) * p.wavelength
        save_curve(sweep.fringe_scan(p, cfg.delta_atom, seps), "fringes")
    elif figure == "figs5":
        for temp, tag in ((cfg.temperature_k, "cold"), (30e-6, "hot")):
            sigma = thermal_sigma(ThermalModel(temp, TWO_PI * cfg.trap_frequency_hz,
                                               cfg.atom_mass_kg))
            series = sweep.thermal_s_curve(sigma, range(1, cfg.n_max + 1), cfg.trials,
                                           seed=_subseed(cfg, "reproduce"),
                                           wavelength=cfg.wavelength_m)
            save_curve(series, tag)
    else:
        raise ConfigError(f"unknown figure {figure!r} (expected fig2|fig3|fig4|fig5|"
                          f"figS2|figS4|figS5|figS6)")
    _write_sidecar(out, stem, cfg, {"figure": figure})
    return f"reproduce {figure}: wrote {len(wrote)} data files"


_RUNNERS = {
    "spectrum": _cmd_spectrum,
    "purity": _cmd_purity,
    "contour": _cmd_contour,
    "conversion": _cmd_conversion,
    "phase": _cmd_phase,
    "thermal-s": _cmd_thermal_s,
    "fringe": _cmd_fringe,
    "waists": _cmd_waists,
    "dispersive": _cmd_dispersive,
    "dynamics-check": _cmd_dynamics_check,
    "reproduce": None,  # handled separately (figure argument)
}

_NUMERICAL_ERRORS = (ConditioningError, dynamics.StiffnessError,
                     spectra.FitConvergenceError, spectra.IdentifiabilityError,
                     ArithmeticError, np.linalg.LinAlgError)


def run_subcommand(name: str, cfg: RunConfig, out_dir, figure: str | None = None) -> str:
    """Execute one subcommand; returns the one-line summary (raises on failure)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if name == "reproduce":
        if not figure:
            raise ConfigError("reproduce needs a figure argument")
        stem = f"reproduce-{figure.lower()}_{config_hash(cfg)}"
        return _cmd_reproduce(cfg, out, stem, figure.lower())
    runner = _RUNNERS.get(name)
    if runner is None:
        raise ConfigError(f"unknown subcommand {name!r}")
    return runner(cfg, out, f"{name}_{config_hash(cfg)}")


def _apply_overrides(text: str, sets: list[str]) -> str:
    """Append --set section.key=value pairs as config lines."""
    extra = []
    for item in sets:
        match = re.fullmatch(r"(\w+)\.(\w+)\s*=\s*(.+)", item.strip())
        if not match:
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        extra.append(f"[{match.group(1)}]\n{match.group(2)} = {match.group(3)}")
    return text + "\n" + "\n".join(extra) + "\n" if extra else text


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="ringcav",
        description="Ring-cavity / atom-array simulator and analysis toolkit")
    parser.add_argument("subcommand", choices=sorted(_RUNNERS))
    parser.add_argument("figure", nargs="?", default=None,
                        help="figure name for `reproduce` "
                             "(fig2|fig3|fig4|fig5|figS2|figS4|figS5|figS6)")
    parser.add_argument("--config", type=Path, default=None, help="config file path")
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="root seed override")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (currently single-threaded execution)")
    parser.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override a config entry (repeatable)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0

    try:
        text = args.config.read_text() if args.config else ""
        text = _apply_overrides(text, args.set)
        if args.seed is not None:
            text += f"\n[run]\nseed = {args.seed}\n"
        if args.threads is not None:
            text += f"\n[run]\nthreads = {args.threads}\n"
        cfg = parse_config(text)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    try:
        summary = run_subcommand(args.subcommand, cfg, args.out, args.figure)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    print(summary)
    return 0


if __name__ == "__main__":
    sys.exit(main())
