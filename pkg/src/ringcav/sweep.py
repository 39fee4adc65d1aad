"""Parameter sweeps, contour grids, and Monte Carlo aggregations behind every
theory curve: shifts vs |S| and N, purity/broadening contours with iso-level
extraction, conversion vs N along a fixed-broadening contour, thermal |S|
statistics, two-atom fringes, waist scans, and the dispersive shift curve."""

import csv
import json
import math
from dataclasses import dataclass

import numpy as np

from .arrays import AtomArray, lattice, sample_thermal, structure_factor
from .constants import TWO_PI, DEFAULT_WAVELENGTH
from .metrics import conversion_solver, dark_purity
from .params import CavityParams, cooperativity
from .steady import (DriveConfig, broadenings, resonance_shifts, steady_modes,
                     steady_modes_coupled)

__all__ = [
    "Axis",
    "Grid2D",
    "CurveSeries",
    "shifts_vs_s",
    "shifts_vs_n",
    "purity_contour",
    "delta_on_contour",
    "contour_polyline",
    "conversion_vs_n",
    "thermal_s_curve",
    "fringe_scan",
    "fringe_period",
    "waist_scan",
    "fit_waist_profile",
    "dispersive_shift_scan",
    "grid_to_csv",
    "curve_to_csv",
    "metadata_sidecar",
]


@dataclass(frozen=True, eq=False)
class Axis:
    label: str
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))


@dataclass(frozen=True, eq=False)
class Grid2D:
    """values[i, j] = f(x_axis.values[i], y_axis.values[j])."""

    x_axis: Axis
    y_axis: Axis
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.x_axis.values.size, self.y_axis.values.size):
            raise ValueError("values shape must be (len(x_axis), len(y_axis))")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True, eq=False)
class CurveSeries:
    x: np.ndarray
    y: np.ndarray
    y_err: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape:
            raise ValueError("x and y must have equal length")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        if self.y_err is not None:
            err = np.asarray(self.y_err, dtype=float)
            if err.shape != x.shape:
                raise ValueError("y_err must match x length")
            object.__setattr__(self, "y_err", err)


def shifts_vs_s(p: CavityParams, n: float, delta_atom: float,
                s_grid) -> tuple[CurveSeries, CurveSeries]:
    """Bright/dark resonance shifts over a |S| grid (linear in |S|)."""
    s_grid = np.asarray(s_grid, dtype=float)
    pairs = np.asarray([resonance_shifts(p, n, s, delta_atom) for s in s_grid])
    return (CurveSeries(s_grid, pairs[:, 0], label="shift_bright_rad_s"),
            CurveSeries(s_grid, pairs[:, 1], label="shift_dark_rad_s"))


def shifts_vs_n(p: CavityParams, n_max: int, delta_atom: float,
                abs_s: float = 1.0) -> tuple[CurveSeries, CurveSeries]:
    """Bright/dark shifts for N = 0..n_max at fixed |S|."""
    ns = np.arange(0, n_max + 1, dtype=float)
    pairs = np.asarray([resonance_shifts(p, n, abs_s, delta_atom) for n in ns])
    return (CurveSeries(ns, pairs[:, 0], label=f"shift_bright_rad_s_S{abs_s:g}"),
            CurveSeries(ns, pairs[:, 1], label=f"shift_dark_rad_s_S{abs_s:g}"))


def purity_contour(p: CavityParams, abs_s: float, nc_range: tuple[float, float],
                   delta_range: tuple[float, float],
                   resolution: int = 128) -> tuple[Grid2D, Grid2D]:
    """Dark-mode purity and relative broadening on a log-log (NC, Delta) grid."""
    if min(nc_range) <= 0 or min(delta_range) <= 0:
        raise ValueError("grid ranges must be strictly positive")
    c = cooperativity(p)
    nc = np.geomspace(nc_range[0], nc_range[1], resolution)
    deltas = np.geomspace(delta_range[0], delta_range[1], resolution)
    purity = np.empty((resolution, resolution))
    rel_broadening = np.empty((resolution, resolution))
    for i, nc_i in enumerate(nc):
        for j, delta_j in enumerate(deltas):
            purity[i, j] = dark_purity(p, nc_i / c, abs_s, delta_j).d
            rel_broadening[i, j] = broadenings(p, nc_i / c, abs_s, delta_j)[1] / p.kappa
    x = Axis("collective_cooperativity_NC", nc)
    y = Axis("delta_atom_rad_s", deltas)
    return (Grid2D(x, y, purity), Grid2D(x, y, rel_broadening))


def delta_on_contour(p: CavityParams, n: float, abs_s: float, level: float) -> float:
    """Probe-atom detuning putting the dark-mode broadening on dk/kappa = level,
    Delta = (gamma/2) sqrt(NC (1-|S|)/level - 1)."""
    if level <= 0:
        raise ValueError("contour level must be strictly positive")
    nc = n * cooperativity(p)
    arg = nc * (1.0 - abs_s) / level - 1.0
    if arg < 0:
        raise ValueError(
            f"broadening stays below {level:g} for all detunings at NC={nc:g}, |S|={abs_s:g}")
    return p.gamma / 2.0 * math.sqrt(arg)


_EDGE_OFFSETS = {0: ((0, 0), (1, 0)), 1: ((1, 0), (1, 1)),
                 2: ((0, 1), (1, 1)), 3: ((0, 0), (0, 1))}


def contour_polyline(grid: Grid2D, level: float) -> list[np.ndarray]:
    """Marching-squares iso-contour extraction with linear interpolation.

    Returns polylines as (n, 2) arrays of (x, y) coordinates; segments are
    chained by shared endpoints into maximal open or closed paths."""
    x = grid.x_axis.values
    y = grid.y_axis.values
    v = grid.values
    segments = []
    for i in range(x.size - 1):
        for j in range(y.size - 1):
            corners = np.array([v[i, j], v[i + 1, j], v[i, j + 1], v[i + 1, j + 1]])
            above = corners > level
            if above.all() or not above.any():
                continue
            crossings = []
            for edge in range(4):
                (ia, ja), (ib, jb) = _EDGE_OFFSETS[edge]
                va, vb = v[i + ia, j + ja], v[i + ib, j + jb]
                if (va > level) == (vb > level):
                    continue
                t = (level - va) / (vb - va)
                px = x[i + ia] + t * (x[i + ib] - x[i + ia])
                py = y[j + ja] + t * (y[j + jb] - y[j + ja])
                crossings.append((px, py))
            if len(crossings) == 2:
                segments.append((crossings[0], crossings[1]))
            elif len(crossings) == 4:
                # saddle: pair crossings by edge order (0-3, 1-2)
                segments.append((crossings[0], crossings[3]))
                segments.append((crossings[1], crossings[2]))
    return _chain_segments(segments)


def _chain_segments(segments) -> list[np.ndarray]:
    def key(pt):
        return (round(pt[0], 12), round(pt[1], 12))

    remaining = {idx: seg for idx, seg in enumerate(segments)}
    endpoints: dict[tuple, list[int]] = {}
    for idx, (a, b) in remaining.items():
        endpoints.setdefault(key(a), []).append(idx)
        endpoints.setdefault(key(b), []).append(idx)

    polylines = []
    while remaining:
        idx, (a, b) = next(iter(remaining.items()))
        del remaining[idx]
        path = [a, b]
        for end in (1, 0):
            while True:
                tip = key(path[-1] if end else path[0])
                candidates = [i for i in endpoints.get(tip, []) if i in remaining]
                if not candidates:
                    break
                nxt = candidates[0]
                pa, pb = remaining.pop(nxt)
                new_pt = pb if key(pa) == tip else pa
                if end:
                    path.append(new_pt)
                else:
                    path.insert(0, new_pt)
        polylines.append(np.asarray(path))
    return polylines


def conversion_vs_n(p: CavityParams, n_max: int, abs_s: float,
                    contour_level: float = 0.05) -> tuple[CurveSeries, CurveSeries]:
    """Normalized conversion chi/(eta_in eta_out) vs N, with Delta chosen per N
    on the dk/kappa = contour_level contour; dark drive (delta = dw2) and bright
    drive (delta = dw1)."""
    ns = np.arange(1, n_max + 1)
    eta = p.eta_in * p.eta_out
    dark = np.empty(ns.size)
    bright = np.empty(ns.size)
    for idx, n in enumerate(ns):
        delta_atom = delta_on_contour(p, float(n), abs_s, contour_level)
        dark[idx] = conversion_solver(p, float(n), abs_s, delta_atom).chi_normalized
        dw1, _ = resonance_shifts(p, float(n), abs_s, delta_atom)
        m = steady_modes_coupled(p, float(n), abs_s + 0.0j,
                                 DriveConfig(dw1, delta_atom, 1.0))
        bright[idx] = p.kappa_out * abs(m.a_minus) ** 2 / eta
    return (CurveSeries(ns.astype(float), dark, label="chi_normalized_dark"),
            CurveSeries(ns.astype(float), bright, label="chi_normalized_bright"))


def thermal_s_curve(sigma: float, n_range, trials: int = 1000, seed=None, *,
                    wavelength: float = DEFAULT_WAVELENGTH) -> CurveSeries:
    """Monte Carlo mean |S| of thermally displaced lattices vs atom number,
    with standard errors of the mean."""
    if trials < 2:
        raise ValueError("need at least 2 trials for an error bar")
    k = TWO_PI / wavelength
    seq = np.random.SeedSequence(seed)
    n_range = np.asarray(list(n_range), dtype=int)
    means = np.empty(n_range.size)
    errs = np.empty(n_range.size)
    for idx, n in enumerate(n_range):
        rng = np.random.default_rng(seq.spawn(1)[0])
        base = lattice(int(n), wavelength=wavelength)
        vals = np.empty(trials)
        for t in range(trials):
            vals[t] = structure_factor(sample_thermal(base, sigma, rng), k).magnitude
        means[idx] = vals.mean()
        errs[idx] = vals.std(ddof=1) / math.sqrt(trials)
    return CurveSeries(n_range.astype(float), means, errs, label=f"mean_abs_S_sigma{sigma:g}")


def fringe_scan(p: CavityParams, delta_atom: float, separations) -> CurveSeries:
    """Two-atom total transmission at delta = 0 versus atomic separation."""
    separations = np.asarray(separations, dtype=float)
    totals = np.empty(separations.size)
    for i, sep in enumerate(separations):
        a = AtomArray(np.array([0.0, sep]))
        m = steady_modes(p, a, DriveConfig(0.0, delta_atom, 1.0))
        totals[i] = p.kappa_out * (abs(m.a_plus) ** 2 + abs(m.a_minus) ** 2)
    return CurveSeries(separations, totals, label="n_total_vs_separation")


def fringe_period(series: CurveSeries) -> float:
    """Dominant modulation period from the discrete Fourier spectrum, with
    quadratic interpolation around the peak bin; requires a uniform grid."""
    x, y = series.x, series.y
    step = np.diff(x)
    if not np.allclose(step, step[0], rtol=1e-9, atol=0.0):
        raise ValueError("Fourier period estimate needs uniform sampling")
    amp = np.abs(np.fft.rfft(y - y.mean()))
    peak = int(np.argmax(amp[1:])) + 1
    if 1 <= peak < amp.size - 1:
        a, b, c = amp[peak - 1], amp[peak], amp[peak + 1]
        denom = a - 2 * b + c
        shift = 0.5 * (a - c) / denom if denom != 0 else 0.0
    else:
        shift = 0.0
    freq = (peak + shift) / (x.size * step[0])
    return 1.0 / freq


def waist_scan(p: CavityParams, axis: str, offsets) -> CurveSeries:
    """Bright-mode shift of a single trapped atom scanned transversely along
    y or z; the shift scales as the squared Gaussian coupling weight."""
    if axis not in ("y", "z"):
        raise ValueError("axis must be 'y' or 'z'")
    if p.waist_y is None or p.waist_z is None:
        raise ValueError("waist scan requires waist_y and waist_z in CavityParams")
    offsets = np.asarray(offsets, dtype=float)
    waist = p.waist_y if axis == "y" else p.waist_z
    weight2 = np.exp(-2.0 * offsets**2 / waist**2)
    delta_atom = TWO_PI * 30e6
    shift0, _ = resonance_shifts(p, 1.0, 1.0, delta_atom)
    return CurveSeries(offsets, shift0 * weight2, label=f"bright_shift_vs_{axis}_rad_s")


def fit_waist_profile(series: CurveSeries) -> tuple[float, float]:
    """(amplitude, waist) of shift(u) = A exp(-2 u^2 / w^2) by log-linear
    regression over points above 1e-6 of the maximum."""
    y = series.y
    mask = y > np.max(y) * 1e-6
    if np.count_nonzero(mask) < 3:
        raise ValueError("too few usable points for a waist fit")
    coeff = np.polyfit(series.x[mask] ** 2, np.log(y[mask]), 1)
    slope, intercept = coeff[0], coeff[1]
    if slope >= 0:
        raise ValueError("profile is not a decaying Gaussian")
    return float(np.exp(intercept)), float(math.sqrt(-2.0 / slope))


def dispersive_shift_scan(p: CavityParams, n: float, abs_s: float,
                          delta_range) -> tuple[CurveSeries, CurveSeries]:
    """Bright/dark shifts versus probe-atom detuning (extrema at Delta = gamma/2)."""
    deltas = np.asarray(delta_range, dtype=float)
    pairs = np.asarray([resonance_shifts(p, n, abs_s, d) for d in deltas])
    return (CurveSeries(deltas, pairs[:, 0], label="bright_shift_rad_s"),
            CurveSeries(deltas, pairs[:, 1], label="dark_shift_rad_s"))


def grid_to_csv(grid: Grid2D, path) -> None:
    """Long-format x,y,value rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([grid.x_axis.label, grid.y_axis.label, "value"])
        for i, xv in enumerate(grid.x_axis.values):
            for j, yv in enumerate(grid.y_axis.values):
                writer.writerow([f"{xv:.17g}", f"{yv:.17g}", f"{grid.values[i, j]:.17g}"])


def curve_to_csv(series: CurveSeries, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if series.y_err is None:
            writer.writerow(["x", series.label or "y"])
            for xv, yv in zip(series.x, series.y):
                writer.writerow([f"{xv:.17g}", f"{yv:.17g}"])
        else:
            writer.writerow(["x", series.label or "y", "y_err"])
            for xv, yv, ev in zip(series.x, series.y, series.y_err):
                writer.writerow([f"{xv:.17g}", f"{yv:.17g}", f"{ev:.17g}"])


def metadata_sidecar(path, parameters: dict, seed, content_hash: str) -> None:
    """JSON sidecar recording what produced a data file."""
    with open(path, "w") as fh:
        json.dump({"parameters": parameters, "seed": seed, "config_hash": content_hash},
                  fh, sort_keys=True, indent=2)
        fh.write("\n")
