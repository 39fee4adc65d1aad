"""Headline physics metrics.

- dark-mode purity D = n2/(n1+n2) with the probe at the dark resonance
- photon conversion efficiency chi = kappa_out |<a->|^2 / |E_in|^2, exact and
  in the closed form valid at the dark resonance
- displacement-controlled phase shift dphi = 2 k X of the backward field
- beamsplitter interference correlations and the ellipse fit extracting dphi
"""

import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .arrays import AtomArray, displace
from .params import CavityParams, cooperativity
from .steady import (DriveConfig, broadenings, collective_coupling,
                     resonance_shifts, steady_modes, steady_modes_coupled)
from . import spectra

__all__ = [
    "PurityReport",
    "ConversionReport",
    "PhaseReport",
    "EllipsePhaseFit",
    "dark_purity",
    "dark_purity_fitted",
    "conversion_direct",
    "conversion_solver",
    "conversion_closed_form",
    "phase_shift",
    "interference_correlation",
    "ellipse_fit",
    "points_to_csv",
    "report_to_json",
]


@dataclass(frozen=True)
class PurityReport:
    d: float           # n2/(n1+n2), in [0,1]
    n1: float          # bright-mode photon rate at the dark resonance
    n2: float          # dark-mode photon rate at the dark resonance
    delta_used: float  # probe-cavity detuning of the evaluation (rad/s)


@dataclass(frozen=True)
class ConversionReport:
    chi: float
    chi_normalized: float  # chi / (eta_in * eta_out)
    eta_in: float
    eta_out: float

    def __post_init__(self):
        if not 0.0 <= self.chi <= 1.0:
            raise ValueError("chi must lie in [0, 1]")


@dataclass(frozen=True)
class PhaseReport:
    delta_phi: float     # rad, unwrapped
    displacement: float  # m


@dataclass(frozen=True)
class EllipsePhaseFit:
    delta_phi: float   # rad, principal value in [0, pi]
    degenerate: bool   # points collapsed onto a line (dphi in {0, pi})


def _dark_mode_rates(p: CavityParams, n: float, abs_s: float, delta_atom: float):
    """(n1, n2, delta_w2): eigenmode photon rates at the dark resonance."""
    if abs_s <= 0:
        raise ValueError("dark/bright eigenmodes undefined at S=0")
    dw1, dw2 = resonance_shifts(p, n, abs_s, delta_atom)
    dk1, dk2 = broadenings(p, n, abs_s, delta_atom)
    if dw1 == dw2:
        raise ValueError("degenerate eigenmode resonances (|S| too small)")
    amp2 = p.kappa_in / 2.0  # |i S/(sqrt2 |S|) sqrt(kappa_in) E_in|^2 with E_in = 1
    n2 = amp2 / ((p.kappa + dk2) / 2.0) ** 2
    n1 = amp2 / ((dw2 - dw1) ** 2 + ((p.kappa + dk1) / 2.0) ** 2)
    return n1, n2, dw2


def dark_purity(p: CavityParams, n: float, abs_s: float, delta_atom: float) -> PurityReport:
    """Closed-form purity from the eigenmode steady states at delta = dw2."""
    n1, n2, dw2 = _dark_mode_rates(p, n, abs_s, delta_atom)
    return PurityReport(d=n2 / (n1 + n2), n1=n1, n2=n2, delta_used=dw2)


def dark_purity_fitted(p: CavityParams, n: float, abs_s: float, delta_atom: float,
                       points: int = 2001) -> PurityReport:
    """Experiment-faithful purity: synthesize a total-transmission scan from the
    coupled-mode solver, fit the double Lorentzian, and read n1, n2 off the fit."""
    if abs_s <= 0:
        raise ValueError("dark/bright eigenmodes undefined at S=0")
    dw1, dw2 = resonance_shifts(p, n, abs_s, delta_atom)
    dk1, _ = broadenings(p, n, abs_s, delta_atom)
    lo = min(dw2, dw1) - 6.0 * p.kappa
    hi = max(dw2, dw1) + 6.0 * (p.kappa + dk1)
    deltas = np.linspace(lo, hi, points)
    fluxes = np.empty((points, 2))
    for i, delta in enumerate(deltas):
        m = steady_modes_coupled(p, n, abs_s + 0.0j, DriveConfig(delta, delta_atom, 1.0))
        fluxes[i] = p.kappa_out * abs(m.a_plus) ** 2, p.kappa_out * abs(m.a_minus) ** 2
    s = spectra.SpectrumScan(deltas, fluxes[:, 0], fluxes[:, 1])
    fit = spectra.fit_double_lorentzian(s)
    return PurityReport(d=fit.n2 / (fit.n1 + fit.n2), n1=fit.n1, n2=fit.n2,
                        delta_used=fit.dark.center)


def conversion_solver(p: CavityParams, n: float, abs_s: float,
                      delta_atom: float) -> ConversionReport:
    """Exact chi from the steady-state solver at the dark resonance for a given
    collective coupling (n may be fractional)."""
    if n == 0:
        return ConversionReport(0.0, 0.0, p.eta_in, p.eta_out)
    _, dw2 = resonance_shifts(p, n, abs_s, delta_atom)
    m = steady_modes_coupled(p, n, abs_s + 0.0j, DriveConfig(dw2, delta_atom, 1.0))
    chi = p.kappa_out * abs(m.a_minus) ** 2
    return ConversionReport(chi, chi / (p.eta_in * p.eta_out), p.eta_in, p.eta_out)


def conversion_direct(p: CavityParams, a: AtomArray, delta_atom: float) -> ConversionReport:
    """Exact chi for an atom array, probe at the dark resonance."""
    n_eff, s_eff = collective_coupling(p, a)
    return conversion_solver(p, n_eff, abs(s_eff), delta_atom)


def conversion_closed_form(p: CavityParams, n: float, abs_s: float,
                           delta_atom: float) -> ConversionReport:
    """Closed-form chi at the dark resonance,

        chi = eta_in eta_out 4|S|^2 NC /
              {(1+d)^2 [4|S|^2 NC + (1+3|S|)d + (1-|S|)/d + 2(1+|S|)]}

    with d the relative dark-mode broadening NC(1-|S|)gamma^2/(4Delta^2+gamma^2).
    The expression degenerates at |S| = 1, where the analytic limit
    chi = eta_in eta_out is substituted."""
    if not 0.0 <= abs_s <= 1.0:
        raise ValueError("|S| must lie in [0, 1]")
    eta = p.eta_in * p.eta_out
    nc = n * cooperativity(p)
    if nc == 0:
        return ConversionReport(0.0, 0.0, p.eta_in, p.eta_out)
    if abs_s == 1.0:
        return ConversionReport(eta, 1.0, p.eta_in, p.eta_out)
    d = nc * (1.0 - abs_s) * p.gamma**2 / (4.0 * delta_atom**2 + p.gamma**2)
    inner = (4.0 * abs_s**2 * nc + (1.0 + 3.0 * abs_s) * d
             + (1.0 - abs_s) / d + 2.0 * (1.0 + abs_s))
    chi = eta * 4.0 * abs_s**2 * nc / ((1.0 + d) ** 2 * inner)
    return ConversionReport(chi, chi / eta, p.eta_in, p.eta_out)


def phase_shift(p: CavityParams, a: AtomArray, displacement: float,
                delta_atom: float) -> PhaseReport:
    """Unwrapped phase change of <a-> when the array is displaced by X.

    The backward phase is tracked along a fine displacement path from 0 to X
    (steps < lambda/8 so each wrapped increment stays below pi), giving the
    total dphi = 2kX rather than its value mod 2pi."""
    n_eff, s_eff = collective_coupling(p, a)
    if n_eff == 0 or abs(s_eff) < 1e-12:
        raise ValueError("phase of <a-> undefined without backward scattering (S=0)")
    _, dw2 = resonance_shifts(p, n_eff, abs(s_eff), delta_atom)
    drive = DriveConfig(dw2, delta_atom, 1.0)
    n_steps = max(1, int(math.ceil(abs(displacement) / (p.wavelength / 8.0))))
    path = np.linspace(0.0, displacement, n_steps + 1)
    args = np.asarray([
        np.angle(steady_modes(p, displace(a, x), drive).a_minus) for x in path])
    unwrapped = np.unwrap(args)
    return PhaseReport(delta_phi=float(unwrapped[-1] - unwrapped[0]),
                       displacement=displacement)


def interference_correlation(delta_phi: float, theta_samples: int = 200, seed=None,
                             noise_sigma: float = 0.0) -> np.ndarray:
    """Correlation points (cos phi1, cos phi2) = (cos theta, cos(theta + dphi))
    for a uniformly distributed shot-to-shot interferometer phase theta."""
    if theta_samples < 8:
        raise ValueError("need at least 8 sample points")
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, theta_samples)
    pts = np.column_stack([np.cos(theta), np.cos(theta + delta_phi)])
    if noise_sigma > 0:
        pts = pts + rng.normal(0.0, noise_sigma, pts.shape)
    return pts


def ellipse_fit(points) -> EllipsePhaseFit:
    """Recover dphi (mod-pi principal value, sign fixed by the conic cross-term)
    from correlation points via algebraic conic least squares plus a refinement
    pass on the centered form x^2 + y^2 - 2 cos(dphi) xy = sin^2(dphi)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 8:
        raise ValueError("need at least 8 (cos phi1, cos phi2) points")
    x, y = pts[:, 0], pts[:, 1]

    corr = np.corrcoef(x, y)[0, 1]
    if 1.0 - abs(corr) < 1e-12:
        return EllipsePhaseFit(delta_phi=0.0 if corr > 0 else np.pi, degenerate=True)

    # algebraic conic fit: smallest singular vector of [x^2, xy, y^2, x, y, 1];
    # for the centered correlation ellipse cos(dphi) = -B/(A+C), invariant
    # under the fit's arbitrary overall scale
    design = np.column_stack([x * x, x * y, y * y, x, y, np.ones_like(x)])
    _, _, vt = np.linalg.svd(design, full_matrices=False)
    ca, cb, cc = vt[-1][:3]
    cos_fit = -cb / (ca + cc) if ca + cc != 0 else 0.0

    # refinement pass on the centered form: linear LS for (cos dphi, sin^2 dphi)
    # in x^2 + y^2 = 2 cos(dphi) xy + sin^2(dphi)
    u = x * x + y * y
    design2 = np.column_stack([2.0 * x * y, np.ones_like(u)])
    (cos_refined, _), *_ = np.linalg.lstsq(design2, u, rcond=None)
    if np.isfinite(cos_refined):
        cos_fit = cos_refined
    return EllipsePhaseFit(delta_phi=float(np.arccos(np.clip(cos_fit, -1.0, 1.0))),
                           degenerate=False)


def points_to_csv(points, path) -> None:
    """CSV point cloud with header cos_phi1,cos_phi2."""
    pts = np.asarray(points, dtype=float)
    with open(path, "w", newline="") as fh:
        fh.write("cos_phi1,cos_phi2\n")
        for x, y in pts:
            fh.write(f"{x:.17g},{y:.17g}\n")


def report_to_json(report) -> str:
    return json.dumps(asdict(report), sort_keys=True)
