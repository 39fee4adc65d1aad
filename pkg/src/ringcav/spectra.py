"""Transmission-spectrum generation and the Lorentzian fitting pipeline.

Fluxes follow the detection convention n_± = kappa_out |a_±|^2 (photons/s)
with input flux |E_in|^2. Fits use area-normalized Lorentzians plus a
constant offset,

    n(delta) = offset + area * (fwhm/2pi) / ((delta - center)^2 + fwhm^2/4),

minimized by damped Gauss-Newton (Levenberg-style lambda schedule) with the
width log-parameterized to stay positive.
"""

import csv
import json
from dataclasses import dataclass, asdict

import numpy as np

from .arrays import AtomArray
from .params import CavityParams
from .steady import DriveConfig, steady_modes

__all__ = [
    "SpectrumScan",
    "LorentzianFit",
    "DoubleLorentzianFit",
    "FitConvergenceError",
    "IdentifiabilityError",
    "lorentzian",
    "scan",
    "add_shot_noise",
    "fit_lorentzian",
    "fit_double_lorentzian",
    "scan_to_csv",
    "scan_from_csv",
    "fit_to_json",
]

_TWO_PI = 2.0 * np.pi
_MAX_ITER = 200
_STEP_TOL = 1e-10


class FitConvergenceError(RuntimeError):
    """Fit did not meet the step tolerance; carries the last iterate."""

    def __init__(self, message, last_fit=None, residual_rms=None):
        super().__init__(message)
        self.last_fit = last_fit
        self.residual_rms = residual_rms


class IdentifiabilityError(RuntimeError):
    """Double-peak fit requested on data without two resolvable peaks."""


@dataclass(frozen=True, eq=False)
class SpectrumScan:
    """Sampled transmission spectra on a strictly increasing delta grid (rad/s)."""

    deltas: np.ndarray
    n_plus: np.ndarray
    n_minus: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.deltas, dtype=float)
        np_ = np.asarray(self.n_plus, dtype=float)
        nm = np.asarray(self.n_minus, dtype=float)
        if not (d.shape == np_.shape == nm.shape) or d.ndim != 1:
            raise ValueError("deltas, n_plus, n_minus must be 1-D arrays of equal length")
        if d.size >= 2 and not np.all(np.diff(d) > 0):
            raise ValueError("deltas must be strictly increasing")
        object.__setattr__(self, "deltas", d)
        object.__setattr__(self, "n_plus", np_)
        object.__setattr__(self, "n_minus", nm)

    @property
    def n_total(self) -> np.ndarray:
        return self.n_plus + self.n_minus

    def channel(self, name: str) -> np.ndarray:
        try:
            return {"plus": self.n_plus, "minus": self.n_minus, "total": self.n_total}[name]
        except KeyError:
            raise ValueError(f"unknown channel {name!r} (expected plus|minus|total)") from None


@dataclass(frozen=True)
class LorentzianFit:
    center: float      # rad/s
    fwhm: float        # rad/s
    area: float        # photons/s * rad/s
    offset: float      # photons/s
    residual_rms: float

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError("fwhm must be strictly positive")

    def peak_height(self) -> float:
        """Component value at its own center, offset excluded."""
        return self.area * 2.0 / (np.pi * self.fwhm)

    def component(self, deltas):
        """Component curve without the offset."""
        return lorentzian(deltas, self.center, self.fwhm, self.area, 0.0)


@dataclass(frozen=True)
class DoubleLorentzianFit:
    """Two components ordered by center; n1/n2 are the bright (wider) and dark
    (narrower) photon rates evaluated at the dark-peak center, as entering the
    purity n2/(n1+n2)."""

    first: LorentzianFit
    second: LorentzianFit
    offset: float
    n1: float
    n2: float
    residual_rms: float

    @property
    def dark(self) -> LorentzianFit:
        return self.first if self.first.fwhm <= self.second.fwhm else self.second

    @property
    def bright(self) -> LorentzianFit:
        return self.second if self.first.fwhm <= self.second.fwhm else self.first


def lorentzian(delta, center, fwhm, area, offset=0.0):
    """Area-normalized Lorentzian plus constant offset."""
    delta = np.asarray(delta, dtype=float)
    return offset + area * (fwhm / _TWO_PI) / ((delta - center) ** 2 + fwhm**2 / 4.0)


def scan(p: CavityParams, a: AtomArray, delta_atom: float, delta_min: float,
         delta_max: float, points: int, e_in: float = 1.0) -> SpectrumScan:
    """Evaluate steady states on a uniform probe-cavity detuning grid."""
    if points < 3:
        raise ValueError("need at least 3 scan points")
    if not delta_max > delta_min:
        raise ValueError("delta_max must exceed delta_min")
    deltas = np.linspace(delta_min, delta_max, points)
    n_plus = np.empty(points)
    n_minus = np.empty(points)
    for i, delta in enumerate(deltas):
        m = steady_modes(p, a, DriveConfig(delta, delta_atom, e_in))
        n_plus[i] = p.kappa_out * abs(m.a_plus) ** 2
        n_minus[i] = p.kappa_out * abs(m.a_minus) ** 2
    return SpectrumScan(deltas, n_plus, n_minus)


def add_shot_noise(s: SpectrumScan, dwell_time: float, seed=None) -> SpectrumScan:
    """Replace each flux by Poisson(flux * dwell)/dwell; deterministic per seed."""
    if not dwell_time > 0:
        raise ValueError("dwell_time must be strictly positive")
    rng = np.random.default_rng(seed)
    n_plus = rng.poisson(s.n_plus * dwell_time) / dwell_time
    n_minus = rng.poisson(s.n_minus * dwell_time) / dwell_time
    return SpectrumScan(s.deltas.copy(), n_plus, n_minus)


def _smooth3(y: np.ndarray) -> np.ndarray:
    s = y.copy()
    s[1:-1] = (y[:-2] + y[1:-1] + y[2:]) / 3.0
    return s


def _local_maxima(y: np.ndarray) -> np.ndarray:
    idx = np.where((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:]))[0] + 1
    return idx


def _half_max_width(deltas, y, i_peak, offset):
    """FWHM estimate from half-max crossings around index i_peak."""
    half = offset + (y[i_peak] - offset) / 2.0
    left = i_peak
    while left > 0 and y[left] > half:
        left -= 1
    right = i_peak
    while right < y.size - 1 and y[right] > half:
        right += 1
    width = deltas[right] - deltas[left]
    if width <= 0:
        width = 2.0 * (deltas[1] - deltas[0])
    return width


def _pack(theta_free, centers, widths_log, areas, offset):
    return np.concatenate([[offset], np.ravel(np.column_stack([centers, widths_log, areas]))])


def _model_multi(deltas, theta, n_peaks):
    y = np.full(deltas.shape, theta[0])
    for i in range(n_peaks):
        c, lw, area = theta[1 + 3 * i: 4 + 3 * i]
        fw = np.exp(lw)
        y = y + area * (fw / _TWO_PI) / ((deltas - c) ** 2 + fw**2 / 4.0)
    return y


def _jacobian_multi(deltas, theta, n_peaks):
    jac = np.empty((deltas.size, theta.size))
    jac[:, 0] = 1.0
    for i in range(n_peaks):
        c, lw, area = theta[1 + 3 * i: 4 + 3 * i]
        fw = np.exp(lw)
        den = (deltas - c) ** 2 + fw**2 / 4.0
        jac[:, 1 + 3 * i] = area * (fw / _TWO_PI) * 2.0 * (deltas - c) / den**2
        # d/d(log fwhm) = fw * d/d(fwhm)
        jac[:, 2 + 3 * i] = area / _TWO_PI * (fw / den - fw**3 / 2.0 / den**2)
        jac[:, 3 + 3 * i] = (fw / _TWO_PI) / den
    return jac


def _gauss_newton(deltas, y, theta0, n_peaks, weights=None):
    """Damped Gauss-Newton: lambda starts at 1e-3, x10 on residual increase,
    /10 on decrease; stop when the relative step drops below 1e-10."""
    w = np.ones_like(y) if weights is None else np.asarray(weights, dtype=float)
    theta = theta0.astype(float).copy()
    resid = w * (_model_multi(deltas, theta, n_peaks) - y)
    cost = float(resid @ resid)
    lam = 1e-3
    for _ in range(_MAX_ITER):
        jac = w[:, None] * _jacobian_multi(deltas, theta, n_peaks)
        jtj = jac.T @ jac
        grad = jac.T @ resid
        damp = np.diag(np.maximum(np.diag(jtj), 1e-300))
        try:
            step = np.linalg.solve(jtj + lam * damp, -grad)
        except np.linalg.LinAlgError:
            lam *= 10.0
            continue
        candidate = theta + step
        resid_new = w * (_model_multi(deltas, candidate, n_peaks) - y)
        cost_new = float(resid_new @ resid_new)
        if cost_new <= cost:
            rel_step = np.linalg.norm(step) / max(np.linalg.norm(theta), 1e-300)
            theta, resid, cost = candidate, resid_new, cost_new
            lam = max(lam / 10.0, 1e-14)
            if rel_step < _STEP_TOL:
                return theta, np.sqrt(cost / deltas.size)
        else:
            lam *= 10.0
            if lam > 1e15:
                break
    raise FitConvergenceError(
        f"no convergence in {_MAX_ITER} iterations",
        last_fit=theta, residual_rms=float(np.sqrt(cost / deltas.size)))


def _single_guess(deltas, y):
    ys = _smooth3(y)
    offset = float(np.min(ys))
    i_peak = int(np.argmax(ys))
    fw = _half_max_width(deltas, ys, i_peak, offset)
    area = (y[i_peak] - offset) * np.pi * fw / 2.0
    return np.array([offset, deltas[i_peak], np.log(fw), max(area, 1e-300)])


def fit_lorentzian(s: SpectrumScan, channel: str = "total", weights=None) -> LorentzianFit:
    """Single-peak weighted least-squares fit of the chosen channel."""
    y = s.channel(channel)
    if s.deltas.size < 5:
        raise ValueError("need at least 5 points spanning the peak")
    theta, rms = _gauss_newton(s.deltas, y, _single_guess(s.deltas, y), 1, weights)
    return LorentzianFit(center=float(theta[1]), fwhm=float(np.exp(theta[2])),
                         area=float(theta[3]), offset=float(theta[0]), residual_rms=rms)


def _double_guess(deltas, y):
    ys = _smooth3(y)
    offset = float(np.min(ys))
    maxima = _local_maxima(ys)
    # two largest local maxima; ties toward smaller |delta|
    order = sorted(maxima, key=lambda i: (-ys[i], abs(deltas[i])))
    picks = list(order[:2])
    if len(picks) < 2:
        # one visible peak: fit it alone and seed the second from the residual
        theta1, _ = _gauss_newton(deltas, y, _single_guess(deltas, y), 1)
        resid = y - _model_multi(deltas, theta1, 1)
        picks = [int(np.argmax(ys)), int(np.argmax(resid))]
    guesses = []
    for i in sorted(picks, key=lambda i: deltas[i]):
        fw = _half_max_width(deltas, ys, i, offset)
        area = max((y[i] - offset) * np.pi * fw / 2.0, 1e-300)
        guesses.append((deltas[i], np.log(fw), area))
    (c1, lw1, a1), (c2, lw2, a2) = guesses
    return np.array([offset, c1, lw1, a1, c2, lw2, a2])


def fit_double_lorentzian(s: SpectrumScan, channel: str = "total",
                          weights=None) -> DoubleLorentzianFit:
    """Sum-of-two-Lorentzians fit; errors if the fitted peaks are closer than
    one combined half-width (unresolved)."""
    y = s.channel(channel)
    if s.deltas.size < 9:
        raise ValueError("need at least 9 points spanning the peaks")
    theta, rms = _gauss_newton(s.deltas, y, _double_guess(s.deltas, y), 2, weights)
    comps = sorted(
        [(float(theta[1 + 3 * i]), float(np.exp(theta[2 + 3 * i])), float(theta[3 + 3 * i]))
         for i in range(2)],
        key=lambda t: t[0])
    offset = float(theta[0])
    fits = [LorentzianFit(center=c, fwhm=f, area=a, offset=offset, residual_rms=rms)
            for c, f, a in comps]
    first, second = fits
    separation = second.center - first.center
    if separation <= (first.fwhm + second.fwhm) / 2.0:
        raise IdentifiabilityError(
            f"peaks unresolved: separation {separation:.3e} rad/s within one combined "
            f"half-width {(first.fwhm + second.fwhm) / 2.0:.3e} rad/s")
    dark = first if first.fwhm <= second.fwhm else second
    bright = second if dark is first else first
    n2 = dark.peak_height()
    n1 = float(bright.component(dark.center))
    return DoubleLorentzianFit(first=first, second=second, offset=offset,
                               n1=n1, n2=n2, residual_rms=rms)


def scan_to_csv(s: SpectrumScan, path) -> None:
    """CSV with header delta_hz,n_plus,n_minus,n_total (delta in ordinary Hz)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta_hz", "n_plus", "n_minus", "n_total"])
        for d, npl, nmi in zip(s.deltas, s.n_plus, s.n_minus):
            writer.writerow([f"{d / _TWO_PI:.17g}", f"{npl:.17g}", f"{nmi:.17g}",
                             f"{npl + nmi:.17g}"])


def scan_from_csv(path) -> SpectrumScan:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:3] != ["delta_hz", "n_plus", "n_minus"]:
            raise ValueError("not a spectrum CSV (expected delta_hz,n_plus,n_minus,...)")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows)
    return SpectrumScan(data[:, 0] * _TWO_PI, data[:, 1], data[:, 2])


def fit_to_json(fit) -> str:
    """JSON record for a LorentzianFit or DoubleLorentzianFit."""
    return json.dumps(asdict(fit), sort_keys=True)
