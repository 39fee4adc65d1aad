"""Atom-array geometry: construction, displacement, thermal sampling, and the
structure factor S = (1/N) sum_j exp(2 i k x_j) that controls intermode coupling."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .constants import TWO_PI, DEFAULT_WAVELENGTH

__all__ = [
    "AtomArray",
    "StructureFactor",
    "structure_factor",
    "lattice",
    "array_from_lambda",
    "with_target_s",
    "displace",
    "sample_thermal",
    "coupling_weight",
    "snap_to_grid",
    "save_positions",
    "load_positions",
]


@dataclass(frozen=True, eq=False)
class AtomArray:
    """Ordered axial positions (m) with optional per-atom (y, z) transverse offsets (m)."""

    positions_x: np.ndarray
    transverse: np.ndarray | None = None

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.positions_x, dtype=float))
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise ValueError("positions_x must be a finite 1-D coordinate list")
        object.__setattr__(self, "positions_x", x)
        if self.transverse is not None:
            t = np.asarray(self.transverse, dtype=float)
            if t.shape != (x.size, 2) or not np.all(np.isfinite(t)):
                raise ValueError("transverse must have shape (N, 2) with finite entries")
            object.__setattr__(self, "transverse", t)

    @property
    def n_atoms(self) -> int:
        return self.positions_x.size


@dataclass(frozen=True)
class StructureFactor:
    """Complex structure factor; |value| <= 1 for any nonempty array."""

    value: complex

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def phase(self) -> float:
        return math.atan2(self.value.imag, self.value.real)


def structure_factor(a: AtomArray, k: float) -> StructureFactor:
    """S = (1/N) sum_j exp(2 i k x_j)."""
    if a.n_atoms == 0:
        raise ValueError("empty array has no structure factor")
    return StructureFactor(complex(np.mean(np.exp(2j * k * a.positions_x))))


def lattice(n: int, spacing: float = 0.5, *, wavelength: float = DEFAULT_WAVELENGTH,
            origin: float = 0.0) -> AtomArray:
    """Regular array with |S| = 1: spacing and origin in units of the wavelength,
    spacing restricted to integer multiples of lambda/2."""
    if n < 1:
        raise ValueError("lattice needs at least one atom")
    m = spacing / 0.5
    if spacing <= 0 or abs(m - round(m)) > 1e-9:
        raise ValueError(
            "lattice spacing must be an integer multiple of half the wavelength; "
            "use AtomArray directly for free placement")
    x = (origin + spacing * np.arange(n)) * wavelength
    return AtomArray(x)


def array_from_lambda(positions, *, wavelength: float = DEFAULT_WAVELENGTH) -> AtomArray:
    """Free placement with coordinates given in units of the wavelength."""
    return AtomArray(np.asarray(positions, dtype=float) * wavelength)


def with_target_s(n: int, target: float, *, wavelength: float = DEFAULT_WAVELENGTH,
                  origin: float = 0.0) -> AtomArray:
    """Deterministic array of n atoms with |S| = target.

    Atoms start on a lambda/2 lattice and are offset pairwise by +/-d; for odd n
    the last atom stays on-site, so d solves ((n-1) cos(2kd) + 1)/n = target.
    """
    if not 0.0 <= target <= 1.0:
        raise ValueError("target |S| must lie in [0, 1]")
    if n < 1:
        raise ValueError("need at least one atom")
    if n == 1:
        if target != 1.0:
            raise ValueError("a single atom always has |S| = 1")
        return lattice(1, wavelength=wavelength, origin=origin)

    k = TWO_PI / wavelength
    if n % 2 == 0:
        cos_val = target
    else:
        cos_val = (n * target - 1.0) / (n - 1.0)
    d = math.acos(min(1.0, max(-1.0, cos_val))) / (2.0 * k)

    def build(d_off: float) -> AtomArray:
        x = (origin + 0.5 * np.arange(n)) * wavelength
        signs = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
        if n % 2 == 1:
            signs[-1] = 0.0
        return AtomArray(x + signs * d_off)

    a = build(d)
    if abs(structure_factor(a, k).magnitude - target) > 1e-9:
        # closed form should be exact; bracketed root as a safety net
        f = lambda dd: structure_factor(build(dd), k).magnitude - target
        d = brentq(f, 0.0, wavelength / 4.0, xtol=1e-18)
        a = build(d)
    return a


def displace(a: AtomArray, x: float) -> AtomArray:
    """Rigid shift of every atom by x (m); S transforms as S -> S exp(2ikx)."""
    return AtomArray(a.positions_x + x, a.transverse)


def sample_thermal(a: AtomArray, sigma: float, seed=None) -> AtomArray:
    """Add i.i.d. Gaussian axial displacements of standard deviation sigma (m)."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma == 0:
        return a
    rng = np.random.default_rng(seed)
    return AtomArray(a.positions_x + rng.normal(0.0, sigma, a.n_atoms), a.transverse)


def coupling_weight(y, z, waist_y: float, waist_z: float):
    """Gaussian TEM00 amplitude factor exp(-y^2/wy^2 - z^2/wz^2) multiplying g."""
    if waist_y <= 0 or waist_z <= 0:
        raise ValueError("waists must be strictly positive")
    return np.exp(-np.square(y) / waist_y**2 - np.square(z) / waist_z**2)


def snap_to_grid(a: AtomArray, step: float = 5e-9) -> AtomArray:
    """Quantize axial positions to the tweezer placement grid (default 5 nm)."""
    if step <= 0:
        raise ValueError("step must be strictly positive")
    return AtomArray(np.round(a.positions_x / step) * step, a.transverse)


def save_positions(a: AtomArray, path) -> None:
    """One axial coordinate per line, meters, exponent notation."""
    with open(path, "w") as fh:
        for x in a.positions_x:
            fh.write(f"{x:.17e}\n")


def load_positions(path) -> AtomArray:
    with open(path) as fh:
        values = [float(line) for line in fh if line.strip()]
    return AtomArray(np.asarray(values))
