"""Cavity and thermal parameter containers plus derived-quantity calculators.

Rates (kappa, kappa_in, kappa_out, gamma, g, trap_frequency) are angular
frequencies in rad/s; fsr is an ordinary frequency in Hz; lengths in meters;
temperature in kelvin.
"""

import math
from dataclasses import dataclass, replace

from .constants import TWO_PI, HBAR, K_B, C_LIGHT, M_RB87, DEFAULT_WAVELENGTH

__all__ = [
    "CavityParams",
    "ThermalModel",
    "experiment_defaults",
    "experiment_thermal",
    "cooperativity",
    "g_from_cooperativity",
    "finesse",
    "mirror_budget",
    "cavity_length",
    "c0_from_geometry",
    "thermal_sigma",
    "mean_phonon",
]


@dataclass(frozen=True)
class CavityParams:
    """Ring-cavity rates and geometry.

    kappa      total cavity field decay rate (rad/s)
    kappa_in   input-mirror coupling rate (rad/s)
    kappa_out  output-mirror coupling rate (rad/s)
    gamma      atomic decay rate (rad/s)
    g          single-atom coupling to each traveling-wave mode (rad/s)
    wavelength probe wavelength (m)
    fsr        free spectral range (Hz), optional
    waist_y/z  TEM00 mode waists (m), optional
    """

    kappa: float
    kappa_in: float
    kappa_out: float
    gamma: float
    g: float
    wavelength: float = DEFAULT_WAVELENGTH
    fsr: float | None = None
    waist_y: float | None = None
    waist_z: float | None = None

    def __post_init__(self):
        for name in ("kappa", "kappa_in", "kappa_out", "gamma"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.g < 0:
            raise ValueError("g must be nonnegative")
        if self.kappa_in + self.kappa_out > self.kappa * (1 + 1e-12):
            raise ValueError("kappa_in + kappa_out must not exceed kappa")
        if not self.wavelength > 0:
            raise ValueError("wavelength must be strictly positive")
        if self.fsr is not None and not self.fsr > 0:
            raise ValueError("fsr must be strictly positive")
        for name in ("waist_y", "waist_z"):
            w = getattr(self, name)
            if w is not None and not w > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def k(self) -> float:
        """Probe wavenumber 2*pi/wavelength (rad/m)."""
        return TWO_PI / self.wavelength

    @property
    def eta_in(self) -> float:
        return self.kappa_in / self.kappa

    @property
    def eta_out(self) -> float:
        return self.kappa_out / self.kappa

    def with_cooperativity(self, c: float) -> "CavityParams":
        """Copy with g set so that the single-atom cooperativity equals c."""
        return replace(self, g=g_from_cooperativity(c, self.kappa, self.gamma))


@dataclass(frozen=True)
class ThermalModel:
    """Trapped-atom thermal state: temperature (K), trap frequency (rad/s), mass (kg)."""

    temperature: float
    trap_frequency: float
    atom_mass: float = M_RB87

    def __post_init__(self):
        for name in ("temperature", "trap_frequency", "atom_mass"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


def experiment_defaults() -> CavityParams:
    """Reported operating parameters: kappa/2pi = 33.6 kHz, gamma/2pi = 6.07 MHz,
    C = 12.5, eta_in = 0.03, eta_out = 0.28, FSR = 1472.091 MHz, waists 6.5/8.7 um."""
    kappa = TWO_PI * 33.6e3
    gamma = TWO_PI * 6.07e6
    return CavityParams(
        kappa=kappa,
        kappa_in=0.03 * kappa,
        kappa_out=0.28 * kappa,
        gamma=gamma,
        g=g_from_cooperativity(12.5, kappa, gamma),
        wavelength=DEFAULT_WAVELENGTH,
        fsr=1472.091e6,
        waist_y=6.5e-6,
        waist_z=8.7e-6,
    )


def experiment_thermal() -> ThermalModel:
    """Post-sideband-cooling thermal state: 5.2 uK in a 2pi x 120 kHz trap."""
    return ThermalModel(temperature=5.2e-6, trap_frequency=TWO_PI * 120e3)


def cooperativity(p: CavityParams) -> float:
    """Single-atom cooperativity C = 4 g^2 / (kappa * gamma) per traveling-wave mode."""
    return 4.0 * p.g**2 / (p.kappa * p.gamma)


def g_from_cooperativity(c: float, kappa: float, gamma: float) -> float:
    """Inverse of the cooperativity definition: g = sqrt(C * kappa * gamma / 4)."""
    if c < 0:
        raise ValueError("cooperativity must be nonnegative")
    return math.sqrt(c * kappa * gamma) / 2.0


def finesse(fsr: float, kappa: float) -> float:
    """Finesse = FSR / linewidth = fsr / (kappa / 2pi), fsr in Hz, kappa in rad/s."""
    if fsr <= 0 or kappa <= 0:
        raise ValueError("fsr and kappa must be strictly positive")
    return fsr * TWO_PI / kappa

def mirror_budget(f: float) -> float:
    """Total mirror loss + transmission per round trip, 2pi/F (fraction, not ppm)."""
    if f <= 0:
        raise ValueError("finesse must be strictly positive")
    return TWO_PI / f


def cavity_length(fsr: float) -> float:
    """Ring round-trip length L = c0 / fsr (m)."""
    if fsr <= 0:
        raise ValueError("fsr must be strictly positive")
    return C_LIGHT / fsr


def c0_from_geometry(f: float, k: float, waist_y: float, waist_z: float) -> tuple[float, float]:
    """Geometric cooperativity C0 = 6F/(k^2 pi wy wz) and its linear-polarization
    half C0/2 (the cavity supports linear polarizations only)."""
    if min(f, k, waist_y, waist_z) <= 0:
        raise ValueError("all geometry inputs must be strictly positive")
    c0 = 6.0 * f / (k**2 * math.pi * waist_y * waist_z)
    return c0, c0 / 2.0


def thermal_sigma(t: ThermalModel) -> float:
    """Axial position spread sigma = sqrt(hbar/(2 m w_m) * coth(hbar w_m / (2 kB T))) in m."""
    x = HBAR * t.trap_frequency / (2.0 * K_B * t.temperature)
    return math.sqrt(HBAR / (2.0 * t.atom_mass * t.trap_frequency) / math.tanh(x))


def mean_phonon(t: ThermalModel) -> float:
    """Bose occupation of the trap mode, 1/(exp(hbar w_m / kB T) - 1)."""
    x = HBAR * t.trap_frequency / (K_B * t.temperature)
    if x > 700.0:  # exp would overflow; occupation is exp(-x) to double precision
        return math.exp(-min(x, 745.0))
    return 1.0 / math.expm1(x)
