"""Closed-form steady states of the two coupled traveling-wave modes, the
bright/dark eigenmode transform, and the analytic shift/broadening formulas.

The reduced equations of motion (drive amplitude E_in entering the forward
mode only) are

    da+/dt = (i delta - kappa/2 + G2/(i Delta - gamma/2)) a+
             + G2 S*/(i Delta - gamma/2) a-  - i sqrt(kappa_in) E_in
    da-/dt = (i delta - kappa/2 + G2/(i Delta - gamma/2)) a-
             + G2 S /(i Delta - gamma/2) a+

with G2 = sum_j g_j^2 (= N g^2 for uniform coupling) and S the
coupling-weighted structure factor.
"""

from dataclasses import dataclass

import numpy as np

from .arrays import AtomArray, StructureFactor, coupling_weight, structure_factor
from .params import CavityParams

__all__ = [
    "DriveConfig",
    "ModeAmplitudes",
    "EigenAmplitudes",
    "ConditioningError",
    "collective_coupling",
    "steady_modes",
    "steady_modes_coupled",
    "to_eigenmodes",
    "from_eigenmodes",
    "resonance_shifts",
    "broadenings",
    "atomic_amplitudes",
    "intracavity_field",
]


class ConditioningError(ArithmeticError):
    """2x2 steady-state system is numerically singular."""


@dataclass(frozen=True)
class DriveConfig:
    """Probe drive: delta = probe-cavity detuning, delta_atom = probe-atom
    detuning (both rad/s), e_in = input amplitude in sqrt(photons/s), real >= 0
    by global phase convention."""

    delta: float
    delta_atom: float
    e_in: float = 1.0

    def __post_init__(self):
        if self.e_in < 0:
            raise ValueError("e_in must be nonnegative (global phase convention)")


@dataclass(frozen=True)
class ModeAmplitudes:
    """Steady-state traveling-wave amplitudes <a+>, <a-> (sqrt photons)."""

    a_plus: complex
    a_minus: complex


@dataclass(frozen=True)
class EigenAmplitudes:
    """Bright/dark eigenmode amplitudes <c1>, <c2>."""

    c1: complex
    c2: complex


def collective_coupling(p: CavityParams, a: AtomArray) -> tuple[float, complex]:
    """Effective atom number and structure factor seen by the cavity.

    Returns (n_eff, s_eff) with n_eff = sum_j w_j^2 and
    s_eff = sum_j w_j^2 exp(2ikx_j) / sum_j w_j^2, where w_j is the transverse
    Gaussian coupling weight (w_j = 1 without transverse offsets). The
    collective coupling entering the equations of motion is G2 = n_eff * g^2.
    """
    n = a.n_atoms
    if n == 0:
        return 0.0, 0.0 + 0.0j
    if a.transverse is None:
        return float(n), structure_factor(a, p.k).value
    if p.waist_y is None or p.waist_z is None:
        raise ValueError("transverse offsets require waist_y and waist_z in CavityParams")
    w = coupling_weight(a.transverse[:, 0], a.transverse[:, 1], p.waist_y, p.waist_z)
    w2 = w**2
    n_eff = float(np.sum(w2))
    if n_eff == 0.0:
        return 0.0, 0.0 + 0.0j
    s_eff = complex(np.sum(w2 * np.exp(2j * p.k * a.positions_x)) / n_eff)
    return n_eff, s_eff


def _atomic_response(p: CavityParams, delta_atom: float) -> complex:
    d = 1j * delta_atom - p.gamma / 2.0
    if d == 0:
        raise ValueError("i*delta_atom - gamma/2 must be nonzero")
    return d


def steady_modes_coupled(p: CavityParams, n_eff: float, s_eff: complex,
                         d: DriveConfig) -> ModeAmplitudes:
    """Steady state for a given collective coupling (n_eff, s_eff); n_eff may be
    fractional. Closed 2x2 inversion of the coupled-mode equations."""
    resp = _atomic_response(p, d.delta_atom)
    diag = 1j * d.delta - p.kappa / 2.0 + n_eff * p.g**2 / resp
    off = n_eff * p.g**2 / resp
    det = diag * diag - off * off * abs(s_eff) ** 2
    scale = abs(diag) ** 2 + abs(off * s_eff) ** 2
    if abs(det) < 1e-14 * scale:
        raise ConditioningError(
            f"steady-state system nearly singular: |det|={abs(det):.3e} vs scale {scale:.3e}")
    drive = 1j * np.sqrt(p.kappa_in) * d.e_in
    a_plus = drive * diag / det
    a_minus = -drive * off * s_eff / det
    return ModeAmplitudes(complex(a_plus), complex(a_minus))


def steady_modes(p: CavityParams, a: AtomArray, d: DriveConfig) -> ModeAmplitudes:
    """Solve the coupled-mode equations at d/dt = 0 for an atom array."""
    n_eff, s_eff = collective_coupling(p, a)
    return steady_modes_coupled(p, n_eff, s_eff, d)


def to_eigenmodes(m: ModeAmplitudes, s: StructureFactor | complex) -> EigenAmplitudes:
    """c1 = (S/|S| a+ + a-)/sqrt2, c2 = (S/|S| a+ - a-)/sqrt2 (unitary)."""
    value = s.value if isinstance(s, StructureFactor) else complex(s)
    if abs(value) == 0:
        raise ValueError("eigenbasis undefined at S=0 (traveling-wave basis is already diagonal)")
    phase = value / abs(value)
    rt2 = np.sqrt(2.0)
    return EigenAmplitudes(
        complex((phase * m.a_plus + m.a_minus) / rt2),
        complex((phase * m.a_plus - m.a_minus) / rt2),
    )


def from_eigenmodes(e: EigenAmplitudes, s: StructureFactor | complex) -> ModeAmplitudes:
    """Inverse of to_eigenmodes."""
    value = s.value if isinstance(s, StructureFactor) else complex(s)
    if abs(value) == 0:
        raise ValueError("eigenbasis undefined at S=0")
    phase = value / abs(value)
    rt2 = np.sqrt(2.0)
    return ModeAmplitudes(
        complex(np.conj(phase) * (e.c1 + e.c2) / rt2),
        complex((e.c1 - e.c2) / rt2),
    )


def resonance_shifts(p: CavityParams, n: float, abs_s: float, delta_atom: float) -> tuple[float, float]:
    """Bright/dark resonance shifts
    dw_{1,2} = N C kappa gamma Delta (1 +/- |S|) / (4 Delta^2 + gamma^2) in rad/s.

    n may be fractional (effective atom number for weighted coupling)."""
    _check_ns(n, abs_s)
    base = 4.0 * n * p.g**2 * delta_atom / (4.0 * delta_atom**2 + p.gamma**2)
    return base * (1.0 + abs_s), base * (1.0 - abs_s)


def broadenings(p: CavityParams, n: float, abs_s: float, delta_atom: float) -> tuple[float, float]:
    """Bright/dark linewidth broadenings
    dk_{1,2} = kappa * N C (1 +/- |S|) gamma^2 / (4 Delta^2 + gamma^2) in rad/s."""
    _check_ns(n, abs_s)
    base = 4.0 * n * p.g**2 * p.gamma / (4.0 * delta_atom**2 + p.gamma**2)
    return base * (1.0 + abs_s), base * (1.0 - abs_s)


def _check_ns(n: float, abs_s: float) -> None:
    if n < 0:
        raise ValueError("atom number must be nonnegative")
    if not 0.0 <= abs_s <= 1.0:
        raise ValueError("|S| must lie in [0, 1]")


def atomic_amplitudes(p: CavityParams, a: AtomArray, d: DriveConfig,
                      m: ModeAmplitudes) -> tuple[np.ndarray, float]:
    """Adiabatic atomic coherences
    sigma_j = g_j (e^{ikx_j} a+ + e^{-ikx_j} a-) / (i Delta - gamma/2)
    and the total excitation sum |sigma_j|^2 (weak-excitation monitor)."""
    resp = _atomic_response(p, d.delta_atom)
    phases = np.exp(1j * p.k * a.positions_x)
    g_j = np.full(a.n_atoms, p.g)
    if a.transverse is not None:
        if p.waist_y is None or p.waist_z is None:
            raise ValueError("transverse offsets require waist_y and waist_z in CavityParams")
        g_j = g_j * coupling_weight(a.transverse[:, 0], a.transverse[:, 1], p.waist_y, p.waist_z)
    sigmas = g_j * (phases * m.a_plus + np.conj(phases) * m.a_minus) / resp
    return sigmas, float(np.sum(np.abs(sigmas) ** 2))


def intracavity_field(m: ModeAmplitudes, x, k: float):
    """Intracavity field E(x) = a+ e^{ikx} + a- e^{-ikx} (unit proportionality)."""
    phase = np.exp(1j * k * np.asarray(x, dtype=float))
    return m.a_plus * phase + m.a_minus * np.conj(phase)
