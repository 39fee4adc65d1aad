import math

import numpy as np
import pytest

from ringcav import (CavityParams, ThermalModel, c0_from_geometry, cavity_length,
                     cooperativity, finesse, g_from_cooperativity, mean_phonon,
                     mirror_budget, thermal_sigma)
from ringcav.constants import TWO_PI, HBAR, K_B, M_RB87

KAPPA = TWO_PI * 33.6e3
GAMMA = TWO_PI * 6.07e6


def test_cooperativity_reported_value(paper):
    assert cooperativity(paper) == pytest.approx(12.5, rel=1e-12)


def test_cooperativity_zero_coupling():
    p = CavityParams(kappa=KAPPA, kappa_in=0.03 * KAPPA, kappa_out=0.28 * KAPPA,
                     gamma=GAMMA, g=0.0)
    assert cooperativity(p) == 0.0


def test_cooperativity_from_g_value():
    # inverting C = 4g^2/(kappa gamma) at C = 12.5 gives g/2pi = 0.798 MHz
    p = CavityParams(kappa=KAPPA, kappa_in=0.03 * KAPPA, kappa_out=0.28 * KAPPA,
                     gamma=GAMMA, g=TWO_PI * 0.7983e6)
    assert cooperativity(p) == pytest.approx(12.5, rel=1e-3)


def test_g_from_cooperativity_examples():
    assert g_from_cooperativity(0.0, KAPPA, GAMMA) == 0.0
    g = g_from_cooperativity(12.5, KAPPA, GAMMA)
    assert g / TWO_PI == pytest.approx(0.798342e6, rel=1e-5)
    assert g_from_cooperativity(50.0, KAPPA, GAMMA) == pytest.approx(2 * g, rel=1e-12)
    with pytest.raises(ValueError):
        g_from_cooperativity(-1.0, KAPPA, GAMMA)


def test_cooperativity_round_trip(rng):
    for _ in range(50):
        c = rng.uniform(0.01, 100)
        kappa = rng.uniform(1e3, 1e7)
        gamma = rng.uniform(1e5, 1e9)
        p = CavityParams(kappa=kappa, kappa_in=0.1 * kappa, kappa_out=0.1 * kappa,
                         gamma=gamma, g=g_from_cooperativity(c, kappa, gamma))
        assert cooperativity(p) == pytest.approx(c, rel=1e-12)


def test_finesse_values():
    assert finesse(1472.091e6, KAPPA) == pytest.approx(4.3812e4, rel=1e-4)
    assert finesse(1.0, TWO_PI) == pytest.approx(1.0, rel=1e-12)
    assert finesse(1472.091e6, TWO_PI * 33.7e3) == pytest.approx(4.368e4, rel=1e-3)


def test_mirror_budget():
    assert mirror_budget(4.4e4) * 1e6 == pytest.approx(142.8, rel=1e-3)  # ppm
    assert mirror_budget(TWO_PI * 1e6) == pytest.approx(1e-6, rel=1e-12)
    assert mirror_budget(4.37e4) * 1e6 == pytest.approx(143.78, rel=1e-3)


def test_budget_finesse_product_exact():
    for f in (1.0, 4.4e4, 1e7):
        assert mirror_budget(f) * f == pytest.approx(TWO_PI, rel=1e-15)


def test_cavity_length():
    assert cavity_length(1472.091e6) == pytest.approx(203.6508e-3, rel=1e-5)
    assert cavity_length(299792458.0) == pytest.approx(1.0, rel=1e-15)
    assert cavity_length(1500e6) == pytest.approx(199.862e-3, rel=1e-4)


def test_c0_from_geometry():
    k = TWO_PI / 780e-9
    c0, half = c0_from_geometry(4.4e4, k, 6.5e-6, 8.7e-6)
    assert c0 == pytest.approx(22.9, abs=0.15)
    assert half == pytest.approx(c0 / 2, rel=1e-15)
    # doubling F doubles C0; waist product scales inversely
    c0_double, _ = c0_from_geometry(8.8e4, k, 6.5e-6, 8.7e-6)
    assert c0_double == pytest.approx(2 * c0, rel=1e-12)
    c0_a, _ = c0_from_geometry(4.4e4, k, 13e-6, 8.7e-6)
    c0_b, _ = c0_from_geometry(4.4e4, k, 6.5e-6, 17.4e-6)
    assert c0_a == pytest.approx(c0 / 2, rel=1e-12)
    assert c0_b == pytest.approx(c0 / 2, rel=1e-12)


def test_c0_vanishes_for_wide_waists():
    k = TWO_PI / 780e-9
    c0, _ = c0_from_geometry(4.4e4, k, 1.0, 1.0)
    assert c0 < 1e-8


def test_thermal_sigma_reported(thermal):
    assert thermal_sigma(thermal) * 1e9 == pytest.approx(31.03, abs=0.05)


def test_thermal_sigma_zero_point_limit():
    t = ThermalModel(temperature=1e-12, trap_frequency=TWO_PI * 120e3)
    zero_point = math.sqrt(HBAR / (2 * M_RB87 * t.trap_frequency))
    assert thermal_sigma(t) == pytest.approx(zero_point, rel=1e-9)
    assert zero_point * 1e9 == pytest.approx(22.01, abs=0.05)


def test_thermal_sigma_classical_limit():
    # coth(x) -> 1/x gives sigma^2 -> kB T / (m w^2)
    t = ThermalModel(temperature=1e-2, trap_frequency=TWO_PI * 120e3)
    classical = math.sqrt(K_B * t.temperature / (M_RB87 * t.trap_frequency**2))
    assert thermal_sigma(t) == pytest.approx(classical, rel=1e-4)


def test_thermal_sigma_monotonicity():
    temps = np.geomspace(1e-7, 1e-3, 20)
    sigmas = [thermal_sigma(ThermalModel(t, TWO_PI * 120e3)) for t in temps]
    assert np.all(np.diff(sigmas) >= 0)
    freqs = np.geomspace(TWO_PI * 10e3, TWO_PI * 10e6, 20)
    sigmas_f = [thermal_sigma(ThermalModel(5.2e-6, f)) for f in freqs]
    assert np.all(np.diff(sigmas_f) <= 0)


def test_mean_phonon(thermal):
    assert mean_phonon(thermal) == pytest.approx(0.4934, abs=5e-4)
    cold = ThermalModel(temperature=1e-9, trap_frequency=TWO_PI * 120e3)
    assert mean_phonon(cold) < 1e-12
    # hbar w = kB T ln2 puts exactly one phonon in the mode
    t_one = HBAR * TWO_PI * 120e3 / (K_B * math.log(2))
    assert mean_phonon(ThermalModel(t_one, TWO_PI * 120e3)) == pytest.approx(1.0, rel=1e-9)


def test_cavity_params_invariants():
    with pytest.raises(ValueError):
        CavityParams(kappa=-1.0, kappa_in=0.1, kappa_out=0.1, gamma=1.0, g=1.0)
    with pytest.raises(ValueError):
        CavityParams(kappa=1.0, kappa_in=0.6, kappa_out=0.6, gamma=1.0, g=1.0)
    with pytest.raises(ValueError):
        CavityParams(kappa=1.0, kappa_in=0.1, kappa_out=0.1, gamma=1.0, g=-1.0)
    with pytest.raises(ValueError):
        ThermalModel(temperature=0.0, trap_frequency=1.0)


def test_wavenumber_consistency(paper):
    assert paper.k == pytest.approx(TWO_PI / paper.wavelength, rel=1e-15)
    assert paper.wavelength / 2 == pytest.approx(390e-9, rel=1e-12)
