import numpy as np
import pytest
from scipy.optimize import brentq

from ringcav import (broadenings, cooperativity, dark_purity, resonance_shifts,
                     thermal_sigma)
from ringcav.sweep import (contour_polyline, conversion_vs_n, curve_to_csv,
                           delta_on_contour, dispersive_shift_scan, fit_waist_profile,
                           fringe_period, fringe_scan, grid_to_csv, purity_contour,
                           shifts_vs_n, shifts_vs_s, thermal_s_curve, waist_scan)
from ringcav.constants import TWO_PI

D30 = TWO_PI * 30e6


def test_shifts_vs_s_endpoints_and_slope(paper):
    s_grid = np.linspace(0, 1, 21)
    bright, dark = shifts_vs_s(paper, 4, D30, s_grid)
    base = 4 * cooperativity(paper) * paper.kappa * paper.gamma * D30 / (
        4 * D30**2 + paper.gamma**2)
    assert bright.y[0] == pytest.approx(base, rel=1e-12)
    assert dark.y[0] == pytest.approx(base, rel=1e-12)
    assert dark.y[-1] == 0.0
    assert bright.y[-1] == pytest.approx(2 * bright.y[0], rel=1e-12)
    slope = np.diff(bright.y) / np.diff(s_grid)
    assert np.allclose(slope, base, rtol=1e-9)
    slope_dark = np.diff(dark.y) / np.diff(s_grid)
    assert np.allclose(slope_dark, -base, rtol=1e-9)


def test_shifts_vs_n(paper):
    bright, dark = shifts_vs_n(paper, 9, D30, 1.0)
    assert bright.y[0] == 0.0 and dark.y[0] == 0.0
    assert np.all(dark.y == 0.0)
    assert bright.y[-1] / TWO_PI == pytest.approx(378.5e3, rel=1e-3)
    # exact linearity in N
    ratios = bright.y[1:] / bright.y[1]
    assert np.allclose(ratios, np.arange(1, 10), rtol=1e-12)


def test_purity_contour_matches_pointwise(paper, rng):
    d_grid, k_grid = purity_contour(paper, 0.9, (2, 2000), (TWO_PI * 1e6, TWO_PI * 200e6),
                                    resolution=48)
    c = cooperativity(paper)
    for _ in range(100):
        i = int(rng.integers(0, 48))
        j = int(rng.integers(0, 48))
        nc = d_grid.x_axis.values[i]
        delta = d_grid.y_axis.values[j]
        assert d_grid.values[i, j] == pytest.approx(
            dark_purity(paper, nc / c, 0.9, delta).d, rel=1e-12)
        assert k_grid.values[i, j] == pytest.approx(
            broadenings(paper, nc / c, 0.9, delta)[1] / paper.kappa, rel=1e-12)


def test_contour_polyline_evaluates_to_level(paper):
    _, k_grid = purity_contour(paper, 0.9, (2, 2000), (TWO_PI * 1e6, TWO_PI * 200e6),
                               resolution=128)
    lines = contour_polyline(k_grid, 0.05)
    assert lines
    pts = np.vstack(lines)
    assert pts.shape[0] > 50
    c = cooperativity(paper)
    values = np.array([broadenings(paper, nc / c, 0.9, delta)[1] / paper.kappa
                       for nc, delta in pts])
    assert np.max(np.abs(values - 0.05)) < 0.05 * 0.01


def test_delta_on_contour_inverts_broadening(paper):
    for n in (1, 3, 9):
        delta = delta_on_contour(paper, n, 0.9, 0.05)
        rel = broadenings(paper, n, 0.9, delta)[1] / paper.kappa
        assert rel == pytest.approx(0.05, rel=1e-12)
    with pytest.raises(ValueError):
        delta_on_contour(paper, 1, 0.999, 0.05)  # broadening never reaches level


def test_purity_thresholds_from_contour_protocol(paper):
    # NC crossing where D = 0.98 on the dk/kappa = 0.05 contour
    c = cooperativity(paper)

    def d_minus_target(nc, abs_s):
        delta = delta_on_contour(paper, nc / c, abs_s, 0.05)
        return dark_purity(paper, nc / c, abs_s, delta).d - 0.98

    crossing_09 = brentq(lambda nc: d_minus_target(nc, 0.9), 5, 100)
    assert crossing_09 == pytest.approx(32.0, rel=0.10)
    crossing_06 = brentq(lambda nc: d_minus_target(nc, 0.6), 50, 1000)
    assert crossing_06 == pytest.approx(295.0, rel=0.10)


def test_conversion_vs_n_figure_protocol(paper):
    dark, bright = conversion_vs_n(paper, 9, 0.9, 0.05)
    assert np.all(dark.y[1:] >= 0.8)       # N >= 2
    assert dark.y[0] < 0.8                 # N = 1 sits just below
    assert np.all(dark.y <= 1 / 1.05**2 + 1e-9)
    assert np.all(bright.y < dark.y)
    assert np.all(np.diff(dark.y) > 0)


def test_thermal_s_curve_zero_sigma(paper):
    series = thermal_s_curve(0.0, range(1, 6), trials=16, seed=0)
    assert np.allclose(series.y, 1.0, atol=1e-12)


def test_thermal_s_curve_statistics(paper):
    sigma = 31e-9
    series = thermal_s_curve(sigma, [2, 4, 6, 8, 10, 64], trials=1000, seed=42)
    plateau = np.exp(-2 * (TWO_PI / 780e-9 * sigma) ** 2)
    # N > 4 plateau near 0.9
    assert np.all((series.y[2:] > 0.86) & (series.y[2:] < 0.93))
    # large-N value approaches the characteristic-function plateau within 3 SE
    # plus the O(1/N) positive bias of |S|
    bias = (1 - plateau**2) / (2 * plateau * 64)
    assert abs(series.y[-1] - bias - plateau) < 3 * series.y_err[-1]


def test_thermal_s_curve_reproducible(paper):
    a = thermal_s_curve(31e-9, range(1, 5), trials=50, seed=7)
    b = thermal_s_curve(31e-9, range(1, 5), trials=50, seed=7)
    assert np.array_equal(a.y, b.y) and np.array_equal(a.y_err, b.y_err)
    c = thermal_s_curve(31e-9, range(1, 5), trials=50, seed=8)
    assert not np.array_equal(a.y, c.y)


def test_fringe_scan_structure(paper):
    lam = paper.wavelength
    seps = np.arange(0.0, 11 * lam, lam / 40)
    series = fringe_scan(paper, D30, seps)
    period = fringe_period(series)
    assert period == pytest.approx(lam / 2, rel=1e-3)
    # maxima at multiples of lambda/2, minima at odd multiples of lambda/4
    y = series.y
    at_half = y[::20]     # separations m * lambda/2
    at_quarter = y[10::20]  # odd multiples of lambda/4
    assert at_half.min() > at_quarter.max()
    assert y[0] == y.max()


def test_fringe_period_requires_uniform_grid(paper):
    from ringcav.sweep import CurveSeries
    series = CurveSeries(np.array([0.0, 1.0, 3.0]), np.zeros(3))
    with pytest.raises(ValueError):
        fringe_period(series)


def test_waist_scan_profile_and_fit(paper):
    offsets = np.linspace(-12e-6, 12e-6, 49)
    series = waist_scan(paper, "y", offsets)
    i0 = np.argmin(np.abs(offsets))
    assert series.y[i0] == series.y.max()
    expected = series.y[i0] * np.exp(-2 * offsets**2 / paper.waist_y**2)
    assert np.allclose(series.y, expected, rtol=1e-9)
    _, fitted = fit_waist_profile(series)
    assert fitted == pytest.approx(6.5e-6, rel=0.01)
    series_z = waist_scan(paper, "z", offsets)
    _, fitted_z = fit_waist_profile(series_z)
    assert fitted_z == pytest.approx(8.7e-6, rel=0.01)


def test_dispersive_scan(paper):
    deltas = TWO_PI * np.linspace(0.5e6, 100e6, 400)
    bright, dark = dispersive_shift_scan(paper, 4, 0.9, deltas)
    # vanishing shift at large detuning
    assert abs(bright.y[-1]) < 0.05 * np.max(np.abs(bright.y))
    # extremum at Delta = gamma/2 with value NC kappa (1 +/- |S|)/4
    nc = 4 * cooperativity(paper)
    b_half, d_half = resonance_shifts(paper, 4, 0.9, paper.gamma / 2)
    assert b_half == pytest.approx(nc * paper.kappa * 1.9 / 4, rel=1e-12)
    assert d_half == pytest.approx(nc * paper.kappa * 0.1 / 4, rel=1e-12)
    fine = TWO_PI * np.linspace(1e6, 10e6, 2001)
    bright_fine, _ = dispersive_shift_scan(paper, 4, 0.9, fine)
    peak_at = fine[int(np.argmax(bright_fine.y))]
    assert peak_at == pytest.approx(paper.gamma / 2, rel=2e-3)
    # operating point matches the closed form
    assert resonance_shifts(paper, 4, 0.9, D30)[0] == pytest.approx(
        np.interp(D30, bright.x, bright.y), rel=1e-4)


def test_csv_outputs(paper, tmp_path):
    bright, dark = shifts_vs_n(paper, 3, D30, 1.0)
    curve_path = tmp_path / "curve.csv"
    curve_to_csv(bright, curve_path)
    lines = curve_path.read_text().splitlines()
    assert len(lines) == 5
    series = thermal_s_curve(31e-9, [2, 3], trials=10, seed=1)
    err_path = tmp_path / "errs.csv"
    curve_to_csv(series, err_path)
    assert err_path.read_text().splitlines()[0].endswith(",y_err")
    d_grid, _ = purity_contour(paper, 0.9, (2, 20), (TWO_PI * 1e6, TWO_PI * 20e6),
                               resolution=4)
    grid_path = tmp_path / "grid.csv"
    grid_to_csv(d_grid, grid_path)
    rows = grid_path.read_text().splitlines()
    assert len(rows) == 17
    assert rows[0] == "collective_cooperativity_NC,delta_atom_rad_s,value"
