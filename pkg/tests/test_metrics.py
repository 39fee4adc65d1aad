import json

import numpy as np
import pytest

from ringcav import (AtomArray, conversion_closed_form, conversion_direct, cooperativity,
                     dark_purity, dark_purity_fitted, displace, ellipse_fit,
                     interference_correlation, lattice, phase_shift, with_target_s)
from ringcav.metrics import points_to_csv, report_to_json
from ringcav.sweep import delta_on_contour
from ringcav.constants import TWO_PI

D30 = TWO_PI * 30e6


def test_purity_benchmark_point(paper):
    delta = delta_on_contour(paper, 5, 0.9, 0.05)
    report = dark_purity(paper, 5, 0.9, delta)
    assert report.d == pytest.approx(0.98953, abs=2e-4)
    assert report.d > 0.98
    assert report.delta_used > 0


def test_purity_limit_large_nc(paper):
    # D grows with NC toward the repelled-bright-peak limit; at fixed Delta the
    # broadenings grow with NC too, so the limit is set by Delta/gamma and |S|
    d_small = dark_purity(paper, 4, 0.9, D30).d
    d_large = dark_purity(paper, 40000, 0.9, D30).d
    assert d_large > d_small
    abs_s, ratio = 0.9, D30 / paper.gamma
    limit = 1.0 / (1.0 + ((1 - abs_s) / 2) ** 2
                   / ((2 * abs_s * ratio) ** 2 + ((1 + abs_s) / 2) ** 2))
    assert limit > 0.99996
    assert d_large == pytest.approx(limit, abs=1e-6)


def test_purity_requires_nonzero_s(paper):
    with pytest.raises(ValueError):
        dark_purity(paper, 4, 0.0, D30)


def test_purity_closed_vs_fitted(paper):
    closed = dark_purity(paper, 1, 0.9, TWO_PI * 6e6)
    fitted = dark_purity_fitted(paper, 1, 0.9, TWO_PI * 6e6)
    assert fitted.d == pytest.approx(closed.d, rel=0.01)


@pytest.mark.parametrize("n,abs_s,delta_mhz", [(4, 0.9, 30), (7, 0.8, 45), (9, 0.95, 60)])
def test_purity_dual_path_when_separated(paper, n, abs_s, delta_mhz):
    # closed form and fitted scan agree within 1% for well-separated peaks
    delta = TWO_PI * delta_mhz * 1e6
    from ringcav import broadenings, resonance_shifts
    dw1, dw2 = resonance_shifts(paper, n, abs_s, delta)
    dk1, dk2 = broadenings(paper, n, abs_s, delta)
    half_widths = (paper.kappa + dk1) / 2 + (paper.kappa + dk2) / 2
    assert dw1 - dw2 > 5 * half_widths / 2  # comfortably separated
    closed = dark_purity(paper, n, abs_s, delta)
    fitted = dark_purity_fitted(paper, n, abs_s, delta)
    assert fitted.d == pytest.approx(closed.d, rel=0.01)


def test_conversion_empty(paper):
    report = conversion_direct(paper, AtomArray(np.empty(0)), D30)
    assert report.chi == 0.0


def test_conversion_direct_vs_closed_form(paper, rng):
    for _ in range(60):
        n = int(rng.integers(1, 10))
        abs_s = rng.uniform(0.3, 0.999)
        delta = TWO_PI * rng.uniform(5e6, 60e6)
        a = with_target_s(n, abs_s) if n > 1 else lattice(1)
        abs_s_used = 1.0 if n == 1 else abs_s
        direct = conversion_direct(paper, a, delta)
        closed = conversion_closed_form(paper, n, abs_s_used, delta)
        if n == 1:
            continue  # |S|=1 branch uses the substituted limit; checked below
        assert direct.chi == pytest.approx(closed.chi, rel=1e-9)


def test_conversion_operating_points(paper):
    # normalized conversion ~0.8 for N>1 at the dk/kappa=0.05 operating points
    for n, expected in [(2, 0.8446), (4, 0.8747), (9, 0.8924)]:
        delta = delta_on_contour(paper, n, 0.9, 0.05)
        a = with_target_s(n, 0.9)
        report = conversion_direct(paper, a, delta)
        assert report.chi_normalized == pytest.approx(expected, abs=2e-3)
        assert report.chi == pytest.approx(
            report.chi_normalized * paper.eta_in * paper.eta_out, rel=1e-12)


def test_conversion_unit_s_limit(paper):
    report = conversion_closed_form(paper, 4, 1.0, D30)
    assert report.chi == pytest.approx(paper.eta_in * paper.eta_out, rel=1e-12)
    assert report.chi_normalized == pytest.approx(1.0, rel=1e-12)


def test_conversion_large_nc_asymptote(paper):
    # chi -> eta_in eta_out / (1 + dk/kappa)^2 when NC >> 1
    abs_s, delta = 0.9, D30
    n_large = 1e7 / cooperativity(paper)
    d_rel = (n_large * cooperativity(paper) * (1 - abs_s) * paper.gamma**2
             / (4 * delta**2 + paper.gamma**2))
    asymptote = paper.eta_in * paper.eta_out / (1 + d_rel) ** 2
    report = conversion_closed_form(paper, n_large, abs_s, delta)
    assert report.chi == pytest.approx(asymptote, rel=1e-5)


def test_conversion_monotone_in_broadening(paper):
    # at fixed NC >> 1, chi never increases with the dark-mode broadening
    n = 1e6 / cooperativity(paper)
    deltas = TWO_PI * np.geomspace(5e6, 500e6, 30)
    reports = [conversion_closed_form(paper, n, 0.9, d) for d in deltas]
    broadenings_rel = [n * cooperativity(paper) * 0.1 * paper.gamma**2
                       / (4 * d**2 + paper.gamma**2) for d in deltas]
    order = np.argsort(broadenings_rel)
    chis = np.array([reports[i].chi for i in order])
    assert np.all(np.diff(chis) <= 1e-15)


def test_phase_shift_values(paper):
    a = lattice(4)
    lam = paper.wavelength
    assert phase_shift(paper, a, lam / 4, D30).delta_phi == pytest.approx(np.pi, abs=1e-9)
    assert phase_shift(paper, a, lam, D30).delta_phi == pytest.approx(4 * np.pi, abs=1e-9)
    report = phase_shift(paper, a, 137e-9, D30)
    expected = 2 * paper.k * 137e-9
    assert expected == pytest.approx(2.207, abs=2e-3)
    assert report.delta_phi == pytest.approx(expected, abs=1e-10)


def test_phase_shift_additivity(paper):
    a = with_target_s(5, 0.85)
    x1, x2 = 0.31 * paper.wavelength, 1.73 * paper.wavelength
    p1 = phase_shift(paper, a, x1, D30).delta_phi
    p2 = phase_shift(paper, a, x2, D30).delta_phi
    p12 = phase_shift(paper, a, x1 + x2, D30).delta_phi
    assert p1 + p2 == pytest.approx(p12, abs=1e-12 * (1 + abs(p12)))


def test_phase_shift_negative_displacement(paper):
    a = lattice(4)
    report = phase_shift(paper, a, -0.6 * paper.wavelength, D30)
    assert report.delta_phi == pytest.approx(-2 * paper.k * 0.6 * paper.wavelength,
                                             abs=1e-9)


def test_phase_shift_requires_backscattering(paper):
    with pytest.raises(ValueError):
        phase_shift(paper, with_target_s(4, 0.0), 1e-9, D30)


def test_correlation_points_on_expected_curves():
    pts = interference_correlation(np.pi / 2, 400, seed=3)
    # quarter-wave correlations lie on the unit circle
    assert np.allclose(pts[:, 0] ** 2 + pts[:, 1] ** 2, 1.0, atol=1e-12)
    fit = ellipse_fit(pts)
    assert not fit.degenerate
    assert fit.delta_phi == pytest.approx(np.pi / 2, abs=1e-10)
    pts0 = interference_correlation(0.0, 100, seed=4)
    assert np.allclose(pts0[:, 0], pts0[:, 1], atol=1e-12)


def test_ellipse_fit_degenerate_cases():
    fit0 = ellipse_fit(interference_correlation(0.0, 64, seed=1))
    assert fit0.degenerate and fit0.delta_phi == 0.0
    fit_pi = ellipse_fit(interference_correlation(np.pi, 64, seed=2))
    assert fit_pi.degenerate and fit_pi.delta_phi == pytest.approx(np.pi)


def test_ellipse_fit_noiseless_recovery():
    fit = ellipse_fit(interference_correlation(1.3, 200, seed=9))
    assert fit.delta_phi == pytest.approx(1.3, abs=1e-10)


def test_ellipse_fit_noisy_recovery():
    errors = []
    for seed in range(100):
        pts = interference_correlation(1.3, 200, seed=seed, noise_sigma=0.02)
        errors.append(ellipse_fit(pts).delta_phi - 1.3)
    assert abs(np.mean(errors)) < 0.02
    assert np.sqrt(np.mean(np.square(errors))) < 0.02


def test_correlation_minimum_points():
    with pytest.raises(ValueError):
        interference_correlation(1.0, 4)
    with pytest.raises(ValueError):
        ellipse_fit(np.zeros((4, 2)))


def test_reports_serialize(paper, tmp_path):
    report = dark_purity(paper, 4, 0.9, D30)
    data = json.loads(report_to_json(report))
    assert set(data) == {"d", "n1", "n2", "delta_used"}
    pts = interference_correlation(1.0, 16, seed=0)
    path = tmp_path / "points.csv"
    points_to_csv(pts, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "cos_phi1,cos_phi2"
    assert len(lines) == 17
