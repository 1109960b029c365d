import math

import numpy as np
import pytest
from scipy.integrate import quad

from ptwell.crossing import find_contact_a, find_contact_p, find_crossing, levels_at
from ptwell.errors import BoundaryZero
from ptwell.model import PotentialSpec, Rep
from ptwell.spectral import stabilized_spectrum
from ptwell.wavefield import (Rect, classify_catalog, default_rect, flux_diagnostic, make_state, parity_integral,
                              px_pairing_defect, region_tag, winding_number, zeros_in_rect)


@pytest.fixture(scope="module")
def hbar3():
    return stabilized_spectrum(PotentialSpec(Rep.H, 3.0), 8)


def _residual_ok(state, zs, what):
    # local scale: largest modulus of f on a circle of radius 0.1 around the point
    ring = 0.1 * np.exp(2j * np.pi * np.arange(16) / 16)
    for z in zs:
        psi, dpsi = state.evaluate(np.concatenate([[z], z + ring]))
        f = psi if what == "zeros" else dpsi
        assert abs(f[0]) < 1e-10 * np.max(np.abs(f[1:]))


def test_harmonic_zeros(harmonic):
    sl = stabilized_spectrum(harmonic, 4)
    zs = zeros_in_rect(make_state(sl[2]), Rect(-3, 3, -1, 1.1))
    assert len(zs) == 2
    assert np.allclose(sorted(z.real for z in zs), [-1 / math.sqrt(2), 1 / math.sqrt(2)], atol=1e-10)
    z3 = zeros_in_rect(make_state(sl[3]), Rect(-3, 3, -1, 1.1))
    assert len(z3) == 3 and all(abs(z.imag) < 1e-12 for z in z3)


def test_harmonic_sequence(harmonic):
    st = make_state(stabilized_spectrum(harmonic, 3)[2])
    cat = classify_catalog(st, Rect(-3, 3, -1, 1.1))
    assert cat.sequence == ["A1", "N1", "A2", "N2", "A3"]
    assert all(abs(z.imag) < 1e-10 for z in cat.antinodes + cat.nodes)


def test_px_t_symmetry_of_values(hbar3):
    st = make_state(hbar3[7])
    rng = np.random.default_rng(3)
    z = rng.normal(size=20) + 1j * rng.normal(size=20)
    a = st.evaluate(z, False)
    b = st.evaluate(-np.conj(z), False)
    # local scale: largest modulus on a small circle, so points near a zero are not over-weighted
    ring = st.evaluate((z[:, None] + 0.05 * np.exp(2j * np.pi * np.arange(8) / 8)[None, :]).ravel(), False)
    scale = np.max(np.abs(ring).reshape(20, 8), axis=1)
    assert np.max(np.abs(b - np.conj(a)) / scale) < 1e-9


def test_tail_matches_basis(hbar3):
    st = make_state(stabilized_spectrum(PotentialSpec(Rep.H, 0.05), 8)[7])
    assert st.tails and all(t.mismatch < 1e-6 for t in st.tails)


def test_board_growth_matches_wkb():
    h = 0.5
    st = make_state(stabilized_spectrum(PotentialSpec(Rep.H, h), 1)[0])
    E = st.energy.real
    phi = st.axis(np.array([-2.0, -3.0]))[0]
    p = lambda y: math.sqrt(E - y ** 3 - y)
    expect = quad(p, -3, -2)[0] / h - 0.25 * math.log(p(-3) / p(-2))
    got = math.log(abs(phi[1]) / abs(phi[0]))
    assert abs(got - expect) < 0.05 * abs(expect)


def test_winding_counts_and_polish(hbar3):
    st = make_state(hbar3[5])
    r = Rect(-3, 3, -4, 0.5)
    zs = zeros_in_rect(st, r)
    assert round(winding_number(st, r)) == len(zs) == 5
    _residual_ok(st, zs, "zeros")
    ws = zeros_in_rect(st, r, "stationary")
    _residual_ok(st, ws, "stationary")


def test_K0_nodes_in_lower_sector():
    st = make_state(stabilized_spectrum(PotentialSpec(Rep.K, 0), 8)[7])
    r = default_rect(st)
    zs = zeros_in_rect(st, Rect(r.x0, r.x1, r.y0, -1e-3))
    assert len(zs) == 7
    assert all(region_tag(z) in ("C_sigma", "imaginaryAxis") for z in zs)


@pytest.mark.parametrize("h", [3.0, 5.0, 10.0])
def test_node_confinement(h):
    sl = stabilized_spectrum(PotentialSpec(Rep.H, h), 8)
    for m in (0, 3, 7):
        st = make_state(sl[m])
        zs = zeros_in_rect(st, Rect(-3, 3, -4, 0.5))
        assert px_pairing_defect(zs) < 1e-8
        for z in zs:
            if abs(z.real) > 1e-6 * max(1, abs(z.imag)):
                assert region_tag(z) == "C_sigma"
            if z.imag > 0:
                assert abs(z.real) < 1e-6


def test_real_level_gauge(hbar3):
    st = make_state(hbar3[4], gauge="imaginary-axis")
    y = np.linspace(-2, 0.5, 41)
    phi = st.axis(y)[0]
    assert np.all(np.abs(phi.imag) < 1e-6 * np.abs(phi) + 1e-300)


def test_gauge_invariance_of_catalog(hbar3):
    from dataclasses import replace

    p = hbar3[6]
    rotated = replace(p, coefficients=p.coefficients * np.exp(0.7j))
    a = sorted(zeros_in_rect(make_state(p), Rect(-3, 3, -4, 0.5)), key=lambda z: (z.real, z.imag))
    b = sorted(zeros_in_rect(make_state(rotated), Rect(-3, 3, -4, 0.5)), key=lambda z: (z.real, z.imag))
    assert len(a) == len(b) and np.max(np.abs(np.array(a) - np.array(b))) < 1e-10


def test_parity_integral_harmonic(harmonic):
    st = make_state(stabilized_spectrum(harmonic, 2)[1])
    v, ident = parity_integral(st, with_identity=True)
    assert abs(abs(v) - 1) < 1e-10 and abs(v - ident) < 1e-8


@pytest.mark.parametrize("alpha", [5.0, 10.0])
def test_parity_integral_large_alpha(alpha):
    # large alpha: a Gaussian centred at -i sqrt(alpha/3), for which the ratio is exp(-sqrt(3) s^(5/2))
    sl = stabilized_spectrum(PotentialSpec(Rep.K, alpha), 2)
    even, odd = (parity_integral(make_state(lv)) for lv in sl.levels)
    assert even.real > 0 > odd.real
    s = math.sqrt(alpha / 3)
    assert abs(math.log(abs(even)) / (-math.sqrt(3) * s ** 2.5) - 1) < 0.15


def test_flux_real_level_vanishes_on_axis(hbar3):
    st = make_state(hbar3[2])
    prof = flux_diagnostic(st, 0.0, (-2.0, 1.0))
    scale = np.max(np.abs(st.axis(prof.coordinate)[0])) ** 2 * 9
    assert np.max(np.abs(prof.flux)) < 1e-9 * scale


def test_flux_nonreal_level_signs():
    sl = stabilized_spectrum(PotentialSpec(Rep.H, 0.2), 2)
    p = min(sl.levels, key=lambda lv: lv.energy.imag)  # E in the lower half-plane
    st = make_state(p)
    prof = flux_diagnostic(st, 0.0, (-1.5, 1.5), samples=8001)
    assert np.all(prof.flux > 0)
    assert np.max(np.abs(prof.flux - prof.comparison)) < 1e-4 * np.max(np.abs(prof.flux))


def test_flux_constant_sign_on_ray():
    st = make_state(stabilized_spectrum(PotentialSpec(Rep.K, 0), 3)[2])
    x = 2.0
    prof = flux_diagnostic(st, x, (-x / math.sqrt(3) + 1e-3, x / math.sqrt(3) - 1e-3))
    s = np.sign(prof.flux)
    assert np.all(s == s[0])


@pytest.mark.slow
def test_nodes_split_below_crossing():
    h3, _ = find_crossing(3)
    sl = levels_at(0.8 * h3, 8)
    pair = [sl[6], sl[7]]
    plus = min(pair, key=lambda lv: lv.energy.imag)
    minus = max(pair, key=lambda lv: lv.energy.imag)
    cp = classify_catalog(make_state(plus))
    cm = classify_catalog(make_state(minus))
    assert len(cp.nodes) == 3 and all(z.real > 0 for z in cp.nodes)
    assert len(cm.nodes) == 3 and all(z.real < 0 for z in cm.nodes)


@pytest.mark.slow
def test_crossing_state_zeros():
    h3, _ = find_crossing(3)
    st = make_state(levels_at(h3 * (1 + 1e-9), 8)[7])
    zs = zeros_in_rect(st, Rect(-2, 2, -2, 0.2))
    off = [z for z in zs if abs(z.real) > 1e-6]
    assert len(off) == 6
    assert px_pairing_defect(off) < 1e-6


@pytest.mark.slow
def test_imaginary_node_and_antinode_above_contacts():
    hp = find_contact_p(3)[0]
    ha = find_contact_a(3)[0]
    h = 1.05 * max(hp, ha)
    sl = levels_at(h, 8)
    c7 = classify_catalog(make_state(sl[7]))
    assert len(c7.imaginary_nodes) == 1 and "N0" in c7.sequence
    c6 = classify_catalog(make_state(sl[6]))
    assert len(c6.imaginary_nodes) == 0 and len(c6.imaginary_antinodes) == 1
    assert c6.sequence == ["A-4", "N-3", "A-3", "N-2", "A-2", "N-1", "A0", "N1", "A2", "N2", "A3", "N3", "A4"]
