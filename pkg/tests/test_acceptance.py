"""End-to-end acceptance checks; each test prints one PASS/FAIL line."""
import math

import numpy as np
import pytest

from ptwell.crossing import (branch_exponent, find_contact_a, find_contact_p, find_crossing, monodromy,
                             pair_energies, sheet_scan, son_prediction)
from ptwell.model import BOTTOM_ENERGY, PotentialSpec, Rep, scale_energy_K_to_H, to_alpha
from ptwell.quantize import confinement_report, exact_quantization
from ptwell.spectral import shooting_eigenvalue, stabilized_spectrum
from ptwell.wavefield import Rect, classify_catalog, make_state, parity_integral, region_tag, zeros_in_rect
from ptwell.wkb import critical_energy, critical_energy_action, trace_stokes

from oracles import E0_K0, E_CRITICAL

NODE_TABLE = {3: (0.0558, 0.35200), 4: (0.0438, 0.35209), 5: (0.0306, 0.35218), 6: (0.0236, 0.35221),
              7: (0.0130, 0.35223)}
ANTINODE_TABLE = {3: (0.0615, 0.35317), 4: (0.0473, 0.35287), 5: (0.0323, 0.35261), 6: (0.0247, 0.35244),
                  7: (0.0133, 0.35235)}
DH, DE = 0.001, 0.0005


def _table_rows(finder, table):
    rows, ok = [], True
    for n, (h_ref, E_ref) in table.items():
        h, E, _ = finder(n)
        good = abs(h - h_ref) <= DH and abs(E - E_ref) <= DE
        ok &= good
        rows.append(f"n={n} ({h:.5f}, {E:.5f}) vs ({h_ref}, {E_ref}){'' if good else ' MISMATCH'}")
    return ok, "; ".join(rows)


@pytest.mark.slow
def test_criterion_01_node_contact_table(criterion):
    ok, detail = _table_rows(find_contact_p, NODE_TABLE)
    assert criterion(1, ok, detail), detail


@pytest.mark.slow
def test_criterion_02_antinode_contact_table(criterion):
    ok, detail = _table_rows(find_contact_a, ANTINODE_TABLE)
    assert criterion(2, ok, detail), detail


def test_criterion_03_critical_energy(criterion):
    a = critical_energy()
    b = critical_energy_action()
    ok = abs(a - 0.352268) <= 1e-4 and abs(b - 0.352268) <= 1e-4 and abs(b - E_CRITICAL) < 1e-12
    assert criterion(3, ok, f"topology route {a:.7f}, action route {b:.12f}")


def test_criterion_04_harmonic(criterion, harmonic):
    sl = stabilized_spectrum(harmonic, 11)
    dE = float(np.max(np.abs(sl.energies - (2 * np.arange(11) + 1))))
    zs = zeros_in_rect(make_state(sl[2]), Rect(-2.0, 2.0, -1.0, 1.0))
    r = 1 / math.sqrt(2)
    dz = max(min(abs(z - t) for z in zs) for t in (-r, r)) if len(zs) == 2 else math.inf
    ok = dE < 1e-10 and dz < 1e-10
    assert criterion(4, ok, f"max |E_n - (2n+1)| = {dE:.1e}; psi_2 zeros {len(zs)}, max offset {dz:.1e}")


def test_criterion_05_scaling_identity(criterion):
    worst = 0.0
    for h in (0.5, 1.0, 2.0):
        EH = stabilized_spectrum(PotentialSpec(Rep.H, h), 6).energies
        EK = stabilized_spectrum(PotentialSpec(Rep.K, to_alpha(h)), 6).energies
        worst = max(worst, float(np.max(np.abs(EH - scale_energy_K_to_H(h, EK)))))
    assert criterion(5, worst < 1e-8, f"max |E_m(h) - h^(6/5) E^_m(-h^(-4/5))| = {worst:.1e}")


def test_criterion_06_oracle_equivalence(criterion):
    cases = [(PotentialSpec(Rep.K, 0), 0, E0_K0)]
    cases += [(PotentialSpec(Rep.H, h), m, None) for h, m in
              ((5.0, 0), (5.0, 7), (2.0, 3), (1.0, 1), (0.7, 5), (0.4, 2), (0.25, 6), (0.15, 4), (0.1, 7))]
    worst, lines = 0.0, []
    for spec, m, oracle in cases:
        E = stabilized_spectrum(spec, m + 1)[m].energy
        # start the shooting solve off the Galerkin value so it has to converge on its own
        S = shooting_eigenvalue(spec, E * (1 + 1e-4))
        rel = abs(S - E) / max(1.0, abs(E))
        if oracle is not None:
            rel = max(rel, abs(E - oracle) / abs(oracle))
        worst = max(worst, rel)
        lines.append(f"{spec.rep.name}({spec.param.real:g}) m={m}: {rel:.1e}")
    assert criterion(6, worst < 1e-8, f"worst relative difference {worst:.1e} over {len(cases)} pairs"), lines


def test_criterion_07_crossing_structure(criterion):
    ok, parts = True, []
    for n in (0, 1, 3):
        hn, _ = find_crossing(n)
        hp, _, _ = find_contact_p(n)
        below = [pair_energies(n, f * hn) for f in (0.5, 0.8, 0.95)]
        above = [pair_energies(n, f * hn) for f in (1.05, 1.5, 2.0)]
        conj = max(abs(a - b.conjugate()) for a, b in below)
        complex_below = min(abs(a.imag) for a, _ in below)
        real_above = max(max(abs(a.imag), abs(b.imag)) for a, b in above)
        ordered = all(b.real > a.real for a, b in above)
        slope, _ = branch_exponent(n)
        good = hn < hp and conj < 1e-8 and complex_below > 1e-8 and real_above < 1e-8 and ordered \
            and abs(slope - 0.5) <= 0.05
        ok &= good
        parts.append(f"n={n} h_n={hn:.7f} < h_p={hp:.7f}, conj {conj:.0e}, Im above {real_above:.0e}, "
                     f"exponent {slope:.4f}")
    assert criterion(7, ok, "; ".join(parts))


@pytest.mark.slow
def test_criterion_08_monodromy(criterion):
    ok, parts = True, []
    for n in (0, 1, 3):
        halves = [monodromy(n, 0.1, loops=0.5, direction=d) for d in (1, -1)]
        half_ok = all(p.end_label == son_prediction(n, d) and p.defect < 1e-6 for p, d in zip(halves, (1, -1)))
        full = monodromy(n, 0.1, loops=1.0)
        swap_ok = full.end_label == f"E{2 * n}" and full.defect < 1e-8
        double = monodromy(n, 0.1, loops=2.0)
        ident_ok = double.end_label == f"E{2 * n + 1}" and abs(double.end_energy - double.start_energy) < 1e-8
        ok &= half_ok and swap_ok and ident_ok
        parts.append(f"n={n} half {max(p.defect for p in halves):.0e} {[p.end_label for p in halves]}, "
                     f"full -> {full.end_label} ({full.defect:.0e}), double {abs(double.end_energy - double.start_energy):.0e}")
    assert criterion(8, ok, "; ".join(parts))


def test_criterion_09_confinement(criterion):
    sl = stabilized_spectrum(PotentialSpec(Rep.H, 5.0), 8)
    ok, parts = True, []
    for m in range(8):
        st = make_state(sl[m])
        cat = classify_catalog(st)
        tally = confinement_report(cat, axis_tol=1e-6)
        zs = list(cat.nodes) + list(cat.board_zeros)
        outside = [z for z in zs if region_tag(z, 1e-6) not in ("C_sigma", "imaginaryAxis")]
        upper_off_axis = [z for z in zs if z.imag > 0 and abs(z.real) > 1e-6]
        rep = exact_quantization(st, "both", cat)
        good = not tally.violations and not outside and not upper_off_axis \
            and rep.nearest_integer == m and rep.defect < 1e-6
        ok &= good
        parts.append(f"m={m}: {len(zs)} zeros, J2 index {rep.implied_index:.6f}")
    assert criterion(9, ok, "; ".join(parts))


def test_criterion_10_parity_collapse(criterion):
    hn, _ = find_crossing(3)
    ok, parts = True, []
    at = stabilized_spectrum(PotentialSpec(Rep.H, hn), 8)
    off = stabilized_spectrum(PotentialSpec(Rep.H, 1.2 * hn), 8)
    for m in (6, 7):
        v0, id0 = parity_integral(make_state(at[m]), with_identity=True)
        v1, id1 = parity_integral(make_state(off[m]), with_identity=True)
        good = abs(v0) < 1e-4 and abs(id0) < 1e-4 and abs(v1) >= 100 * abs(v0) and abs(id1) >= 100 * abs(id0)
        ok &= good
        parts.append(f"m={m}: |int psi^2| = {abs(v0):.1e} (coefficients {abs(id0):.1e}) at h_3, "
                     f"{abs(v1):.3f} at 1.2 h_3")
    assert criterion(10, ok, "; ".join(parts))


def test_criterion_11_semiclassical_law(criterion):
    hs = (0.02, 0.01, 0.005)
    c = 2 / (3 * math.sqrt(3))
    slopes = []
    for n in range(4):
        for sign in (1, -1):
            res = []
            for h in hs:
                a, b = pair_energies(n, h)
                # E_n^- sits in the upper half-plane, E_n^+ in the lower
                E = (a if a.imag > b.imag else b) if sign < 0 else (b if a.imag > b.imag else a)
                lead = -sign * 1j * c + np.sqrt(sign * 1j) * 3 ** 0.25 * (2 * n + 1) * h
                res.append(abs(E - lead))
            slopes += [math.log(res[i] / res[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(2)]
    ok = all(abs(s - 2.0) <= 0.2 for s in slopes)
    assert criterion(11, ok, f"log-log slopes in [{min(slopes):.3f}, {max(slopes):.3f}]")


@pytest.mark.slow
def test_criterion_12_monochord(criterion):
    Ec = critical_energy()
    topo = {name: trace_stokes(E, 0.0).topology for name, E in
            (("E^c", Ec), ("E^c+1e-3", Ec + 1e-3), ("E^c+1e-3i", Ec + 1e-3j))}
    topo_ok = topo == {"E^c": "attached", "E^c+1e-3": "detached", "E^c+1e-3i": "asymmetric"}
    rows = sheet_scan(1, [-0.05, 0.05])
    # E_1 just above the real axis continues to E_0^-, just below to E_0^+
    expect = {1: "E0^-", -1: "E0^+"}
    sheet_ok = {r["imag_sign"] for r in rows} == {1, -1} and all(r["label"] == expect[r["imag_sign"]] for r in rows)
    labels = ", ".join(f"c={r['c']:+g} (Im h {'>' if r['imag_sign'] > 0 else '<'} 0) -> {r['label']}" for r in rows)
    assert criterion(12, topo_ok and sheet_ok, f"{topo}; sheet scan m=1: {labels}")


def test_well_bottom_constant_matches_leading_term():
    # the constant used in criterion 11 is the depth of the wells
    assert abs(BOTTOM_ENERGY - 1j * 2 / (3 * math.sqrt(3))) < 1e-15
