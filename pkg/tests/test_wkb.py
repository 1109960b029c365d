import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptwell.errors import NearTurningPoint
from ptwell.model import BOTTOM_ENERGY, PotentialSpec, Rep, turning_points
from ptwell.wkb import (CUBIC, MODES, CarliniStack, ResummedMomentum, asymptotic_directions, board_on_axis_check,
                        carlini_coefficients, critical_energy, critical_energy_action, explicit_p2_p4, phase_defect,
                        resummed, riccati_residual, sre_residual, trace_stokes)

from oracles import E_CRITICAL

HO = PotentialSpec(Rep.HARMONIC, 1.0)
points = st.builds(complex, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5)).filter(
    lambda z: min(abs(z - t) for t in turning_points(CUBIC, 0.36).points) > 0.1)


def test_p1_harmonic_printed_convention():
    stack = CarliniStack(HO, 1.0, kappa=-1j)
    p = carlini_coefficients(stack, 2.0, 1)
    assert abs(p[0] - math.sqrt(3)) < 1e-14 and abs(p[1] - 1j / 3) < 1e-14


@settings(max_examples=20)
@given(points)
def test_q0_identity(z):
    stack = CarliniStack(CUBIC, 0.36)
    p2, p4, q0 = explicit_p2_p4(stack, z)
    c = carlini_coefficients(stack, z, 4)
    V1 = 1j * (3 * z ** 2 - 1)
    assert abs(q0 - V1 / (4 * c[0] ** 2)) < 1e-12 * max(1, abs(q0))
    assert abs(p2 - c[2]) < 1e-12 * max(1, abs(p2)) and abs(p4 - c[4]) < 1e-11 * max(1, abs(p4))


def test_riccati_residual_order():
    stack = CarliniStack(CUBIC, 0.36, max_order=6)
    z = 0.9 - 0.7j
    r = [abs(riccati_residual(stack, z, h)) for h in (0.04, 0.02, 0.01)]
    slopes = [math.log2(a / b) for a, b in zip(r, r[1:])]
    assert all(6.5 < s < 7.5 for s in slopes)


def test_near_turning_point_refused():
    stack = CarliniStack(CUBIC, 0.36)
    t = turning_points(CUBIC, 0.36).I_plus
    with pytest.raises(NearTurningPoint):
        carlini_coefficients(stack, t + 1e-3, 2)


@pytest.mark.parametrize("mode", MODES)
def test_chi_zero_reduces_to_p0(mode):
    stack = CarliniStack(CUBIC, 0.36)
    z = 0.3 - 0.8j
    p0 = carlini_coefficients(stack, z, 0)[0]
    assert abs(resummed(ResummedMomentum(stack, mode, 0.0), z) - p0) < 1e-14


def test_pade_formula_as_written():
    stack = CarliniStack(CUBIC, 0.36)
    z, chi = 0.7 - 0.4j, 2e-3
    c = carlini_coefficients(stack, z, 4)
    expect = c[0] + chi * c[2] / (1 - chi * c[4] / c[2])
    assert abs(resummed(ResummedMomentum(stack, "pade11", chi), z) - expect) < 1e-14


far_points = st.builds(complex, st.floats(-1.5, 1.5), st.floats(-1.5, 1.5)).filter(
    lambda z: min(abs(z - t) for t in turning_points(CUBIC, 0.36).points) > 0.5)


@settings(max_examples=15)
@given(far_points)
def test_sre_self_consistency(z):
    stack = CarliniStack(CUBIC, 0.36)
    for mode in MODES:
        assert abs(sre_residual(ResummedMomentum(stack, mode, 1e-4, order=3), z)) < 1e-8


near_points = st.builds(lambda i, d, a: turning_points(CUBIC, 0.36).points[i] + d * cmath.exp(1j * a),
                        st.integers(0, 2), st.floats(0.1, 0.2), st.floats(0, 2 * math.pi)).filter(
    lambda z: min(abs(z - t) for t in turning_points(CUBIC, 0.36).points) > 0.1)


@settings(max_examples=10)
@given(near_points)
def test_sre_residual_order_near_turning_points(z):
    # closer in the residual is larger but keeps its order in chi: chi^3 for pade, chi^4 otherwise.
    # below 1e-13 the residual is roundoff and the ratio carries no information
    stack = CarliniStack(CUBIC, 0.36)
    for mode, k in (("truncation", 4), ("pade11", 3), ("continued_fraction", 4)):
        r = [abs(sre_residual(ResummedMomentum(stack, mode, c, order=3), z)) for c in (1e-5, 1e-6)]
        assert r[1] < 10.0 ** (-k + 0.5) * r[0] or r[1] < 1e-13


def test_pade_regular_near_turning_point():
    stack = CarliniStack(CUBIC, 0.36)
    t = turning_points(CUBIC, 0.36).I_plus
    v = resummed(ResummedMomentum(stack, "pade11", 1e-2), t + 1e-3)
    assert np.isfinite(v)
    with pytest.raises(NearTurningPoint):
        resummed(ResummedMomentum(stack, "truncation", 1e-2), t + 1e-3)


def test_sector_counts():
    cub = asymptotic_directions(CUBIC)
    assert len(cub) == 5
    assert np.allclose(np.sort(np.mod(cub, 2 * math.pi)), np.sort(np.mod(math.pi / 10 + 2 * math.pi * np.arange(5) / 5, 2 * math.pi)))
    assert len(asymptotic_directions(HO)) == 4


def test_harmonic_complex():
    d = trace_stokes(1.0, spec=HO)
    assert d.board is None
    assert {l.sector for l in d.lines if l.end == "escape"} == {0, 1, 2, 3}
    assert d.string is not None and np.max(np.abs(d.string.imag)) < 1e-6


@pytest.mark.parametrize("E,topo", [(E_CRITICAL, "attached"), (0.4, "detached"), (0.3, "broken"),
                                    (E_CRITICAL + 1e-3, "detached"), (E_CRITICAL + 1e-3j, "asymmetric")])
def test_topologies(E, topo):
    d = trace_stokes(E)
    assert d.topology == topo
    if topo == "attached":
        assert d.contact_distance < 1e-3
    if topo == "detached":
        assert d.contact_distance > 0


def test_string_endpoints_and_phase_drift():
    d = trace_stokes(0.4)
    tp = d.turning_points
    assert abs(d.string[0] - tp.I_minus) < 1e-6 and abs(d.string[-1] - tp.I_plus) < 1e-6
    for line in d.lines:
        assert phase_defect(line, 0.4) < 1e-6


def test_exact_string_equals_classical_at_zero_hbar():
    a = trace_stokes(0.4, 0.0, mode="truncation")
    b = trace_stokes(0.4, 0.0, mode="pade11")
    assert a.string.shape == b.string.shape and np.max(np.abs(a.string - b.string)) < 1e-8


def _short_line_energy(t):
    """Energy at distance t from the well bottom where the pair of turning points near
    -1/sqrt(3) is joined by a Stokes line (Re of the straight action vanishes)."""
    from scipy.optimize import brentq

    from ptwell.wkb import _straight_action

    x0 = -1 / math.sqrt(3)

    def f(th):
        E = BOTTOM_ENERGY + t * cmath.exp(1j * th)
        a, b = sorted(turning_points(CUBIC, E).points, key=lambda z: abs(z - x0))[:2]
        return _straight_action(a, b, E).real

    return BOTTOM_ENERGY + t * cmath.exp(1j * brentq(f, -1.2, -0.4, xtol=1e-13))


def test_string_degenerates_at_bottom():
    x0 = -1 / math.sqrt(3)
    lengths = []
    for t in (0.1, 0.03, 0.01):
        d = trace_stokes(_short_line_energy(t))
        short = [l for l in d.lines if {l.origin, l.end} == {"I_minus", "I_zero"}]
        assert short
        line = min(short, key=lambda l: l.arclength)
        lengths.append(line.arclength)
        assert max(abs(line.points[0] - x0), abs(line.points[-1] - x0)) < 2 * math.sqrt(t)
    assert lengths[0] > lengths[1] > lengths[2]
    # the two turning points separate like sqrt(t)
    assert abs(lengths[1] / lengths[2] - math.sqrt(3)) < 0.15


def test_critical_energy_two_routes():
    a = critical_energy()
    b = critical_energy_action()
    assert abs(b - E_CRITICAL) < 1e-12
    assert abs(a - 0.352268) < 1e-4 and abs(a - b) < 1e-5


def test_board_on_axis():
    assert board_on_axis_check(0.36, 0.05, N=4).max_imag < 1e-10
    assert board_on_axis_check(0.36, 0.0, N=0).max_imag == 0.0
    assert board_on_axis_check(0.36 + 0.01j, 0.05, N=4).max_imag > 1e-6
