"""Exact (winding) and semiclassical (action) quantization functionals."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import BoundaryZero, BranchTrackingFailure, ContourThroughZero
from .model import PotentialSpec, Rep, turning_points
from .wavefield import EntireState, Rect, ZeroCatalog, classify_catalog, region_tag, winding_number

INFLATE = 0.2
NUDGE = 1e-3


@dataclass(frozen=True)
class QuantizationReport:
    kind: str
    contour: Rect
    value: complex
    implied_index: float
    nearest_integer: int
    defect: float
    winding: float


def effective_hbar(spec: PotentialSpec) -> complex:
    return complex(np.sqrt(spec.kinetic))


def _bbox(points, pad):
    xs = [p.real for p in points]
    ys = [p.imag for p in points]
    return Rect(min(xs) - pad, max(xs) + pad, min(ys) - pad, max(ys) + pad)


def _contour(catalog: ZeroCatalog, side: str) -> Rect:
    nodes = catalog.nodes
    if side == "both":
        if not nodes:
            return Rect(-1.0, 1.0, -1.0, -NUDGE)
        r = _bbox(nodes, INFLATE)
        top = max(p.imag for p in nodes)
        # stay in the lower half-plane when the nodes allow it
        y1 = min(r.y1, -NUDGE) if top < -2 * NUDGE else r.y1
        return Rect(r.x0, r.x1, r.y0, y1)
    sgn = 1 if side == "plus" else -1
    mine = [p for p in nodes if sgn * p.real > 0]
    other = [p for p in nodes if sgn * p.real < 0]
    if mine:
        r = _bbox(mine, INFLATE)
    elif other:
        # no nodes on this side: mirror the other box and pull its top below any board zero inside
        r = _bbox([-p.conjugate() for p in other], INFLATE)
        inside = [z for z in catalog.board_zeros if r.contains(z)]
        if inside:
            top = min(z.imag for z in inside) - 0.5 * INFLATE
            r = Rect(r.x0, r.x1, min(r.y0, top - INFLATE), top)
    else:
        return Rect(NUDGE, 1.0, -1.0, 0.0) if sgn > 0 else Rect(-1.0, -NUDGE, -1.0, 0.0)
    if sgn > 0:
        return Rect(max(r.x0, NUDGE), r.x1, r.y0, r.y1)
    return Rect(r.x0, min(r.x1, -NUDGE), r.y0, r.y1)


def exact_quantization(state: EntireState, side: str = "both", catalog: ZeroCatalog | None = None,
                       rect: Rect | None = None) -> QuantizationReport:
    """hbar/(2 pi i) times the contour integral of psi'/psi plus hbar/2, as a winding count."""
    if side not in ("plus", "minus", "both"):
        raise ValueError("side must be plus, minus or both")
    if rect is None:
        catalog = catalog or classify_catalog(state)
        rect = _contour(catalog, side)
    h = effective_hbar(state.spec)
    r = rect
    for k in range(6):
        try:
            w = winding_number(state, r, "zeros")
            break
        except BoundaryZero:
            d = NUDGE * (k + 1)
            r = Rect(r.x0 - d, r.x1 + d, r.y0 - d, r.y1 + d)
    else:
        raise ContourThroughZero("quantization contour keeps hitting a zero", rect=rect)
    value = h * (w + 0.5)
    implied = (value / h - 0.5).real
    n = int(round(implied))
    kind = {"plus": "Jplus", "minus": "Jminus", "both": "J2"}[side]
    return QuantizationReport(kind, r, complex(value), implied, n, abs(implied - n), w)


# ------------------------------------------------------------- actions

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _pair(tp, hint):
    if hint in ("minus", "I_minus-I_zero", "left"):
        return tp.I_minus, tp.I_zero, tp.I_plus
    if hint in ("plus", "I_zero-I_plus", "right"):
        return tp.I_zero, tp.I_plus, tp.I_minus
    if hint in ("outer", "string", "I_minus-I_plus"):
        return tp.I_minus, tp.I_plus, tp.I_zero
    raise ValueError(f"unknown contour hint {hint!r}")


def _ellipse_param(a, b, third, mu):
    c = 0.5 * (a + b)
    d = 0.5 * (b - a)
    if third is not None:
        mu3 = cmath.acosh((third - c) / d).real
        mu = min(mu, 0.6 * abs(mu3))
    return c, d, mu


def _branch_tracked_sqrt(w2):
    """Square roots of the samples w2 with the sign chosen for continuity along the list."""
    r = np.sqrt(w2.astype(complex))
    for i in range(1, r.size):
        if abs(r[i] + r[i - 1]) < abs(r[i] - r[i - 1]):
            r[i] = -r[i]
        if abs(r[i] - r[i - 1]) > math.sqrt(2) * max(abs(r[i]), abs(r[i - 1])) + 1e-300:
            raise BranchTrackingFailure("square-root phase jumps by more than pi/2 between samples")
    return r


def semiclassical_action(E: complex, hint: str = "plus", spec: PotentialSpec | None = None,
                         mu: float = 0.5, panels: int = 32) -> complex:
    """(1/2 pi i) times the loop integral of sqrt(V - E) around a pair of turning points.

    The loop is the confocal ellipse z = c + d cosh(mu + i t) around the pair, integrated with
    Gauss-Legendre panels; the branch is followed continuously and the overall sign is fixed so
    that the real part is non-negative.
    """
    spec = spec or PotentialSpec(Rep.H, 1.0)
    tp = turning_points(spec, E)
    if tp.min_separation < 1e-6:
        raise BranchTrackingFailure("turning points coalesce", separation=tp.min_separation)
    if tp.I_zero is None:
        a, b, third = tp.I_minus, tp.I_plus, None
    else:
        a, b, third = _pair(tp, hint)
    c, d, mu = _ellipse_param(a, b, third, mu)
    edges = np.linspace(0, 2 * math.pi, panels + 1)
    t = np.concatenate([0.5 * (e1 - e0) * _GL_X + 0.5 * (e1 + e0) for e0, e1 in zip(edges[:-1], edges[1:])])
    wts = np.concatenate([0.5 * (e1 - e0) * _GL_W for e0, e1 in zip(edges[:-1], edges[1:])])
    z = c + d * np.cosh(mu + 1j * t)
    dz = d * 1j * np.sinh(mu + 1j * t)
    p = _branch_tracked_sqrt(spec.V(z) - E)
    val = np.sum(p * dz * wts) / (2j * math.pi)
    return -val if val.real < 0 else val


def semiclassical_level(n: int, side: int, hbar: float, order_guess: complex | None = None) -> complex:
    """Solve action(E) = hbar (n + 1/2) near the well x_+ (side=+1) or x_- (side=-1)."""
    from .model import semiclassical_energy

    hint = "plus" if side > 0 else "minus"
    target = hbar * (n + 0.5)
    E0 = order_guess if order_guess is not None else semiclassical_energy(n, side, hbar)
    E1 = E0 * (1 + 1e-6) + 1e-9
    f0 = semiclassical_action(E0, hint) - target
    f1 = semiclassical_action(E1, hint) - target
    for _ in range(60):
        if f1 == f0:
            break
        E2 = E1 - f1 * (E1 - E0) / (f1 - f0)
        E0, f0 = E1, f1
        E1, f1 = E2, semiclassical_action(E2, hint) - target
        if abs(E1 - E0) < 1e-14:
            break
    return E1


# ---------------------------------------------------------- confinement

@dataclass(frozen=True)
class ConfinementTally:
    counts: dict
    violations: list


def confinement_report(catalog: ZeroCatalog, axis_tol: float = 1e-6) -> ConfinementTally:
    """Tally catalog zeros by region; non-imaginary zeros outside C_sigma and off-axis
    upper-half-plane zeros are listed as violations."""
    counts: dict = {}
    bad = []
    for z in list(catalog.nodes) + list(catalog.board_zeros):
        tag = region_tag(z, axis_tol)
        if abs(z.imag) < axis_tol and tag != "imaginaryAxis":
            tag = "realAxis"
        counts[tag] = counts.get(tag, 0) + 1
        if tag in ("C_plus_half", "C_minus_half", "C_B"):
            bad.append(z)
    return ConfinementTally(counts, bad)
