"""Carlini series, resummed momenta, Stokes-line tracing and the critical energy."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import series as ts
from .errors import (ConnectionAmbiguous, NearTurningPoint, NoTransition, PoleOnEvaluation,
                     TracerStall)
from .model import PotentialSpec, Rep, TurningPointSet, imag_turning_point, turning_points

EXCLUSION = 1e-2
CONNECT_TOL = 1e-4
CUBIC = PotentialSpec(Rep.H, 1.0)


def _potential(spec: PotentialSpec | None) -> np.ndarray:
    return np.array((spec or CUBIC).coeffs, dtype=complex)


# ------------------------------------------------------------------ Carlini

@dataclass(frozen=True)
class CarliniStack:
    """Formal solution p = sum p_n hbar^n of p**2 + kappa*hbar*p' = V - E.

    kappa = 1 matches the Schroedinger equation hbar^2 psi'' = (V - E) psi with
    psi = exp(int p / hbar); kappa = -1j gives p_1 = i p_0'/(2 p_0).  In general
    p_n(kappa) = kappa**n p_n(1).
    """

    spec: PotentialSpec = CUBIC
    energy: complex = 0.0
    max_order: int = 6
    kappa: complex = 1.0
    tps: TurningPointSet | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.tps is None:
            object.__setattr__(self, "tps", turning_points(self.spec, self.energy))

    @property
    def exclusion(self) -> float:
        return EXCLUSION * min(1.0, float(self.tps.min_separation))

    def check_distance(self, z, radius=None):
        r = self.exclusion if radius is None else radius
        d = min(abs(z - t) for t in self.tps.points)
        if d < r:
            raise NearTurningPoint("point inside a turning-point exclusion disk", z=z, distance=d, radius=r)

    def series(self, z: complex, up_to: int | None = None, root0: complex | None = None, extra: int = 2):
        """Taylor arrays (in t = w - z) of p_0 ... p_up_to, each of length up_to + extra + 1."""
        n = self.max_order if up_to is None else up_to
        K = n + extra + 1
        c = _potential(self.spec)
        c[0] -= self.energy
        sh = ts.poly_shift(c, complex(z))
        a = np.zeros(K, dtype=complex)
        a[: min(K, sh.size)] = sh[:K]
        ps = [ts.sqrt(a, root0)]
        for m in range(1, n + 1):
            acc = self.kappa * ts.deriv(ps[m - 1])
            for k in range(1, m):
                acc = acc + ts.mul(ps[k], ps[m - k])
            ps.append(-ts.div(acc, 2.0 * ps[0]))
        return ps

    def coefficients(self, z: complex, up_to: int | None = None, root0: complex | None = None):
        self.check_distance(z)
        return np.array([p[0] for p in self.series(z, up_to, root0)])


def carlini_coefficients(stack: CarliniStack, z: complex, up_to: int | None = None,
                         root0: complex | None = None) -> np.ndarray:
    if up_to is not None and up_to > stack.max_order:
        raise ValueError("up_to exceeds the stack's max_order")
    return stack.coefficients(z, up_to, root0)


def riccati_residual(stack: CarliniStack, z: complex, hbar: complex, root0=None) -> complex:
    """(sum p_n h^n)^2 + kappa h (sum p_n h^n)' - p_0^2 at z."""
    ps = stack.series(z, root0=root0)
    h = complex(hbar)
    p = sum(p_[0] * h ** n for n, p_ in enumerate(ps))
    dp = sum(p_[1] * h ** n for n, p_ in enumerate(ps))
    return p * p + stack.kappa * h * dp - ps[0][0] ** 2


def explicit_p2_p4(stack: CarliniStack, z: complex, root0=None):
    """p_2 and p_4 from the odd parts q_0, q_2 of the even-part Riccati equation (kappa = 1).

    P^2 - p_0^2 = -chi (Q^2 + Q'), Q = -P'/(2P), with q_0 = p_0'/(2 p_0) = V'/(4 p_0^2) and
    q_2 = p_2'/(2 p_0) - p_0' p_2/(2 p_0^2), so that Q = -(q_0 + chi q_2 + ...).
    """
    if stack.kappa != 1:
        raise ValueError("closed forms are written for kappa = 1")
    K = 8
    c = _potential(stack.spec)
    c[0] -= stack.energy
    sh = ts.poly_shift(c, complex(z))
    a = np.zeros(K, dtype=complex)
    a[: sh.size] = sh[:K]
    p0 = ts.sqrt(a, root0)
    q0 = ts.div(ts.deriv(p0), 2 * p0)
    p2 = -ts.div(ts.mul(q0, q0) - ts.deriv(q0), 2 * p0)
    q2 = ts.div(ts.deriv(p2), 2 * p0) - ts.div(ts.mul(ts.deriv(p0), p2), 2 * ts.mul(p0, p0))
    p4 = -ts.div(2 * ts.mul(q0, q2) - ts.deriv(q2) + ts.mul(p2, p2), 2 * p0)
    return p2[0], p4[0], q0[0]


# --------------------------------------------------------------- resummation

MODES = ("truncation", "pade11", "continued_fraction")


@dataclass(frozen=True)
class ResummedMomentum:
    stack: CarliniStack
    mode: str = "pade11"
    chi: complex = 0.0
    order: int = 2  # truncation order N in P^N = sum_{j<=N} chi^j p_2j

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


def _even_terms(stack, z, jmax, root0):
    ps = stack.series(z, up_to=2 * jmax, root0=root0)
    return [ps[2 * j] for j in range(jmax + 1)]


def _combine(mode, order, chi, c):
    """c: list of arrays (coefficient Taylor series) for p_0, p_2, p_4, ...; returns a Taylor array."""
    if chi == 0:
        return c[0]
    if mode == "truncation":
        out = c[0].copy()
        for j in range(1, order + 1):
            out = out + chi ** j * c[j]
        return out
    den_tol = 1e-10
    one = np.zeros_like(c[0])
    one[0] = 1.0
    if mode == "pade11":
        den = one - chi * ts.div(c[2], c[1])
        if abs(den[0]) < den_tol:
            raise PoleOnEvaluation("Pade [1,1] denominator vanishes", value=complex(den[0]))
        return c[0] + chi * ts.div(c[1], den)
    a2 = -ts.div(c[2], c[1])
    a3 = ts.div(c[2], c[1]) - ts.div(c[3], c[2])
    inner = one + chi * a3
    if abs(inner[0]) < den_tol:
        raise PoleOnEvaluation("continued fraction denominator vanishes", value=complex(inner[0]))
    den = one + chi * ts.div(a2, inner)
    if abs(den[0]) < den_tol:
        raise PoleOnEvaluation("continued fraction denominator vanishes", value=complex(den[0]))
    return c[0] + chi * ts.div(c[1], den)


def _jmax(mom):
    return {"truncation": mom.order, "pade11": 2, "continued_fraction": 3}[mom.mode]


def resummed_series(mom: ResummedMomentum, z: complex, root0=None, check: bool = True):
    if check and (mom.mode == "truncation" or mom.chi == 0):
        mom.stack.check_distance(z)
    jmax = _jmax(mom)
    if mom.stack.max_order < 2 * jmax:
        raise ValueError("stack max_order too small for the requested resummation")
    return _combine(mom.mode, mom.order, complex(mom.chi), _even_terms(mom.stack, z, jmax, root0))


def resummed(mom: ResummedMomentum, z: complex, root0=None) -> complex:
    """P_chi(z) in the selected mode; Pade modes are allowed close to turning points."""
    if mom.mode != "truncation" and mom.chi != 0:
        d = min(abs(z - t) for t in mom.stack.tps.points)
        if d == 0:
            raise NearTurningPoint("evaluation exactly at a turning point", z=z)
    return complex(resummed_series(mom, z, root0)[0])


def sre_residual(mom: ResummedMomentum, z: complex, root0=None) -> complex:
    """P^2 - p_0^2 + chi (Q^2 + Q') with Q = -P'/(2P)."""
    P = resummed_series(mom, z, root0)
    c = _potential(mom.stack.spec)
    c[0] -= mom.stack.energy
    p02 = complex(np.polynomial.polynomial.polyval(z, c))
    Q = -ts.div(ts.deriv(P), 2 * P)
    dQ = ts.deriv(Q)
    return P[0] ** 2 - p02 + mom.chi * (Q[0] ** 2 + dQ[0])


# ------------------------------------------------------------ Stokes lines

@dataclass(frozen=True)
class StokesLine:
    origin: str
    launch: int
    kind: str
    exact: bool
    points: np.ndarray = field(repr=False)
    end: str  # turning-point label, "escape" or "cap"
    sector: int | None = None
    phase_drift: float = 0.0

    @property
    def arclength(self) -> float:
        return float(np.sum(np.abs(np.diff(self.points))))


@dataclass(frozen=True)
class StokesComplexData:
    energy: complex
    hbar: complex
    turning_points: TurningPointSet
    lines: tuple
    string: np.ndarray | None
    board: np.ndarray | None
    contact_distance: float | None
    topology: str


def asymptotic_directions(spec: PotentialSpec) -> np.ndarray:
    """Angles of the Stokes asymptotes: p_0 ~ sqrt(v_d) z^(d/2), Re of its integral vanishes."""
    c = _potential(spec)
    d = c.size - 1
    a = cmath.phase(cmath.sqrt(c[-1]))
    k = np.arange(d + 2)
    return np.mod((math.pi / 2 - a + k * math.pi) * 2 / (d + 2), 2 * math.pi)


class _Momentum:
    """Branch-tracked P(z) for the tracer: p_0 (classical) or a resummed momentum (exact)."""

    def __init__(self, spec, E, hbar, mode):
        self.c = _potential(spec)
        self.c[0] -= E
        self.exact = hbar != 0
        if self.exact:
            st = CarliniStack(spec, E, max_order=6)
            self.mom = ResummedMomentum(st, mode, complex(hbar) ** 2)

    def p0(self, z, ref):
        v = cmath.sqrt(complex(np.polynomial.polynomial.polyval(z, self.c)))
        return -v if ref is not None and abs(v + ref) < abs(v - ref) else v

    def __call__(self, z, ref):
        r0 = self.p0(z, ref)
        if not self.exact:
            return r0
        return complex(resummed_series(self.mom, z, root0=r0, check=False)[0])


_GL3 = np.polynomial.legendre.leggauss(4)


def _segment_integral(P, a, b, ref):
    x, w = _GL3
    tot = 0j
    r = ref
    for xi, wi in zip(x, w):
        z = a + (b - a) * (xi + 1) / 2
        r = P(z, r)
        tot += wi * r
    return tot * (b - a) / 2


def _launch_integral(P, t, z, ref):
    """Integral of P from the turning point t to z along a straight segment (sqrt endpoint)."""
    # z(u) = t + (z - t) u^2 removes the square-root singularity at u = 0
    x, w = np.polynomial.legendre.leggauss(12)
    u = (x + 1) / 2
    vals = []
    r = ref
    for ui in u[::-1]:
        r = P(t + (z - t) * ui * ui, r)
        vals.append(r)
    vals = np.array(vals[::-1])
    return complex(np.sum(w / 2 * vals * 2 * u) * (z - t))


def _trace_line(P, t, theta, others, kind, R_box, sector_angles, excl, s_cap=40.0, h_max=0.02):
    z = t + excl * cmath.exp(1j * theta)
    # p at the launch point with the Airy-consistent branch: P u in iR (stokes) or R (anti)
    p = P(z, None)
    u0 = cmath.exp(1j * theta)
    target = 1j if kind == "stokes" else 1.0
    if ((p * u0) / target).real < 0:
        p = -p
    W = _launch_integral(P, t, z, p)
    pts = [t, z]
    u_prev = u0
    s = excl
    drift = 0.0

    def direction(zz, pref, uref):
        pp = P(zz, pref)
        u = (target * pp.conjugate()) / abs(pp)
        if (u * uref.conjugate()).real < 0:
            u = -u
        return u, pp

    h_min = 1e-9
    while s < s_cap:
        dists = [abs(z - o) for o in others.values()]
        dmin = min(dists) if dists else math.inf
        h = min(h_max, 0.2 * dmin, 0.05 * max(1.0, abs(z)))
        if h < h_min:
            raise TracerStall("tracer step collapsed", z=z, step=h)
        k1, p1 = direction(z, p, u_prev)
        k2, _ = direction(z + 0.5 * h * k1, p1, k1)
        k3, _ = direction(z + 0.5 * h * k2, p1, k2)
        k4, _ = direction(z + h * k3, p1, k3)
        step = h * (k1 + 2 * k2 + 2 * k3 + k4) / 6
        zn = z + step
        W = W + _segment_integral(P, z, zn, p1)
        pn = P(zn, p1)
        phase = W.real if kind == "stokes" else W.imag
        drift = max(drift, abs(phase))
        if dmin > 3 * excl and abs(pn) > 1e-12:
            corr = -phase * (1.0 if kind == "stokes" else 1j) / pn
            zn = zn + corr
            W = W + pn * corr
        u_prev = (zn - z) / abs(zn - z)
        z, p = zn, pn
        s += abs(step)
        pts.append(z)
        hits = [lab for lab, o in others.items() if abs(z - o) < CONNECT_TOL]
        if len(hits) > 1:
            raise ConnectionAmbiguous("two turning points within the connection tolerance", z=z, hits=hits)
        if hits:
            pts.append(others[hits[0]])
            return np.array(pts), hits[0], None, drift
        if abs(z) > R_box:
            ang = cmath.phase(z) % (2 * math.pi)
            dd = np.abs(np.angle(np.exp(1j * (sector_angles - ang))))
            return np.array(pts), "escape", int(np.argmin(dd)), drift
    return np.array(pts), "cap", None, drift


def _launch_angles(spec, t):
    dV = np.polynomial.polynomial.polyder(_potential(spec))
    c = complex(np.polynomial.polynomial.polyval(t, dV))
    return [(math.pi - cmath.phase(c) + 2 * math.pi * k) / 3 for k in range(3)]


def _mirror_sector(sector_angles, k):
    ang = (math.pi - sector_angles[k]) % (2 * math.pi)
    return int(np.argmin(np.abs(np.angle(np.exp(1j * (sector_angles - ang))))))


def _poly_distance(a, b, step=1e-3):
    def resample(p):
        out = [p[0]]
        for z0, z1 in zip(p[:-1], p[1:]):
            n = max(1, int(math.ceil(abs(z1 - z0) / step)))
            out.extend(z0 + (z1 - z0) * np.arange(1, n + 1) / n)
        return np.array(out)

    A, B = resample(a), resample(b)
    best = math.inf
    for i in range(0, A.size, 2048):
        best = min(best, float(np.min(np.abs(A[i:i + 2048, None] - B[None, :]))))
    return best


def classify_topology(tp: TurningPointSet, lines, sector_angles) -> str:
    if tp.I_zero is None:
        return "detached" if any(l.origin == "I_minus" and l.end == "I_plus" for l in lines) else "broken"
    string = any({l.origin, l.end} == {"I_minus", "I_plus"} for l in lines)
    to0 = {l.origin for l in lines if l.end == "I_zero" and l.origin in ("I_minus", "I_plus")}
    to0 |= {l.end for l in lines if l.origin == "I_zero" and l.end in ("I_minus", "I_plus")}
    if to0 == {"I_minus", "I_plus"}:
        return "attached"
    if string and not to0:
        return "detached"

    def outcomes(lab):
        out = []
        for l in lines:
            if l.origin != lab:
                continue
            out.append(("esc", l.sector) if l.end == "escape" else (l.end, None))
        return sorted(out, key=str)

    mirror = {"I_minus": "I_plus", "I_plus": "I_minus", "I_zero": "I_zero"}
    left = outcomes("I_minus")
    right = [("esc", _mirror_sector(sector_angles, s)) if e == "esc" else (mirror.get(e, e), None)
             for e, s in outcomes("I_plus")]
    if not to0 and sorted(right, key=str) == left:
        return "broken"
    return "asymmetric"


def trace_stokes(E: complex, hbar: complex = 0.0, mode: str = "pade11", spec: PotentialSpec | None = None,
                 kind: str = "stokes", origins=("I_minus", "I_plus", "I_zero"), R_box: float | None = None,
                 h_max: float = 0.02) -> StokesComplexData:
    """Trace the lines P^2 dz^2 < 0 (stokes) or > 0 (antiStokes) from each turning point.

    Lines start on the Airy directions at a small distance from their turning point and are
    integrated with RK4 steps on the unit direction field, with a correction that keeps
    Re (or Im) of the accumulated integral of P at zero.
    """
    spec = spec or CUBIC
    if kind not in ("stokes", "antiStokes"):
        raise ValueError("kind must be stokes or antiStokes")
    tp = turning_points(spec, E)
    labeled = tp.labeled()
    excl = EXCLUSION * min(1.0, float(tp.min_separation))
    R_box = R_box or 3.0 * max(1.0, max(abs(t) for t in tp.points))
    angles = asymptotic_directions(spec)
    P = _Momentum(spec, E, hbar, mode)
    lines = []
    for lab in origins:
        if lab not in labeled:
            continue
        t = labeled[lab]
        others = {k: v for k, v in labeled.items() if k != lab}
        for k, th in enumerate(_launch_angles(spec, t)):
            pts, end, sec, drift = _trace_line(P, t, th, others, kind, R_box, angles, excl, h_max=h_max)
            lines.append(StokesLine(lab, k, kind, bool(hbar != 0), pts, end, sec, drift))
    topo = classify_topology(tp, lines, angles) if kind == "stokes" else "n/a"
    string = next((l.points for l in lines if l.origin == "I_minus" and l.end == "I_plus"), None)
    if string is None:
        rev = next((l.points for l in lines if l.origin == "I_plus" and l.end == "I_minus"), None)
        string = rev[::-1] if rev is not None else None
    up = int(np.argmin(np.abs(np.angle(np.exp(1j * (angles - math.pi / 2))))))
    board = next((l.points for l in lines if l.origin == "I_zero" and l.end == "escape" and l.sector == up), None)
    if topo == "attached":
        contact = 0.0
    elif string is not None and board is not None:
        contact = _poly_distance(string, board)
    elif string is not None and "I_zero" in labeled:
        contact = float(np.min(np.abs(string - labeled["I_zero"])))
    else:
        contact = None
    return StokesComplexData(complex(E), complex(hbar), tp, tuple(lines), string, board, contact, topo)


def phase_defect(line: StokesLine, E: complex, spec: PotentialSpec | None = None) -> float:
    """max |Re (or Im) integral of p_0| along a traced polyline, recomputed independently (per unit length)."""
    spec = spec or CUBIC
    P = _Momentum(spec, E, 0.0, "pade11")
    pts = line.points
    ref = P(pts[1], None)
    W = _launch_integral(P, pts[0], pts[1], ref)
    worst = 0.0
    s = abs(pts[1] - pts[0])
    for a, b in zip(pts[1:-2], pts[2:-1]):
        W += _segment_integral(P, a, b, ref)
        ref = P(b, ref)
        s += abs(b - a)
        v = W.real if line.kind == "stokes" else W.imag
        worst = max(worst, abs(v) / max(s, 1e-12))
    return worst


# ----------------------------------------------------------- critical energy

def topology(E: complex, hbar: complex = 0.0) -> str:
    return trace_stokes(E, hbar, origins=("I_minus", "I_plus")).topology


def critical_energy(lo: float = 0.3, hi: float = 0.4, tol: float = 1e-7) -> float:
    """Real energy where the string stops being detached from I_0 (bisection on the topology)."""
    t_lo, t_hi = topology(lo), topology(hi)
    if t_hi != "detached" or t_lo == "detached":
        raise NoTransition("no detached/non-detached transition in the bracket", lo=t_lo, hi=t_hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if topology(mid) == "detached":
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _straight_action(a, b, E, spec=None):
    c = _potential(spec)
    c[0] -= E

    def p(z, ref):
        v = cmath.sqrt(complex(np.polynomial.polynomial.polyval(z, c)))
        return -v if ref is not None and abs(v + ref) < abs(v - ref) else v

    # z = a + (b - a)(1 - cos th)/2 tames both square-root endpoints
    x, w = np.polynomial.legendre.leggauss(80)
    th = (x + 1) * math.pi / 2
    zz = a + (b - a) * (1 - np.cos(th)) / 2
    dz = (b - a) * np.sin(th) / 2 * (math.pi / 2)
    ref = None
    vals = []
    for zi in zz:
        ref = p(zi, ref)
        vals.append(ref)
    return complex(np.sum(w * np.array(vals) * dz))


def critical_energy_action(lo: float = 0.3, hi: float = 0.4) -> float:
    """Independent route: real E where Re of the I_minus -> I_zero action vanishes."""

    def f(E):
        tp = turning_points(CUBIC, E)
        return _straight_action(tp.I_minus, tp.I_zero, E).real

    return brentq(f, lo, hi, xtol=1e-15)


# -------------------------------------------------------------- board check

@dataclass(frozen=True)
class BoardReport:
    energy: complex
    hbar: float
    order: int
    y: np.ndarray = field(repr=False)
    P: np.ndarray = field(repr=False)
    max_imag: float
    passed: bool


def board_on_axis_check(E: complex, hbar: float, N: int = 4, length: float = 2.0, samples: int = 50,
                        tol: float = 1e-10) -> BoardReport:
    """Evaluate P^N_chi(iy) on y above the imaginary turning point; real values place the board on the axis."""
    y0 = imag_turning_point(E.real if isinstance(E, complex) else E)
    st = CarliniStack(CUBIC, E, max_order=2 * N)
    mom = ResummedMomentum(st, "truncation", hbar ** 2, order=N)
    ys = y0 + np.linspace(0.05, length, samples)
    vals = []
    for y in ys:
        z = 1j * y
        r0 = cmath.sqrt(complex(y ** 3 + y - E))
        if r0.real < 0:
            r0 = -r0
        vals.append(resummed(mom, z, root0=r0))
    vals = np.array(vals)
    mi = float(np.max(np.abs(vals.imag)))
    return BoardReport(complex(E), float(hbar), N, ys, vals, mi, mi < tol)
