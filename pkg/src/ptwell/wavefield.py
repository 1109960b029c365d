"""Eigenfunctions as entire functions: evaluation, zeros, catalogs, diagnostics.

On the real axis inside the basis trust radius an eigenfunction is summed
from its Hermite coefficients.  Anywhere else it is obtained by integrating
``psi'' = q(z) psi``, ``q = (V - E)/kin``, along a straight segment that
starts on the real axis, with a renormalized Taylor-series stepper.

Where the state is exponentially small on the real axis the basis sum has no
significant digits left, so beyond an anchor point on each side the function
is instead the subdominant solution integrated in from the decaying sector,
rescaled to match the basis sum at the anchor.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from . import basis, series
from .errors import AmbiguousClassification, BoundaryZero, CountMismatch, OverflowRegime
from .model import PotentialSpec, Rep, turning_points
from .spectral import Eigenpair, refine_pair

REAL_LEVEL_TOL = 1e-8
AXIS_TOL = 1e-6
TAIL_REL = 1e-4


@dataclass(frozen=True)
class Tail:
    side: int
    anchor: float
    start: complex
    psi0: complex
    dpsi0: complex
    log_scale: complex
    mismatch: float


@dataclass(frozen=True)
class EntireState:
    pair: Eigenpair
    spec: PotentialSpec
    coefficients: np.ndarray = field(repr=False)
    omega: float
    radius: float
    gauge: str = "raw"
    tails: tuple = ()

    @property
    def energy(self) -> complex:
        return self.pair.energy

    @property
    def kinetic(self) -> complex:
        return self.spec.kinetic

    @property
    def q_coeffs(self) -> np.ndarray:
        c = np.array(self.spec.coeffs, dtype=complex)
        c[0] -= self.energy
        return c / self.kinetic

    def q(self, z):
        return np.polynomial.polynomial.polyval(z, self.q_coeffs)

    # ---------------------------------------------------------- evaluation
    def evaluate_scaled(self, z):
        """(psi, dpsi, log) with true values psi*exp(log), dpsi*exp(log)."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        psi, dpsi, log = self._from_axis(z)
        for t in self.tails:
            sel = (z.real < t.anchor) if t.side < 0 else (z.real > t.anchor)
            if np.any(sel):
                n = int(sel.sum())
                a, b, lg = series.propagate(self.q_coeffs, np.full(n, t.start), np.full(n, t.psi0),
                                            np.full(n, t.dpsi0), z[sel])
                ph = np.exp(1j * t.log_scale.imag)
                psi[sel], dpsi[sel], log[sel] = a * ph, b * ph, lg + t.log_scale.real
        return psi, dpsi, log

    def _from_axis(self, z):
        x0 = np.clip(z.real, -self.radius, self.radius)
        p0, d0 = basis.expand(self.coefficients, self.omega, x0)
        p0 = p0.astype(complex)
        d0 = d0.astype(complex)
        scale = np.abs(p0) + np.abs(d0) / self.omega
        scale = np.where(scale > 0, scale, 1.0)
        log0 = np.log(scale)
        direct = z == x0
        psi, dpsi, log = p0 / scale, d0 / scale, log0.astype(float)
        if not np.all(direct):
            sel = ~direct
            a, b, lg = series.propagate(self.q_coeffs, x0[sel].astype(complex), psi[sel], dpsi[sel], z[sel],
                                        log0=log0[sel])
            psi = psi.copy()
            dpsi = dpsi.copy()
            log = log.copy()
            psi[sel], dpsi[sel], log[sel] = a, b, lg
        return psi, dpsi, log

    def evaluate(self, z, with_derivative: bool = True):
        scalar = np.ndim(z) == 0
        psi, dpsi, log = self.evaluate_scaled(z)
        if np.any(log > 700):
            raise OverflowRegime("|psi| exceeds the representable range; use evaluate_scaled", max_log=float(log.max()))
        f = np.exp(log)
        psi, dpsi = psi * f, dpsi * f
        if scalar:
            psi, dpsi = psi[0], dpsi[0]
        return (psi, dpsi) if with_derivative else psi

    def axis(self, y):
        """phi(y) = psi(iy) and its y-derivative i*psi'(iy)."""
        psi, dpsi = self.evaluate(1j * np.asarray(y, dtype=float))
        return psi, 1j * dpsi


def _real_axis_origin(coeffs, omega):
    p, d = basis.expand(coeffs, omega, np.array([0.0]))
    return complex(p[0]), complex(d[0])


def make_state(pair: Eigenpair, gauge: str | None = None, refine: bool = True) -> EntireState:
    """Wrap an eigenpair.

    Gauges: 'imaginary-axis' makes psi(iy) real and positive for y -> -inf (default
    for the cubic family); 'real-axis' makes the largest coefficient real and positive
    (default for the harmonic test operator); 'raw' keeps the solver's phase.
    """
    if refine:
        pair = refine_pair(pair)
    spec = pair.spec
    if gauge is None:
        gauge = "real-axis" if spec.rep is Rep.HARMONIC else "imaginary-axis"
    c = np.asarray(pair.coefficients, dtype=complex)
    omega = pair.omega
    R = basis.trust_radius(c.size, omega)
    if gauge == "raw":
        return _with_tails(EntireState(pair, spec, c, omega, R, "raw"))
    if gauge == "real-axis":
        k = int(np.argmax(np.abs(c)))
        return _with_tails(EntireState(pair, spec, c * abs(c[k]) / c[k], omega, R, gauge))
    if gauge != "imaginary-axis":
        raise ValueError(f"unknown gauge {gauge!r}")
    p0, d0 = _real_axis_origin(c, omega)
    # phi(0)=psi(0), phi'(0)=i psi'(0); rotate the larger of the two onto the real line
    ref = p0 if abs(p0) >= abs(d0) / omega else 1j * d0
    phase = abs(ref) / ref if ref != 0 else 1.0
    c = c * phase
    st = EntireState(pair, spec, c, omega, R, gauge)
    tp = turning_points(spec, pair.energy)
    y_ref = -(1.0 + max(abs(p) for p in tp.points))
    phi, _, _ = _with_tails(st).evaluate_scaled(np.array([1j * y_ref]))
    if phi[0].real < 0:
        c = -c
    return _with_tails(EntireState(pair, spec, c, omega, R, gauge))


def _with_tails(st: EntireState) -> EntireState:
    from .spectral import _matching_radius, decaying_directions

    x = np.linspace(-st.radius, st.radius, 801)
    p, _ = basis.expand(st.coefficients, st.omega, x)
    mag = np.abs(p)
    big = np.flatnonzero(mag >= TAIL_REL * mag.max())
    right, left = decaying_directions(st.spec)
    Rm = _matching_radius(st.spec, st.energy)
    tails = []
    for side, idx, theta in ((-1, big[0], left), (1, big[-1], right)):
        if idx in (0, x.size - 1):
            continue
        xa = float(x[idx])
        e = cmath.exp(1j * theta)
        Z = Rm * e
        qZ = complex(st.q(Z))
        k = cmath.sqrt(qZ)
        if (k * e).real < 0:
            k = -k
        d = -k - complex(np.polynomial.polynomial.polyval(Z, np.polynomial.polynomial.polyder(st.q_coeffs))) / (4 * qZ)
        a, b, lg = series.propagate(st.q_coeffs, [Z], [1.0], [d], [complex(xa)])
        pa, da = basis.expand(st.coefficients, st.omega, np.array([xa]))
        log_scale = cmath.log(complex(pa[0])) - cmath.log(complex(a[0])) - float(lg[0])
        mismatch = abs(b[0] / a[0] - da[0] / pa[0]) / max(1.0, abs(da[0] / pa[0]))
        tails.append(Tail(side, xa, Z, 1.0 + 0j, d, log_scale, float(mismatch)))
    return EntireState(st.pair, st.spec, st.coefficients, st.omega, st.radius, st.gauge, tuple(tails))


# ------------------------------------------------------------ zero search

@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float

    def boundary(self, n):
        """Counter-clockwise boundary samples, n per unit length (at least 8 per edge)."""
        xs0, xs1, ys0, ys1 = self.x0, self.x1, self.y0, self.y1
        corners = [complex(xs0, ys0), complex(xs1, ys0), complex(xs1, ys1), complex(xs0, ys1)]
        pts = []
        for a, b in zip(corners, corners[1:] + corners[:1]):
            m = max(8, int(math.ceil(abs(b - a) * n)))
            pts.append(a + (b - a) * np.arange(m) / m)
        return np.concatenate(pts)

    def contains(self, z, pad=0.0):
        return (self.x0 - pad <= z.real <= self.x1 + pad) and (self.y0 - pad <= z.imag <= self.y1 + pad)

    def inflate(self, d):
        return Rect(self.x0 - d, self.x1 + d, self.y0 - d, self.y1 + d)

    @property
    def size(self):
        return max(self.x1 - self.x0, self.y1 - self.y0)


class _NearZero(Exception):
    pass


def _target(state, what):
    """Return a function z -> (f, f', log) for f = psi or psi'."""
    def f(z):
        psi, dpsi, log = state.evaluate_scaled(z)
        if what == "zeros":
            return psi, dpsi, log
        return dpsi, state.q(z) * psi, log
    return f


def _closed_samples(fun, rect, density):
    z = rect.boundary(density)
    v, dv, lg = fun(z)
    for _ in range(16):
        zc = np.append(z, z[0])
        vc = np.append(v, v[0])
        dphase = np.angle(vc[1:] / vc[:-1])
        big = np.abs(dphase) > 0.5
        if not np.any(big):
            return z, v, dv, lg
        mids = 0.5 * (zc[:-1] + zc[1:])[big]
        mv, mdv, mlg = fun(mids)
        idx = np.flatnonzero(big) + 1
        z = np.insert(z, idx, mids)
        v = np.insert(v, idx, mv)
        dv = np.insert(dv, idx, mdv)
        lg = np.insert(lg, idx, mlg)
        if z.size > 400000:
            break
    raise _NearZero


def _winding(fun, rect, density, raw=False):
    z, v, dv, lg = _closed_samples(fun, rect, density)
    loga = np.log(np.abs(v)) + lg
    # a boundary point far below its neighbours signals a zero on the contour
    local = np.maximum(np.roll(loga, 1), np.roll(loga, -1))
    if np.any(loga - local < -12):
        raise _NearZero
    vc = np.append(v, v[0])
    dphase = np.angle(vc[1:] / vc[:-1])
    w = dphase.sum() / (2 * math.pi)
    k = int(round(w))
    if abs(w - k) > 0.05:
        raise _NearZero
    if raw:
        return w
    # sum of zeros by the discretized integral of z dlog f
    zc = np.append(z, z[0])
    dlog = (np.append(loga, loga[0])[1:] - loga) + 1j * dphase
    zsum = np.sum(0.5 * (zc[1:] + zc[:-1]) * dlog) / (2j * math.pi)
    return k, zsum


def winding_number(state: EntireState, rect: Rect, what: str = "zeros", density: float | None = None) -> float:
    """Unrounded (1/2 pi) * total change of arg f along the rectangle boundary."""
    fun = _target(state, what)
    density = density or _default_density(state, rect)
    try:
        return _winding(fun, rect, density, raw=True)
    except _NearZero as exc:
        raise BoundaryZero("zero on or near the contour", rect=rect) from exc


def _default_density(state, rect):
    corners = np.array([complex(rect.x0, rect.y0), complex(rect.x1, rect.y1),
                        complex(rect.x0, rect.y1), complex(rect.x1, rect.y0)])
    return max(16.0, 2.0 * float(np.sqrt(np.abs(state.q(corners)).max())))


def _newton(fun, z, tol=1e-13, max_iter=40):
    for _ in range(max_iter):
        v, dv, _ = fun(np.array([z]))
        if dv[0] == 0:
            break
        step = v[0] / dv[0]
        z = z - step
        if abs(step) < tol * max(1.0, abs(z)):
            return z, True
    return z, False


_SPLITS = (0.5113, 0.4731, 0.5379, 0.4462, 0.5617)


def _search(fun, rect, density, depth, out):
    k, zsum = _winding(fun, rect, density)
    if k == 0:
        return 0
    leaf = depth > 18 or rect.size < 1e-7
    if k == 1:
        pad = 1e-6 * max(1.0, rect.size)
        z, ok = _newton(fun, complex(zsum))
        if not (ok and rect.contains(z, pad=pad)):
            z, ok = _newton(fun, complex(0.5 * (rect.x0 + rect.x1), 0.5 * (rect.y0 + rect.y1)))
        if leaf or (ok and rect.contains(z, pad=pad)):
            out.append(z)
            return 1
        # Newton escaped the cell: keep splitting until it settles inside
    elif leaf:
        z, _ = _newton(fun, complex(zsum / k))
        out.extend([z] * k)
        return k
    for f in _SPLITS:
        xm = rect.x0 + f * (rect.x1 - rect.x0)
        ym = rect.y0 + (1 - f) * (rect.y1 - rect.y0)
        cells = [Rect(rect.x0, xm, rect.y0, ym), Rect(xm, rect.x1, rect.y0, ym),
                 Rect(rect.x0, xm, ym, rect.y1), Rect(xm, rect.x1, ym, rect.y1)]
        trial = []
        try:
            total = sum(_search(fun, c, density, depth + 1, trial) for c in cells)
        except _NearZero:
            continue
        out.extend(trial)
        return total
    raise _NearZero


def zeros_in_rect(state: EntireState, rect: Rect, what: str = "zeros", density: float | None = None):
    """Zeros of psi (what='zeros') or psi' (what='stationary') inside rect, by winding counts."""
    if what not in ("zeros", "stationary"):
        raise ValueError("what must be 'zeros' or 'stationary'")
    fun = _target(state, what)
    if density is None:
        density = _default_density(state, rect)
    r = rect
    for attempt in range(6):
        found = []
        try:
            total = _search(fun, r, density, 0, found)
        except _NearZero:
            r = r.inflate(1e-3 * (attempt + 1) * max(1.0, rect.size))
            continue
        found = sorted(found, key=lambda z: (round(z.real, 9), z.imag))
        if len(found) != total:
            raise CountMismatch("polished roots disagree with winding count", found=len(found), winding=total)
        # multiple roots come out as exact copies; near copies mean two cells found one root
        close = [(a, b) for i, a in enumerate(found) for b in found[i + 1:]
                 if 0 < abs(a - b) < 1e-8 * max(1.0, rect.size)]
        if close:
            raise CountMismatch("two cells polished to the same root", found=len(found), winding=total)
        return found
    raise BoundaryZero("contour could not be moved off a zero", rect=rect)


# --------------------------------------------------------------- catalogs

@dataclass(frozen=True)
class ZeroCatalog:
    nodes: list
    board_zeros: list
    antinodes: list
    stationary_points: list
    rect: Rect
    sequence: list
    imaginary_nodes: list
    imaginary_antinodes: list


def region_tag(z: complex, tol: float = AXIS_TOL) -> str:
    x, y = z.real, z.imag
    if abs(x) <= tol * max(1.0, abs(y)):
        return "imaginaryAxis"
    if y < 0 and abs(x) < -math.sqrt(3) * y:
        return "C_sigma"
    if y > 0 and abs(x) < math.sqrt(3) * y:
        return "C_B"
    return "C_plus_half" if x > 0 else "C_minus_half"


def default_rect(state: EntireState, Y: float = 3.0, pad: float = 0.3) -> Rect:
    tp = turning_points(state.spec, state.energy)
    pts = tp.points
    xr = [p.real for p in pts]
    yr = [p.imag for p in pts]
    return Rect(min(xr) - pad, max(xr) + pad, min(-Y, min(yr) - pad), max(yr) + pad)


def _label(items, centered):
    """items: list of (kind, z) sorted along the string; returns labels like 'A-1', 'N0'."""
    labels = [None] * len(items)

    def walk(idx_iter, sign, start_nodes=0):
        nodes = start_nodes
        for i in idx_iter:
            kind = items[i][0]
            if kind == "N":
                nodes += 1
                labels[i] = f"N{sign * nodes}"
            else:
                labels[i] = f"A{sign * (nodes + 1)}"

    n = len(items)
    if not centered:
        walk(range(n), 1)
        return labels
    if n % 2 == 1:
        c = n // 2
        labels[c] = items[c][0] + "0"
        walk(range(c + 1, n), 1)
        walk(range(c - 1, -1, -1), -1)
    else:
        walk(range(n // 2, n), 1)
        walk(range(n // 2 - 1, -1, -1), -1)
    return labels


def classify_catalog(state: EntireState, rect: Rect | None = None, ambiguity_tol: float = 1e-3) -> ZeroCatalog:
    """Split zeros of psi and psi' into string (nodes/antinodes) and board points, then order them."""
    rect = rect or default_rect(state)
    zs = zeros_in_rect(state, rect, "zeros")
    ws = zeros_in_rect(state, rect, "stationary")
    tp = turning_points(state.spec, state.energy)
    y_board = tp.I_zero.imag if tp.I_zero is not None else math.inf

    E = state.energy
    broken = abs(E.imag) > REAL_LEVEL_TOL * max(1.0, abs(E)) and state.spec.rep is not Rep.HARMONIC

    def on_board(z):
        if broken:
            # a non-real level keeps its nodes in one half-plane; the other holds the large zeros
            return z.real * E.imag > 0
        near_axis = abs(z.real) <= AXIS_TOL * max(1.0, abs(z.imag))
        if near_axis and abs(z.imag - y_board) < ambiguity_tol and state.spec.rep is not Rep.HARMONIC:
            raise AmbiguousClassification("point within tolerance of both string and board", z=z)
        return near_axis and z.imag > y_board

    nodes = [z for z in zs if not on_board(z)]
    board = [z for z in zs if on_board(z)]
    anti = [z for z in ws if not on_board(z)]
    stat = [z for z in ws if on_board(z)]
    items = sorted([("N", z) for z in nodes] + [("A", z) for z in anti], key=lambda t: (t[1].real, t[1].imag))
    centered = state.spec.rep is not Rep.HARMONIC and not broken
    labels = _label(items, centered)
    imag_n = [z for z in nodes if abs(z.real) <= AXIS_TOL * max(1.0, abs(z.imag))]
    imag_a = [z for z in anti if abs(z.real) <= AXIS_TOL * max(1.0, abs(z.imag))]
    return ZeroCatalog(nodes, board, anti, stat, rect, labels, imag_n, imag_a)


def px_pairing_defect(points) -> float:
    """Largest distance from -conj(z) to the nearest catalog point."""
    pts = np.asarray(points, dtype=complex)
    if pts.size == 0:
        return 0.0
    mirrored = -np.conj(pts)
    return float(max(np.min(np.abs(pts - m)) for m in mirrored))


# ---------------------------------------------------------- diagnostics

def parity_integral(state: EntireState, with_identity: bool = False):
    """Integral of psi^2 over the real line for a state of unit L2 norm.

    Computed by adaptive quadrature of the Hermite expansion; with_identity also
    returns sum(c_k^2)/sum(|c_k|^2), which equals it for real basis functions.
    """
    c, om = state.coefficients, state.omega
    L = basis.trust_radius(c.size, om) / 0.8

    def f(x, part):
        p, _ = basis.expand(c, om, np.array([x]))
        v = p[0]
        return {"re": (v * v).real, "im": (v * v).imag, "abs": abs(v) ** 2}[part]

    pts = list(np.linspace(-L, L, 9))
    vals = {}
    for part in ("re", "im", "abs"):
        vals[part] = quad(f, -L, L, args=(part,), limit=400, epsabs=1e-13, epsrel=1e-11, points=pts[1:-1])[0]
    value = complex(vals["re"], vals["im"]) / vals["abs"]
    if with_identity:
        ident = complex(np.sum(c * c) / np.sum(np.abs(c) ** 2))
        return value, ident
    return value


@dataclass(frozen=True)
class FluxProfile:
    coordinate: np.ndarray
    flux: np.ndarray
    comparison: np.ndarray


def flux_diagnostic(state: EntireState, x: float, y_range, samples: int = 401) -> FluxProfile:
    """Vertical line Re z = x: Im(kin conj(phi) dphi/dy) and its integrated form.

    The comparison integrates (Im E - Im V(x+iy)) |phi|^2 upward from the bottom of
    the range (valid for a real kinetic prefactor) starting from the computed flux.
    """
    y = np.linspace(y_range[0], y_range[1], samples)
    z = x + 1j * y
    psi, dpsi = state.evaluate(z)
    dphi = 1j * dpsi
    kin = state.kinetic
    flux = np.imag(kin * np.conj(psi) * dphi)
    dens = (state.energy.imag - np.imag(state.spec.V(z))) * np.abs(psi) ** 2
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(y))])
    return FluxProfile(y, flux, flux[0] + cum)


def horizontal_flux(state: EntireState, y: float, x_range, samples: int = 401) -> FluxProfile:
    """Horizontal line Im z = y: -Im(kin conj(psi) dpsi/dx) and the tail integral of Im V |psi|^2."""
    x = np.linspace(x_range[0], x_range[1], samples)
    z = x + 1j * y
    psi, dpsi = state.evaluate(z)
    kin = state.kinetic
    flux = -np.imag(kin * np.conj(psi) * dpsi)
    dens = (np.imag(state.spec.V(z)) - state.energy.imag) * np.abs(psi) ** 2
    tail = np.concatenate([np.cumsum((0.5 * (dens[1:] + dens[:-1]) * np.diff(x))[::-1])[::-1], [0.0]])
    return FluxProfile(x, flux, tail)


def imaginary_axis_zeros(state: EntireState, y_lo: float, y_hi: float, what: str = "zeros", samples: int = 801):
    """Real roots of phi (or phi') on [y_lo, y_hi] for a state gauged real on the imaginary axis."""
    from scipy.optimize import brentq, minimize_scalar

    y = np.linspace(y_lo, y_hi, samples)
    idx = 0 if what == "zeros" else 1

    def g(t):
        v = state.axis(np.array([t]))[idx][0]
        return v.real

    vals = state.axis(y)[idx].real
    roots = []
    for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
        # scalar and batched evaluations take different propagator steps; near a double
        # zero the sampled sign change may not survive re-evaluation
        if g(y[i]) * g(y[i + 1]) < 0:
            roots.append(brentq(g, y[i], y[i + 1], xtol=1e-14))
        else:
            r = minimize_scalar(lambda t: abs(g(t)), bounds=(y[i], y[i + 1]), method="bounded",
                                options={"xatol": 1e-12})
            roots.append(float(r.x))
    roots += [float(y[i]) for i in np.flatnonzero(vals == 0)]
    return sorted(roots)
