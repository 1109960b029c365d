"""Level continuation in the hbar-plane, crossings, contact parameters and monodromy."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats
from scipy.optimize import brentq

from . import basis
from .errors import (ContinuationBreak, FitDegenerate, NoImaginaryNode,
                     NotBracketed, PTWellError, StabilizationFailure, Unclassified)
from .model import PotentialSpec, Rep, imag_turning_point, in_hbar_sector, semiclassical_energy
from .spectral import Eigenpair, GalerkinConfig, stabilized_spectrum
from .wavefield import imaginary_axis_zeros, make_state

NEAR_EP_GATE = 1e-6
OVERLAP_GATE = 0.9
REAL_TOL = 1e-8
# the loop keeps a distance eps from the exceptional point, so the ordinary gate applies
LOOP_GATE = 1e-8


def _spec(h) -> PotentialSpec:
    return PotentialSpec(Rep.H, complex(h) if complex(h).imag != 0 else float(complex(h).real))


@lru_cache(maxsize=4096)
def _levels_cached(h: complex, count: int, gate: float):
    return stabilized_spectrum(_spec(h), count, gate=gate)


def levels_at(h, count: int, gate: float = NEAR_EP_GATE, hint: GalerkinConfig | None = None):
    if hint is not None:
        return stabilized_spectrum(_spec(h), count, hint=hint, gate=gate)
    return _levels_cached(complex(h), int(count), float(gate))


def pair_energies(n: int, h: float, gate: float = NEAR_EP_GATE):
    """Energies at sorted positions (2n, 2n+1) of the spectrum at real hbar."""
    sl = levels_at(h, 2 * n + 2, gate)
    return sl[2 * n].energy, sl[2 * n + 1].energy


def gap_squared(n: int, h: float) -> float:
    """(E_{2n+1} - E_{2n})^2: positive while the pair is real, negative once it is a conjugate pair."""
    a, b = pair_energies(n, h)
    return float(((b - a) ** 2).real)


# ------------------------------------------------------------------ records

@dataclass(frozen=True)
class LevelCurve:
    label: str
    path: tuple
    samples: tuple = field(repr=False)
    overlaps: tuple = field(repr=False)
    gaps: tuple = field(repr=False)

    @property
    def hbars(self) -> np.ndarray:
        return np.array([h for h, _ in self.samples])

    @property
    def energies(self) -> np.ndarray:
        return np.array([p.energy for _, p in self.samples])

    @property
    def end(self) -> Eigenpair:
        return self.samples[-1][1]


@dataclass(frozen=True)
class CrossingRecord:
    n: int
    hbar_n: float
    E_crossing: float
    hbar_p: float | None = None
    E_p: float | None = None
    hbar_a: float | None = None
    E_a: float | None = None
    branch_exponent: float | None = None
    branch_ci: tuple | None = None


@dataclass(frozen=True)
class MonodromyProbe:
    n: int
    hbar_n: float
    radius: float
    loops: float
    start_label: str
    end_label: str
    start_energy: complex
    end_energy: complex
    reference: complex
    defect: float
    transported: LevelCurve = field(repr=False)


# ------------------------------------------------------------ continuation

def _grid_values(p: Eigenpair, x):
    psi, _ = basis.expand(p.coefficients, p.omega, x)
    return psi


def overlap(p: Eigenpair, q: Eigenpair, x=None) -> float:
    """|<psi_p, psi_q>| / (|psi_p| |psi_q|); coefficient form when both share a basis."""
    if p.N == q.N and p.omega == q.omega:
        a, b = p.coefficients, q.coefficients
        return float(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))
    if x is None:
        x = np.linspace(-1, 1, 801) * min(basis.trust_radius(p.N, p.omega), basis.trust_radius(q.N, q.omega))
    a, b = _grid_values(p, x), _grid_values(q, x)
    return float(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))


def _polyline_points(path, s):
    path = [complex(z) for z in path]
    seg = np.abs(np.diff(path))
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = min(max(s, 0.0), cum[-1])
    i = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg) - 1)
    t = (s - cum[i]) / seg[i] if seg[i] > 0 else 0.0
    return path[i] + t * (path[i + 1] - path[i]), float(cum[-1])


def track(seed: Eigenpair, path, count: int | None = None, max_step: float | None = None,
          min_step: float | None = None, label: str = "", gate: float = NEAR_EP_GATE) -> LevelCurve:
    """Continue a level along a polyline in the hbar-plane by eigenvector overlap.

    At each step the spectrum is recomputed and the candidate with the largest overlap with
    the previous eigenvector is taken; the step is halved when the best overlap drops below
    0.9 or the energy jump exceeds a tenth of the gap to the nearest other level.
    """
    path = [complex(z) for z in path]
    for z in path:
        if not in_hbar_sector(z):
            raise ValueError(f"path leaves the sector |arg hbar| < pi/4 at {z}")
    _, L = _polyline_points(path, 0.0)
    scale = max(abs(z) for z in path)
    max_step = max_step or 0.02 * scale
    min_step = min_step or 1e-6 * scale
    count = count or 4
    cur = seed
    hint = GalerkinConfig(max(seed.N, 16), seed.omega, _spec(path[0]))
    samples = [(path[0], seed)]
    overlaps, gaps = [1.0], [math.nan]
    s, h = 0.0, max_step
    prevE = [seed.energy]
    while s < L - 1e-15:
        h = min(h, L - s)
        z, _ = _polyline_points(path, s + h)
        try:
            sl = levels_at(z, count, gate, hint=GalerkinConfig(hint.N, hint.omega, _spec(z)))
        except StabilizationFailure:
            sl = None
        ok = False
        if sl is not None:
            ovs = [overlap(cur, lv) for lv in sl.levels]
            k = int(np.argmax(ovs))
            E = sl[k].energy
            others = [lv.energy for i, lv in enumerate(sl.levels) if i != k]
            gap = min((abs(E - e) for e in others), default=math.inf)
            pred = prevE[-1] if len(prevE) < 2 else 2 * prevE[-1] - prevE[-2]
            ok = ovs[k] > OVERLAP_GATE and (abs(E - pred) < 0.1 * gap or h <= min_step)
        if not ok:
            if h <= min_step:
                raise ContinuationBreak("overlap gate failed at the minimum step", hbar=z, step=h,
                                        overlap=max(ovs) if sl is not None else None)
            h = max(h / 2, min_step)
            continue
        cur = sl[k]
        hint = GalerkinConfig(sl.N, sl.omega, _spec(z))
        samples.append((z, cur))
        overlaps.append(ovs[k])
        gaps.append(gap)
        prevE.append(E)
        s += h
        h = min(max_step, 1.5 * h)
    return LevelCurve(label, tuple(path), tuple(samples), tuple(overlaps), tuple(gaps))


# ---------------------------------------------------------------- crossings

@lru_cache(maxsize=1)
def _critical_action() -> float:
    from .quantize import semiclassical_action
    from .wkb import critical_energy_action

    return float(semiclassical_action(critical_energy_action(), "plus").real)


def hbar_guess(n: int) -> float:
    """Semiclassical prior: action of one well at the critical energy divided by n + 1/2."""
    return _critical_action() / (n + 0.5)


@lru_cache(maxsize=32)
def find_crossing(n: int, samples: int = 25) -> tuple:
    """Real hbar_n where E_{2n} and E_{2n+1} coalesce, and the common energy."""
    g = hbar_guess(n)
    grid = np.geomspace(3 * g, g / 3, samples)
    prev = None
    for h in grid:
        try:
            d = gap_squared(n, h)
        except StabilizationFailure:
            continue
        if prev is not None and prev[1] > 0 and d < 0:
            root = brentq(lambda x: gap_squared(n, x), h, prev[0], xtol=1e-13, rtol=1e-13)
            a, b = pair_energies(n, root * (1 + 1e-9))
            return float(root), float((0.5 * (a + b)).real)
        prev = (h, d)
    raise NotBracketed("pair does not coalesce in the scan window", n=n, window=(g / 3, 3 * g))


def branch_exponent(n: int, samples: int = 12, lo: float = 1e-4, hi: float = 1e-2):
    """Slope of log|E_{2n+1} - E_{2n}| against log(hbar - hbar_n), with a 95% interval."""
    hn, _ = find_crossing(n)
    d = hn * np.geomspace(lo, hi, samples)
    xs, ys = [], []
    for di in d:
        try:
            a, b = pair_energies(n, hn + di)
        except StabilizationFailure:
            continue
        gap = abs(b - a)
        if gap > 0:
            xs.append(math.log(di))
            ys.append(math.log(gap))
    if len(xs) < 8:
        raise FitDegenerate("fewer than 8 usable samples", usable=len(xs))
    fit = stats.linregress(xs, ys)
    t = stats.t.ppf(0.975, len(xs) - 2)
    return float(fit.slope), (float(fit.slope - t * fit.stderr), float(fit.slope + t * fit.stderr))


# ---------------------------------------------------------------- contacts

def _contact_value(n: int, kind: str, h: float):
    """Scaled phi(y~) (kind 'p', state 2n+1) or phi'(y~) (kind 'a', state 2n) at the imaginary turning point."""
    m = 2 * n + 1 if kind == "p" else 2 * n
    sl = levels_at(h, 2 * n + 2, NEAR_EP_GATE)
    lv = sl[m]
    if abs(lv.energy.imag) > 1e-6:
        raise PTWellError("level is not real at this hbar", hbar=h, energy=lv.energy)
    st = make_state(lv)
    E = lv.energy.real
    y = imag_turning_point(E)
    phi, dphi = st.axis(np.array([y]))
    phi, dphi = phi[0].real, dphi[0].real
    ell = (h * h / (3 * y * y + 1)) ** (1 / 3)
    nrm = math.hypot(phi, ell * dphi)
    val = phi / nrm if kind == "p" else ell * dphi / nrm
    return val, E, st, y


def _find_contact(n: int, kind: str, t_lo: float = 1e-4, t_hi: float = 2.0, samples: int = 40):
    hn, _ = find_crossing(n)
    ts = np.geomspace(t_lo, t_hi, samples)
    prev = None
    for t in ts:
        h = hn * (1 + t)
        try:
            v = _contact_value(n, kind, h)[0]
        except (PTWellError, StabilizationFailure):
            prev = None
            continue
        if prev is not None and np.sign(v) != np.sign(prev[1]):
            root = brentq(lambda x: _contact_value(n, kind, x)[0], prev[0], h, xtol=1e-12)
            _, E, st, y = _contact_value(n, kind, root)
            what = "zeros" if kind == "p" else "stationary"
            near = imaginary_axis_zeros(st, y - 0.05, y + 0.05, what, samples=201)
            if not near:
                # a double zero (two axis points colliding at I_0) shows no sign change in y
                yy = y + np.linspace(-1e-3, 1e-3, 2001)
                vals = np.abs(st.axis(yy)[0 if kind == "p" else 1].real)
                scale = np.abs(st.axis(np.array([y - 0.05, y + 0.05]))[0 if kind == "p" else 1]).max()
                if vals.min() > 1e-6 * scale:
                    raise NoImaginaryNode("no imaginary zero near the turning point at the contact", hbar=root)
                near = [float(yy[int(np.argmin(vals))])]
            offset = min(near, key=lambda r: abs(r - y)) - y
            return float(root), float(E), float(offset)
        prev = (h, v)
    raise NoImaginaryNode("contact function has no sign change above the crossing", n=n, kind=kind)


@lru_cache(maxsize=32)
def find_contact_p(n: int):
    """(hbar_n^p, E_n^p, Im N_0 - y~) where the imaginary node of psi_{2n+1} meets I_0."""
    return _find_contact(n, "p")


@lru_cache(maxsize=32)
def find_contact_a(n: int):
    """(hbar_n^a, E_n^a, Im A_0 - y~) where the imaginary antinode of psi_{2n} meets I_0."""
    return _find_contact(n, "a")


def crossing_record(n: int, contacts: bool = True, exponent: bool = True) -> CrossingRecord:
    hn, Ec = find_crossing(n)
    hp = Ep = ha = Ea = None
    if contacts:
        hp, Ep, _ = find_contact_p(n)
        ha, Ea, _ = find_contact_a(n)
    be = ci = None
    if exponent:
        be, ci = branch_exponent(n)
    return CrossingRecord(n, hn, Ec, hp, Ep, ha, Ea, be, ci)


TABLE1 = {
    "p": {3: (0.0558, 0.35200), 4: (0.0438, 0.35209), 5: (0.0306, 0.35218), 6: (0.0236, 0.35221), 7: (0.0130, 0.35223)},
    "a": {3: (0.0615, 0.35317), 4: (0.0473, 0.35287), 5: (0.0323, 0.35261), 6: (0.0247, 0.35244), 7: (0.0133, 0.35235)},
}


def table1(ns=(3, 4, 5, 6, 7)):
    rows = []
    for n in ns:
        hp, Ep, fp = find_contact_p(n)
        ha, Ea, fa = find_contact_a(n)
        rows.append({"n": n, "hbar_p": hp, "E_p": Ep, "node_offset": fp, "hbar_a": ha, "E_a": Ea,
                     "antinode_offset": fa, "ref_p": TABLE1["p"].get(n), "ref_a": TABLE1["a"].get(n)})
    return rows


# ---------------------------------------------------------------- monodromy

def _circle(center, radius, theta0, theta1, pieces):
    th = np.linspace(theta0, theta1, pieces + 1)
    return [center + radius * cmath.exp(1j * t) for t in th]


def monodromy(n: int, radius_fraction: float = 0.1, loops: float = 0.5, direction: int = 1,
              start: str = "upper", max_step: float | None = None, gate: float = LOOP_GATE) -> MonodromyProbe:
    """Transport E_{2n+1} (start='upper') or E_{2n} around hbar_n + eps exp(i theta).

    loops = 0.5 ends at hbar_n - eps, where the result is compared with the conjugate-pair
    member predicted by continuity from above or below the real axis; whole loops compare
    with the level labels at the starting point.
    """
    hn, _ = find_crossing(n)
    eps = radius_fraction * hn
    h0 = hn + eps
    sl = levels_at(h0, 2 * n + 2, gate)
    m = 2 * n + 1 if start == "upper" else 2 * n
    seed = sl[m]
    total = 2 * math.pi * loops * direction
    pieces = max(8, int(64 * abs(loops)))
    path = _circle(hn, eps, 0.0, total, pieces)
    curve = track(seed, path, count=2 * n + 4, max_step=max_step or eps * 0.05, label=f"E{m}", gate=gate)
    endE = curve.end.energy
    if abs(loops - round(loops)) < 1e-12:
        end_sl = levels_at(h0, 2 * n + 2, gate)
        swapped = int(round(loops)) % 2 == 1
        k = (2 * n + (0 if m == 2 * n + 1 else 1)) if swapped else m
        ref = end_sl[k].energy
        end_label = f"E{k}"
    else:
        a, b = pair_energies(n, hn - eps, gate)
        # E_n^- has Im > 0 and E_n^+ has Im < 0
        minus, plus = (a, b) if a.imag > b.imag else (b, a)
        ref = minus if endE.imag > 0 else plus
        end_label = f"E{n}^-" if endE.imag > 0 else f"E{n}^+"
    return MonodromyProbe(n, hn, eps, loops * direction, f"E{m}", end_label, seed.energy, endE, ref,
                          float(abs(endE - ref)), curve)


def son_prediction(n: int, direction: int) -> str:
    """Label expected after half a loop from hbar_n + eps: upper half-plane -> E_n^-, lower -> E_n^+."""
    return f"E{n}^-" if direction > 0 else f"E{n}^+"


# ---------------------------------------------------------------- sheet scan

SHEET_PATHS = ("alpha-line", "printed")


def _gamma(r: float, c: float, path: str) -> complex:
    if path == "alpha-line":
        return complex(r - 1j * c) ** -1.25
    return complex(r + 1j * c) ** -0.8


def sheet_path(c: float, path: str = "alpha-line", h_end: float = 0.02, h_start: float = 1.0, pieces: int = 40):
    """Polyline: real hbar = h_start, arc to the curve's argument, radial segment, then the curve itself."""
    if path not in SHEET_PATHS:
        raise ValueError(f"path must be one of {SHEET_PATHS}")
    if c == 0:
        return list(np.geomspace(h_start, h_end, pieces).astype(complex))
    if path == "alpha-line":
        r0 = 3 * abs(c)
        r_end = math.sqrt(max(h_end ** -1.6 - c * c, (r0 * 1.01) ** 2))
        rs = np.geomspace(r0, r_end, pieces)
    else:
        r0 = 3 * abs(c)
        r_end = math.sqrt(max(h_end ** -2.5 - c * c, (r0 * 1.01) ** 2))
        rs = np.geomspace(r0, r_end, pieces)
    curve = [_gamma(r, c, path) for r in rs]
    z0 = curve[0]
    hs = max(h_start, abs(z0))
    arc = [hs * cmath.exp(1j * t) for t in np.linspace(0, cmath.phase(z0), 12)]
    radial = list(np.geomspace(hs, abs(z0), 12) * cmath.exp(1j * cmath.phase(z0)))
    pts = arc + radial[1:] + curve[1:]
    return [p for p in pts if abs(p) > 0]


def classify_endpoint(E: complex, h: complex, jmax: int) -> str:
    refs = {f"E{j}^{'+' if s > 0 else '-'}": semiclassical_energy(j, s, h) for j in range(jmax + 1) for s in (1, -1)}
    lead = abs(h) * 3 ** 0.25 * 2
    lab, val = min(refs.items(), key=lambda kv: abs(kv[1] - E))
    if abs(val - E) > 0.1 * lead:
        raise Unclassified("no semiclassical reference within 10% of the leading gap", energy=E, nearest=lab)
    return lab


def sheet_scan(m: int, c_grid, path: str = "alpha-line", h_end: float = 0.02, h_start: float = 1.0):
    """Track E_m along each curve of the family and label the small-hbar endpoint."""
    if m > 3:
        raise ValueError("sheet_scan is limited to m <= 3")
    out = []
    for c in c_grid:
        pts = sheet_path(float(c), path, h_end, h_start)
        sl = levels_at(pts[0], m + 3)
        seed = sl[m]
        try:
            curve = track(seed, pts, count=m + 4, label=f"E{m}")
            E, h = curve.end.energy, pts[-1]
            try:
                lab = classify_endpoint(E, h, m + 1)
            except Unclassified:
                lab = "unclassified"
        except ContinuationBreak as exc:
            E, h, lab = None, exc.payload.get("hbar"), "continuation-break"
        out.append({"c": float(c), "path": path, "imag_sign": int(np.sign(pts[-1].imag)), "hbar_end": h,
                    "energy_end": E, "label": lab})
    return out
