"""Operator family, parameter maps, wells and turning points.

Every operator handled by the package has the form ``kin * p**2 + V(x)``
with ``V`` a polynomial of degree at most three.  ``PotentialSpec`` stores
the representation tag and its parameter and exposes the polynomial
coefficients in ascending order together with the kinetic prefactor.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import SectorError

SQRT3 = math.sqrt(3.0)
WELL_DEPTH = 2.0 / (3.0 * SQRT3)  # |V(x_pm)|
BOTTOM_ENERGY = 1j * WELL_DEPTH  # V(x_minus)
COALESCENCE_TOL = 1e-9


class Rep(str, Enum):
    H = "SemiclassicalH"
    K = "ScaledK"
    B = "PerturbativeB"
    R = "RotatedImagAxis"
    HARMONIC = "Harmonic"

    @classmethod
    def parse(cls, tag):
        if isinstance(tag, Rep):
            return tag
        short = {"H": cls.H, "K": cls.K, "B": cls.B, "R": cls.R,
                 "HARMONIC": cls.HARMONIC, "HO": cls.HARMONIC}
        key = str(tag).strip()
        if key.upper() in short:
            return short[key.upper()]
        return cls(key)


def in_hbar_sector(h: complex) -> bool:
    h = complex(h)
    return h != 0 and abs(cmath.phase(h)) < math.pi / 4


def in_alpha_sector(alpha: complex) -> bool:
    """|arg a| < 4pi/5, or the negative real axis reached by continuation."""
    a = complex(alpha)
    if a == 0:
        return True
    return abs(cmath.phase(a)) < 4 * math.pi / 5 or (a.real < 0 and abs(a.imag) <= 1e-14 * abs(a))


@dataclass(frozen=True)
class HbarParam:
    value: complex

    def __post_init__(self):
        v = complex(self.value)
        object.__setattr__(self, "value", v)
        if not in_hbar_sector(v):
            raise SectorError(f"hbar={v} outside the sector |arg hbar| < pi/4", hbar=v)


def _hbar(h) -> complex:
    return h.value if isinstance(h, HbarParam) else HbarParam(h).value


@dataclass(frozen=True)
class PotentialSpec:
    rep: Rep
    param: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rep", Rep.parse(self.rep))
        object.__setattr__(self, "param", complex(self.param))
        if self.rep in (Rep.H, Rep.R, Rep.HARMONIC):
            HbarParam(self.param)
        elif self.rep is Rep.K and not in_alpha_sector(self.param):
            raise SectorError(f"alpha={self.param} outside its sector", alpha=self.param)

    @property
    def kinetic(self) -> complex:
        if self.rep in (Rep.H, Rep.R, Rep.HARMONIC):
            return self.param ** 2
        return 1.0 + 0j

    @property
    def coeffs(self) -> np.ndarray:
        """Ascending coefficients of V."""
        p = self.param
        if self.rep is Rep.H:
            return np.array([0, -1j, 0, 1j])
        if self.rep is Rep.K:
            return np.array([0, 1j * p, 0, 1j])
        if self.rep is Rep.B:
            # cubic term: the quadratic printed in one display is taken as a typo
            return np.array([0, 0, 1, 1j * cmath.sqrt(p)])
        if self.rep is Rep.R:
            return np.array([0, -1, 0, -1], dtype=complex)
        return np.array([0, 0, 1], dtype=complex)

    def V(self, z):
        return np.polynomial.polynomial.polyval(z, self.coeffs)

    def dV(self, z):
        return np.polynomial.polynomial.polyval(z, np.polynomial.polynomial.polyder(self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def potential_H(z):
    return 1j * (z ** 3 - z)


def to_beta(h, branch: int = +1) -> complex:
    hv = _hbar(h)
    s = 1 if branch > 0 else -1
    return cmath.exp(-s * 1j * 5 * math.pi / 4) * 3 ** (-1.25) * hv


def to_alpha(h) -> complex:
    hv = _hbar(h)
    return -(hv ** (-0.8))


def scale_energy_K_to_H(h, eK):
    return _hbar(h) ** 1.2 * eK


def scale_energy_H_to_K(h, eH):
    return eH / _hbar(h) ** 1.2


def semiclassical_energy(n: int, sign: int, h) -> complex:
    """Leading two terms of the well-localized levels E_n^+ (sign=+1) and E_n^- (sign=-1)."""
    c = 3 ** 0.25 * cmath.sqrt(sign * 1j)
    return -sign * BOTTOM_ENERGY + complex(h) * c * (2 * n + 1)


@dataclass(frozen=True)
class TurningPointSet:
    energy: complex
    I_minus: complex
    I_plus: complex
    I_zero: complex | None
    coalescent: bool = False
    min_separation: float = math.inf

    @property
    def points(self):
        pts = [self.I_minus, self.I_zero, self.I_plus]
        return [p for p in pts if p is not None]

    def labeled(self):
        out = {"I_minus": self.I_minus, "I_plus": self.I_plus}
        if self.I_zero is not None:
            out["I_zero"] = self.I_zero
        return out


def _polish(coeffs, E, z):
    c = np.array(coeffs, dtype=complex)
    c[0] -= E
    d = np.polynomial.polynomial.polyder(c)
    f = np.polynomial.polynomial.polyval(z, c)
    fp = np.polynomial.polynomial.polyval(z, d)
    if abs(fp) > 1e-14 * max(1.0, abs(f)):
        step = f / fp
        if abs(step) < 1e-3 * max(1.0, abs(z)):
            return z - step
    return z


def _snap_double_roots(c, roots):
    # a double root splits into a pair ~sqrt(eps) apart; if a critical point of
    # the polynomial sits between them with a vanishing value, use it for both
    P = np.polynomial.polynomial
    roots = roots.copy()
    scale = max(1.0, float(np.max(np.abs(c))))
    crit = P.polyroots(P.polyder(c)) if len(c) > 2 else np.array([])
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if abs(roots[i] - roots[j]) < 1e-6:
                mid = 0.5 * (roots[i] + roots[j])
                if len(crit):
                    w = crit[np.argmin(np.abs(crit - mid))]
                    if abs(w - mid) < 1e-6 and abs(P.polyval(w, c)) < 1e-12 * scale:
                        roots[i] = roots[j] = w
    return roots


def turning_points(spec: PotentialSpec, E: complex) -> TurningPointSet:
    E = complex(E)
    if not np.isfinite(E):
        raise ValueError("energy must be finite")
    c = np.array(spec.coeffs, dtype=complex)
    c[0] -= E
    # companion-matrix eigenvalues (numpy.roots), then one Newton step
    roots = np.roots(c[::-1])
    roots = np.array([_polish(spec.coeffs, E, z) for z in roots])
    roots = _snap_double_roots(c, roots)
    roots = roots[np.lexsort((roots.imag, roots.real))]
    sep = min((abs(a - b) for i, a in enumerate(roots) for b in roots[i + 1:]), default=math.inf)
    coal = sep < COALESCENCE_TOL
    if len(roots) == 3:
        lo, mid, hi = roots
        return TurningPointSet(E, complex(lo), complex(hi), complex(mid), coal, sep)
    if len(roots) == 2:
        return TurningPointSet(E, complex(roots[0]), complex(roots[1]), None, coal, sep)
    raise ValueError("potential has too few turning points")


def imag_turning_point(E: float) -> float:
    """Positive real root of y**3 + y = E."""
    E = float(E)
    if not E > 0:
        raise ValueError("E must be positive")
    d = math.sqrt(E * E / 4 + 1 / 27)
    y = float(np.cbrt(E / 2 + d) + np.cbrt(E / 2 - d))
    for _ in range(3):
        y -= (y ** 3 + y - E) / (3 * y * y + 1)
    return y


@dataclass(frozen=True)
class WellData:
    x_minus: float = -1 / SQRT3
    x_plus: float = 1 / SQRT3
    bottom_energy: complex = BOTTOM_ENERGY


def wells() -> WellData:
    return WellData()
