"""Galerkin spectra in a scaled Hermite basis, plus a shooting oracle.

The Galerkin matrix of ``kin*p^2 + sum_j v_j x^j`` in the basis
``sqrt(w) h_k(w x)`` is ``kin*w^2*P^2 + sum_j v_j X^j / w^j`` with real
symmetric ladder matrices, so it is complex symmetric.  Physical levels are
separated from spurious ones by comparing the spectra at N and 2N basis
functions.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from . import basis
from .errors import EigenNonConvergence, InitializationTooShallow, NoConvergence, StabilizationFailure
from .model import PotentialSpec, Rep

OMEGA_GRID = (0.5, 0.75, 1.0, 1.5, 2.5)
N_CAP = 1024
GATE_REL = 1e-8
NEAR_DEGENERATE = 1e-6


@dataclass(frozen=True)
class GalerkinConfig:
    N: int
    omega: float
    spec: PotentialSpec

    def __post_init__(self):
        if self.N < 16:
            raise ValueError("basis size must be at least 16")
        if not self.omega > 0:
            raise ValueError("omega must be positive")


@dataclass(frozen=True)
class Eigenpair:
    energy: complex
    coefficients: np.ndarray = field(repr=False)
    omega: float
    accuracy: float
    gauge_phase: complex = 1.0 + 0j
    spec: PotentialSpec | None = None
    near_degenerate: bool = False

    @property
    def N(self) -> int:
        return self.coefficients.size


@dataclass(frozen=True)
class SpectrumSlice:
    spec: PotentialSpec
    levels: tuple
    N: int
    omega: float
    ordering: str = "re-asc-then-im"

    @property
    def energies(self) -> np.ndarray:
        return np.array([lv.energy for lv in self.levels])

    def __len__(self):
        return len(self.levels)

    def __getitem__(self, i):
        return self.levels[i]


def natural_omega(spec: PotentialSpec) -> float:
    """Basis width matched to the operator scale; the omega grid is applied on top of it."""
    p = abs(spec.param)
    if spec.rep in (Rep.H, Rep.R):
        return p ** -0.5 if p <= 1 else p ** -0.4
    if spec.rep is Rep.K:
        return max(1.0, p) ** 0.125
    if spec.rep is Rep.HARMONIC:
        return p ** -0.5
    return 1.0


def assemble(config: GalerkinConfig) -> np.ndarray:
    spec, N, w = config.spec, config.N, config.omega
    if spec.rep is Rep.R:
        raise ValueError("the rotated representation is not confining on the real line; use Rep.H")
    A = (spec.kinetic * w ** 2) * basis.momentum_squared(N).astype(complex)
    for j, v in enumerate(spec.coeffs):
        if v != 0:
            A = A + (v / w ** j) * basis.position_power(N, j)
    return A


def eigen(matrix, vectors: bool = True):
    """Dense nonsymmetric eigendecomposition (LAPACK geev); unit-norm eigenvectors."""
    try:
        if vectors:
            w, v = sla.eig(matrix, check_finite=True)
        else:
            return sla.eigvals(matrix, check_finite=True), None
    except sla.LinAlgError as exc:
        raise EigenNonConvergence(str(exc), size=len(matrix)) from exc
    v = v / np.linalg.norm(v, axis=0)
    return w, v


def pt_real_form(A: np.ndarray):
    """D^-1 A D with D = diag(i^k), returned as a real matrix when it is one.

    Odd powers of x only couple basis indices of opposite parity and even powers
    same-parity ones, so for a real parameter the PT-symmetric operators become real:
    real levels then come out exactly real and the others in exact conjugate pairs.
    """
    d = np.array([1, 1j, -1, -1j])[np.arange(A.shape[0]) % 4]
    B = A * d[None, :] / d[:, None]
    if np.max(np.abs(B.imag)) <= 1e-15 * np.max(np.abs(B)):
        return B.real, d
    return None, d


@lru_cache(maxsize=256)
def _solve(spec: PotentialSpec, N: int, omega: float, vectors: bool):
    A = assemble(GalerkinConfig(N, omega, spec))
    B, d = pt_real_form(A)
    if B is None:
        return eigen(A, vectors)
    w, v = eigen(B, vectors)
    if v is not None:
        v = d[:, None] * v
    return w, v


def galerkin_eigs(spec: PotentialSpec, N: int, omega: float, vectors: bool = True):
    w, v = _solve(spec, int(N), float(omega), bool(vectors))
    return w.copy(), (None if v is None else v.copy())


def _order(w):
    return np.lexsort((w.imag, w.real))


def gated_levels(spec: PotentialSpec, N: int, omega: float):
    """Eigenvalues at N with their doubling estimate |E_N - E_2N| (nearest match)."""
    w, v = galerkin_eigs(spec, N, omega, True)
    w2, _ = galerkin_eigs(spec, 2 * N, omega, False)
    acc = np.array([np.min(np.abs(w2 - e)) for e in w])
    o = _order(w)
    return w[o], v[:, o], acc[o]


def _flag_degenerate(levels):
    E = np.array([lv.energy for lv in levels])
    out = []
    for i, lv in enumerate(levels):
        d = np.abs(E - E[i])
        d[i] = np.inf
        out.append(replace(lv, near_degenerate=bool(d.size and d.min() < NEAR_DEGENERATE)))
    return tuple(out)


def _select(spec, w, v, acc, count, omega, gate=GATE_REL):
    ok = acc < gate * np.maximum(1.0, np.abs(w))
    idx = np.flatnonzero(ok)[:count]
    if idx.size < count:
        return None
    chosen = w[idx]
    # a non-converged eigenvalue inside the band of the requested ones means a hole
    box_re = chosen.real.max()
    box_im = max(1.0, 2 * np.abs(chosen.imag).max())
    bad = (~ok) & (w.real <= box_re) & (np.abs(w.imag) <= box_im)
    if np.any(bad):
        return None
    levels = tuple(Eigenpair(complex(w[i]), v[:, i].copy(), omega, float(acc[i]), spec=spec) for i in idx)
    return levels


def stabilized_spectrum(spec: PotentialSpec, count: int, hint: GalerkinConfig | None = None,
                        n_start: int | None = None, n_cap: int = N_CAP, gate: float = GATE_REL) -> SpectrumSlice:
    """The `count` lowest levels (by real part) passing the N-versus-2N gate.

    ``gate`` is the relative N-versus-2N tolerance; near an exceptional point eigenvalues
    are only square-root accurate, and callers working there pass a looser value.
    With a ``hint`` the hinted basis is tried first and accepted as soon as it passes.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if spec.rep is Rep.R:
        base = stabilized_spectrum(PotentialSpec(Rep.H, spec.param), count, hint, n_start, n_cap, gate)
        lv = tuple(replace(x, energy=-x.energy, spec=spec) for x in base.levels)
        lv = tuple(sorted(lv, key=lambda x: (x.energy.real, x.energy.imag)))
        return SpectrumSlice(spec, lv, base.N, base.omega)
    w0 = natural_omega(spec)
    omegas = [w0 * g for g in OMEGA_GRID]
    best = math.inf
    if hint is not None and hint.N <= n_cap // 2:
        w, v, acc = gated_levels(spec, hint.N, hint.omega)
        sel = _select(spec, w, v, acc, count, hint.omega, gate)
        if sel is not None:
            return SpectrumSlice(spec, _flag_degenerate(sel), hint.N, hint.omega)
    N = n_start or (hint.N if hint is not None else max(32, 4 * count + 24))
    while N <= n_cap // 2:
        found = None
        for om in omegas:
            w, v, acc = gated_levels(spec, N, om)
            sel = _select(spec, w, v, acc, count, om, gate)
            if sel is None:
                continue
            worst = sel[-1].accuracy
            best = min(best, worst)
            if found is None or worst < found[0]:
                found = (worst, sel, om)
        if found is not None:
            return SpectrumSlice(spec, _flag_degenerate(found[1]), N, found[2])
        N *= 2
    raise StabilizationFailure("stabilization gate not met at the basis cap", best_accuracy=best, count=count)


def lowest_levels(spec: PotentialSpec, N: int, omega: float, count: int | None = None, tail_tol: float = 1e-10):
    """Fast single-solve filter: keep eigenvectors whose weight in the top fifth of the basis is small."""
    w, v = galerkin_eigs(spec, N, omega, True)
    top = int(0.8 * N)
    tail = np.sqrt(np.sum(np.abs(v[top:]) ** 2, axis=0))
    keep = tail < tail_tol
    w, v, tail = w[keep], v[:, keep], tail[keep]
    o = _order(w)
    w, v, tail = w[o], v[:, o], tail[o]
    if count is not None:
        w, v, tail = w[:count], v[:, :count], tail[:count]
    return w, v, tail


def coefficient_tail(coefficients, fraction: float = 0.125) -> float:
    c = np.abs(np.asarray(coefficients))
    k = max(1, int(fraction * c.size))
    return float(c[-k:].max() / c.max())


def refine_pair(pair: Eigenpair, tail_tol: float = 1e-7, n_cap: int = N_CAP) -> Eigenpair:
    """Re-solve at larger N (same omega) until the eigenvector's top coefficients are negligible.

    The eigenvalue gate controls energies only; evaluating the eigenfunction far from
    the origin needs the expansion itself to be converged.
    """
    if pair.spec is None or pair.spec.rep is Rep.R or coefficient_tail(pair.coefficients) < tail_tol:
        return pair
    N = pair.N
    best = pair
    while N < n_cap:
        N = min(2 * N, n_cap)
        w, v = galerkin_eigs(pair.spec, N, pair.omega, True)
        i = int(np.argmin(np.abs(w - pair.energy)))
        cand = replace(pair, energy=complex(w[i]), coefficients=v[:, i].copy())
        if coefficient_tail(cand.coefficients) < coefficient_tail(best.coefficients):
            best = cand
        if coefficient_tail(best.coefficients) < tail_tol:
            break
    return best


# ---------------------------------------------------------------- shooting

def decaying_directions(spec: PotentialSpec):
    """Centers of the decaying sectors adjacent to the positive and negative real axis."""
    d = spec.degree
    lead = complex(spec.coeffs[-1]) / spec.kinetic
    base = -cmath.phase(cmath.sqrt(lead)) * 2.0 / (d + 2)
    cands = [base + 4 * math.pi * j / (d + 2) for j in range(-(d + 2), d + 3)]
    right = min(cands, key=lambda t: abs(t))
    left = min(cands, key=lambda t: abs(cmath.exp(1j * t) + 1))
    return right, left


def _matching_radius(spec: PotentialSpec, E: complex, depth: float = 40.0) -> float:
    d = spec.degree
    lead = abs(complex(spec.coeffs[-1]) / spec.kinetic)
    r = (depth * (d + 2) / 2 / math.sqrt(lead)) ** (2.0 / (d + 2))
    c = np.array(spec.coeffs, dtype=complex)
    c[0] -= E
    tp = np.abs(np.roots(c[::-1])).max()
    return max(r, 2 * tp, 2.0)


def _inward(spec: PotentialSpec, E: complex, theta: float, R: float):
    kin = spec.kinetic
    e = cmath.exp(1j * theta)
    z0 = R * e
    q = cmath.sqrt((spec.V(z0) - E) / kin)
    if (q * e).real < 0:
        q = -q
    dlog = -q - spec.dV(z0) / (4 * (spec.V(z0) - E))
    coeffs = np.array(spec.coeffs, dtype=complex)

    def rhs(r, u):
        z = r * e
        Vz = np.polynomial.polynomial.polyval(z, coeffs)
        return [u[1], e * e * (Vz - E) / kin * u[0]]

    # u = (psi, dpsi/dr), dpsi/dr = e * dpsi/dz
    sol = solve_ivp(rhs, (R, 0.0), [1.0 + 0j, e * dlog], method="DOP853", rtol=1e-12, atol=1e-300)
    if not sol.success:
        raise NoConvergence(sol.message)
    psi, dpsi_dr = sol.y[:, -1]
    return psi, dpsi_dr / e


def shooting_mismatch(spec: PotentialSpec, E: complex, R: float | None = None):
    tr, tl = decaying_directions(spec)
    R = R or _matching_radius(spec, E)
    a, da = _inward(spec, E, tr, R)
    b, db = _inward(spec, E, tl, R)
    return a * db - da * b, (a, da, b, db)


def shooting_eigenvalue(spec: PotentialSpec, guess: complex, tol: float = 1e-13, max_iter: int = 50) -> complex:
    """Secant iteration on the Wronskian at the origin of the two inward solutions."""
    if spec.rep is Rep.R:
        return -shooting_eigenvalue(PotentialSpec(Rep.H, spec.param), -guess, tol, max_iter)
    guess = complex(guess)
    R = _matching_radius(spec, guess)
    if R > 60:
        raise InitializationTooShallow("matching radius too large for the requested depth", R=R)
    E0, E1 = guess, guess * (1 + 1e-5) + 1e-7
    f0 = shooting_mismatch(spec, E0, R)[0]
    f1 = shooting_mismatch(spec, E1, R)[0]
    for it in range(max_iter):
        if f1 == f0:
            break
        E2 = E1 - f1 * (E1 - E0) / (f1 - f0)
        if abs(E2 - E1) < tol * max(1.0, abs(E2)):
            return E2
        E0, f0 = E1, f1
        E1, f1 = E2, shooting_mismatch(spec, E2, R)[0]
    raise NoConvergence("shooting secant did not converge", last=E1, steps=max_iter)
