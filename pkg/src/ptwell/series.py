"""Truncated Taylor arithmetic and a vectorized Taylor-series ODE propagator."""
from __future__ import annotations

import math

import numpy as np


def poly_shift(coeffs, z0):
    """Ascending coefficients of p(z0 + t) given ascending coefficients of p(z).

    Works elementwise when ``z0`` is an array; the result then has shape (deg+1, *z0.shape).
    """
    c = np.asarray(coeffs, dtype=complex)
    z0 = np.asarray(z0, dtype=complex)
    d = len(c) - 1
    out = np.zeros((d + 1,) + z0.shape, dtype=complex)
    for j in range(d + 1):
        acc = np.zeros(z0.shape, dtype=complex)
        for k in range(d, j - 1, -1):
            acc = acc * z0 + math.comb(k, j) * c[k]
        out[j] = acc
    return out


def mul(a, b):
    K = len(a)
    out = np.zeros(K, dtype=complex)
    for n in range(K):
        out[n] = np.dot(a[: n + 1], b[n::-1])
    return out


def div(a, b):
    K = len(a)
    out = np.zeros(K, dtype=complex)
    for n in range(K):
        out[n] = (a[n] - np.dot(out[:n], b[n:0:-1])) / b[0]
    return out


def sqrt(a, root0=None):
    """Series square root; ``root0`` fixes the branch of the constant term."""
    K = len(a)
    out = np.zeros(K, dtype=complex)
    out[0] = np.sqrt(complex(a[0])) if root0 is None else root0
    for n in range(1, K):
        s = np.dot(out[1:n], out[n - 1:0:-1])
        out[n] = (a[n] - s) / (2 * out[0])
    return out


def deriv(a):
    K = len(a)
    out = np.zeros(K, dtype=complex)
    out[: K - 1] = a[1:] * np.arange(1, K)
    return out


# ------------------------------------------------------------------ propagator

TERMS = 30


def _step_count(q_coeffs, z0, z1, budget=2.5, samples=9):
    t = np.linspace(0.0, 1.0, samples)[:, None]
    pts = z0[None, :] + t * (z1 - z0)[None, :]
    qmax = np.max(np.abs(np.polynomial.polynomial.polyval(pts, q_coeffs)), axis=0)
    L = np.abs(z1 - z0)
    rate = np.maximum(np.sqrt(qmax), 1.0)
    return int(np.max(np.ceil(L * rate / budget))) if L.size else 0


def propagate(q_coeffs, z0, psi0, dpsi0, z1, log0=None, terms: int = TERMS):
    """Integrate psi'' = q(z) psi along straight segments z0 -> z1 (vectorized).

    Returns (psi, dpsi, log) with the true values psi*exp(log), dpsi*exp(log);
    the pair is renormalized after every step so growth never overflows.
    """
    z0 = np.atleast_1d(np.asarray(z0, dtype=complex))
    z1 = np.atleast_1d(np.asarray(z1, dtype=complex))
    a0 = np.atleast_1d(np.asarray(psi0, dtype=complex)).copy()
    a1 = np.atleast_1d(np.asarray(dpsi0, dtype=complex)).copy()
    log = np.zeros(z0.shape) if log0 is None else np.atleast_1d(np.asarray(log0, dtype=float)).copy()
    q = np.asarray(q_coeffs, dtype=complex)
    n = _step_count(q, z0, z1)
    if n == 0:
        return a0, a1, log
    h = (z1 - z0) / n
    z = z0.copy()
    deg = len(q) - 1
    mi = np.arange(terms)
    for _ in range(n):
        Q = poly_shift(q, z)
        a = np.zeros((terms,) + z.shape, dtype=complex)
        a[0], a[1] = a0, a1
        for m in range(terms - 2):
            acc = np.zeros(z.shape, dtype=complex)
            for j in range(min(deg, m) + 1):
                acc = acc + Q[j] * a[m - j]
            a[m + 2] = acc / ((m + 1) * (m + 2))
        hp = h[None, :] ** mi[:, None]
        a0 = np.sum(a * hp, axis=0)
        a1 = np.sum(a[1:] * mi[1:, None] * hp[:-1], axis=0)
        z = z + h
        s = np.abs(a0) + np.abs(a1) / np.maximum(np.sqrt(np.abs(Q[0])), 1.0)
        s = np.where(s > 0, s, 1.0)
        a0, a1 = a0 / s, a1 / s
        log = log + np.log(s)
    return a0, a1, log
