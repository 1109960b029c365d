"""Scaled Hermite functions and ladder-operator matrices.

Basis functions are ``sqrt(w) h_k(w x)`` with ``h_k`` the L2-normalized
Hermite functions.  In the dimensionless variable ``X = w x`` one has
``X = (a + a^+)/sqrt 2`` and ``P**2 = (2 a^+ a + 1 - a**2 - a^+**2)/2``.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=32)
def _x_matrix(M: int) -> np.ndarray:
    k = np.arange(1, M)
    off = np.sqrt(k / 2.0)
    return np.diag(off, 1) + np.diag(off, -1)


@lru_cache(maxsize=64)
def position_power(N: int, j: int) -> np.ndarray:
    """Matrix of X**j in the first N basis functions (exact: built with j extra rows)."""
    M = N + j + 1
    X = _x_matrix(M)
    out = np.eye(M)
    for _ in range(j):
        out = out @ X
    res = out[:N, :N].copy()
    res.setflags(write=False)
    return res


@lru_cache(maxsize=32)
def momentum_squared(N: int) -> np.ndarray:
    n = np.arange(N)
    P2 = np.diag(n + 0.5)
    k = np.arange(N - 2)
    off = -0.5 * np.sqrt((k + 1.0) * (k + 2.0))
    P2 = P2 + np.diag(off, 2) + np.diag(off, -2)
    P2.setflags(write=False)
    return P2


def hermite_table(X, K: int) -> np.ndarray:
    """Rows h_0(X) ... h_{K-1}(X) for real X, with a running log scale to avoid underflow."""
    X = np.atleast_1d(np.asarray(X, dtype=float))
    raw = np.zeros((K, X.size))
    logk = np.zeros((K, X.size))
    logs = -0.5 * X ** 2 - 0.25 * np.log(np.pi)
    prev = np.zeros_like(X)
    cur = np.ones_like(X)
    a = np.sqrt(2.0 / np.arange(1, K + 1))
    b = np.sqrt(np.arange(K) / np.arange(1, K + 1))
    for k in range(K):
        raw[k] = cur
        logk[k] = logs
        prev, cur = cur, a[k] * X * cur - b[k] * prev
        if k % 16 == 15:
            s = np.maximum(np.abs(cur), np.abs(prev))
            s = np.where(s > 1e50, s, 1.0)
            cur = cur / s
            prev = prev / s
            logs = logs + np.log(s)
    with np.errstate(divide="ignore", under="ignore", over="ignore"):
        mag = np.abs(raw)
        return np.where(mag > 0, np.sign(raw) * np.exp(np.log(np.where(mag > 0, mag, 1.0)) + logk), 0.0)


def hermite_at_zero(K: int) -> np.ndarray:
    h = np.zeros(K)
    h[0] = np.pi ** -0.25
    for k in range(1, K - 1):
        h[k + 1] = -np.sqrt(k / (k + 1.0)) * h[k - 1]
    return h


def expand(coeffs, omega: float, x):
    """psi(x) and psi'(x) on the real axis from basis coefficients."""
    c = np.asarray(coeffs)
    N = c.size
    X = omega * np.atleast_1d(np.asarray(x, dtype=float))
    H = hermite_table(X, N + 1)
    k = np.arange(N)[:, None]
    lower = np.vstack([np.zeros((1, X.size)), H[:N - 1]])
    dH = np.sqrt(k / 2.0) * lower - np.sqrt((k + 1) / 2.0) * H[1:N + 1]
    psi = np.sqrt(omega) * (c @ H[:N])
    dpsi = omega ** 1.5 * (c @ dH)
    return psi, dpsi


def trust_radius(N: int, omega: float) -> float:
    return 0.8 * np.sqrt(2.0 * N) / omega
