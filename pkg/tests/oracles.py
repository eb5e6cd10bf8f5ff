"""Reference computations that share no code with the package.

Dense linear algebra, arbitrary precision and brute-force grids; slow but
independent.
"""
from __future__ import annotations

import math

import mpmath as mp
import numpy as np

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def tan_potential(lam, alpha, theta, sites):
    x = theta + np.asarray(sites, dtype=float) * alpha
    return lam * np.tan(np.pi * x)


def dense_hamiltonian(lam, alpha, theta, lo, hi):
    v = tan_potential(lam, alpha, theta, np.arange(lo, hi + 1))
    n = len(v)
    return np.diag(v) + np.eye(n, k=1) + np.eye(n, k=-1)


def dense_char_det(lam, alpha, theta, E, k):
    """``det(E - H)`` on sites ``0..k-1`` via an LU factorization."""
    if k == 0:
        return 1.0
    H = dense_hamiltonian(lam, alpha, theta, 0, k - 1)
    return float(np.linalg.det(E * np.eye(k) - H))


def mp_char_det(lam, alpha, theta, E, k, dps=50):
    """``det(E - H)`` on sites ``0..k-1`` with mpmath matrices."""
    with mp.workdps(dps):
        if k == 0:
            return mp.mpf(1)
        M = mp.matrix(k, k)
        for i in range(k):
            M[i, i] = mp.mpf(E) - lam * mp.tan(mp.pi * (mp.mpf(theta) + i * mp.mpf(alpha)))
            if i + 1 < k:
                M[i, i + 1] = M[i + 1, i] = -1
        return mp.det(M)


def mp_ptilde(lam, alpha, theta, E, n, dps=50):
    """``prod cos * det(E - H)`` on ``n`` sites, from the cosine-weighted dense determinant."""
    with mp.workdps(dps):
        th, al = mp.mpf(theta), mp.mpf(alpha)
        cprod = mp.mpf(1)
        for j in range(n):
            cprod *= mp.cos(mp.pi * (th + j * al))
        return cprod * mp_char_det(lam, alpha, theta, E, n, dps)


def mp_ptilde_recurrence(lam, alpha, theta, E, n, dps=60):
    """Same quantity via a high-precision three-term recurrence (for long blocks)."""
    with mp.workdps(dps):
        th, al, E, lam = mp.mpf(theta), mp.mpf(alpha), mp.mpf(E), mp.mpf(lam)
        if n == 0:
            return mp.mpf(1)
        c0 = mp.cos(mp.pi * th)
        a, b = mp.mpf(1), E * c0 - lam * mp.sin(mp.pi * th)
        prev_c = c0
        for j in range(1, n):
            ph = mp.pi * (th + j * al)
            c = mp.cos(ph)
            a, b = b, (E * c - lam * mp.sin(ph)) * b - c * prev_c * a
            prev_c = c
        return b


def dense_green(lam, alpha, theta, E, x1, x2):
    """``(H - E)^{-1}`` on ``[x1, x2]``."""
    H = dense_hamiltonian(lam, alpha, theta, x1, x2)
    return np.linalg.inv(H - E * np.eye(x2 - x1 + 1))


def dense_eigenvalues(lam, alpha, theta, lo, hi):
    return np.linalg.eigvalsh(dense_hamiltonian(lam, alpha, theta, lo, hi))


def closed_form_lyapunov(E, lam):
    """``arccosh`` of the mean of the two distances from ``E`` to ``+-2 + i lam``."""
    with mp.workdps(40):
        r = (mp.sqrt((2 + mp.mpf(E)) ** 2 + lam ** 2) + mp.sqrt((2 - mp.mpf(E)) ** 2 + lam ** 2)) / 4
        return float(mp.acosh(r))


def largest_quadratic_root(E, lam):
    """The root of ``x^2 - (i lam - E) x + 1`` of larger modulus, via numpy.roots."""
    r = np.roots([1.0, -(complex(-E, lam)), 1.0])
    return r[np.argmax(np.abs(r))]


def brute_uniformity(points, grid=10**6, chunk=2000):
    """``max_{t, i} sum_{l != i} log|sin pi(t - t_l)| - log|sin pi(t_i - t_l)|`` on a midpoint grid."""
    x = np.asarray(points, dtype=float)
    n = len(x)
    D = np.array([np.sum(np.log(np.abs(np.sin(np.pi * (x[i] - np.delete(x, i)))))) for i in range(n)])
    best = -np.inf
    t = (np.arange(grid) + 0.5) / grid
    for lo in range(0, grid, chunk):
        L = np.log(np.abs(np.sin(np.pi * (t[lo:lo + chunk, None] - x[None, :]))))
        S = L.sum(axis=1, keepdims=True)
        best = max(best, float(np.max(S - L - D[None, :])))
    return best


def sine_lagrange(points, values, theta):
    """Plain double-precision sine-kernel interpolation (no logs)."""
    x = np.asarray(points, dtype=float)
    out = 0.0
    for i in range(len(x)):
        others = np.delete(x, i)
        out += values[i] * np.prod(np.sin(np.pi * (theta - others)) / np.sin(np.pi * (x[i] - others)))
    return out
