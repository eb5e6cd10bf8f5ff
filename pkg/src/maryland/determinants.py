"""The Maryland operator on finite boxes and its characteristic determinants.

``P_k(theta)`` is the determinant of ``(E - H)`` restricted to sites
``0..k-1`` and ``P~_k(theta) = prod_{j<k} cos pi(theta + j alpha) * P_k(theta)``
is its pole-free regularization.  P~ is computed first and everything else is
derived from it; the naive tangent recurrence is only used for Sturm counts,
where it is the standard (and stable) ratio form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .errors import SingularPhase, TrivialInitial, WindowTooWide
from .signedlog import SignedLog, signed_logsumexp
from .torus import GUARD, Frequency, check_phase_guard, torus_norm

__all__ = [
    "ModelParams", "DetSequence", "Eigenpair", "SolutionSequence",
    "site_table", "potential", "potentials", "box_matrix", "p_sequence",
    "ptilde_sequence", "ptilde_value", "ptilde_block", "g_eval",
    "sturm_count", "eig_in_window", "solution_sequence",
]

MAX_EIGENPAIRS = 4096


@dataclass(frozen=True)
class ModelParams:
    """Coupling, frequency, phase and energy of ``u(n+1) + u(n-1) + lam tan pi(theta + n alpha) u(n)``."""

    lam: float
    freq: Frequency
    theta: float
    energy: float = 0.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"coupling must be positive, got {self.lam!r}")

    @property
    def alpha(self) -> float:
        return self.freq.value

    def with_energy(self, energy: float) -> ModelParams:
        return replace(self, energy=float(energy))

    def shifted(self, n: int) -> ModelParams:
        """Relabel sites so that site ``n`` becomes site 0 (phase ``theta + n alpha``)."""
        return replace(self, theta=self.theta + n * self.alpha)


def site_table(params: ModelParams, lo: int, hi: int):
    """Cosines and sines of ``pi (theta + j alpha)`` (phase mod 2) for sites ``lo..hi``."""
    j = np.arange(lo, hi + 1, dtype=float)
    x = params.theta + j * params.alpha
    x = x - 2.0 * np.floor(0.5 * x)
    return np.cos(np.pi * x), np.sin(np.pi * x)


def potentials(params: ModelParams, lo: int, hi: int, guard: float = GUARD) -> np.ndarray:
    """``lam tan pi(theta + n alpha)`` for sites ``lo..hi``; raises :class:`SingularPhase` near a pole."""
    check_phase_guard(params.theta, params.freq, (lo, hi), guard)
    j = np.arange(lo, hi + 1, dtype=float)
    x = params.theta + j * params.alpha
    return params.lam * np.tan(np.pi * (x - np.floor(x)))


def potential(params: ModelParams, n: int, guard: float = GUARD) -> float:
    return float(potentials(params, n, n, guard)[0])


def box_matrix(params: ModelParams, N: int, first_site: int = 0) -> np.ndarray:
    """Dense ``H`` restricted to ``first_site .. first_site + N - 1`` with zero boundary conditions."""
    v = potentials(params, first_site, first_site + N - 1)
    return np.diag(v) + np.diag(np.ones(N - 1), 1) + np.diag(np.ones(N - 1), -1)


@dataclass(frozen=True)
class DetSequence:
    """``values[j]`` for ``j = 0..k`` stored as parallel sign / log-magnitude arrays."""

    kind: str
    signs: np.ndarray
    logs: np.ndarray

    def __len__(self):
        return len(self.signs)

    def __getitem__(self, j) -> SignedLog:
        return SignedLog(int(self.signs[j]), float(self.logs[j]))

    def to_floats(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.signs * np.exp(self.logs)

    def growth_threshold(self, bound_rate: float) -> int | None:
        """Smallest j after which ``log|values[i]| <= bound_rate * i`` holds for all i >= j."""
        j = np.arange(len(self.logs))
        bad = np.nonzero(self.logs > bound_rate * j)[0]
        if bad.size == 0:
            return 0
        if bad[-1] == len(self.logs) - 1:
            return None
        return int(bad[-1] + 1)


def ptilde_block(c, s, lam, E, start, n):
    """Signed logs of P~_0..P~_n for the block beginning at table index ``start``."""
    signs = np.empty(n + 1, dtype=np.int8)
    logs = np.empty(n + 1)
    K.ptilde_run(c, s, float(lam), float(E), int(start), int(n), signs, logs)
    return signs, logs


def ptilde_sequence(params: ModelParams, k: int) -> DetSequence:
    """P~_0 .. P~_k at phase ``params.theta``.

    Uses ``P~_j = (E cos t - lam sin t) P~_{j-1} - cos t cos t' P~_{j-2}`` with
    ``t = pi(theta + (j-1) alpha)``; there are no poles.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    c, s = site_table(params, 0, max(k - 1, 0))
    signs, logs = ptilde_block(c, s, params.lam, params.energy, 0, k)
    return DetSequence("Ptilde", signs, logs)


def ptilde_value(params: ModelParams, k: int) -> SignedLog:
    return ptilde_sequence(params, k)[k]


def p_sequence(params: ModelParams, k: int, guard: float = GUARD) -> DetSequence:
    """P_0 .. P_k, derived from P~ by dividing out the cosine product."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k > 0:
        check_phase_guard(params.theta, params.freq, (0, k - 1), guard)
    pt = ptilde_sequence(params, k)
    c, _ = site_table(params, 0, max(k - 1, 0))
    cos_sign = np.concatenate([[1], np.cumprod(np.sign(c[:k]))]).astype(np.int8)
    cos_log = np.concatenate([[0.0], np.cumsum(np.log(np.abs(c[:k])))])
    return DetSequence("P", (pt.signs * cos_sign).astype(np.int8), pt.logs - cos_log)


def g_eval(params: ModelParams, k: int, theta: float | None = None, guard: float = GUARD) -> SignedLog:
    """``P~_k(theta) / cos^k(pi theta)``, the degree-k polynomial in ``tan pi theta``."""
    theta = params.theta if theta is None else float(theta)
    d = torus_norm(theta - 0.5)
    if d < guard:
        raise SingularPhase(f"cos(pi theta) vanishes at theta={theta!r}", site=0, distance=d)
    val = ptilde_value(replace(params, theta=theta), k)
    cth = math.cos(math.pi * theta)
    denom = SignedLog(int(np.sign(cth)) ** k, k * math.log(abs(cth)))
    return val / denom


def sturm_count(params: ModelParams, N: int, E: float, first_site: int = 0) -> int:
    """Number of eigenvalues of the box ``first_site..first_site+N-1`` strictly below ``E``."""
    v = potentials(params, first_site, first_site + N - 1)
    out = np.empty(1, dtype=np.int64)
    K.sturm_counts(v, np.array([float(E)]), out)
    return int(out[0])


class Eigenpair(NamedTuple):
    energy: float
    vector: np.ndarray
    sign: np.ndarray
    log_abs: np.ndarray
    residual: float


def _bisect_eigenvalues(v, lo, hi, indices, tol):
    """Bisection for the eigenvalues with the given indices inside (lo, hi)."""
    m = len(indices)
    a = np.full(m, float(lo))
    b = np.full(m, float(hi))
    idx = np.asarray(indices)
    cnt = np.empty(m, dtype=np.int64)
    for _ in range(200):
        width = b - a
        floor = 4 * np.finfo(float).eps * np.maximum(np.abs(a), np.abs(b))
        if np.all(width <= np.maximum(tol, floor)):
            break
        mid = 0.5 * (a + b)
        K.sturm_counts(v, mid, cnt)
        above = cnt > idx
        b = np.where(above, mid, b)
        a = np.where(above, a, mid)
    return 0.5 * (a + b)


def eig_in_window(params: ModelParams, N: int, E_lo: float, E_hi: float, tol: float = 1e-12,
                  first_site: int = 0, max_count: int = MAX_EIGENPAIRS) -> list[Eigenpair]:
    """All eigenpairs of the box with eigenvalue in ``(E_lo, E_hi)``.

    Eigenvalues come from Sturm bisection.  Each eigenvector is one inverse
    iteration step solved by a twisted factorization (the right-hand side is the
    unit vector at the best twist index), kept in sign/log form so that tail
    components far below the double range keep their relative accuracy.
    """
    if not E_lo < E_hi:
        raise ValueError("need E_lo < E_hi")
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = potentials(params, first_site, first_site + N - 1)
    cnt = np.empty(2, dtype=np.int64)
    K.sturm_counts(v, np.array([float(E_lo), float(E_hi)]), cnt)
    n_lo, n_hi = int(cnt[0]), int(cnt[1])
    if n_hi - n_lo > max_count:
        raise WindowTooWide(f"{n_hi - n_lo} eigenvalues in window, cap is {max_count}")
    if n_hi == n_lo:
        return []
    energies = _bisect_eigenvalues(v, E_lo, E_hi, np.arange(n_lo, n_hi), tol)
    return [_eigenpair(v, float(E)) for E in energies]


def _eigenpair(v, E):
    signs, logs, gamma, r = K.twisted(v, E, -1)
    _, lognorm2 = signed_logsumexp(np.ones_like(logs), 2 * logs)
    logs = logs - 0.5 * lognorm2
    vec = signs * np.exp(logs)
    residual = abs(gamma) * math.exp(-0.5 * lognorm2)
    return Eigenpair(E, vec, signs, logs, residual)


@dataclass(frozen=True)
class SolutionSequence:
    """Solution of ``H phi = E phi`` on ``sites`` in sign/log form."""

    sites: np.ndarray
    signs: np.ndarray
    logs: np.ndarray

    def __getitem__(self, n) -> SignedLog:
        i = int(n) - int(self.sites[0])
        if not 0 <= i < len(self.sites):
            raise IndexError(n)
        return SignedLog(int(self.signs[i]), float(self.logs[i]))

    def values(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return self.signs * np.exp(self.logs)


def _step_pairs(first, second, weights, reverse=False):
    """Run u_next = w * u_cur - u_prev in scaled form; returns signs/logs of the produced terms."""
    n = len(weights)
    out_s = np.empty(n, dtype=np.int8)
    out_l = np.empty(n)
    prev, cur = first, second
    scale = 0.0
    for i, w in enumerate(weights):
        nxt = w * cur - prev
        prev, cur = cur, nxt
        m = max(abs(prev), abs(cur))
        if m > 1e100 or 0 < m < 1e-100:
            prev /= m
            cur /= m
            scale += math.log(m)
        out_s[i] = int(np.sign(cur))
        out_l[i] = math.log(abs(cur)) + scale if cur != 0 else -math.inf
    return out_s, out_l


def solution_sequence(params: ModelParams, initial, sites, guard: float = GUARD) -> SolutionSequence:
    """The solution with ``phi(0), phi(-1) = initial`` on the closed site interval ``sites``.

    Forward: ``phi(n+1) = (E - v_n) phi(n) - phi(n-1)``; backward uses the inverse
    transfer matrix ``[[0, 1], [-1, E - v_n]]``.
    """
    phi0, phim1 = (float(x) for x in initial)
    if phi0 == 0.0 and phim1 == 0.0:
        raise TrivialInitial("initial data (0, 0) gives the zero solution")
    lo, hi = int(sites[0]), int(sites[1])
    a, b = min(lo, -1), max(hi, 0)
    v = potentials(params, a, b, guard)
    E = params.energy
    vals_s = {}
    vals_l = {}
    for site, x in ((0, phi0), (-1, phim1)):
        vals_s[site] = int(np.sign(x))
        vals_l[site] = math.log(abs(x)) if x != 0 else -math.inf
    if b >= 1:
        w = E - v[(np.arange(0, b) - a)]
        s_, l_ = _step_pairs(phim1, phi0, w)
        for i in range(b):
            vals_s[i + 1], vals_l[i + 1] = s_[i], l_[i]
    if a <= -2:
        # phi(m) = (E - v_{m+1}) phi(m+1) - phi(m+2), m = -2, -3, ...
        w = E - v[(np.arange(-1, a, -1) - a)]
        s_, l_ = _step_pairs(phi0, phim1, w)
        for i in range(len(w)):
            vals_s[-2 - i], vals_l[-2 - i] = s_[i], l_[i]
    sites_arr = np.arange(lo, hi + 1)
    return SolutionSequence(sites_arr,
                            np.array([vals_s[n] for n in sites_arr], dtype=np.int8),
                            np.array([vals_l[n] for n in sites_arr]))
