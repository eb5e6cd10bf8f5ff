"""Continued fractions, the torus metric and singular-phase guards."""
from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyCoefficients, InsufficientConvergents,
                     RationalInput, SingularPhase)

__all__ = [
    "GUARD", "GAUSS_FLOOR", "Frequency", "DiophantineReport", "torus_norm",
    "expand_cf", "frequency_from_coeffs", "beta_estimate",
    "singular_phase_distance", "check_phase_guard", "golden", "silver",
]

#: Phases closer than this to the tangent pole are rejected.
GUARD = 1e-9
#: Expansion of a decimal input stops once |alpha - p_n/q_n| is below this:
#: later partial quotients are determined by rounding, not by alpha.
GAUSS_FLOOR = 2.0 ** -40


def torus_norm(x):
    """Distance from ``x`` to the nearest integer (works elementwise on arrays)."""
    x = np.asarray(x, dtype=float)
    out = np.abs(x - np.rint(x))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Frequency:
    """An irrational frequency together with its continued-fraction data.

    ``cf_coeffs[n - 1]`` is the partial quotient ``a_n`` and ``convergents[n]``
    is ``(p_n, q_n)`` with ``(p_0, q_0) = (0, 1)``.
    """

    value: float
    cf_coeffs: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...] = field(repr=False)

    @property
    def q(self) -> list[int]:
        return [q for _, q in self.convergents]

    @property
    def p(self) -> list[int]:
        return [p for p, _ in self.convergents]

    def __len__(self):
        return len(self.convergents)

    def approximation_bounds(self):
        """Rows ``(n, q_n, ||q_n alpha||, 1/(2 q_{n+1}), 1/q_{n+1})`` for every stored n with a successor.

        The lower bound can fail at ``n = 0`` when ``a_1 = 1`` (then ``p_0 = 0``
        is not the integer nearest to ``alpha``); every later row satisfies both.
        """
        rows = []
        qs = self.q
        for n in range(len(qs) - 1):
            rows.append((n, qs[n], torus_norm(qs[n] * self.value),
                         1.0 / (2 * qs[n + 1]), 1.0 / qs[n + 1]))
        return rows


def _convergents(coeffs):
    p_prev, q_prev = 1, 0
    p, q = 0, 1
    out = [(p, q)]
    for a in coeffs:
        p, p_prev = a * p + p_prev, p
        q, q_prev = a * q + q_prev, q
        out.append((p, q))
    return out


def expand_cf(alpha: float, max_q: int) -> Frequency:
    """Expand ``alpha`` in (0, 1) with the Gauss map until ``q_n`` would exceed ``max_q``.

    The map runs in exact rational arithmetic on the binary value of
    ``alpha``.  It also stops once the convergent is within
    :data:`GAUSS_FLOOR` of ``alpha``, since later partial quotients only
    describe the rounding of the input.  A map that terminates exactly before
    either stop means the input is rational.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha!r}")
    if max_q < 1:
        raise ValueError("max_q must be >= 1")
    target = Fraction(alpha)
    coeffs = []
    p_prev, q_prev, p, q = 1, 0, 0, 1
    x = target
    while True:
        a = math.floor(1 / x)
        q_next = a * q + q_prev
        if q_next > max_q:
            break
        coeffs.append(a)
        p_prev, q_prev, p, q = p, q, a * p + p_prev, q_next
        x = 1 / x - a
        if x == 0:
            raise RationalInput(f"Gauss map of {alpha!r} terminated after {len(coeffs)} steps "
                                f"at {p}/{q}")
        if abs(target - Fraction(p, q)) < GAUSS_FLOOR:
            break
    return Frequency(alpha, tuple(coeffs), tuple(_convergents(coeffs)))


def frequency_from_coeffs(coeffs, tail=None, max_q: int = 10**9) -> Frequency:
    """Build a frequency from prescribed partial quotients.

    The list is continued by repeating ``tail`` (default: the last coefficient)
    until ``q_n`` passes ``max_q``; the value is the limit of that expansion.
    Convergents are exact integers.
    """
    coeffs = [int(a) for a in coeffs]
    if not coeffs:
        raise EmptyCoefficients("coefficient list is empty")
    if any(a < 1 for a in coeffs):
        raise ValueError("partial quotients must be positive integers")
    tail = [coeffs[-1]] if tail is None else [int(a) for a in tail]
    if not tail or any(a < 1 for a in tail):
        raise ValueError("tail must be a nonempty list of positive integers")

    def extended(limit):
        out = list(coeffs)
        qs = _convergents(out)
        i = 0
        while qs[-1][1] <= limit:
            out.append(tail[i % len(tail)])
            i += 1
            qs = _convergents(out)
        return out

    # stored expansion: every convergent with q_n <= max_q plus one successor
    stored = extended(max_q)
    # value: a convergent deep enough that 1/q^2 is below double resolution
    deep = _convergents(extended(max(max_q, 2**40)))
    p_deep, q_deep = deep[-1]
    value = p_deep / q_deep
    return Frequency(value, tuple(stored), tuple(_convergents(stored)))


def golden(max_q: int = 10**9) -> Frequency:
    """The golden-mean frequency (sqrt(5) - 1) / 2, all partial quotients 1."""
    return frequency_from_coeffs([1], max_q=max_q)


def silver(max_q: int = 10**9) -> Frequency:
    """sqrt(2) - 1, all partial quotients 2."""
    return frequency_from_coeffs([2], max_q=max_q)


@dataclass(frozen=True)
class DiophantineReport:
    beta_estimate: float
    per_n_ratios: list[float]
    qnalpha_margin: list[float] | None
    tail_from: int


def beta_estimate(freq: Frequency, tail_from: int, epsilon: float | None = None) -> DiophantineReport:
    """Finite-scale estimate of ``limsup ln(q_{n+1}) / q_n`` over ``n >= tail_from``.

    ``per_n_ratios[n]`` holds ``ln(q_{n+1}) / q_n``.  When ``epsilon`` is given the
    report also carries ``||q_n alpha|| * exp(epsilon * q_n)``, which stays above 1
    for large n when ``alpha`` is Diophantine.
    """
    qs = freq.q
    if tail_from < 0 or len(qs) < tail_from + 2:
        raise InsufficientConvergents(
            f"need at least {tail_from + 2} convergents, have {len(qs)}")
    ratios = [math.log(qs[n + 1]) / qs[n] for n in range(len(qs) - 1)]
    margin = None
    if epsilon is not None:
        margin = [float(torus_norm(q * freq.value)) * math.exp(epsilon * q) for q in qs]
    return DiophantineReport(max(ratios[tail_from:]), ratios, margin, tail_from)


def _alpha(freq) -> float:
    return freq.value if isinstance(freq, Frequency) else float(freq)


def singular_phase_distance(theta: float, freq, window) -> float:
    """Smallest torus distance from ``theta + n alpha`` to 1/2 over ``n`` in ``window = (lo, hi)``."""
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        raise ValueError("empty window")
    n = np.arange(lo, hi + 1, dtype=float)
    return float(np.min(torus_norm(theta + n * _alpha(freq) - 0.5)))


def check_phase_guard(theta: float, freq, window, guard: float = GUARD) -> None:
    """Raise :class:`SingularPhase` naming the offending site if any phase is within ``guard`` of a pole."""
    lo, hi = int(window[0]), int(window[1])
    if hi < lo:
        return
    n = np.arange(lo, hi + 1, dtype=float)
    d = torus_norm(theta + n * _alpha(freq) - 0.5)
    j = int(np.argmin(d))
    if d[j] < guard:
        raise SingularPhase(
            f"phase at site {lo + j} is {d[j]:.3g} from the pole of tan (guard {guard:g})",
            site=lo + j, distance=float(d[j]))
