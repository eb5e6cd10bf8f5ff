"""Sine-kernel interpolation of the regularized determinants.

``P~_k`` is a trigonometric polynomial of degree ``k`` (period 2), so it is fixed
by its values at any ``k + 1`` distinct phases::

    P~_k(t) = sum_i P~_k(t_i) prod_{l != i} sin pi(t - t_l) / sin pi(t_i - t_l)

How much the kernel products can amplify sample sizes is measured by
:func:`uniformity_measure`.  :func:`interval_scheme` builds the two blocks of
window positions whose orbit phases serve as nodes for the decay estimate at a
site ``k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .cocycle import default_epsilon
from .determinants import ModelParams
from .errors import DuplicateNodes, InsufficientConvergents, KTooSmall
from .signedlog import SignedLog, signed_logsumexp
from .torus import Frequency

__all__ = [
    "SampleSet", "IntervalScheme", "UniformityReport", "lagrange_reconstruct",
    "uniformity_measure", "interval_scheme", "check_3eps_uniform",
    "lana_deviation", "ptilde_samples", "MIN_SEPARATION",
]

#: nodes closer than this (on the circle) are rejected
MIN_SEPARATION = 1e-13
_TOL = 1e-13


def _min_separation(points) -> float:
    x = np.sort(np.mod(points, 1.0))
    if len(x) < 2:
        return math.inf
    gaps = np.diff(np.append(x, x[0] + 1.0))
    return float(gaps.min())


@dataclass(frozen=True)
class SampleSet:
    """Interpolation nodes ``theta + l alpha`` with optional P~ values.

    ``points`` are phases reduced mod 2; ``values`` (when present) must be the
    determinant evaluated at exactly those representatives, since P~ changes
    sign under a shift by 1 when its degree is odd.
    """

    sites: np.ndarray
    points: np.ndarray
    value_signs: np.ndarray | None = None
    value_logs: np.ndarray | None = None
    _denoms: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        if len(self.points) != len(self.sites):
            raise ValueError("sites and points differ in length")
        sep = _min_separation(self.points)
        if sep < MIN_SEPARATION:
            raise DuplicateNodes(f"two nodes are {sep:.3g} apart on the circle")

    def __len__(self):
        return len(self.points)

    @property
    def degree(self) -> int:
        return len(self.points) - 1

    @property
    def min_separation(self) -> float:
        return _min_separation(self.points)

    @property
    def has_values(self) -> bool:
        return self.value_logs is not None

    @classmethod
    def from_orbit(cls, theta: float, alpha: float, sites, values=None) -> SampleSet:
        sites = np.asarray(sites, dtype=np.int64)
        x = theta + sites * alpha
        x = x - 2.0 * np.floor(0.5 * x)
        if values is None:
            return cls(sites, x)
        signs, logs = values
        return cls(sites, x, np.asarray(signs, dtype=np.int8), np.asarray(logs, dtype=float))

    def signed_denominators(self):
        """Sign and log of ``prod_{l != i} sin pi(t_i - t_l)`` for each node (cached)."""
        if not self._denoms:
            logs = np.empty(len(self))
            signs = np.empty(len(self), dtype=np.int64)
            K.node_signed_denominators(np.ascontiguousarray(self.points, dtype=float), logs, signs)
            self._denoms.extend([signs, logs])
        return self._denoms[0], self._denoms[1]


def ptilde_samples(params: ModelParams, sites, k: int) -> SampleSet:
    """Nodes ``theta + l alpha`` for ``l`` in ``sites`` carrying ``P~_k`` at those phases."""
    s = SampleSet.from_orbit(params.theta, params.alpha, sites)
    signs = np.empty(len(s), dtype=np.int64)
    logs = np.empty(len(s))
    K.ptilde_grid(s.points, params.alpha, params.lam, params.energy, k, signs, logs)
    return SampleSet(s.sites, s.points, signs.astype(np.int8), logs)


def lagrange_reconstruct(samples: SampleSet, theta: float) -> SignedLog:
    """Evaluate the sine-kernel interpolant of the stored values at ``theta``."""
    if not samples.has_values:
        raise ValueError("sample set carries no values")
    x = samples.points
    d = np.sin(np.pi * (theta - x))
    hit = np.flatnonzero(np.abs(d) < 1e-300)
    if hit.size:
        i = int(hit[0])
        return SignedLog(int(samples.value_signs[i]), float(samples.value_logs[i]))
    ld = np.log(np.abs(d))
    sd = np.where(d < 0, -1, 1)
    total_log = math.fsum(ld)
    total_sign = -1 if np.count_nonzero(sd < 0) % 2 else 1
    den_sign, den_log = samples.signed_denominators()
    # kernel_i = (prod_l d_l) / d_i / denominator_i
    k_log = total_log - ld - den_log
    k_sign = total_sign * sd * den_sign
    sign, log = signed_logsumexp(k_sign * samples.value_signs, k_log + samples.value_logs)
    return SignedLog(sign, log)


@dataclass(frozen=True)
class UniformityReport:
    """Largest log kernel product over phases and nodes.

    ``epsilon_effective`` is ``max_ratio_log`` divided by the interpolation
    degree; ``threshold`` and ``passed`` are filled in by
    :func:`check_3eps_uniform`.
    """

    max_ratio_log: float
    argmax_theta: float
    argmax_i: int
    epsilon_effective: float
    degree: int
    threshold: float | None = None
    passed: bool | None = None
    refined_pairs: int = 0
    grid_lower_bound: float | None = None


def _grid_lower_bound(x, denom, grid):
    t = (np.arange(grid) + 0.5) / grid
    best = -math.inf
    for lo in range(0, grid, 256):
        tt = t[lo:lo + 256]
        L = np.log(np.abs(np.sin(np.pi * (tt[:, None] - x[None, :]))))
        S = L.sum(axis=1)
        val = S[:, None] - L - denom[None, :]
        best = max(best, float(val.max()))
    return best


def uniformity_measure(samples, theta_grid: int | None = None, tol: float = _TOL) -> UniformityReport:
    """``max_{t, i} log prod_{l != i} |sin pi(t - t_l)| / |sin pi(t_i - t_l)|``.

    Each log-product is concave between consecutive nodes, so the maximum is
    found gap by gap.  The full sum is maximized on every gap first.  Then
    every node is maximized exactly on its two adjacent gaps.  Node/gap pairs
    further apart are refined only if the bound ``gap max of the full sum
    minus log of the smaller endpoint sine`` exceeds the running best.  When
    ``theta_grid`` is given, a brute-force evaluation on that many midpoints is
    reported as ``grid_lower_bound`` for comparison.

    ``samples`` may be a :class:`SampleSet` or an array of phases.
    """
    pts = samples.points if isinstance(samples, SampleSet) else np.asarray(samples, dtype=float)
    if len(pts) < 2:
        raise ValueError("need at least two nodes")
    sep = _min_separation(pts)
    if sep < MIN_SEPARATION:
        raise DuplicateNodes(f"two nodes are {sep:.3g} apart on the circle")
    red = np.mod(pts, 1.0)
    order = np.argsort(red, kind="stable")
    x = np.ascontiguousarray(red[order])
    n = len(x)

    gt = np.empty(n)
    gf = np.empty(n)
    gd = np.empty((n, 2))
    K.gap_maxima(x, tol, gt, gf, gd, np.empty(n, np.int64))
    denom = np.empty(n)
    K.node_log_denominators(x, denom)
    vals = np.empty(2 * n)
    ts = np.empty(2 * n)
    K.adjacent_pairs(x, gt, gd, denom, tol, vals, ts, np.empty(2 * n, np.int64))
    j = int(np.argmax(vals))
    m, side = divmod(j, 2)
    node = m if side == 0 else (m + 1) % n
    out = np.array([vals[j], ts[j], node, 0.0])
    K.pruned_pairs(x, gt, gf, gd, denom, vals[j], tol, out)

    best = max(float(out[0]), 0.0)
    grid_lb = _grid_lower_bound(x, denom, theta_grid) if theta_grid else None
    return UniformityReport(
        max_ratio_log=best,
        argmax_theta=float(out[1] % 1.0),
        argmax_i=int(order[int(out[2])]),
        epsilon_effective=best / (n - 1),
        degree=n - 1,
        refined_pairs=2 * n + int(out[3]),
        grid_lower_bound=grid_lb,
    )


@dataclass(frozen=True)
class IntervalScheme:
    """Window positions used to bound the eigenfunction at site ``k``.

    ``I1`` and ``I2`` are inclusive integer ranges of left ends ``x1`` of windows
    ``[x1, x1 + h - 2]``.  Windows starting in ``I2`` contain ``k``; windows
    starting in ``I1`` lie well to its left.  For ``k < 0`` the ranges are the
    reflection of those for ``|k|`` (``mirrored`` is set).
    """

    k: int
    n: int
    q_n: int
    s: int
    h: int
    case_tag: str
    I1: tuple[int, int]
    I2: tuple[int, int]
    mirrored: bool = False

    @property
    def window_length(self) -> int:
        return self.h - 1

    @property
    def margin(self) -> int:
        """Guaranteed distance from ``k`` to either end of a window starting in I2."""
        return (self.h // 100) if self.case_tag == "Case1" else ((2 * self.s * self.q_n) // 100)

    def sites(self, which: str = "both") -> np.ndarray:
        r1 = np.arange(self.I1[0], self.I1[1] + 1)
        r2 = np.arange(self.I2[0], self.I2[1] + 1)
        return {"I1": r1, "I2": r2, "both": np.concatenate([r1, r2])}[which]

    def window(self, x1: int) -> tuple[int, int]:
        return x1, x1 + self.h - 2


def _select(k: int, freq: Frequency):
    qs = freq.q
    cands = [i for i, q in enumerate(qs) if q <= 25 * k]
    if not cands:
        raise KTooSmall(f"no q_n with q_n/25 <= {k}")
    n = cands[-1]
    if n + 1 >= len(qs):
        raise InsufficientConvergents(
            f"need q_{n + 1} beyond q_{n} = {qs[n]}; extend the expansion (max_q)")
    return n, qs[n]


def interval_scheme(k: int, freq: Frequency) -> IntervalScheme:
    """Case 1 / Case 2 window ranges for site ``k``.

    ``q_n`` is the largest denominator with ``q_n <= 25 |k|``.  If ``|k| < q_n``
    the windows have length ``2 q_n - 1``; otherwise ``s`` is the unique integer
    with ``(2s - 1) q_n <= |k| < (2s + 1) q_n`` and the length is ``2 s q_n - 1``.
    """
    k = int(k)
    ka = abs(k)
    if ka == 0:
        raise KTooSmall("k = 0 has no scheme")
    n, q = _select(ka, freq)
    if ka < q:
        s, h, tag = 1, 2 * q, "Case1"
        f = (2 * q) // 100
        I1 = (ka - 2 * q - f + 1, ka - q - f)
        I2 = (ka - f - q + 1, ka - f)
    else:
        s = (ka + q) // (2 * q)
        h, tag = 2 * s * q, "Case2"
        f = (2 * s * q) // 100
        I1 = (-2 * s * q + f + 1, -s * q + f)
        I2 = (ka - f - s * q + 1, ka - f)
    if k < 0:
        w = h - 2
        I1 = (-I1[1] - w, -I1[0] - w)
        I2 = (-I2[1] - w, -I2[0] - w)
    return IntervalScheme(k, n, q, s, h, tag, I1, I2, mirrored=k < 0)


def check_3eps_uniform(params: ModelParams, k: int, epsilon: float | None = None,
                       theta_grid: int | None = None) -> UniformityReport:
    """Uniformity of the orbit nodes at the window starts for site ``k``, against ``3 eps (h - 1)``."""
    if epsilon is None:
        epsilon = default_epsilon(params.energy, params.lam)
    sch = interval_scheme(k, params.freq)
    nodes = SampleSet.from_orbit(params.theta, params.alpha, sch.sites())
    rep = uniformity_measure(nodes, theta_grid=theta_grid)
    thr = 3.0 * epsilon * (sch.h - 1)
    return UniformityReport(
        rep.max_ratio_log, rep.argmax_theta, rep.argmax_i, rep.epsilon_effective,
        rep.degree, thr, rep.max_ratio_log < thr, rep.refined_pairs, rep.grid_lower_bound)


def lana_deviation(theta: float, freq: Frequency, n: int) -> tuple[float, int]:
    """Deviation of a cosine product over one convergent period from ``2^-(q_n - 1)``.

    Drops the factor of smallest modulus (index ``j0``, smallest on ties) from
    ``prod_{j < q_n} |cos pi(theta + j alpha)|`` and returns
    ``(sum of remaining logs + (q_n - 1) ln 2, j0)``.
    """
    q = freq.q[n]
    j = np.arange(q, dtype=float)
    c = np.abs(np.cos(np.pi * (theta + j * freq.value)))
    j0 = int(np.argmin(c))
    logs = np.log(np.delete(c, j0))
    return math.fsum(logs) + (q - 1) * math.log(2.0), j0
