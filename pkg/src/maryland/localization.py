"""Box Green's functions, regularity of sites and exponential decay of eigenvectors.

The Green's function of ``H - E`` on a box ``[x1, x2]`` has edge entries that
are ratios of regularized determinants::

    G(x1, y) = -P~_{x2-y}(theta + (y+1) alpha) * C[x1..y] / P~_{x2-x1+1}(theta + x1 alpha)
    G(y, x2) = -P~_{y-x1}(theta + x1 alpha)    * C[y..x2] / P~_{x2-x1+1}(theta + x1 alpha)

with ``C[a..b]`` the product of ``cos pi(theta + j alpha)`` over ``a <= j <= b``.
A site ``k`` is ``(m, w)``-regular when some window of length ``w`` around it,
with both ends at least ``w/100`` away, has ``|G(edge, k)| < exp(-m |k - edge|)``.
Regular sites are where the eigenvector is provably small; the pipeline at the
bottom of this module checks this on actual eigenvectors of large boxes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from ._parallel import map_items
from .cocycle import LN2, default_epsilon, lyapunov
from .determinants import (ModelParams, _bisect_eigenvalues, _eigenpair, eig_in_window,
                           potentials, site_table)
from .errors import BoxTooSmall, SingularDenominator
from .interpolation import IntervalScheme, interval_scheme
from .signedlog import SignedLog

__all__ = [
    "GreenValue", "RegularityVerdict", "DecayFit", "LemmaCheck", "I2Witness",
    "PipelineResult", "WindowDeterminants", "green_cramer", "green_direct",
    "expand_identity_check", "classify_point", "verify_I1_small",
    "find_I2_large", "verify_regular", "decay_pipeline", "scheme_threshold",
    "ENERGY_RESOLUTION",
]

#: log|denominator| below this is treated as a vanishing box determinant
DENOMINATOR_FLOOR = -700.0
#: bisection width for pipeline eigenvalues; determinants at E cannot resolve
#: resonances deeper than roughly log(EIG_TOL), so this is kept near machine level
EIG_TOL = 1e-16
#: assumed uncertainty of a double-precision box eigenvalue; a determinant
#: evaluated there is only known to within |dP~/dE| times this
ENERGY_RESOLUTION = 1e-13


@dataclass(frozen=True)
class GreenValue:
    interval: tuple[int, int]
    y: int
    edge: str
    value: SignedLog
    residual: float | None = None

    @property
    def log_abs(self) -> float:
        return self.value.log_mag


class _Strip:
    """Trigonometric table and cumulative cosine logs for the sites ``lo..hi``."""

    def __init__(self, params: ModelParams, lo: int, hi: int):
        self.params = params
        self.lo = lo
        self.c, self.s = site_table(params, lo, hi)
        with np.errstate(divide="ignore"):
            self.clog = np.concatenate([[0.0], np.cumsum(np.log(np.abs(self.c)))])
        self.cneg = np.concatenate([[0], np.cumsum(self.c < 0)])
        self.czero = np.concatenate([[0], np.cumsum(self.c == 0)])

    def cosprod(self, a: int, b: int) -> SignedLog:
        i, j = a - self.lo, b - self.lo + 1
        if self.czero[j] - self.czero[i]:
            return SignedLog(0)
        sign = -1 if (self.cneg[j] - self.cneg[i]) % 2 else 1
        return SignedLog(sign, float(self.clog[j] - self.clog[i]))

    def cos_log(self, a, b):
        """Vectorized ``log |C[a..b]|``."""
        return self.clog[np.asarray(b) - self.lo + 1] - self.clog[np.asarray(a) - self.lo]

    def forward(self, start: int, n: int):
        signs = np.empty(n + 1, dtype=np.int64)
        logs = np.empty(n + 1)
        p = self.params
        K.ptilde_run(self.c, self.s, p.lam, p.energy, start - self.lo, n, signs, logs)
        return signs, logs

    def backward(self, end: int, n: int):
        signs = np.empty(n + 1, dtype=np.int64)
        logs = np.empty(n + 1)
        p = self.params
        K.ptilde_back_run(self.c, self.s, p.lam, p.energy, end - self.lo, n, signs, logs)
        return signs, logs

    def block(self, start: int, n: int) -> SignedLog:
        s, l = self.forward(start, n)
        return SignedLog(int(s[n]), float(l[n]))

    def last(self, starts, n: int):
        starts = np.ascontiguousarray(np.asarray(starts, dtype=np.int64) - self.lo)
        signs = np.empty(len(starts), dtype=np.int64)
        logs = np.empty(len(starts))
        p = self.params
        K.ptilde_last(self.c, self.s, p.lam, p.energy, starts, n, signs, logs)
        return signs, logs

    def last_with_slope(self, starts, n: int):
        starts = np.ascontiguousarray(np.asarray(starts, dtype=np.int64) - self.lo)
        signs = np.empty(len(starts), dtype=np.int64)
        logs = np.empty(len(starts))
        dlogs = np.empty(len(starts))
        p = self.params
        K.ptilde_last_dE(self.c, self.s, p.lam, p.energy, starts, n, signs, logs, dlogs)
        return signs, logs, dlogs


def _check_box(x1, x2, y):
    if not x1 <= y <= x2:
        raise ValueError(f"need x1 <= y <= x2, got {x1}, {y}, {x2}")


def green_cramer(params: ModelParams, x1: int, x2: int, y: int,
                 floor: float = DENOMINATOR_FLOOR) -> tuple[GreenValue, GreenValue]:
    """``G(x1, y)`` and ``G(x2, y)`` of the box ``[x1, x2]`` from determinant ratios.

    Signs are exact: the regularized determinants and the cosine products are
    evaluated on the same phase representatives.
    """
    x1, x2, y = int(x1), int(x2), int(y)
    _check_box(x1, x2, y)
    st = _Strip(params, x1, x2)
    den = st.block(x1, x2 - x1 + 1)
    if den.sign == 0 or den.log_mag < floor:
        raise SingularDenominator(
            f"box [{x1}, {x2}] determinant is {den}; E={params.energy!r} is a box eigenvalue")
    left = -(st.block(y + 1, x2 - y) if y < x2 else SignedLog.one()) * st.cosprod(x1, y) / den
    right = -(st.block(x1, y - x1) if y > x1 else SignedLog.one()) * st.cosprod(y, x2) / den
    return (GreenValue((x1, x2), y, "left", left), GreenValue((x1, x2), y, "right", right))


def green_direct(params: ModelParams, x1: int, x2: int, y: int) -> tuple[GreenValue, GreenValue]:
    """Column ``y`` of ``(H - E)^{-1}`` on ``[x1, x2]`` by a twisted tridiagonal solve.

    Both edge values carry the relative residual ``||(H - E) g - e_y|| / ||g||``
    (infinity norms).
    """
    x1, x2, y = int(x1), int(x2), int(y)
    _check_box(x1, x2, y)
    v = potentials(params, x1, x2)
    E = params.energy
    signs, logs, gamma, _ = K.twisted(v, E, y - x1)
    if gamma == 0.0 or not math.isfinite(gamma):
        raise SingularDenominator(f"E={E!r} is an eigenvalue of the box [{x1}, {x2}]")
    # residual in scaled form: z solves (H - E) z = gamma e_y with z_y = 1
    top = logs.max()
    z = signs * np.exp(logs - top)
    r = (v - E) * z
    r[:-1] += z[1:]
    r[1:] += z[:-1]
    r[y - x1] -= gamma * math.exp(-top)
    resid = float(np.abs(r).max() / np.abs(z).max())
    g = SignedLog(1 if gamma > 0 else -1, -math.log(abs(gamma)))
    left = SignedLog(int(signs[0]), float(logs[0])) * g
    right = SignedLog(int(signs[-1]), float(logs[-1])) * g
    return (GreenValue((x1, x2), y, "left", left, resid),
            GreenValue((x1, x2), y, "right", right, resid))


def _as_slog(x) -> SignedLog:
    return x if isinstance(x, SignedLog) else SignedLog.from_float(float(x))


def expand_identity_check(params: ModelParams, phi, x1: int, x2: int, y: int) -> float:
    """Residual of ``phi(y) = -G(x1, y) phi(x1 - 1) - G(x2, y) phi(x2 + 1)``.

    ``phi`` is indexable by site (a :class:`~maryland.determinants.SolutionSequence`
    or a mapping).  The residual is relative to the largest of the three terms,
    or absolute when both boundary values vanish.
    """
    left, right = green_direct(params, x1, x2, y)
    a = _as_slog(phi[x1 - 1])
    b = _as_slog(phi[x2 + 1])
    lhs = _as_slog(phi[y])
    t1 = -left.value * a
    t2 = -right.value * b
    diff = lhs - (t1 + t2)
    if a.sign == 0 and b.sign == 0:
        return abs(float(diff))
    scale = max(lhs.log_mag, t1.log_mag, t2.log_mag)
    return math.exp(diff.log_mag - scale) if diff.sign else 0.0


@dataclass(frozen=True)
class RegularityVerdict:
    """Outcome of a regularity test at site ``k``.

    ``left_log`` / ``right_log`` are ``log |G(edge, k)|`` for the witness window,
    or for the window closest to passing when the site is singular.
    """

    k: int
    m: float
    window_length: int
    regular: bool
    witness_x1: int | None
    left_log: float
    right_log: float
    margins: tuple[int, int] = (0, 0)
    skipped: int = 0

    @property
    def window(self):
        if self.witness_x1 is None:
            return None
        return self.witness_x1, self.witness_x1 + self.window_length - 1


def _window_logs(params, k, length, x1s):
    """log|G(x1, k)|, log|G(x2, k)|, denominator signs for windows of ``length`` starting at x1s."""
    lo, hi = int(x1s.min()), int(x1s.max()) + length - 1
    st = _Strip(params, lo, hi)
    dsg, dlog = st.last(x1s, length)
    x2s = x1s + length - 1
    fs, fl = st.forward(k + 1, hi - k) if hi > k else (np.ones(1, np.int64), np.zeros(1))
    bs, bl = st.backward(k - 1, k - lo) if k > lo else (np.ones(1, np.int64), np.zeros(1))
    with np.errstate(invalid="ignore"):
        left = fl[x2s - k] + st.cos_log(x1s, k) - dlog
        right = bl[k - x1s] + st.cos_log(k, x2s) - dlog
    return left, right, dsg


def classify_point(params: ModelParams, k: int, m: float, h: int) -> RegularityVerdict:
    """Scan every window of length ``h`` around ``k`` whose ends keep distance ``>= h/100``."""
    k, h = int(k), int(h)
    if h < 3:
        raise ValueError("window length must be >= 3")
    x1s = np.arange(k - h + 1, k + 1)
    d1 = k - x1s
    d2 = x1s + h - 1 - k
    ok = (100 * d1 >= h) & (100 * d2 >= h)
    x1s, d1, d2 = x1s[ok], d1[ok], d2[ok]
    if x1s.size == 0:
        return RegularityVerdict(k, m, h, False, None, math.inf, math.inf)
    left, right, dsg = _window_logs(params, k, h, x1s)
    good = (dsg != 0) & np.isfinite(left) & np.isfinite(right)
    skipped = int(np.count_nonzero(~good))
    slack = np.maximum(left + m * d1, right + m * d2)
    slack = np.where(good, slack, np.inf)
    passing = np.flatnonzero(slack < 0)
    if passing.size:
        i = int(passing[0])
        return RegularityVerdict(k, m, h, True, int(x1s[i]), float(left[i]), float(right[i]),
                                 (int(d1[i]), int(d2[i])), skipped)
    i = int(np.argmin(slack))
    return RegularityVerdict(k, m, h, False, None, float(left[i]), float(right[i]),
                             (int(d1[i]), int(d2[i])), skipped)


class WindowDeterminants:
    """``log |P~_n(theta + x alpha)|`` for a fixed block length ``n``, computed on demand.

    Values are kept for one contiguous range of starts ``x``; requests outside it
    extend the range and only compute the new part.  Alongside each value the
    cache holds ``log |dP~_n/dE|``, from which :meth:`noise` estimates how much
    of the value an energy error of ``energy_error`` could account for.
    """

    def __init__(self, params: ModelParams, n: int, energy_error: float = ENERGY_RESOLUTION):
        self.params = params
        self.n = int(n)
        self.energy_error = float(energy_error)
        self.lo = None
        self.signs = np.empty(0, np.int64)
        self.logs = np.empty(0)
        self.dlogs = np.empty(0)

    def _compute(self, a, b):
        st = _Strip(self.params, a, b + self.n - 1)
        return st.last_with_slope(np.arange(a, b + 1), self.n)

    def _extend(self, a, b):
        if self.lo is None:
            self.lo = a
            self.signs, self.logs, self.dlogs = self._compute(a, b)
        hi = self.lo + len(self.logs) - 1
        if a < self.lo:
            parts = self._compute(a, self.lo - 1)
            self.signs, self.logs, self.dlogs = (
                np.concatenate([p, q]) for p, q in zip(parts, (self.signs, self.logs, self.dlogs)))
            self.lo = a
        if b > hi:
            parts = self._compute(hi + 1, b)
            self.signs, self.logs, self.dlogs = (
                np.concatenate([q, p]) for p, q in zip(parts, (self.signs, self.logs, self.dlogs)))
        return a - self.lo

    def get(self, a: int, b: int):
        a, b = int(a), int(b)
        i = self._extend(a, b)
        return self.signs[i:i + b - a + 1], self.logs[i:i + b - a + 1]

    def noise(self, a: int, b: int):
        """``log(|dP~/dE| * energy_error)`` for starts ``a..b``."""
        a, b = int(a), int(b)
        i = self._extend(a, b)
        return self.dlogs[i:i + b - a + 1] + math.log(self.energy_error)


def scheme_threshold(E: float, lam: float, h: int, epsilon: float) -> float:
    """``h (L - ln 2 - 4 eps)``: the size separating the two window blocks."""
    return h * (lyapunov(E, lam) - LN2 - 4.0 * epsilon)


@dataclass(frozen=True)
class LemmaCheck:
    """Largest ``log |P~_{h-1}|`` over the far block of window starts, against the threshold.

    ``status`` is ``"pass"`` when every value plus its energy-error noise stays
    below the threshold, ``"fail"`` when some value above the threshold clearly
    exceeds its noise, and ``"unresolved"`` otherwise: double precision at this
    energy cannot tell.
    """

    k: int
    h: int
    threshold: float
    max_log: float
    argmax_x1: int
    passed: bool
    status: str = "pass"
    max_noise_log: float = -math.inf


class I2Witness(tuple):
    """``(x1, log_val)`` plus ``threshold`` and ``cleared`` attributes."""

    def __new__(cls, x1, log_val, threshold, cleared):
        self = super().__new__(cls, (x1, log_val))
        self.x1, self.log_val, self.threshold, self.cleared = x1, log_val, threshold, cleared
        return self

    def __repr__(self):
        return (f"I2Witness(x1={self.x1}, log_val={self.log_val:.6g}, "
                f"threshold={self.threshold:.6g}, cleared={self.cleared})")


def _eps(params, epsilon):
    return default_epsilon(params.energy, params.lam) if epsilon is None else float(epsilon)


def _dets(params, sch, cache):
    if cache is None:
        return WindowDeterminants(params, sch.h - 1)
    if sch.h - 1 not in cache:
        cache[sch.h - 1] = WindowDeterminants(params, sch.h - 1)
    return cache[sch.h - 1]


def verify_I1_small(params: ModelParams, k: int, epsilon: float | None = None,
                    cache: dict | None = None) -> LemmaCheck:
    """Every window starting in the far block has ``log|P~_{h-1}| < h (L - ln 2 - 4 eps)``."""
    eps = _eps(params, epsilon)
    sch = interval_scheme(k, params.freq)
    dets = _dets(params, sch, cache)
    _, logs = dets.get(*sch.I1)
    noise = dets.noise(*sch.I1)
    thr = scheme_threshold(params.energy, params.lam, sch.h, eps)
    i = int(np.argmax(logs))
    bound = np.logaddexp(logs, noise)
    if np.all(bound < thr):
        status = "pass"
    elif np.any((logs >= thr) & (logs > noise + math.log(10.0))):
        status = "fail"
    else:
        status = "unresolved"
    return LemmaCheck(sch.k, sch.h, thr, float(logs[i]), sch.I1[0] + i, status == "pass",
                      status, float(np.max(noise)))


def _i2_margin_ok(sch: IntervalScheme, x1s):
    w = sch.h - 1
    d1 = sch.k - x1s
    d2 = x1s + w - 1 - sch.k
    return (100 * d1 >= w) & (100 * d2 >= w)


def find_I2_large(params: ModelParams, k: int, epsilon: float | None = None,
                  cache: dict | None = None, require_margin: bool = False) -> I2Witness:
    """The start in the near block with the largest ``|P~_{h-1}|``.

    With ``require_margin`` only starts whose window keeps both ends at least
    ``(h-1)/100`` from ``k`` are considered.
    """
    eps = _eps(params, epsilon)
    sch = interval_scheme(k, params.freq)
    _, logs = _dets(params, sch, cache).get(*sch.I2)
    x1s = np.arange(sch.I2[0], sch.I2[1] + 1)
    if require_margin:
        ok = _i2_margin_ok(sch, x1s)
        logs = np.where(ok, logs, -np.inf)
    thr = scheme_threshold(params.energy, params.lam, sch.h, eps)
    i = int(np.argmax(logs))
    return I2Witness(int(x1s[i]), float(logs[i]), thr, bool(logs[i] >= thr))


def verify_regular(params: ModelParams, k: int, epsilon: float | None = None,
                   cache: dict | None = None) -> RegularityVerdict:
    """Test ``(L - 500 eps, h - 1)``-regularity at ``k`` on the window built from the near block.

    The window is ``[x1, x1 + h - 2]`` for the start ``x1`` in the near block with
    the largest determinant among those keeping both ends ``(h-1)/100`` away
    from ``k``.
    """
    eps = _eps(params, epsilon)
    sch = interval_scheme(k, params.freq)
    m = lyapunov(params.energy, params.lam) - 500.0 * eps
    w = sch.h - 1
    wit = find_I2_large(params, k, eps, cache, require_margin=True)
    if not math.isfinite(wit.log_val):
        return RegularityVerdict(sch.k, m, w, False, None, math.inf, math.inf)
    x1 = np.array([wit.x1])
    left, right, dsg = _window_logs(params, sch.k, w, x1)
    d1, d2 = sch.k - wit.x1, wit.x1 + w - 1 - sch.k
    ok = bool(dsg[0] != 0 and left[0] < -m * d1 and right[0] < -m * d2)
    return RegularityVerdict(sch.k, m, w, ok, wit.x1 if ok else None,
                             float(left[0]), float(right[0]), (d1, d2))


@dataclass(frozen=True)
class DecayFit:
    """Least-squares line through ``(|k|, log |phi(k)|)``."""

    slope: float
    intercept: float
    r_squared: float
    window: tuple[int, int]
    theorem_bound_pass: bool


@dataclass(frozen=True)
class PipelineResult:
    fit: DecayFit
    energy: float
    center: int
    lyapunov: float
    epsilon: float
    m: float
    sites: np.ndarray
    log_phi: np.ndarray
    verdicts: list = field(repr=False)
    expansion_log_bound: np.ndarray = field(repr=False)
    theorem_log_bound: np.ndarray = field(repr=False)
    edge_log_ratio: float = 0.0

    @property
    def regular_fraction(self) -> float:
        return sum(v.regular for v in self.verdicts) / max(len(self.verdicts), 1)

    @property
    def slope_ratio(self) -> float:
        return -self.fit.slope / self.lyapunov


def _fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ np.array([slope, icpt])
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(icpt), min(max(r2, 0.0), 1.0)


def _pick_eigenpair(params, N, first, energy_target, which, k_max):
    edge_tol = math.log(1e-8)
    if which == "ground":
        v = potentials(params, first, first + N - 1)
        lo, hi = float(v.min()) - 2.5, float(v.max()) + 2.5
        E0 = _bisect_eigenvalues(v, lo, hi, np.array([0]), EIG_TOL)[0]
        candidates = [_eigenpair(v, float(E0))]
    else:
        width = 0.05
        candidates = []
        while width < 50 and not candidates:
            candidates = eig_in_window(params, N, energy_target - width, energy_target + width,
                                       tol=EIG_TOL, first_site=first)
            width *= 2
        if not candidates:
            raise BoxTooSmall("no eigenvalue found near the target energy")
        candidates.sort(key=lambda p: abs(p.energy - energy_target))
    edge_ok = []
    for p in candidates:
        top = float(p.log_abs.max())
        c = first + int(np.argmax(p.log_abs))
        edge = max(p.log_abs[0], p.log_abs[-1]) - top
        if edge < edge_tol:
            edge_ok.append((p, c, edge))
            if c - k_max >= first and c + k_max <= first + N - 1:
                return p, c, edge
    if not edge_ok:
        raise BoxTooSmall(f"no eigenvector near E={energy_target} is below 1e-8 at the box edge")
    raise BoxTooSmall(f"no localized eigenvector leaves room for |k| <= {k_max} inside the box")


def decay_pipeline(params: ModelParams, N_box: int, energy_target: float = 0.0,
                   k_range=(30, 400), epsilon: float | None = None, which: str = "nearest",
                   threads: int = 1) -> PipelineResult:
    """Localize a box eigenvector and check its decay against the regularity machinery.

    The box is ``[-N/2, N - N/2 - 1]``.  ``which="nearest"`` takes the eigenvalue
    closest to ``energy_target`` whose eigenvector fits the requested range of
    ``k`` inside the box after recentring at its largest entry; ``"ground"``
    takes the lowest eigenvalue.  For every ``k`` with ``k_range[0] <= |k| <=
    k_range[1]`` the site is tested for regularity, the expansion bound from the
    witness window is recorded, and ``log|phi(k)|`` is fitted linearly in
    ``|k|``.
    """
    kmin, kmax = int(k_range[0]), int(k_range[1])
    if not 1 <= kmin <= kmax:
        raise ValueError("k_range must satisfy 1 <= kmin <= kmax")
    first = -(N_box // 2)
    pair, c, edge = _pick_eigenpair(params, N_box, first, energy_target, which, kmax)
    E = pair.energy
    pc = params.shifted(c).with_energy(E)
    L = lyapunov(E, params.lam)
    eps = default_epsilon(E, params.lam) if epsilon is None else float(epsilon)
    m = L - 500.0 * eps

    ks = np.concatenate([-np.arange(kmax, kmin - 1, -1), np.arange(kmin, kmax + 1)])
    log_phi = pair.log_abs[ks + c - first]
    slope, icpt, r2 = _fit(np.abs(ks).astype(float), log_phi)

    cache: dict = {}
    # fill the determinant caches group by group, then evaluate verdicts
    for k in ks:
        sch = interval_scheme(int(k), pc.freq)
        _dets(pc, sch, cache).get(min(sch.I1[0], sch.I2[0]), max(sch.I1[1], sch.I2[1]))
    verdicts = map_items(lambda k: verify_regular(pc, int(k), eps, cache), ks, threads)

    # expansion bound with |phi(x)| <= C (1 + |x|), C = 2 max|phi|
    logC = math.log(2.0) + float(pair.log_abs.max())
    exp_bound = np.full(len(ks), np.nan)
    for i, v in enumerate(verdicts):
        if v.regular:
            x1, x2 = v.window
            a = v.left_log + logC + math.log1p(abs(x1 - 1))
            b = v.right_log + logC + math.log1p(abs(x2 + 1))
            exp_bound[i] = max(a, b) + math.log1p(math.exp(-abs(a - b)))
    thm = -np.abs(ks) * (L / 150.0 - 4.0 * eps)
    fit = DecayFit(slope, icpt, r2, (kmin, kmax), bool(np.all(log_phi <= thm)))
    return PipelineResult(fit, E, c, L, eps, m, ks, log_phi, verdicts, exp_bound, thm, edge)
