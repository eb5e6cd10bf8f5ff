"""Transfer-matrix cocycles and Lyapunov exponents.

The Schrodinger cocycle ``D(theta) = [[E - lam tan pi theta, -1], [1, 0]]`` and
its regularization ``F = cos(pi theta) D``.  Long products are accumulated in
QR form (orthogonal factor times a log-scaled triangle), which keeps both the
norm and the determinant accurate over 10^5 steps.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from ._parallel import map_chunks
from .determinants import ModelParams, ptilde_block, site_table
from .errors import DegenerateRoots, SingularPhase
from .signedlog import SignedLog
from .torus import GUARD, check_phase_guard, torus_norm

__all__ = [
    "ScaledMatrix2", "LyapunovEstimate", "DSequence", "AvgLogReport", "CosProduct",
    "step_D", "step_F", "transfer_product", "lyapunov", "lyapunov_closed_form",
    "lyapunov_birkhoff", "x2_root", "d_sequence", "avg_log_ptilde",
    "ptilde_log_rates", "cos_product", "midpoint_grid", "default_epsilon",
    "ftilde_assembly",
]

LN2 = math.log(2.0)
#: irrational shift of every theta grid, keeps nodes off zeros of P~ and poles of tan
MICRO_OFFSET = 1e-4 * math.sqrt(2.0)


@dataclass(frozen=True)
class ScaledMatrix2:
    """A 2x2 matrix ``exp(log_scale) * entries`` with ``max|entries| == 1``.

    ``det_sign``/``log_abs_det`` are carried alongside when the product was
    accumulated in QR form; otherwise they are computed from the entries.
    """

    entries: np.ndarray
    log_scale: float
    det_sign: int | None = None
    log_abs_det: float | None = None

    @classmethod
    def from_matrix(cls, m) -> ScaledMatrix2:
        m = np.asarray(m)
        mx = float(np.max(np.abs(m)))
        if mx == 0.0:
            return cls(np.zeros((2, 2), dtype=m.dtype), 0.0)
        return cls(m / mx, math.log(mx))

    @classmethod
    def identity(cls) -> ScaledMatrix2:
        return cls(np.eye(2), 0.0, 1, 0.0)

    def matrix(self) -> np.ndarray:
        return self.entries * math.exp(self.log_scale)

    def __matmul__(self, other: ScaledMatrix2) -> ScaledMatrix2:
        out = ScaledMatrix2.from_matrix(self.entries @ other.entries)
        sign = logdet = None
        if self.log_abs_det is not None and other.log_abs_det is not None:
            sign = self.det_sign * other.det_sign
            logdet = self.log_abs_det + other.log_abs_det
        return ScaledMatrix2(out.entries, out.log_scale + self.log_scale + other.log_scale, sign, logdet)

    def det(self) -> SignedLog:
        if self.log_abs_det is not None:
            return SignedLog(int(self.det_sign), self.log_abs_det) if self.det_sign else SignedLog(0)
        e = self.entries
        d = SignedLog.from_float(float(np.real(e[0, 0] * e[1, 1] - e[0, 1] * e[1, 0])))
        return d * SignedLog(1, 2 * self.log_scale) if d.sign else d

    def log_norm(self) -> float:
        """Natural log of the spectral norm."""
        return self.log_scale + math.log(float(np.linalg.norm(self.entries, 2)))


def step_D(params: ModelParams, theta: float, guard: float = GUARD) -> np.ndarray:
    d = torus_norm(theta - 0.5)
    if d < guard:
        raise SingularPhase(f"theta={theta!r} is {d:.3g} from a pole of tan", distance=d)
    x = theta - math.floor(theta)
    return np.array([[params.energy - params.lam * math.tan(math.pi * x), -1.0], [1.0, 0.0]])


def step_F(params: ModelParams, theta: float) -> np.ndarray:
    x = theta - 2.0 * math.floor(0.5 * theta)
    c, s = math.cos(math.pi * x), math.sin(math.pi * x)
    return np.array([[params.energy * c - params.lam * s, -c], [c, 0.0]])


def _qr_identity():
    return np.array([1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0])


def _qr_to_scaled(state) -> ScaledMatrix2:
    q = np.array([[state[0], state[1]], [state[2], state[3]]])
    tri = np.array([[1.0, state[5]], [0.0, state[6]]])
    m = q @ tri
    mx = float(np.max(np.abs(m)))
    sign = int(state[8])
    return ScaledMatrix2(m / mx, float(state[4]) + math.log(mx), sign,
                         float(state[4] + state[7]) if sign else -math.inf)


def transfer_product(params: ModelParams, k: int, step: str = "D", guard: float = GUARD) -> ScaledMatrix2:
    """The k-step cocycle ``M(theta + (k-1) alpha) ... M(theta)`` for ``M`` = D or F.

    For ``k < 0`` (D only) this is ``D_{-k}(theta + k alpha)^{-1}``, built from
    the exact inverses ``[[0, 1], [-1, E - lam tan]]``.
    """
    state = _qr_identity()
    if k == 0:
        return _qr_to_scaled(state)
    if step == "D":
        if k > 0:
            check_phase_guard(params.theta, params.freq, (0, k - 1), guard)
            K.cocycle_qr(params.theta, params.alpha, params.lam, params.energy, 0, k, 1, K.KIND_D, state)
        else:
            check_phase_guard(params.theta, params.freq, (k, -1), guard)
            K.cocycle_qr(params.theta, params.alpha, params.lam, params.energy, -1, -k, -1, K.KIND_DINV, state)
    elif step == "F":
        if k < 0:
            raise ValueError("F is not invertible where cos vanishes; use k >= 0")
        K.cocycle_qr(params.theta, params.alpha, params.lam, params.energy, 0, k, 1, K.KIND_F, state)
    else:
        raise ValueError(f"step must be 'D' or 'F', got {step!r}")
    return _qr_to_scaled(state)


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float
    k_used: int
    grid_size: int
    method: str


def lyapunov(E: float, lam: float) -> float:
    """L(E) from ``2 cosh L = (sqrt((2+E)^2 + lam^2) + sqrt((2-E)^2 + lam^2)) / 2``."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    u = 0.25 * (math.hypot(2.0 + E, lam) + math.hypot(2.0 - E, lam))
    L = math.log(u + math.sqrt((u - 1.0) * (u + 1.0)))
    sh = math.sinh(L)
    if sh > 0:
        L -= (math.cosh(L) - u) / sh
    return max(L, 0.0)


def lyapunov_closed_form(E: float, lam: float) -> LyapunovEstimate:
    return LyapunovEstimate(lyapunov(E, lam), 0, 0, "closed_form")


def default_epsilon(E: float, lam: float) -> float:
    """``L(E) / 601``, just inside the admissible range ``0 < eps < L / 600``."""
    return lyapunov(E, lam) / 601.0


def midpoint_grid(n: int, offset: float = MICRO_OFFSET) -> np.ndarray:
    return (np.arange(n) + 0.5) / n + offset


def _orbit_clear(thetas, alpha, k, guard):
    j = np.arange(k, dtype=float)
    for th in thetas:
        if np.min(torus_norm(th + j * alpha - 0.5)) < guard:
            return False
    return True


def lyapunov_birkhoff(params: ModelParams, k: int, grid_size: int, step: str = "D",
                      threads: int = 1, guard: float = GUARD) -> LyapunovEstimate:
    """``(1/k) int log||M_k(theta)|| dtheta`` by the midpoint rule, on the L scale.

    The F variant estimates ``L~ = L - ln 2`` and is shifted back by ``ln 2``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    kind = {"D": K.KIND_D, "F": K.KIND_F}[step]
    thetas = midpoint_grid(grid_size)
    if step == "D" and not _orbit_clear(thetas, params.alpha, k, guard):
        thetas = thetas + 0.25 / grid_size
        if not _orbit_clear(thetas, params.alpha, k, guard):
            raise SingularPhase("theta grid hits a pole of tan even after re-offsetting")

    def run(chunk):
        out = np.empty(len(chunk))
        K.cocycle_lognorms(np.ascontiguousarray(chunk), params.alpha, params.lam, params.energy, k, kind, out)
        return out

    lognorms = map_chunks(run, thetas, threads, chunk=8)
    value = float(np.sum(lognorms)) / (grid_size * k)
    if step == "F":
        return LyapunovEstimate(value + LN2, k, grid_size, "birkhoff_F_plus_ln2")
    return LyapunovEstimate(value, k, grid_size, "birkhoff_D")


def x2_root(E: float, lam: float) -> tuple[complex, float]:
    """Larger root of ``x^2 - (i lam - E) x + 1 = 0`` and ``log|x2|``."""
    b = complex(-E, lam)
    disc = cmath.sqrt(b * b - 4.0)
    plus, minus = b + disc, b - disc
    x2 = (plus if abs(plus) >= abs(minus) else minus) / 2.0
    x1 = 1.0 / x2
    if abs(abs(x2) - abs(x1)) < 1e-12:
        raise DegenerateRoots(f"|x1| == |x2| for E={E!r}, lam={lam!r}")
    return x2, math.log(abs(x2))


@dataclass(frozen=True)
class DSequence:
    """``d_j = mant[j] * exp(scale[j])`` for j = 0..k; scale stays 0 until a rescale is needed."""

    mant: np.ndarray
    scale: np.ndarray

    def __len__(self):
        return len(self.mant)

    @property
    def logs(self) -> np.ndarray:
        return np.log(np.abs(self.mant)) + self.scale

    def value(self, j: int) -> complex:
        return complex(self.mant[j] * math.exp(self.scale[j]))

    def f0(self, j: int) -> complex:
        """``f_j(0) = d_j / (-2)^j``."""
        return complex(self.mant[j] / (-2.0) ** j * math.exp(self.scale[j]))

    def log_abs(self, j: int) -> float:
        return math.log(abs(self.mant[j])) + float(self.scale[j])

    def growth(self, j: int) -> float:
        """``|d_j|^(1/(j-1))``."""
        if j < 2:
            raise ValueError("growth diagnostic needs j >= 2")
        return math.exp(self.log_abs(j) / (j - 1))

    def ratio(self, j: int) -> float:
        """``|d_j| / |d_{j-1}|``, which tends to |x2|."""
        return math.exp(self.log_abs(j) - self.log_abs(j - 1))


def d_sequence(E: float, lam: float, k: int) -> DSequence:
    """``d_0 = 1``, ``d_1 = i lam - E``, ``d_j = (i lam - E) d_{j-1} - d_{j-2}``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    b = complex(-E, lam)
    mant = np.empty(k + 1, dtype=complex)
    scale = np.zeros(k + 1)
    prev, cur = 1.0 + 0j, b
    mant[0], mant[1] = prev, cur
    sc = 0.0
    for j in range(2, k + 1):
        prev, cur = cur, b * cur - prev
        m = max(abs(prev), abs(cur))
        if m > 1e100:
            prev, cur = prev / m, cur / m
            sc += math.log(m)
        mant[j], scale[j] = cur, sc
    return DSequence(mant, scale)


def ptilde_log_rates(params: ModelParams, k: int, thetas, threads: int = 1) -> np.ndarray:
    """``(1/k) log|P~_k(theta)|`` for each theta."""
    def run(chunk):
        s = np.empty(len(chunk), dtype=np.int8)
        lg = np.empty(len(chunk))
        K.ptilde_grid(np.ascontiguousarray(chunk, dtype=float), params.alpha, params.lam,
                      params.energy, k, s, lg)
        return lg / k
    return map_chunks(run, np.asarray(thetas, dtype=float), threads, chunk=256)


@dataclass(frozen=True)
class AvgLogReport:
    value: float
    lower_bound: float
    upper_envelope: float
    k: int
    grid_size: int
    epsilon: float


def avg_log_ptilde(params: ModelParams, k: int, grid_size: int = 8192, epsilon: float | None = None,
                   threads: int = 1) -> AvgLogReport:
    """Midpoint-rule value of ``(1/k) int_0^1 log|P~_k(theta)| dtheta``.

    Reported with the asymptotic lower bound ``L - ln 2`` and the upper envelope
    ``L~ + eps``; neither is asserted here since both are statements about large k.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    L = lyapunov(params.energy, params.lam)
    eps = L / 601.0 if epsilon is None else epsilon
    thetas = midpoint_grid(grid_size)
    rates = ptilde_log_rates(params, k, thetas, threads)
    if not np.all(np.isfinite(rates)):
        rates = ptilde_log_rates(params, k, thetas + 0.25 / grid_size, threads)
    return AvgLogReport(float(np.sum(rates)) / grid_size, L - LN2, L - LN2 + eps, k, grid_size, eps)


@dataclass(frozen=True)
class CosProduct:
    value: SignedLog
    length: int

    @property
    def per_site(self) -> float:
        return self.value.log_mag / self.length

    @property
    def excess(self) -> float:
        """Per-site log plus ln 2; tends to 0 along the orbit."""
        return self.per_site + LN2


def cos_product(theta: float, freq, a: int, b: int) -> CosProduct:
    """``prod_{j=a}^{b} cos pi(theta + j alpha)`` with phases reduced mod 2."""
    if b < a:
        raise ValueError("need a <= b")
    alpha = freq.value if hasattr(freq, "value") else float(freq)
    j = np.arange(a, b + 1, dtype=float)
    x = theta + j * alpha
    x = x - 2.0 * np.floor(0.5 * x)
    c = np.cos(np.pi * x)
    if np.any(c == 0.0):
        return CosProduct(SignedLog(0), b - a + 1)
    sign = -1 if np.count_nonzero(c < 0) % 2 else 1
    return CosProduct(SignedLog(sign, float(np.sum(np.log(np.abs(c))))), b - a + 1)


def ftilde_assembly(params: ModelParams, k: int) -> np.ndarray:
    """F_k assembled entrywise from P~ values and cosines, as four SignedLogs (object array)."""
    if k < 2:
        raise ValueError("assembly needs k >= 2")
    c, s = site_table(params, 0, k)
    lam, E = params.lam, params.energy
    s0, l0 = ptilde_block(c, s, lam, E, 0, k)      # P~_j(theta)
    s1, l1 = ptilde_block(c, s, lam, E, 1, k - 1)  # P~_j(theta + alpha)
    c0 = SignedLog.from_float(float(c[0]))
    ck = SignedLog.from_float(float(c[k - 1]))
    out = np.empty((2, 2), dtype=object)
    out[0, 0] = SignedLog(int(s0[k]), float(l0[k]))
    out[0, 1] = -SignedLog(int(s1[k - 1]), float(l1[k - 1])) * c0
    out[1, 0] = SignedLog(int(s0[k - 1]), float(l0[k - 1])) * ck
    out[1, 1] = -SignedLog(int(s1[k - 2]), float(l1[k - 2])) * c0 * ck
    return out
