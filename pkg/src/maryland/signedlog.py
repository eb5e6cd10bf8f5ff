"""Sign + log-magnitude representation of reals.

Determinants, Green's functions and cosine products in this package grow or
decay like ``exp(c * k)`` with ``k`` in the thousands, far outside the double
range.  They are carried as ``(sign, log|x|)`` pairs instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SignedLog", "signed_logsumexp", "slog_from_array"]


@dataclass(frozen=True)
class SignedLog:
    """A real number ``sign * exp(log_mag)``; ``log_mag`` is ignored when ``sign == 0``."""

    sign: int
    log_mag: float = 0.0

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign!r}")
        if self.sign == 0:
            object.__setattr__(self, "log_mag", -math.inf)

    @classmethod
    def from_float(cls, x: float) -> SignedLog:
        if x == 0.0:
            return cls(0)
        if not math.isfinite(x):
            raise ValueError(f"cannot represent {x!r}")
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def one(cls) -> SignedLog:
        return cls(1, 0.0)

    @classmethod
    def zero(cls) -> SignedLog:
        return cls(0)

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.log_mag > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.log_mag)

    def to_float(self) -> float:
        return float(self)

    def __neg__(self) -> SignedLog:
        return SignedLog(-self.sign, self.log_mag)

    def __abs__(self) -> SignedLog:
        return SignedLog(abs(self.sign), self.log_mag)

    def __mul__(self, other) -> SignedLog:
        other = _coerce(other)
        if self.sign == 0 or other.sign == 0:
            return SignedLog(0)
        return SignedLog(self.sign * other.sign, self.log_mag + other.log_mag)

    __rmul__ = __mul__

    def __truediv__(self, other) -> SignedLog:
        other = _coerce(other)
        if other.sign == 0:
            raise ZeroDivisionError("division by SignedLog zero")
        if self.sign == 0:
            return SignedLog(0)
        return SignedLog(self.sign * other.sign, self.log_mag - other.log_mag)

    def __rtruediv__(self, other) -> SignedLog:
        return _coerce(other) / self

    def __add__(self, other) -> SignedLog:
        other = _coerce(other)
        sign, log_mag = signed_logsumexp([self.sign, other.sign], [self.log_mag, other.log_mag])
        return SignedLog(sign, log_mag)

    __radd__ = __add__

    def __sub__(self, other) -> SignedLog:
        return self + (-_coerce(other))

    def __rsub__(self, other) -> SignedLog:
        return _coerce(other) - self

    def isclose(self, other, rel_tol: float = 1e-9) -> bool:
        """Relative closeness, evaluated in log space so it works far outside double range."""
        other = _coerce(other)
        if self.sign == 0 or other.sign == 0:
            return self.sign == other.sign
        if self.sign != other.sign:
            return False
        return abs(math.expm1(self.log_mag - other.log_mag)) <= rel_tol


def _coerce(x) -> SignedLog:
    if isinstance(x, SignedLog):
        return x
    return SignedLog.from_float(float(x))


def signed_logsumexp(signs, logs) -> tuple[int, float]:
    """Sum ``sum_i signs[i] * exp(logs[i])`` and return it as ``(sign, log|sum|)``.

    Terms are shifted by the largest log and summed with :func:`math.fsum`, so the
    only error left is the rounding of each shifted term.
    """
    signs = np.asarray(signs, dtype=float)
    logs = np.asarray(logs, dtype=float)
    live = signs != 0
    if not np.any(live):
        return 0, -math.inf
    shift = float(np.max(logs[live]))
    total = math.fsum(signs[live] * np.exp(logs[live] - shift))
    if total == 0.0:
        return 0, -math.inf
    return (1 if total > 0 else -1), shift + math.log(abs(total))


def slog_from_array(x) -> tuple[np.ndarray, np.ndarray]:
    """Split a float array into ``(signs, logs)`` arrays."""
    x = np.asarray(x, dtype=float)
    signs = np.sign(x).astype(np.int8)
    with np.errstate(divide="ignore"):
        logs = np.log(np.abs(x))
    return signs, logs
