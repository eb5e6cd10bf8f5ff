"""Experiment configuration: a flat ``section.key = value`` text file.

Values are JSON (numbers, lists, quoted strings, true/false); a bare word such
as ``golden`` is read as a string.  ``#`` starts a comment.  Every error names
the file and line it comes from.

Example::

    model.lambda = 1.5
    model.alpha = golden          # or 0.7548776662, or [1, 50, 100]
    model.theta = 0.2
    model.energies = [0, 0.5, 1]
    run.k = 200
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from .cocycle import lyapunov
from .errors import ConfigError
from .torus import GUARD, Frequency, expand_cf, frequency_from_coeffs, golden, silver

__all__ = ["ExperimentConfig", "parse_config", "parse_value", "load_config", "resolve_frequency", "KEYS"]

_num = (int, float)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def _is_num(v):
    return isinstance(v, _num) and not isinstance(v, bool)


def _int_list(v):
    return isinstance(v, list) and all(_is_int(x) for x in v)


def _num_list(v):
    return isinstance(v, list) and all(_is_num(x) for x in v)


#: key -> (validator, description)
KEYS = {
    "model.lambda": (lambda v: _is_num(v) and v > 0, "a positive number"),
    "model.alpha": (lambda v: isinstance(v, (str, float)) or _int_list(v) and len(v) > 0,
                    "a decimal in (0, 1), a list of partial quotients, or golden/silver"),
    "model.alpha_tail": (lambda v: _int_list(v) and len(v) > 0 and min(v) > 0,
                         "a nonempty list of positive integers"),
    "model.max_q": (lambda v: _is_int(v) and v > 1, "an integer > 1"),
    "model.theta": (_is_num, "a number"),
    "model.energy": (_is_num, "a number"),
    "model.energies": (lambda v: _num_list(v) and len(v) > 0, "a nonempty list of numbers"),
    "run.k": (lambda v: _is_int(v) and v >= 1, "a positive integer"),
    "run.ks": (lambda v: _int_list(v) and len(v) > 0, "a nonempty list of integers"),
    "run.N": (lambda v: _is_int(v) and v >= 1, "a positive integer"),
    "run.grid": (lambda v: _is_int(v) and v >= 1, "a positive integer"),
    "run.epsilon": (lambda v: _is_num(v) and v > 0, "a positive number"),
    "run.k_range": (lambda v: _int_list(v) and len(v) == 2 and 1 <= v[0] <= v[1],
                    "[kmin, kmax] with 1 <= kmin <= kmax"),
    "run.which": (lambda v: v in ("nearest", "ground"), "nearest or ground"),
    "run.box": (lambda v: _int_list(v) and len(v) == 2 and v[0] <= v[1], "[x1, x2] with x1 <= x2"),
    "run.y": (_is_int, "an integer"),
    "run.qs": (lambda v: _int_list(v) and len(v) > 0, "a nonempty list of integers"),
    "run.samples": (lambda v: _is_int(v) and v >= 1, "a positive integer"),
    "run.seed": (_is_int, "an integer"),
    "run.guard": (lambda v: _is_num(v) and v > 0, "a positive number"),
    "output.format": (lambda v: v in ("csv", "json"), "csv or json"),
    "output.dir": (lambda v: isinstance(v, str) and len(v) > 0, "a directory path"),
    "sweep.command": (lambda v: isinstance(v, str), "a subcommand name"),
    "sweep.key": (lambda v: isinstance(v, str), "a configuration key"),
    "sweep.values": (lambda v: isinstance(v, list) and len(v) > 0, "a nonempty list"),
}

_BARE = re.compile(r"^[A-Za-z_][A-Za-z0-9_\-]*$")


@dataclass
class ExperimentConfig:
    """Parsed key/value pairs plus the line each came from."""

    values: dict = field(default_factory=dict)
    lines: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def get(self, key, default=None):
        return self.values.get(key, default)

    def where(self, key) -> str:
        line = self.lines.get(key)
        return f"{self.source}:{line}" if line else f"{self.source} ({key})"

    def set(self, key, value, origin="override"):
        _validate(key, value, origin)
        self.values[key] = value
        self.lines[key] = None

    def copy(self) -> ExperimentConfig:
        return ExperimentConfig(dict(self.values), dict(self.lines), self.source)

    # resolved model quantities -------------------------------------------
    @property
    def lam(self) -> float:
        return float(self.get("model.lambda", 1.5))

    @property
    def theta(self) -> float:
        return float(self.get("model.theta", 0.2))

    @property
    def energy(self) -> float:
        return float(self.get("model.energy", 0.0))

    @property
    def guard(self) -> float:
        return float(self.get("run.guard", GUARD))

    def frequency(self) -> Frequency:
        return resolve_frequency(self.get("model.alpha", "golden"), self.get("model.alpha_tail"),
                                 int(self.get("model.max_q", 10**9)), self.where("model.alpha"))

    def check_epsilon(self, energies) -> float | None:
        eps = self.get("run.epsilon")
        if eps is None:
            return None
        for E in energies:
            bound = lyapunov(E, self.lam) / 600.0
            if not eps < bound:
                raise ConfigError(f"{self.where('run.epsilon')}: epsilon={eps!r} is not below "
                                  f"L(E)/600 = {bound!r} at E={E!r}")
        return float(eps)


def parse_value(raw: str, where: str = "<value>"):
    """JSON value, or a bare word as a string."""
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        pass
    if _BARE.match(raw):
        return raw
    raise ConfigError(f"{where}: cannot parse value {raw!r} (use JSON or a bare word)")


def _validate(key, value, where):
    if key not in KEYS:
        raise ConfigError(f"{where}: unknown key {key!r}")
    check, desc = KEYS[key]
    if not check(value):
        raise ConfigError(f"{where}: {key} must be {desc}, got {value!r}")


def parse_config(text: str, source: str = "<string>") -> ExperimentConfig:
    cfg = ExperimentConfig(source=source)
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        where = f"{source}:{lineno}"
        if "=" not in body:
            raise ConfigError(f"{where}: expected 'key = value', got {body!r}")
        key, raw = (part.strip() for part in body.split("=", 1))
        if key in cfg.values:
            raise ConfigError(f"{where}: duplicate key {key!r} (first set on line {cfg.lines[key]})")
        value = parse_value(raw, where)
        _validate(key, value, where)
        cfg.values[key] = value
        cfg.lines[key] = lineno
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return parse_config(text, str(path))


_NAMED = {"golden": golden, "silver": silver}
MIN_CONVERGENTS = 8


def resolve_frequency(value, tail=None, max_q: int = 10**9, where: str = "model.alpha") -> Frequency:
    """Turn a configuration value into a :class:`Frequency` with enough convergents."""
    if isinstance(value, str):
        if value in _NAMED:
            freq = _NAMED[value](max_q)
        else:
            try:
                value = float(value)
            except ValueError:
                raise ConfigError(f"{where}: unknown frequency name {value!r}") from None
    if isinstance(value, list):
        try:
            freq = frequency_from_coeffs(value, tail=tail, max_q=max_q)
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    elif isinstance(value, (int, float)):
        if not (0 < value < 1) or not math.isfinite(value):
            raise ConfigError(f"{where}: alpha must lie in (0, 1), got {value!r}")
        try:
            freq = expand_cf(float(value), max_q)
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
    if len(freq) < MIN_CONVERGENTS:
        raise ConfigError(f"{where}: alpha has only {len(freq)} convergents below q = {max_q}; "
                          f"need at least {MIN_CONVERGENTS}")
    return freq
