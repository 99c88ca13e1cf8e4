"""Flat ``key = value`` run configuration and the flow/reaction spec strings.

A config file is a sequence of ``key = value`` lines; ``#`` starts a comment
(at the beginning of a line or after whitespace).  Keys form one flat
namespace and each command accepts a fixed subset of them; anything else is
rejected.  :meth:`RunConfig.emit` writes a canonical file that
:meth:`RunConfig.parse` reads back to an identical record.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .geometry import BoundaryKind, CrossSection
from .model import Cosine, KppReaction, PiecewiseLinear, ShearFlow, Zero, logistic, polynomial
from .numfmt import fmt

REAL, INT, TEXT = "real", "int", "text"

SCHEMA = {
    "alpha": REAL, "beta": REAL, "flow": TEXT, "fprime0": REAL, "reaction": TEXT,
    "bc": TEXT, "length": REAL, "n": INT, "csv": TEXT,
    "param": TEXT, "from": REAL, "to": REAL, "points": INT, "out": TEXT,
    "mode": TEXT, "delta": REAL, "n_confirm": INT, "budget": INT,
    "strip": REAL, "nx": INT, "tend": REAL, "traj": TEXT, "cfl_safety": REAL, "level": REAL,
    "fit_window": REAL,
    "suite": TEXT,
}

_COMMON = ("flow", "fprime0", "reaction", "bc", "length", "n")
COMMAND_KEYS = {
    "speed": ("alpha", "beta") + _COMMON + ("csv",),
    "scan": _COMMON + ("param", "from", "to", "points", "out"),
    "counterexample": _COMMON + ("mode", "delta", "n_confirm", "budget", "csv"),
    "simulate": ("alpha", "beta") + _COMMON + ("strip", "nx", "tend", "traj", "cfl_safety", "level",
                                               "fit_window"),
    "verify": ("suite",),
}


def _convert(key: str, value, origin: str):
    kind = SCHEMA[key]
    try:
        if kind == REAL:
            v = float(value)
            if not math.isfinite(v):
                raise ValueError
            return v
        if kind == INT:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError
            return int(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{origin}: {key} must be a finite {kind}, got {value!r}", key) from None
    text = str(value).strip()
    if not text:
        raise ValidationError(f"{origin}: {key} must not be empty", key)
    return text


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one command; ``values`` only holds keys that were set."""

    command: str
    values: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMAND_KEYS:
            raise ValidationError(f"unknown command {self.command!r}", "command")
        allowed = COMMAND_KEYS[self.command]
        clean = {}
        for key, value in self.values.items():
            if key not in SCHEMA:
                raise ValidationError(f"unknown config key {key!r}", key)
            if key not in allowed:
                raise ValidationError(f"key {key!r} does not apply to the {self.command} command", key)
            clean[key] = _convert(key, value, "config")
        object.__setattr__(self, "values", clean)

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def merged(self, overrides: dict) -> "RunConfig":
        """Flags win over file values; ``None`` means 'not given'."""
        vals = dict(self.values)
        vals.update({k: v for k, v in overrides.items() if v is not None})
        return RunConfig(self.command, vals)

    def emit(self) -> str:
        lines = [f"# {self.command}"]
        for key in COMMAND_KEYS[self.command]:
            if key in self.values:
                v = self.values[key]
                lines.append(f"{key} = {fmt(v) if SCHEMA[key] != TEXT else v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str, command: str) -> "RunConfig":
        vals = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = re.sub(r"(^|\s)#.*$", "", raw).strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"config line {lineno}: expected 'key = value', got {raw!r}", "config")
            key, value = (s.strip() for s in line.split("=", 1))
            if key in vals:
                raise ValidationError(f"config line {lineno}: duplicate key {key!r}", key)
            if key not in SCHEMA:
                raise ValidationError(f"config line {lineno}: unknown key {key!r}", key)
            vals[key] = _convert(key, value, f"config line {lineno}")
        return cls(command, vals)

    @classmethod
    def load(cls, path, command: str) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ValidationError(f"cannot read config file {path}: {exc.strerror}", "config") from None
        return cls.parse(text, command)


# --------------------------------------------------------------------------
# Spec strings
# --------------------------------------------------------------------------

def _fields(spec: str, what: str) -> tuple[str, dict]:
    head, *rest = spec.strip().split(":")
    opts = {}
    for item in rest:
        if "=" not in item:
            raise ValidationError(f"malformed {what} spec {spec!r}: expected name=value after ':'", what)
        k, v = item.split("=", 1)
        opts[k.strip()] = v.strip()
    return head.strip().lower(), opts


def _real(opts: dict, key: str, what: str, default=None) -> float:
    if key not in opts:
        if default is None:
            raise ValidationError(f"{what} spec needs {key}=...", what)
        return default
    try:
        v = float(opts.pop(key))
    except ValueError:
        raise ValidationError(f"{what} spec: {key} must be a number", what) from None
    if not math.isfinite(v):
        raise ValidationError(f"{what} spec: {key} must be finite", what)
    return v


def read_breakpoints(path) -> tuple:
    """``y value`` pairs, one per line, separated by whitespace or a comma."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ValidationError(f"cannot read flow file {path}: {exc.strerror}", "flow") from None
    pts = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p for p in re.split(r"[,\s]+", line) if p]
        try:
            y, v = (float(p) for p in parts)
        except ValueError:
            raise ValidationError(f"flow file {path} line {lineno}: expected 'y value', got {raw!r}",
                                  "flow") from None
        pts.append((y, v))
    return tuple(pts)


def parse_flow(spec: str):
    """``zero`` | ``cosine:amplitude=A[:mode=K]`` | ``pwl:file=PATH`` -> profile."""
    try:
        return _parse_flow(spec)
    except ValidationError as exc:
        raise ValidationError(f"flow spec {spec!r}: {exc}", "flow") from None


def _parse_flow(spec: str):
    head, opts = _fields(spec, "flow")
    if head == "zero":
        prof = Zero()
    elif head == "cosine":
        amp = _real(opts, "amplitude", "flow")
        mode = _real(opts, "mode", "flow", 1.0)
        if not mode.is_integer():
            raise ValidationError("flow spec: mode must be an integer", "flow")
        prof = Cosine(amp, int(mode))
    elif head == "pwl":
        if "file" not in opts:
            raise ValidationError("flow spec pwl needs file=PATH", "flow")
        prof = PiecewiseLinear(read_breakpoints(opts.pop("file")))
    else:
        raise ValidationError(f"unknown flow kind {head!r} (zero, cosine, pwl)", "flow")
    if opts:
        raise ValidationError(f"unknown flow option(s) {sorted(opts)}", "flow")
    return prof


def build_flow(spec: str, cs: CrossSection) -> ShearFlow:
    return ShearFlow.on(parse_flow(spec), cs)


def parse_reaction(spec: str) -> KppReaction:
    """``logistic:mu=R`` | ``poly:coeffs=c0,c1,...`` (``f(u) = sum c_k u^k``)."""
    head, opts = _fields(spec, "reaction")
    if head == "logistic":
        r = logistic(_real(opts, "mu", "reaction", 1.0))
    elif head == "poly":
        if "coeffs" not in opts:
            raise ValidationError("reaction spec poly needs coeffs=c0,c1,...", "reaction")
        try:
            coeffs = [float(c) for c in opts.pop("coeffs").split(",")]
        except ValueError:
            raise ValidationError("reaction spec: coeffs must be numbers", "reaction") from None
        r = polynomial(coeffs)
    else:
        raise ValidationError(f"unknown reaction kind {head!r} (logistic, poly)", "reaction")
    if opts:
        raise ValidationError(f"unknown reaction option(s) {sorted(opts)}", "reaction")
    return r


def resolve_reaction(reaction: str | None, fprime0: float | None) -> KppReaction:
    """A reaction spec wins; ``fprime0`` alone means the logistic ``f'(0) u (1 - u)``."""
    if reaction is None:
        return logistic(1.0 if fprime0 is None else fprime0)
    r = parse_reaction(reaction)
    if fprime0 is not None and not math.isclose(r.growth_rate, fprime0, rel_tol=1e-12):
        raise ValidationError(f"fprime0={fprime0} contradicts the reaction's f'(0)={r.growth_rate}", "fprime0")
    return r


def parse_bc(value: str) -> BoundaryKind:
    return BoundaryKind.parse(value)
