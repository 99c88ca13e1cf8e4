"""Shear flows, KPP reactions, diagonal diffusion and the assembled problem."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ValidationError
from .geometry import CrossSection, _check_samples, cell_integrate

KPP_TOL = 1e-14
ZERO_MEAN_TOL = 1e-12


# --------------------------------------------------------------------------
# Flow profiles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Cosine:
    amplitude: float
    mode: int = 1

    def __post_init__(self):
        if int(self.mode) != self.mode or self.mode < 1:
            raise ValidationError(f"cosine mode must be a positive integer, got {self.mode}", "mode")
        if not math.isfinite(self.amplitude) or self.amplitude <= 0:
            raise ValidationError(f"cosine amplitude must be positive, got {self.amplitude}", "amplitude")

    def evaluate(self, cs: CrossSection) -> np.ndarray:
        return self.amplitude * np.cos(2.0 * np.pi * self.mode * cs.nodes / cs.length)

    def scaled(self, factor: float) -> "Cosine":
        return Cosine(self.amplitude * factor, self.mode)


@dataclass(frozen=True)
class PiecewiseLinear:
    """Continuous interpolant through ``(y, value)`` breakpoints.

    On a periodic section the interpolant wraps with the cell length; on an
    interval it is held constant beyond the outermost breakpoints.
    """

    breakpoints: tuple

    def __post_init__(self):
        pts = tuple(sorted((float(y), float(v)) for y, v in self.breakpoints))
        if len(pts) < 2:
            raise ValidationError("piecewise-linear flow needs at least two breakpoints", "flow")
        ys = [p[0] for p in pts]
        if len(set(ys)) != len(ys):
            raise ValidationError("piecewise-linear breakpoints must have distinct y", "flow")
        if not all(math.isfinite(v) for p in pts for v in p):
            raise ValidationError("piecewise-linear breakpoints must be finite", "flow")
        object.__setattr__(self, "breakpoints", pts)

    def _interp(self, y: np.ndarray, cs: CrossSection) -> np.ndarray:
        ys = np.array([p[0] for p in self.breakpoints])
        vs = np.array([p[1] for p in self.breakpoints])
        if cs.periodic:
            return np.interp(y, ys, vs, period=cs.length)
        return np.interp(y, ys, vs)

    def evaluate(self, cs: CrossSection) -> np.ndarray:
        return self._interp(cs.nodes, cs)

    def raw_max(self, cs: CrossSection) -> float:
        # a linear interpolant peaks at a breakpoint or at an end of the cell
        ys = np.array([p[0] for p in self.breakpoints])
        if cs.periodic:
            ys = np.mod(ys, cs.length)
        else:
            ys = ys[(ys >= 0) & (ys <= cs.length)]
        cand = np.concatenate([ys, [0.0, cs.length]])
        return float(np.max(self._interp(cand, cs)))

    def scaled(self, factor: float) -> "PiecewiseLinear":
        return PiecewiseLinear(tuple((y, v * factor) for y, v in self.breakpoints))


@dataclass(frozen=True)
class Zero:
    def evaluate(self, cs: CrossSection) -> np.ndarray:
        return np.zeros(cs.n)

    def scaled(self, factor: float) -> "Zero":
        return self


Profile = Union[Cosine, PiecewiseLinear, Zero]


def normalize_zero_mean(samples, cs: CrossSection) -> np.ndarray:
    """Subtract the cell average so that the samples integrate to zero."""
    v = _check_samples(cs, samples)
    return v - np.mean(v)


@dataclass(frozen=True)
class ShearFlow:
    """Axial shear velocity ``q1(y)`` sampled on a cross-section grid.

    Build instances with :meth:`on`; the samples are always the zero-mean
    normalisation of the profile evaluated at the cell centres.
    """

    profile: Profile
    cross_section: CrossSection
    samples: np.ndarray = field(repr=False)
    max_value: float

    @classmethod
    def on(cls, profile: Profile, cs: CrossSection) -> "ShearFlow":
        raw = profile.evaluate(cs)
        samples = normalize_zero_mean(raw, cs)
        if isinstance(profile, Zero):
            vmax = 0.0
        else:
            if not np.any(np.abs(samples) > 1e-12 * max(1.0, float(np.max(np.abs(raw))))):
                raise ValidationError("flow profile is identically zero on this grid", "flow")
            if isinstance(profile, Cosine):
                vmax = float(profile.amplitude)
            elif isinstance(profile, PiecewiseLinear):
                vmax = profile.raw_max(cs) - float(np.mean(raw))
            else:
                vmax = float(np.max(samples))
        samples.setflags(write=False)
        return cls(profile, cs, samples, vmax)

    def resample(self, cs: CrossSection) -> "ShearFlow":
        return ShearFlow.on(self.profile, cs)

    def scaled(self, factor: float) -> "ShearFlow":
        if factor <= 0:
            raise ValidationError(f"flow scale factor must be positive, got {factor}", "scale")
        return ShearFlow.on(self.profile.scaled(factor), self.cross_section)

    @property
    def is_zero(self) -> bool:
        return isinstance(self.profile, Zero)


def cosine_flow(cs: CrossSection, amplitude: float, mode: int = 1) -> ShearFlow:
    return ShearFlow.on(Cosine(amplitude, mode), cs)


def zero_flow(cs: CrossSection) -> ShearFlow:
    return ShearFlow.on(Zero(), cs)


def pwl_flow(cs: CrossSection, breakpoints: Sequence[tuple]) -> ShearFlow:
    return ShearFlow.on(PiecewiseLinear(tuple(breakpoints)), cs)


def flow_max(flow: ShearFlow) -> float:
    return flow.max_value


# --------------------------------------------------------------------------
# Reactions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class KppReaction:
    """Polynomial reaction ``f(u) = sum_k coefficients[k] * u**k``.

    ``growth_rate`` is ``f'(0)``; ``lipschitz`` bounds ``|f'|`` on [0, 1] and is
    what the front simulator uses to keep its time step positivity-preserving.
    """

    coefficients: tuple
    name: str = "custom"

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        if len(c) < 2 or not all(math.isfinite(x) for x in c):
            raise ValidationError("reaction needs at least two finite polynomial coefficients", "reaction")
        object.__setattr__(self, "coefficients", c)

    @property
    def growth_rate(self) -> float:
        return self.coefficients[1]

    @property
    def lipschitz(self) -> float:
        u = np.linspace(0.0, 1.0, 2001)
        return float(np.max(np.abs(P.polyval(u, P.polyder(np.array(self.coefficients))))))

    def __call__(self, u):
        return P.polyval(u, np.array(self.coefficients))


def logistic(mu: float = 1.0) -> KppReaction:
    if not math.isfinite(mu) or mu <= 0:
        raise ValidationError(f"logistic rate mu must be positive, got {mu}", "mu")
    mu = float(mu)
    return KppReaction((0.0, mu, -mu), f"logistic:mu={mu!r}")


def polynomial(coefficients: Sequence[float]) -> KppReaction:
    """Reaction from coefficients ``c0, c1, ...``; not validated here, see :func:`kpp_check`."""
    c = tuple(float(x) for x in coefficients)
    return KppReaction(c, "poly:coeffs=" + ",".join(repr(x) for x in c))


@dataclass(frozen=True)
class KppCheck:
    accepted: bool
    u: float = float("nan")
    f_u: float = float("nan")
    bound: float = float("nan")
    reason: str = ""

    def __bool__(self):
        return self.accepted


def kpp_check(reaction: KppReaction, n_samples: int = 10_000) -> KppCheck:
    """Validate the KPP hypotheses on a uniform sample of [0, 1].

    Returns the first violating sample point, or an accepted result.
    """
    if n_samples < 100:
        raise ValidationError(f"n_samples must be >= 100, got {n_samples}", "n_samples")
    g = reaction.growth_rate
    u = np.linspace(0.0, 1.0, n_samples + 1)
    fu = np.asarray(reaction(u), dtype=float)
    for k in (0, -1):
        if abs(fu[k]) > KPP_TOL:
            return KppCheck(False, float(u[k]), float(fu[k]), 0.0, f"f({u[k]:g}) must vanish")
    if not g > 0:
        return KppCheck(False, 0.0, float(fu[0]), 0.0, "growth rate f'(0) must be positive")
    interior = slice(1, -1)
    bad = (fu[interior] <= 0) | (fu[interior] > g * u[interior] + KPP_TOL)
    if np.any(bad):
        j = int(np.argmax(bad)) + 1
        why = "f must be positive on (0,1)" if fu[j] <= 0 else "f(u) <= f'(0) u violated"
        return KppCheck(False, float(u[j]), float(fu[j]), float(g * u[j]), why)
    return KppCheck(True)


# --------------------------------------------------------------------------
# Diffusion and the assembled problem
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DiffusionSpec:
    """Diagonal diffusion ``diag(axial, transverse, ..., transverse)``."""

    axial: float
    transverse: float

    def __post_init__(self):
        for name in ("axial", "transverse"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ValidationError(f"{name} diffusion must be positive, got {v}", name)

    @classmethod
    def isotropic(cls, d: float) -> "DiffusionSpec":
        return cls(d, d)

    @classmethod
    def ab(cls, b: float) -> "DiffusionSpec":
        """The matrix ``A_b = diag(1, b, ..., b)``."""
        return cls(1.0, b)

    def dominated_by(self, other: "DiffusionSpec") -> bool:
        """Quadratic-form order ``self <= other`` for diagonal matrices."""
        return self.axial <= other.axial and self.transverse <= other.transverse


@dataclass(frozen=True)
class ProblemSpec:
    cross_section: CrossSection
    diffusion: DiffusionSpec
    flow: ShearFlow
    reaction: KppReaction

    def __post_init__(self):
        if self.flow.samples.shape != (self.cross_section.n,):
            raise ValidationError(
                f"flow has {self.flow.samples.size} samples but the grid has {self.cross_section.n} cells", "flow")
        if self.flow.cross_section != self.cross_section:
            raise ValidationError("flow was sampled on a different cross-section", "flow")
        mean = cell_integrate(self.cross_section, self.flow.samples)
        if abs(mean) > ZERO_MEAN_TOL * max(1.0, self.flow.max_value):
            raise ValidationError(f"flow must have zero cell integral, got {mean:.3e}", "flow")
        chk = kpp_check(self.reaction)
        if not chk:
            raise ValidationError(
                f"reaction is not KPP: {chk.reason} at u={chk.u:.6g} (f={chk.f_u:.6g}, bound={chk.bound:.6g})",
                "reaction")

    @property
    def growth_rate(self) -> float:
        return self.reaction.growth_rate

    def with_grid(self, n: int) -> "ProblemSpec":
        cs = self.cross_section.refined(n)
        return ProblemSpec(cs, self.diffusion, self.flow.resample(cs), self.reaction)

    def replace(self, *, diffusion: DiffusionSpec | None = None, flow: ShearFlow | None = None,
                reaction: KppReaction | None = None) -> "ProblemSpec":
        return ProblemSpec(self.cross_section, diffusion or self.diffusion, flow or self.flow,
                           reaction or self.reaction)
