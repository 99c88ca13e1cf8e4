"""Minimal front speed ``c* = min_{lambda>0} k(lambda) / lambda``.

``k(lambda)`` is the principal eigenvalue of the x-independent cell operator
``beta * Lap_y + alpha * lambda**2 + lambda * q1(y) + f'(0)``.  Since the
potential is affine-quadratic in lambda, ``k`` is convex and ``k / lambda`` is
quasi-convex on (0, inf), so a golden-section search in ``log lambda`` finds
the minimum once a bracket is known.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .eigensolver import EigenResult, assemble, principal_eigenpair
from .errors import BracketingError, ValidationError
from .geometry import CrossSection
from .model import DiffusionSpec, KppReaction, ProblemSpec, ShearFlow

logger = logging.getLogger(__name__)

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
LAMBDA_RTOL = 1e-8
MAX_DOUBLINGS = 40
LN2 = math.log(2.0)


@dataclass(frozen=True)
class SpeedResult:
    c_star: float
    lambda_star: float
    k_at_star: float
    bracket: tuple
    evaluations: int
    eigenfunction: np.ndarray = field(repr=False, default=None)


def potential(spec: ProblemSpec, lam: float) -> np.ndarray:
    a = spec.diffusion.axial
    return a * lam * lam + lam * spec.flow.samples + spec.growth_rate


def k_of_lambda(spec: ProblemSpec, lam: float, start=None) -> EigenResult:
    """Principal eigenpair of the cell operator at decay rate ``lam``."""
    if not np.isfinite(lam) or lam <= 0:
        raise ValidationError(f"lambda must be positive, got {lam}", "lambda")
    op = assemble(spec.cross_section, spec.diffusion.transverse, potential(spec, lam))
    return principal_eigenpair(op, start=start)


class _Objective:
    """``g(t) = k(e^t) / e^t`` with a warm-start vector carried between calls."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self.calls = 0
        self.best = None  # (g, t, EigenResult)
        self._last = None

    def __call__(self, t: float) -> float:
        lam = math.exp(t)
        start = None if self._last is None else self._last.eigenfunction
        er = k_of_lambda(self.spec, lam, start=start)
        self._last = er
        self.calls += 1
        g = er.eigenvalue / lam
        if self.best is None or g < self.best[0]:
            self.best = (g, t, er)
        return g


def _bracket(g: _Objective, t0: float):
    a, b, c = t0 - LN2, t0, t0 + LN2
    ga, gb, gc = g(a), g(b), g(c)
    steps = 0
    while ga < gb:
        if steps >= MAX_DOUBLINGS:
            raise BracketingError("k(lambda)/lambda still decreasing towards lambda -> 0")
        c, gc, b, gb = b, gb, a, ga
        a -= LN2
        ga = g(a)
        steps += 1
    steps = 0
    while gc < gb:
        if steps >= MAX_DOUBLINGS:
            raise BracketingError("k(lambda)/lambda still decreasing towards lambda -> inf")
        a, ga, b, gb = b, gb, c, gc
        c += LN2
        gc = g(c)
        steps += 1
    return a, c


def _golden(g: _Objective, a: float, b: float, tol: float) -> None:
    h = b - a
    c = b - INV_PHI * h
    d = a + INV_PHI * h
    gc, gd = g(c), g(d)
    while b - a > tol:
        if gc <= gd:
            b, d, gd = d, c, gc
            c = b - INV_PHI * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + INV_PHI * (b - a)
            gd = g(d)


def _scan(g: _Objective, t0: float, points: int = 2000):
    ts = np.linspace(t0 - MAX_DOUBLINGS * LN2, t0 + MAX_DOUBLINGS * LN2, points)
    vals = [g(t) for t in ts]
    j = int(np.argmin(vals))
    if j == 0 or j == points - 1:
        raise BracketingError("no interior minimum of k(lambda)/lambda on the fallback scan")
    return ts[j - 1], ts[j + 1]


def minimal_speed(spec: ProblemSpec, rtol: float = LAMBDA_RTOL) -> SpeedResult:
    """Minimise ``k(lambda) / lambda`` over lambda > 0.

    The bracket is grown by factors of 2 around ``sqrt(f'(0) / alpha)``, then
    refined by golden section in ``log lambda`` to relative width ``rtol``.
    """
    g = _Objective(spec)
    t0 = 0.5 * math.log(spec.growth_rate / spec.diffusion.axial)
    try:
        a, b = _bracket(g, t0)
    except BracketingError as exc:
        logger.warning("%s; falling back to a log-grid scan", exc)
        a, b = _scan(g, t0)
    _golden(g, a, b, rtol)
    gbest, tbest, er = g.best
    lam = math.exp(tbest)
    lo, hi = math.exp(a), math.exp(b)
    if not lo < lam < hi:
        # the best point sits on a bracket end only through ties; widen by one step
        lo, hi = min(lo, lam / 2), max(hi, lam * 2)
    return SpeedResult(er.eigenvalue / lam, lam, er.eigenvalue, (lo, hi), g.calls, er.eigenfunction)


def speed_for_Ab(b: float, flow: ShearFlow, reaction: KppReaction, cs: CrossSection | None = None) -> SpeedResult:
    """Minimal speed with diffusion ``A_b = diag(1, b)`` and the unscaled flow."""
    cs = cs or flow.cross_section
    if cs != flow.cross_section:
        flow = flow.resample(cs)
    return minimal_speed(ProblemSpec(cs, DiffusionSpec.ab(b), flow, reaction))


def speed_isotropic(d: float, flow: ShearFlow, reaction: KppReaction) -> SpeedResult:
    """Minimal speed with diffusion ``d * Id`` and the flow as given."""
    return minimal_speed(ProblemSpec(flow.cross_section, DiffusionSpec.isotropic(d), flow, reaction))


def rescale_identity_check(b: float, flow: ShearFlow, reaction: KppReaction, cs: CrossSection | None = None) -> float:
    """Relative gap between ``c*(b Id, sqrt(b) q)`` and ``sqrt(b) c*(A_b, q)``.

    The two sides go through separate problem specs and minimisations.
    """
    if not b > 0:
        raise ValidationError(f"b must be positive, got {b}", "b")
    cs = cs or flow.cross_section
    if cs != flow.cross_section:
        flow = flow.resample(cs)
    scaled = flow.scaled(math.sqrt(b)) if not flow.is_zero else flow
    left = speed_isotropic(b, scaled, reaction).c_star
    right = math.sqrt(b) * speed_for_Ab(b, flow, reaction, cs).c_star
    return abs(left - right) / right


def analytic_bounds(spec: ProblemSpec, lam: float) -> tuple[float, float]:
    """Constant-test-function lower bound and max-potential upper bound on ``k(lam)``."""
    base = spec.diffusion.axial * lam * lam + spec.growth_rate
    return base, base + lam * spec.flow.max_value


@dataclass(frozen=True)
class LowerBoundCertificate:
    """Lower bound on ``c*`` from a bump test function near the flow maximum.

    ``value`` is ``2 sqrt(alpha * (f'(0) - beta * energy)) + (max q - delta)``
    at the problem's diffusion; it is ``-inf`` once ``beta`` reaches
    ``b0 = f'(0) / energy`` and the estimate gives nothing.
    """

    delta: float
    level: float
    support: tuple
    bump: np.ndarray = field(repr=False)
    energy: float
    growth_rate: float
    b0: float
    value: float
    limit: float

    def at(self, beta: float, alpha: float = 1.0) -> float:
        eff = self.growth_rate - beta * self.energy
        if eff <= 0:
            return -math.inf
        return 2.0 * math.sqrt(alpha * eff) + self.level


def _bump(cs: CrossSection, samples: np.ndarray, level: float, peak: int):
    """Raised cosine on the maximal run of cells around ``peak`` where samples >= level."""
    n = cs.n
    ok = samples >= level
    idx = [peak]
    j = peak
    while len(idx) < n and ok[(j + 1) % n] and (cs.periodic or j + 1 < n):
        j += 1
        idx.append(j % n)
    j = peak
    while len(idx) < n and ok[(j - 1) % n] and (cs.periodic or j - 1 >= 0):
        j -= 1
        idx.insert(0, j % n)
    if len(idx) == n:
        idx = idx[:-1]  # keep the support compact on a periodic cell
    m = len(idx)
    phi = np.zeros(n)
    phi[idx] = 1.0 - np.cos(2.0 * np.pi * (np.arange(m) + 1) / (m + 1))
    phi /= math.sqrt(cs.h * np.sum(phi * phi))
    return phi, (idx[0], idx[-1])


def lower_bound_certificate(spec: ProblemSpec, delta: float) -> LowerBoundCertificate:
    """Certified lower bound on ``c*`` for small transverse diffusion.

    The bump is supported where ``q1 >= max q1 - delta``; its Rayleigh quotient
    bounds ``k(lambda)`` from below for every lambda and the minimum over
    lambda is explicit.
    """
    flow = spec.flow
    qmax = flow.max_value
    if flow.is_zero or qmax <= 0:
        raise ValidationError("certificate needs a nonzero flow", "flow")
    if not 0 < delta < qmax:
        raise ValidationError(f"delta must lie in (0, {qmax}), got {delta}", "delta")
    cs = spec.cross_section
    level = qmax - delta
    q = flow.samples
    peak = int(np.argmax(q))
    if q[peak] < level:
        raise ValidationError(f"no grid cell has q1 >= {level:.6g}; delta too small for this grid", "delta")
    phi, support = _bump(cs, q, level, peak)
    d = np.diff(phi)
    if cs.periodic:
        d = np.append(d, phi[0] - phi[-1])
    energy = float(np.sum(d * d) / cs.h)
    f0 = spec.growth_rate
    alpha, beta = spec.diffusion.axial, spec.diffusion.transverse
    eff = f0 - beta * energy
    value = 2.0 * math.sqrt(alpha * eff) + level if eff > 0 else -math.inf
    return LowerBoundCertificate(delta, level, support, phi, energy, f0, f0 / energy, value,
                                 2.0 * math.sqrt(alpha * f0) + level)
