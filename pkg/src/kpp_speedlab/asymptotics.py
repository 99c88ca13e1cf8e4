"""Limits of ``c*(A_b)`` in the transverse diffusion and the two counterexamples.

Everything here is a search or extrapolation built on :mod:`kpp_speedlab.speed`:

* ``verify_limit`` follows ``c*(A_b)`` along a schedule of ``b`` and
  extrapolates to ``b -> 0`` or ``b -> inf``;
* ``find_proportional_counterexample`` produces ``eps < M1`` with
  ``c*(eps Id, sqrt(M1) q) > c*(M1 Id, sqrt(M1) q)``;
* ``find_nonproportional_counterexample`` produces ``eps < 1 < M`` with
  ``A_eps <= A_M`` but ``c*(A_eps, q) > c*(A_M, q)``.
"""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import PremiseError, SearchBudgetError, SolverError, ValidationError
from .geometry import CrossSection
from .model import DiffusionSpec, KppReaction, ProblemSpec, ShearFlow, flow_max
from .speed import minimal_speed, speed_for_Ab

logger = logging.getLogger(__name__)

TO_ZERO = "to_zero"
TO_INFINITY = "to_infinity"
DEFAULT_SCHEDULES = {
    TO_ZERO: tuple(np.geomspace(1e-1, 1e-4, 7)),
    TO_INFINITY: tuple(np.geomspace(1e1, 1e4, 7)),
}
SEARCH_BUDGET = 60
SEARCH_N = 512
CONFIRM_N = 1024
THREADS_ENV = "KPP_SPEEDLAB_THREADS"


def worker_count() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise ValidationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}", THREADS_ENV)
    return n


def _map_ordered(fn, items, workers: int | None = None):
    """``[fn(x) for x in items]``, possibly on worker threads; order follows ``items``."""
    items = list(items)
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# Predicted limits and extrapolation
# --------------------------------------------------------------------------

def predict_limit_b_to_zero(flow: ShearFlow, reaction: KppReaction) -> float:
    return flow_max(flow) + 2.0 * math.sqrt(reaction.growth_rate)


def predict_limit_b_to_infinity(reaction: KppReaction) -> float:
    return 2.0 * math.sqrt(reaction.growth_rate)


@dataclass(frozen=True)
class LimitReport:
    direction: str
    b_values: tuple
    speeds: tuple
    extrapolated_limit: float
    predicted_limit: float
    relative_error: float
    fitted_order: float
    monotone: bool
    notes: str = ""


def extrapolate(s: Sequence[float], c: Sequence[float]) -> tuple[float, float, str]:
    """Fit ``c = L + C s**p`` through the last three points and return ``(L, p, note)``.

    ``s`` must decrease towards 0.  Falls back to the last value when the
    increments vanish, change sign, or do not shrink.
    """
    s1, s2, s3 = (float(v) for v in s[-3:])
    c1, c2, c3 = (float(v) for v in c[-3:])
    d1, d2 = c1 - c2, c2 - c3
    scale = max(abs(c1), abs(c2), abs(c3), 1.0)
    if abs(d2) <= 1e-14 * scale:
        return c3, float("nan"), "converged"
    ratio = d1 / d2
    if ratio <= 1.0:
        return c3, float("nan"), "increments not shrinking; last value reported"

    def mismatch(p):
        return (s1 ** p - s2 ** p) / (s2 ** p - s3 ** p) - ratio

    lo, hi = 1e-3, 20.0
    try:
        p = brentq(mismatch, lo, hi, xtol=1e-12)
    except ValueError:
        return c3, float("nan"), "order fit failed; last value reported"
    amp = d2 / (s2 ** p - s3 ** p)
    return c3 - amp * s3 ** p, p, ""


def verify_limit(direction: str, flow: ShearFlow, reaction: KppReaction, cs: CrossSection | None = None,
                 b_schedule: Sequence[float] | None = None, workers: int | None = None) -> LimitReport:
    """Follow ``c*(A_b)`` along ``b_schedule`` and extrapolate to the limit."""
    if direction not in DEFAULT_SCHEDULES:
        raise ValidationError(f"direction must be {TO_ZERO} or {TO_INFINITY}, got {direction!r}", "direction")
    cs = cs or flow.cross_section
    if cs != flow.cross_section:
        flow = flow.resample(cs)
    bs = np.asarray(DEFAULT_SCHEDULES[direction] if b_schedule is None else b_schedule, dtype=float)
    if bs.size < 4 or np.any(bs <= 0):
        raise ValidationError("b_schedule needs at least 4 positive values", "b_schedule")
    steps = np.diff(bs)
    if direction == TO_ZERO and not np.all(steps < 0) or direction == TO_INFINITY and not np.all(steps > 0):
        raise ValidationError(f"b_schedule must be strictly monotone towards the {direction} limit", "b_schedule")

    speeds = _map_ordered(lambda b: speed_for_Ab(b, flow, reaction, cs).c_star, bs, workers)
    predicted = (predict_limit_b_to_zero(flow, reaction) if direction == TO_ZERO
                 else predict_limit_b_to_infinity(reaction))
    dist = bs if direction == TO_ZERO else 1.0 / bs
    limit, order, note = extrapolate(dist, speeds)
    incr = np.diff(speeds)
    # approaching 8 from below as b -> 0 means increasing; approaching 2 from above means decreasing
    monotone = bool(np.all(incr >= -1e-12) or np.all(incr <= 1e-12))
    if not monotone:
        note = (note + "; " if note else "") + "non-monotone approach"
        logger.warning("non-monotone approach in verify_limit(%s)", direction)
    rel = abs(limit - predicted) / abs(predicted)
    return LimitReport(direction, tuple(float(b) for b in bs), tuple(speeds), limit, predicted, rel,
                       order, monotone, note)


# --------------------------------------------------------------------------
# Counterexamples
# --------------------------------------------------------------------------

def _c_isotropic(d: float, scale: float, flow: ShearFlow, reaction: KppReaction) -> float:
    """``c*(d Id, scale * q)``."""
    q = flow if flow.is_zero else flow.scaled(scale)
    return minimal_speed(ProblemSpec(flow.cross_section, DiffusionSpec.isotropic(d), q, reaction)).c_star


@dataclass(frozen=True)
class CounterexampleReport:
    delta: float
    M1: float
    epsilon1: float
    speed_small_diffusion: float
    speed_large_diffusion: float
    margin: float
    trace: tuple = field(repr=False)
    n: int = SEARCH_N
    n_confirm: int | None = None
    confirm_small: float = float("nan")
    confirm_large: float = float("nan")
    premise: str = ""

    @property
    def confirm_margin(self) -> float:
        return self.confirm_small - self.confirm_large

    @property
    def verified(self) -> bool:
        return self.margin > 0 and (self.n_confirm is None or self.confirm_margin > 0)


def _premise_text(s: float, delta: float, qmax: float) -> str:
    return (f"0 < 2*sqrt(f'(0)) + delta < max q1 - delta: "
            f"0 < {s:.6g} + {delta:.6g} = {s + delta:.6g} < {qmax:.6g} - {delta:.6g} = {qmax - delta:.6g}")


def default_delta(flow: ShearFlow, reaction: KppReaction) -> float:
    return (flow_max(flow) - 2.0 * math.sqrt(reaction.growth_rate)) / 4.0


def find_proportional_counterexample(flow: ShearFlow, reaction: KppReaction, cs: CrossSection | None = None,
                                     delta: float | None = None, n_confirm: int | None = CONFIRM_N,
                                     budget: int = SEARCH_BUDGET) -> CounterexampleReport:
    """Witness ``eps1 < M1`` with ``c*(eps1 Id, sqrt(M1) q) > c*(M1 Id, sqrt(M1) q)``.

    M is doubled from 1 until ``c*(M Id, sqrt(M) q) / sqrt(M) < 2 sqrt(f'(0)) + delta``;
    then eps is halved from ``M1 / 2`` until
    ``c*(eps Id, sqrt(M1) q) > sqrt(M1) (max q - delta)``.
    """
    cs = cs or flow.cross_section
    if cs != flow.cross_section:
        flow = flow.resample(cs)
    s = 2.0 * math.sqrt(reaction.growth_rate)
    qmax = flow_max(flow)
    if delta is None:
        if qmax <= s:
            raise PremiseError(f"premise unsatisfiable for every delta > 0: needs max q1 > 2*sqrt(f'(0)), "
                               f"got max q1 = {qmax:.6g} <= {s:.6g}")
        delta = default_delta(flow, reaction)
    premise = _premise_text(s, delta, qmax)
    if not (delta > 0 and s + delta < qmax - delta):
        raise PremiseError(f"premise unsatisfiable: {premise} fails")

    trace = []
    M = 1.0
    for _ in range(budget + 1):
        c_big = _c_isotropic(M, math.sqrt(M), flow, reaction)
        trace.append(("M", M, c_big))
        if c_big / math.sqrt(M) < s + delta:
            break
        M *= 2.0
    else:
        raise SearchBudgetError(f"no M found within {budget} doublings", trace)
    M1 = M
    root = math.sqrt(M1)

    eps = M1 / 2.0
    for _ in range(budget + 1):
        c_small = _c_isotropic(eps, root, flow, reaction)
        trace.append(("epsilon", eps, c_small))
        if c_small > root * (qmax - delta):
            break
        eps /= 2.0
    else:
        raise SearchBudgetError(f"no epsilon found within {budget} halvings", trace)

    report = dict(delta=delta, M1=M1, epsilon1=eps, speed_small_diffusion=c_small,
                  speed_large_diffusion=c_big, margin=c_small - c_big, trace=tuple(trace), n=cs.n,
                  premise=premise)
    if n_confirm is not None:
        fine = flow.resample(cs.refined(n_confirm))
        report.update(n_confirm=n_confirm,
                      confirm_small=_c_isotropic(eps, root, fine, reaction),
                      confirm_large=_c_isotropic(M1, root, fine, reaction))
    return CounterexampleReport(**report)


def reverify_proportional(report: CounterexampleReport, flow: ShearFlow, reaction: KppReaction) -> tuple[float, float]:
    """Recompute both speeds of a report from its parameters alone."""
    if flow.cross_section.n != report.n:
        flow = flow.resample(flow.cross_section.refined(report.n))
    root = math.sqrt(report.M1)
    return (_c_isotropic(report.epsilon1, root, flow, reaction),
            _c_isotropic(report.M1, root, flow, reaction))


@dataclass(frozen=True)
class NonproportionalReport:
    delta: float
    epsilon: float
    M: float
    c_eps: float
    c_M: float
    trace: tuple = field(repr=False)
    n: int = SEARCH_N
    n_confirm: int | None = None
    confirm_eps: float = float("nan")
    confirm_M: float = float("nan")
    premise: str = ""

    @property
    def margin(self) -> float:
        return self.c_eps - self.c_M

    @property
    def confirm_margin(self) -> float:
        return self.confirm_eps - self.confirm_M

    @property
    def ordered(self) -> bool:
        return DiffusionSpec.ab(self.epsilon).dominated_by(DiffusionSpec.ab(self.M))

    @property
    def verified(self) -> bool:
        return self.margin > 0 and self.ordered and (self.n_confirm is None or self.confirm_margin > 0)

    def __iter__(self):
        return iter((self.epsilon, self.M, self.c_eps, self.c_M))


def find_nonproportional_counterexample(flow: ShearFlow, reaction: KppReaction, cs: CrossSection | None = None,
                                        delta: float | None = None, n_confirm: int | None = CONFIRM_N,
                                        budget: int = SEARCH_BUDGET) -> NonproportionalReport:
    """Witness ``eps < 1 < M`` with ``c*(A_M, q) < 2 sqrt(f'(0)) + delta < max q + 2 sqrt(f'(0)) - delta < c*(A_eps, q)``."""
    cs = cs or flow.cross_section
    if cs != flow.cross_section:
        flow = flow.resample(cs)
    s = 2.0 * math.sqrt(reaction.growth_rate)
    qmax = flow_max(flow)
    if delta is None:
        delta = qmax / 4.0
    premise = (f"2*sqrt(f'(0)) + delta < max q1 + 2*sqrt(f'(0)) - delta: "
               f"{s + delta:.6g} < {qmax + s - delta:.6g}")
    if not (delta > 0 and s + delta < qmax + s - delta):
        raise PremiseError(f"premise unsatisfiable: {premise} fails")

    trace = []
    eps = 0.5
    for _ in range(budget + 1):
        c_eps = speed_for_Ab(eps, flow, reaction).c_star
        trace.append(("epsilon", eps, c_eps))
        if c_eps > qmax + s - delta:
            break
        eps /= 2.0
    else:
        raise SearchBudgetError(f"no epsilon found within {budget} halvings", trace)
    M = 2.0
    for _ in range(budget + 1):
        c_M = speed_for_Ab(M, flow, reaction).c_star
        trace.append(("M", M, c_M))
        if c_M < s + delta:
            break
        M *= 2.0
    else:
        raise SearchBudgetError(f"no M found within {budget} doublings", trace)

    report = dict(delta=delta, epsilon=eps, M=M, c_eps=c_eps, c_M=c_M, trace=tuple(trace), n=cs.n,
                  premise=premise)
    if n_confirm is not None:
        fine = flow.resample(cs.refined(n_confirm))
        report.update(n_confirm=n_confirm, confirm_eps=speed_for_Ab(eps, fine, reaction).c_star,
                      confirm_M=speed_for_Ab(M, fine, reaction).c_star)
    return NonproportionalReport(**report)


# --------------------------------------------------------------------------
# Sweeps
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    b: float
    c_star: float
    lambda_star: float
    status: str
    error: str = ""


def scan_speed_vs_b(flow: ShearFlow, reaction: KppReaction, cs: CrossSection | None = None,
                    b_grid: Sequence[float] = (), workers: int | None = None) -> list[ScanRow]:
    """One ``speed_for_Ab`` per grid value, rows in input order; failures stay in-row."""
    cs = cs or flow.cross_section
    if cs != flow.cross_section:
        flow = flow.resample(cs)
    grid = [float(b) for b in b_grid]
    if not grid or any(b <= 0 for b in grid):
        raise ValidationError("b_grid must be a non-empty list of positive values", "b_grid")
    if any(b2 < b1 for b1, b2 in zip(grid, grid[1:])):
        raise ValidationError("b_grid must be sorted", "b_grid")

    def row(b):
        try:
            r = speed_for_Ab(b, flow, reaction, cs)
            return ScanRow(b, r.c_star, r.lambda_star, "ok")
        except SolverError as exc:
            return ScanRow(b, float("nan"), float("nan"), "failed", str(exc))

    rows = _map_ordered(row, grid, workers)
    cs_ = [r.c_star for r in rows if r.status == "ok"]
    if len(cs_) > 1 and not all(b < a for a, b in zip(cs_, cs_[1:])):
        logger.info("c*(A_b) is not strictly decreasing along this grid")
    return rows
