"""Acceptance criteria A1-A10 as plain functions returning one row each.

Both ``kpp-speedlab verify`` and the test suite run these.  A row passes
only if the measured quantity is within tolerance *and* the criterion ran
inside its time budget.  Solver errors inside a criterion turn into a FAIL
row with the error message as detail.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .asymptotics import (TO_INFINITY, TO_ZERO, find_nonproportional_counterexample,
                          find_proportional_counterexample, reverify_proportional, verify_limit)
from .eigensolver import assemble, dense_oracle_eigenvalues, principal_eigenpair
from .errors import SpeedLabError
from .frontsim import SimConfig, simulate_front
from .geometry import make_grid
from .model import DiffusionSpec, ProblemSpec, cosine_flow, logistic, zero_flow
from .speed import analytic_bounds, k_of_lambda, minimal_speed, rescale_identity_check, speed_for_Ab

SEED = 20240611
FLOW_AMPLITUDE = 6.0


@dataclass(frozen=True)
class Row:
    name: str
    measured: float
    tolerance: str
    passed: bool
    seconds: float
    budget: float
    detail: str = ""

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return (f"{self.name:<4} {verdict}  measured={self.measured:.6g}  tol={self.tolerance}  "
                f"time={self.seconds:.2f}s/{self.budget:g}s  {self.detail}").rstrip()


def _cosine(n: int):
    return cosine_flow(make_grid("periodic", 1.0, n), FLOW_AMPLITUDE)


# --------------------------------------------------------------------------
# Criteria: each returns (measured, tolerance text, ok, detail)
# --------------------------------------------------------------------------

def a1_homogeneous():
    cs = make_grid("periodic", 1.0, 64)
    f = logistic(1.0)
    errs = []
    for d, expect in ((1.0, 2.0), (4.0, 4.0)):
        c = minimal_speed(ProblemSpec(cs, DiffusionSpec.isotropic(d), zero_flow(cs), f)).c_star
        errs.append(abs(c - expect))
    err = max(errs)
    return err, "1e-10", err <= 1e-10, f"|c-2|={errs[0]:.2e} |c-4|={errs[1]:.2e}"


def a2_rescaling():
    flow = _cosine(256)
    gaps = [rescale_identity_check(b, flow, logistic(1.0)) for b in (0.1, 0.5, 2.0, 10.0)]
    g = max(gaps)
    return g, "1e-8", g <= 1e-8, "b=0.1,0.5,2,10"


def a3_limit_zero():
    rep = verify_limit(TO_ZERO, _cosine(512), logistic(1.0))
    tol = 0.02 * rep.predicted_limit
    sandwich = all(2.0 <= c <= rep.predicted_limit + tol for c in rep.speeds)
    ok = rep.relative_error <= 0.02 and sandwich
    return (rep.relative_error, "2%", ok,
            f"limit={rep.extrapolated_limit:.6g} order={rep.fitted_order:.3g} sandwich={'ok' if sandwich else 'violated'}")


def a4_limit_infinity():
    rep = verify_limit(TO_INFINITY, _cosine(512), logistic(1.0))
    return (rep.relative_error, "1%", rep.relative_error <= 0.01,
            f"limit={rep.extrapolated_limit:.10g}")


def a5_proportional():
    flow, f = _cosine(512), logistic(1.0)
    rep = find_proportional_counterexample(flow, f, delta=1.0, n_confirm=1024)
    small, large = reverify_proportional(rep, flow, f)
    drift = max(abs(small - rep.speed_small_diffusion) / rep.speed_small_diffusion,
                abs(large - rep.speed_large_diffusion) / rep.speed_large_diffusion)
    ok = rep.verified and drift <= 1e-8
    return (rep.confirm_margin, "margin>0, reverify 1e-8", ok,
            f"M1={rep.M1:g} eps1={rep.epsilon1:g} margin={rep.margin:.6g} reverify_drift={drift:.1e}")


def a6_nonproportional():
    rep = find_nonproportional_counterexample(_cosine(512), logistic(1.0), delta=1.0, n_confirm=1024)
    s, qmax, d = 2.0, FLOW_AMPLITUDE, 1.0
    chain = rep.c_M < s + d < qmax + s - d < rep.c_eps and rep.confirm_M < s + d and rep.confirm_eps > qmax + s - d
    ok = rep.epsilon < 1.0 < rep.M and rep.ordered and chain and rep.verified
    return (rep.margin, "eps<1<M, c_M<3<7<c_eps", ok,
            f"eps={rep.epsilon:g} M={rep.M:g} c_eps={rep.c_eps:.6g} c_M={rep.c_M:.6g}")


def random_operator(rng: np.random.Generator):
    """Random cell operator in the range where a dense oracle is accurate to 1e-10 relative."""
    n = int(rng.integers(4, 257))
    kind = "periodic" if rng.random() < 0.5 else "neumann"
    cs = make_grid(kind, float(rng.uniform(1.0, 2.0 * math.pi)), n)
    beta = float(rng.uniform(0.1, 1.0))
    y = cs.nodes / cs.length
    v = np.full(n, float(rng.uniform(-2.0, 2.0)))
    for _ in range(int(rng.integers(1, 4))):
        v += rng.uniform(-5.0, 5.0) * np.cos(2.0 * math.pi * int(rng.integers(1, 4)) * y + rng.uniform(0, 2 * math.pi))
    return assemble(cs, beta, v)


def a7_oracle(count: int = 50, seed: int = SEED):
    rng = np.random.default_rng(seed)
    worst, worst_n = 0.0, 0
    for _ in range(count):
        op = random_operator(rng)
        k = principal_eigenpair(op).eigenvalue
        ref = dense_oracle_eigenvalues(op)[-1]
        err = abs(k - ref) / (1.0 + abs(ref))
        if err > worst:
            worst, worst_n = err, op.n
    return worst, "1e-10*(1+|k|)", worst <= 1e-10, f"{count} operators, worst at n={worst_n}"


def random_spec(rng: np.random.Generator) -> ProblemSpec:
    kind = "periodic" if rng.random() < 0.5 else "neumann"
    cs = make_grid(kind, float(rng.uniform(0.5, 3.0)), int(rng.integers(16, 129)))
    flow = cosine_flow(cs, float(rng.uniform(0.5, 8.0)), int(rng.integers(1, 4)))
    diff = DiffusionSpec(float(rng.uniform(0.1, 10.0)), float(rng.uniform(0.1, 10.0)))
    return ProblemSpec(cs, diff, flow, logistic(float(rng.uniform(0.2, 3.0))))


def a8_bounds_convexity(count: int = 100, seed: int = SEED + 1):
    rng = np.random.default_rng(seed)
    worst_bound, worst_convex = -math.inf, -math.inf
    for _ in range(count):
        spec = random_spec(rng)
        l1, l2 = np.exp(rng.uniform(math.log(0.01), math.log(10.0), size=2))
        lm = 0.5 * (l1 + l2)
        ks = {}
        for lam in (l1, l2, lm):
            k = k_of_lambda(spec, float(lam)).eigenvalue
            lo, hi = analytic_bounds(spec, float(lam))
            slack = 1e-12 * (1.0 + abs(k))
            worst_bound = max(worst_bound, (lo - k) / slack, (k - hi) / slack)
            ks[lam] = k
        mid_gap = ks[lm] - 0.5 * (ks[l1] + ks[l2])
        worst_convex = max(worst_convex, mid_gap / (1e-10 * (1.0 + max(abs(v) for v in ks.values()))))
    ok = worst_bound <= 1.0 and worst_convex <= 1.0
    return (max(worst_bound, worst_convex), "<=1 (violation/tolerance)", ok,
            f"{count} pairs; bounds ratio {worst_bound:.3g}, convexity ratio {worst_convex:.3g}")


A9_CASES = (
    # label, alpha, beta, amplitude, ny, strip, nx, t_end
    ("D=1", 1.0, 1.0, 0.0, 4, 240.0, 4800, 80.0),
    ("D=0.25", 0.25, 0.25, 0.0, 4, 120.0, 2400, 80.0),
    ("A_b b=0.05", 1.0, 0.05, FLOW_AMPLITUDE, 32, 250.0, 5000, 30.0),
)


def a9_case(label, alpha, beta, amp, ny, strip, nx, t_end):
    """(gap relative to c*, measured, c*, bounds ok, detail) for one cross-validation case."""
    cs = make_grid("periodic", 1.0, ny)
    flow = cosine_flow(cs, amp) if amp else zero_flow(cs)
    spec = ProblemSpec(cs, DiffusionSpec(alpha, beta), flow, logistic(1.0))
    if amp:
        ref = speed_for_Ab(beta, cosine_flow(make_grid("periodic", 1.0, 256), amp), logistic(1.0)).c_star
    else:
        ref = 2.0 * math.sqrt(alpha)
    res = simulate_front(spec, SimConfig(strip, nx, t_end))
    gap = abs(res.measured_speed - ref) / ref
    note = ""
    if gap > 0.03:
        # required confirmation: halve both mesh widths and keep the finer answer
        fine = ProblemSpec(cs.refined(2 * ny), spec.diffusion, flow.resample(cs.refined(2 * ny)), spec.reaction)
        res = simulate_front(fine, SimConfig(strip, 2 * nx, t_end))
        gap = abs(res.measured_speed - ref) / ref
        note = " (halved-h confirmation)"
    bounded = res.u_min >= -1e-12 and res.u_max <= 1.0 + 1e-12
    return gap, res.measured_speed, ref, bounded, f"{label}: {res.measured_speed:.4f} vs {ref:.4f}{note}"


def a9_simulation():
    worst, ok, details = 0.0, True, []
    for case in A9_CASES:
        gap, _, _, bounded, detail = a9_case(*case)
        worst = max(worst, gap)
        ok = ok and gap <= 0.05 and bounded
        details.append(detail + ("" if bounded else " [bounds violated]"))
    return worst, "5%", ok, "; ".join(details)


def a10_normalized_map():
    flow, f = _cosine(256), logistic(1.0)
    vals = []
    for beta in (0.25, 1.0, 4.0, 16.0):
        spec = ProblemSpec(flow.cross_section, DiffusionSpec.isotropic(beta), flow.scaled(math.sqrt(beta)), f)
        vals.append(minimal_speed(spec).c_star / math.sqrt(beta))
    diffs = np.diff(vals)
    worst = float(np.max(diffs))
    return worst, "< -1e-6", worst < -1e-6, "values " + ", ".join(f"{v:.6g}" for v in vals)


# name -> (function, runtime budget in seconds)
CRITERIA: dict[str, tuple[Callable, float]] = {
    "A1": (a1_homogeneous, 1.0),
    "A2": (a2_rescaling, 10.0),
    "A3": (a3_limit_zero, 60.0),
    "A4": (a4_limit_infinity, 60.0),
    "A5": (a5_proportional, 300.0),
    "A6": (a6_nonproportional, 300.0),
    "A7": (a7_oracle, 30.0),
    "A8": (a8_bounds_convexity, 60.0),
    "A9": (a9_simulation, 600.0),
    "A10": (a10_normalized_map, 20.0),
}
SUITES = {
    "quick": tuple(k for k in CRITERIA if k != "A9"),
    "full": tuple(CRITERIA),
}


def warm_up() -> None:
    """Compile the numba kernels so that their one-off cost is not billed to a criterion."""
    dense_oracle_eigenvalues(assemble(make_grid("periodic", 1.0, 4), 1.0, np.zeros(4)))
    cs = make_grid("periodic", 1.0, 4)
    spec = ProblemSpec(cs, DiffusionSpec.isotropic(1.0), zero_flow(cs), logistic(1.0))
    simulate_front(spec, SimConfig(40.0, 80, 0.1, records=8))


def run_criterion(name: str) -> Row:
    fn, budget = CRITERIA[name]
    t0 = time.perf_counter()
    try:
        measured, tol, ok, detail = fn()
    except SpeedLabError as exc:
        measured, tol, ok, detail = math.nan, "-", False, f"{type(exc).__name__}: {exc}"
    dt = time.perf_counter() - t0
    if dt > budget:
        ok, detail = False, detail + f" [over time budget {budget:g}s]"
    return Row(name, float(measured), tol, bool(ok), dt, budget, detail)


def run_suite(suite: str = "quick", echo: Callable[[str], None] | None = None) -> list[Row]:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}")
    warm_up()
    rows = []
    for name in SUITES[suite]:
        row = run_criterion(name)
        rows.append(row)
        if echo is not None:
            echo(row.line())
    return rows
