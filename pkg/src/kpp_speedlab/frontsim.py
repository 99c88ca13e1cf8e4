"""Time-domain front simulation, an independent check on the variational speed.

Integrates ``u_t = alpha u_xx + beta Lap_y u + q1(y) u_x + f(u)`` on a strip
``[0, strip_length] x C_omega`` with no-flux ends in x, starting from a step
(u = 1 to the right of ``step_at``, 0 to the left).  The front invades the
zero state moving towards -x; positions are reported as the distance invaded
since t = 0, so they increase with time.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import DomainOverrunError, ValidationError
from .model import ProblemSpec, kpp_check
from .numfmt import fmt

MAX_CELLS = 4_000_000
EDGE_TOL = 1e-6


@dataclass(frozen=True)
class SimConfig:
    strip_length: float
    nx: int
    t_end: float
    cfl_safety: float = 0.9
    level: float = 0.5
    fit_window: float = 0.5
    step_at: float | None = None
    records: int = 200
    guard_widths: float = 5.0

    def validate(self, spec: ProblemSpec) -> None:
        alpha, f0 = spec.diffusion.axial, spec.growth_rate
        width = math.sqrt(alpha / f0)
        if not self.strip_length >= 20.0 * width:
            raise ValidationError(
                f"strip_length must be at least 20 front widths ({20 * width:.4g}), got {self.strip_length}", "strip")
        if int(self.nx) != self.nx or self.nx < 4:
            raise ValidationError(f"nx must be an integer >= 4, got {self.nx}", "nx")
        if self.nx * spec.cross_section.n > MAX_CELLS:
            raise ValidationError(f"nx * n = {self.nx * spec.cross_section.n} exceeds {MAX_CELLS}", "nx")
        if not self.t_end > 0:
            raise ValidationError(f"t_end must be positive, got {self.t_end}", "tend")
        if not 0 < self.cfl_safety < 1:
            raise ValidationError(f"cfl_safety must lie in (0, 1), got {self.cfl_safety}", "cfl_safety")
        if not 0 < self.level < 1:
            raise ValidationError(f"level must lie in (0, 1), got {self.level}", "level")
        if not 0 < self.fit_window <= 1:
            raise ValidationError(f"fit_window must lie in (0, 1], got {self.fit_window}", "fit_window")
        if self.records < 8:
            raise ValidationError("records must be >= 8", "records")
        x0 = self.initial_step(spec)
        if not 0 < x0 < self.strip_length:
            raise ValidationError(f"step_at must lie inside the strip, got {x0}", "step_at")

    def initial_step(self, spec: ProblemSpec) -> float:
        if self.step_at is not None:
            return float(self.step_at)
        width = math.sqrt(spec.diffusion.axial / spec.growth_rate)
        return self.strip_length - max(10.0 * width, 0.05 * self.strip_length)


@dataclass(frozen=True)
class FrontSimResult:
    measured_speed: float
    fit_residual: float
    positions: tuple
    dt_used: float
    u_min: float
    u_max: float
    mass: tuple = field(repr=False)
    scheme: str = "central"
    final: np.ndarray = field(repr=False, default=None)

    @property
    def accepted(self) -> bool:
        return self.fit_residual <= 0.01 * self.measured_speed


@njit(cache=True)
def _advance(u, w, nsteps, dt, ax, ay, q, inv_hx, upwind, periodic, coeffs):
    nx, ny = u.shape
    ncoef = coeffs.shape[0]
    umin, umax = np.inf, -np.inf
    for _ in range(nsteps):
        for i in range(nx):
            im = i - 1 if i > 0 else 0
            ip = i + 1 if i < nx - 1 else nx - 1
            for j in range(ny):
                if periodic:
                    jm = j - 1 if j > 0 else ny - 1
                    jp = j + 1 if j < ny - 1 else 0
                else:
                    jm = j - 1 if j > 0 else 0
                    jp = j + 1 if j < ny - 1 else ny - 1
                uc = u[i, j]
                lx = (u[im, j] - uc) + (u[ip, j] - uc)
                ly = (u[i, jm] - uc) + (u[i, jp] - uc)
                qj = q[j]
                if upwind:
                    if qj > 0.0:
                        adv = qj * (u[ip, j] - uc) * inv_hx
                    else:
                        adv = qj * (uc - u[im, j]) * inv_hx
                else:
                    adv = qj * (u[ip, j] - u[im, j]) * (0.5 * inv_hx)
                f = coeffs[ncoef - 1]
                for k in range(ncoef - 2, -1, -1):
                    f = f * uc + coeffs[k]
                v = uc + dt * (ax * lx + ay * ly + adv + f)
                w[i, j] = v
                if v < umin:
                    umin = v
                if v > umax:
                    umax = v
        u, w = w, u
    return u, w, umin, umax


def _crossing(ubar: np.ndarray, hx: float, level: float) -> float:
    """x where the y-averaged profile first reaches ``level``, scanning from the zero state."""
    j = int(np.argmax(ubar >= level))
    if ubar[j] < level:
        return math.nan
    if j == 0:
        return 0.5 * hx
    x0 = (j - 0.5) * hx
    u0, u1 = ubar[j - 1], ubar[j]
    return x0 + hx * (level - u0) / (u1 - u0)


def simulate_front(spec: ProblemSpec, sim: SimConfig) -> FrontSimResult:
    """Integrate from step data and fit the invasion speed over the last part of the run."""
    sim.validate(spec)
    chk = kpp_check(spec.reaction)
    if not chk:
        raise ValidationError(f"reaction is not KPP: {chk.reason}", "reaction")
    cs = spec.cross_section
    alpha, beta = spec.diffusion.axial, spec.diffusion.transverse
    q = np.ascontiguousarray(spec.flow.samples, dtype=float)
    nx, ny = int(sim.nx), cs.n
    hx, hy = sim.strip_length / nx, cs.h
    qabs = float(np.max(np.abs(q)))
    upwind = qabs * hx / (2.0 * alpha) > 1.0
    lip = spec.reaction.lipschitz
    rate = 2.0 * alpha / hx ** 2 + 2.0 * beta / hy ** 2 + lip + (qabs / hx if upwind else 0.0)
    dt_max = sim.cfl_safety / rate

    n_rec = int(sim.records)
    steps_total = max(n_rec, math.ceil(sim.t_end / dt_max))
    steps_total = n_rec * math.ceil(steps_total / n_rec)
    dt = sim.t_end / steps_total
    per_rec = steps_total // n_rec

    x = (np.arange(nx) + 0.5) * hx
    x0 = sim.initial_step(spec)
    u = np.zeros((nx, ny))
    u[x > x0, :] = 1.0
    w = np.empty_like(u)
    coeffs = np.asarray(spec.reaction.coefficients, dtype=float)
    guard = sim.guard_widths * math.sqrt(alpha / spec.growth_rate)

    cell = hx * hy
    times, pos, mass = [0.0], [0.0], [float(np.sum(u) * cell)]
    umin, umax = 0.0, 1.0
    for r in range(1, n_rec + 1):
        u, w, lo, hi = _advance(u, w, per_rec, dt, alpha / hx ** 2, beta / hy ** 2, q, 1.0 / hx,
                                upwind, cs.periodic, coeffs)
        umin, umax = min(umin, lo), max(umax, hi)
        t = r * per_rec * dt
        xf = _crossing(u.mean(axis=1), hx, sim.level)
        if math.isnan(xf) or xf < guard or float(np.max(u[0])) > EDGE_TOL:
            raise DomainOverrunError(
                f"front reached the end of the strip at t={t:.4g} (t_end={sim.t_end}); enlarge the strip", t)
        times.append(t)
        pos.append(x0 - xf)
        mass.append(float(np.sum(u) * cell))

    times_a, pos_a = np.array(times), np.array(pos)
    sel = times_a >= (1.0 - sim.fit_window) * sim.t_end
    slope, icpt = np.polyfit(times_a[sel], pos_a[sel], 1)
    resid = pos_a[sel] - (slope * times_a[sel] + icpt)
    span = times_a[sel][-1] - times_a[sel][0]
    fit_res = float(np.sqrt(np.mean(resid ** 2)) / span) if span > 0 else math.inf
    return FrontSimResult(float(slope), fit_res, tuple(zip(times, pos)), dt, float(umin), float(umax),
                          tuple(mass), "upwind" if upwind else "central", u.copy())


def write_trajectory(result: FrontSimResult, path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["t", "x_front"])
        for t, xf in result.positions:
            wr.writerow([fmt(t), fmt(xf)])
