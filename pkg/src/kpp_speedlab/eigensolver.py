"""Principal eigenpair of the reduced cell operator ``beta * Lap_y + V(y)``.

The discrete operator is a symmetric tridiagonal matrix (plus two corner
entries on a periodic section) with nonnegative off-diagonal coupling, so its
largest eigenvalue has a strictly positive eigenvector.  The iterative solver
exploits that structure:

* for any positive vector ``x`` the Collatz-Wielandt quotients
  ``(M x)_i / x_i`` bracket the principal eigenvalue;
* shifting by anything above the upper quotient makes ``s I - M`` a
  nonsingular M-matrix, whose inverse maps positive vectors to positive
  vectors.

Inverse iteration with the shift pulled down onto the shrinking upper bound
therefore stays positive, cannot lock onto a non-principal eigenpair, and
converges about as fast as Rayleigh-quotient iteration once close.

``dense_oracle_eigenvalues`` is an independent cyclic-Jacobi eigensolver used
only to cross-check the iterative path.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numba import njit
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded

from .errors import ConvergenceError, ValidationError
from .geometry import BoundaryKind, CrossSection

EPS = np.finfo(float).eps
MAX_ITER = 500
ORACLE_MAX_N = 512


@dataclass(frozen=True)
class CellOperator:
    cross_section: CrossSection
    beta: float
    potential: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.cross_section.n

    @property
    def bc(self) -> BoundaryKind:
        return self.cross_section.kind

    @property
    def coupling(self) -> float:
        """Off-diagonal entry ``beta / h**2``."""
        return self.beta / self.cross_section.h ** 2

    @cached_property
    def diagonal(self) -> np.ndarray:
        d = self.potential - 2.0 * self.coupling
        if not self.cross_section.periodic:
            d[0] += self.coupling
            d[-1] += self.coupling
        return d

    @cached_property
    def matrix(self) -> np.ndarray:
        n, c = self.n, self.coupling
        m = np.diag(self.diagonal)
        i = np.arange(n - 1)
        m[i, i + 1] = c
        m[i + 1, i] = c
        if self.cross_section.periodic:
            m[0, -1] = c
            m[-1, 0] = c
        m.setflags(write=False)
        return m

    @property
    def scale(self) -> float:
        """Gershgorin radius of the matrix, used for round-off floors."""
        return 4.0 * self.coupling + float(np.max(np.abs(self.potential)))

    def laplacian(self, x: np.ndarray) -> np.ndarray:
        # built from neighbour differences, which are exact for close values
        d = np.diff(x)
        lap = np.zeros_like(x)
        lap[:-1] += d
        lap[1:] -= d
        if self.cross_section.periodic:
            w = x[0] - x[-1]
            lap[-1] += w
            lap[0] -= w
        return lap

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.potential * x + self.coupling * self.laplacian(x)

    def shifted_solve(self, shift: float, rhs: np.ndarray) -> np.ndarray:
        """Solve ``(shift I - M) y = rhs``; LinAlgError unless that matrix is positive definite."""
        n, c = self.n, self.coupling
        a = shift - self.diagonal
        ab = np.empty((2, n))
        ab[0, 0] = 0.0
        ab[0, 1:] = -c
        ab[1] = a
        if not self.cross_section.periodic:
            return cho_solve_banded((cholesky_banded(ab), False), rhs)
        # cyclic corners via Sherman-Morrison: A = T - u u^T, T tridiagonal
        if a[0] <= 0:
            raise LinAlgError("shifted operator is not positive definite")
        ab[1, 0] = 2.0 * a[0]
        ab[1, -1] = a[-1] + c * c / a[0]
        u = np.zeros(n)
        u[0] = np.sqrt(a[0])
        u[-1] = c / np.sqrt(a[0])
        chol = cholesky_banded(ab)
        sol = cho_solve_banded((chol, False), np.column_stack([rhs, u]))
        ty, tu = sol[:, 0], sol[:, 1]
        denom = 1.0 - u @ tu
        if denom <= 0:
            raise LinAlgError("shifted operator is not positive definite")
        return ty + tu * ((u @ ty) / denom)


@dataclass(frozen=True)
class EigenResult:
    eigenvalue: float
    eigenfunction: np.ndarray = field(repr=False)
    residual: float
    iterations: int = 0

    @property
    def positive(self) -> bool:
        return bool(np.all(self.eigenfunction > 0))


def assemble(cs: CrossSection, beta: float, potential) -> CellOperator:
    """Discretise ``phi -> beta * phi'' + V * phi`` on the cell-centred grid.

    Neumann walls drop the outward coupling; a periodic section wraps.
    """
    if not np.isfinite(beta) or beta <= 0:
        raise ValidationError(f"beta must be positive, got {beta}", "beta")
    v = np.array(potential, dtype=float)
    if v.shape != (cs.n,):
        raise ValidationError(f"potential needs {cs.n} entries, got shape {v.shape}", "potential")
    if not np.all(np.isfinite(v)):
        raise ValidationError("potential must be finite", "potential")
    v.setflags(write=False)
    return CellOperator(cs, float(beta), v)


def rayleigh_quotient(op: CellOperator, phi) -> float:
    x = np.asarray(phi, dtype=float)
    return float(x @ op.matvec(x) / (x @ x))


def _shift(upper: float, rq: float, floor: float, bump: float) -> float:
    return upper + max(1e-3 * (upper - rq), floor) * bump


def principal_eigenpair(op: CellOperator, start=None, max_iter: int = MAX_ITER) -> EigenResult:
    """Largest eigenvalue of ``op`` and its positive eigenvector (max-normalised).

    ``start`` is an optional warm-start vector; it is made positive and falls
    back to all-ones when unusable.  Raises ConvergenceError with the last
    residual if ``max_iter`` iterations do not suffice.
    """
    n = op.n
    x = None
    if start is not None:
        s = np.abs(np.asarray(start, dtype=float))
        if s.shape == (n,) and np.all(np.isfinite(s)) and np.min(s) > 0:
            x = s / np.max(s)
    if x is None:
        x = np.ones(n)

    floor = 64.0 * EPS * op.scale
    tiny = 1e-250
    res = np.inf
    for it in range(1, max_iter + 1):
        y = op.matvec(x)
        rq = float(x @ y / (x @ x))
        res = float(np.max(np.abs(y - rq * x)))
        if res <= max(1e-12 * (1.0 + abs(rq)), floor):
            return EigenResult(rq, x, res, it)
        mask = x > tiny
        upper = max(float(np.max(y[mask] / x[mask])), rq)
        for attempt in range(12):
            try:
                z = op.shifted_solve(_shift(upper, rq, 8.0 * floor, 10.0 ** attempt), x)
                break
            except LinAlgError:
                continue
        else:
            raise ConvergenceError("no positive-definite shift found above the spectrum", res, it)
        z = np.abs(z)  # entries are positive up to round-off
        zmax = float(np.max(z))
        if not np.isfinite(zmax) or zmax == 0:
            raise ConvergenceError("inverse iteration produced a degenerate vector", res, it)
        x = z / zmax
    raise ConvergenceError(f"principal eigenpair not converged after {max_iter} iterations (residual {res:.3e})",
                           res, max_iter)


@njit(cache=True)
def _jacobi_sweeps(a, tol, max_sweeps):
    n = a.shape[0]
    norm = 0.0
    for i in range(n):
        for j in range(n):
            norm += a[i, j] * a[i, j]
    norm = np.sqrt(norm)
    prev = np.inf
    for _ in range(max_sweeps):
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * a[i, j] * a[i, j]
        off = np.sqrt(off)
        if off <= tol * norm or off >= prev:
            break
        prev = off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                tau = s / (1.0 + c)
                a[p, p] -= t * apq
                a[q, q] += t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for r in range(n):
                    if r == p or r == q:
                        continue
                    apr = a[p, r]
                    aqr = a[q, r]
                    a[p, r] = apr - s * (aqr + tau * apr)
                    a[q, r] = aqr + s * (apr - tau * aqr)
                for r in range(n):
                    if r != p and r != q:
                        a[r, p] = a[p, r]
                        a[r, q] = a[q, r]
    return a


def jacobi_eigenvalues(a, tol: float = 1e-13, max_sweeps: int = 60) -> np.ndarray:
    """All eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations.

    Row-cyclic ordering; sweeps stop once the off-diagonal Frobenius norm is
    below ``tol`` times the matrix norm or stops decreasing.
    """
    A = np.array(a, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("matrix must be square", "matrix")
    if not np.allclose(A, A.T, rtol=0, atol=1e-14 * max(1.0, np.max(np.abs(A)))):
        raise ValidationError("matrix must be symmetric", "matrix")
    A = np.ascontiguousarray(0.5 * (A + A.T))
    return np.sort(np.diag(_jacobi_sweeps(A, tol, max_sweeps)).copy())


def dense_oracle_eigenvalues(op: CellOperator) -> np.ndarray:
    """Full spectrum of the operator matrix, ascending; test oracle only."""
    if op.n > ORACLE_MAX_N:
        raise ValidationError(f"dense oracle limited to n <= {ORACLE_MAX_N}, got {op.n}", "n")
    return jacobi_eigenvalues(op.matrix)
