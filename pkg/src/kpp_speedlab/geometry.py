"""One-dimensional cross-sections and their cell-centred grids."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ValidationError

MIN_CELLS = 4


class BoundaryKind(str, enum.Enum):
    """Transverse boundary treatment.

    ``INTERVAL_NEUMANN`` is a bounded section with no-flux walls (a cylinder),
    ``CIRCLE_PERIODIC`` one period of an unbounded periodic section.
    """

    INTERVAL_NEUMANN = "neumann"
    CIRCLE_PERIODIC = "periodic"

    @classmethod
    def parse(cls, value: "BoundaryKind | str") -> "BoundaryKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "neumann": cls.INTERVAL_NEUMANN,
            "interval": cls.INTERVAL_NEUMANN,
            "intervalneumann": cls.INTERVAL_NEUMANN,
            "periodic": cls.CIRCLE_PERIODIC,
            "circle": cls.CIRCLE_PERIODIC,
            "circleperiodic": cls.CIRCLE_PERIODIC,
        }
        try:
            return aliases[key.replace("_", "")]
        except KeyError:
            raise ValidationError(f"unknown boundary kind {value!r}; expected neumann or periodic", "bc") from None


@dataclass(frozen=True)
class CrossSection:
    kind: BoundaryKind
    length: float
    n: int

    def __post_init__(self):
        object.__setattr__(self, "kind", BoundaryKind.parse(self.kind))
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValidationError(f"length must be positive, got {self.length}", "length")
        if int(self.n) != self.n or self.n < MIN_CELLS:
            raise ValidationError(f"n must be an integer >= {MIN_CELLS}, got {self.n}", "n")
        object.__setattr__(self, "length", float(self.length))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return self.length / self.n

    @cached_property
    def nodes(self) -> np.ndarray:
        y = (np.arange(self.n) + 0.5) * self.h
        y.setflags(write=False)
        return y

    @property
    def periodic(self) -> bool:
        return self.kind is BoundaryKind.CIRCLE_PERIODIC

    def refined(self, n: int) -> "CrossSection":
        return CrossSection(self.kind, self.length, n)


def make_grid(kind: BoundaryKind | str, length: float, n: int) -> CrossSection:
    """Build a cell-centred grid of ``n`` equal cells on ``[0, length]``."""
    return CrossSection(BoundaryKind.parse(kind), length, n)


def _check_samples(cs: CrossSection, samples) -> np.ndarray:
    v = np.asarray(samples, dtype=float)
    if v.shape != (cs.n,):
        raise ValidationError(f"expected {cs.n} samples, got shape {v.shape}", "samples")
    return v


def cell_integrate(cs: CrossSection, samples) -> float:
    """Midpoint-rule integral of grid samples over the cell."""
    v = _check_samples(cs, samples)
    return float(cs.h * np.sum(v))


def cell_average(cs: CrossSection, samples) -> float:
    return cell_integrate(cs, samples) / cs.length
