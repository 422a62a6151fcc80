"""Minkowski geometry with c = 1: events, the causal partial order, boosts.

Coordinates may be exact (``int`` / ``Fraction``) or ``float``.  When both
points of a comparison are exact, the causal order is decided with rational
arithmetic, so lightlike configurations never flip under rounding.  Float
comparisons accept an optional slack ``tolerance`` applied to the defining
inequality dt - |dx| >= -tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

Coordinate = Union[int, float, Fraction]


class DimensionMismatchError(ValueError):
    """Raised when two points of different spatial dimension are compared."""


def _is_exact(value: Coordinate) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


@dataclass(frozen=True)
class Point:
    """An event (t, x) in D+1 dimensional Minkowski spacetime."""

    t: Coordinate
    x: tuple[Coordinate, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", tuple(self.x))
        if not self.x:
            raise ValueError("spatial dimension must be at least 1")
        for c in (self.t, *self.x):
            if isinstance(c, float) and not math.isfinite(c):
                raise ValueError(f"non-finite coordinate: {c!r}")

    @property
    def dimension(self) -> int:
        return len(self.x)

    @property
    def exact(self) -> bool:
        """True when every coordinate supports exact rational arithmetic."""
        return _is_exact(self.t) and all(_is_exact(c) for c in self.x)

    def __repr__(self) -> str:  # compact, e.g. Point(t=3, x=(-1,))
        return f"Point(t={self.t}, x={self.x})"


def point(t: Coordinate, x: Iterable[Coordinate]) -> Point:
    return Point(t, tuple(x))


def _check_dims(a: Point, b: Point) -> None:
    if a.dimension != b.dimension:
        raise DimensionMismatchError(
            f"points have dimensions {a.dimension} and {b.dimension}"
        )


def causally_precedes(a: Point, b: Point, tolerance: float = 0.0) -> bool:
    """True iff ``b`` lies in the closed causal future of ``a``.

    The order is reflexive and includes the light cone boundary:
    dt >= |dx| with dt = b.t - a.t.  Exact coordinates are compared as
    rationals (squaring both sides); otherwise floats with ``tolerance``.
    """
    _check_dims(a, b)
    if a.exact and b.exact:
        dt = Fraction(b.t) - Fraction(a.t)
        if dt < 0:
            return False
        dx_sq = sum((Fraction(bx) - Fraction(ax)) ** 2 for ax, bx in zip(a.x, b.x))
        return dt * dt >= dx_sq
    dt = float(b.t) - float(a.t)
    dx = math.sqrt(sum((float(bx) - float(ax)) ** 2 for ax, bx in zip(a.x, b.x)))
    return dt - dx >= -tolerance


def causal_margin(a: Point, b: Point) -> float:
    """Signed distance dt - |dx| from the future light cone of ``a``, as float.

    Positive inside the cone, zero on it, negative outside (or for dt < 0
    beyond the cone in the past direction the value is simply negative).
    """
    _check_dims(a, b)
    dt = float(b.t) - float(a.t)
    dx = math.sqrt(sum((float(bx) - float(ax)) ** 2 for ax, bx in zip(a.x, b.x)))
    return dt - dx


def boost(p: Point, velocity: float) -> Point:
    """Lorentz-boost a 1+1 dimensional point into a frame moving at |v| < 1."""
    if p.dimension != 1:
        raise ValueError("boost helper is defined for 1 spatial dimension only")
    if not abs(velocity) < 1.0:
        raise ValueError("boost velocity must satisfy |v| < 1")
    t, x = float(p.t), float(p.x[0])
    gamma = 1.0 / math.sqrt(1.0 - velocity * velocity)
    return Point(gamma * (t - velocity * x), (gamma * (x - velocity * t),))
