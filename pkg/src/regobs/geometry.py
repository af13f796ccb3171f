"""Axis-aligned boxes used as domains, regions and sensor supports."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GeometryError

__all__ = ["Box", "box_from_bounds", "interval", "rectangle", "unit_interval", "unit_square"]


@dataclass(frozen=True)
class Box:
    """Closed box ``[lower_0, upper_0] x ... x [lower_{d-1}, upper_{d-1}]``.

    Dimension is 1 (interval) or 2 (rectangle).  Domains are boxes with a
    zero lower corner; regions and zone supports are arbitrary boxes.
    """

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lower)
        hi = tuple(float(v) for v in self.upper)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)
        if len(lo) != len(hi) or len(lo) not in (1, 2):
            raise GeometryError(f"box must be 1D or 2D, got bounds {lo} / {hi}")
        for a, b in zip(lo, hi):
            if not (np.isfinite(a) and np.isfinite(b)) or not a < b:
                raise GeometryError(f"box needs lower < upper on every axis, got {lo} / {hi}")

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def kind(self) -> str:
        return "interval" if self.dim == 1 else "rectangle"

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(b - a for a, b in zip(self.lower, self.upper))

    @property
    def center(self) -> tuple[float, ...]:
        return tuple(0.5 * (a + b) for a, b in zip(self.lower, self.upper))

    @property
    def measure(self) -> float:
        return float(np.prod(self.lengths))

    def contains_box(self, other: "Box", tol: float = 1e-12) -> bool:
        if other.dim != self.dim:
            return False
        return all(
            a - tol <= c and d <= b + tol
            for a, b, c, d in zip(self.lower, self.upper, other.lower, other.upper)
        )

    def contains_point(self, point: Sequence[float], tol: float = 1e-12, open_: bool = False) -> bool:
        p = as_point(point, self.dim)
        if open_:
            return all(a < x < b for a, b, x in zip(self.lower, self.upper, p))
        return all(a - tol <= x <= b + tol for a, b, x in zip(self.lower, self.upper, p))

    def on_boundary(self, point: Sequence[float], tol: float = 1e-12) -> bool:
        p = as_point(point, self.dim)
        if not self.contains_point(p, tol):
            return False
        return any(abs(x - a) <= tol or abs(x - b) <= tol for a, b, x in zip(self.lower, self.upper, p))

    def overlaps(self, other: "Box") -> bool:
        """True when the interiors intersect (shared faces do not count)."""
        return all(
            max(a, c) < min(b, d)
            for a, b, c, d in zip(self.lower, self.upper, other.lower, other.upper)
        )

    def to_json(self) -> list[list[float]]:
        return [[a, b] for a, b in zip(self.lower, self.upper)]


def as_point(point, dim: int) -> tuple[float, ...]:
    p = np.atleast_1d(np.asarray(point, dtype=float))
    if p.shape != (dim,):
        raise GeometryError(f"expected a {dim}D point, got {point!r}")
    return tuple(float(v) for v in p)


def interval(a: float, b: float) -> Box:
    return Box((a,), (b,))


def rectangle(x_bounds: Sequence[float], y_bounds: Sequence[float]) -> Box:
    return Box((x_bounds[0], y_bounds[0]), (x_bounds[1], y_bounds[1]))


def unit_interval(length: float = 1.0) -> Box:
    return interval(0.0, length)


def unit_square() -> Box:
    return rectangle((0.0, 1.0), (0.0, 1.0))


def box_from_bounds(bounds) -> Box:
    """Build a box from ``[[a, b]]`` or ``[[a1, b1], [a2, b2]]``."""
    arr = np.asarray(bounds, dtype=float)
    if arr.ndim == 1 and arr.shape == (2,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError(f"bounds must be a list of [lower, upper] pairs, got {bounds!r}")
    return Box(tuple(arr[:, 0]), tuple(arr[:, 1]))
