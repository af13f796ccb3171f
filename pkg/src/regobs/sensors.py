"""Sensors ``(D, f)`` and the output operator they define on a basis.

Supported kinds: internal zone, internal pointwise, boundary zone, boundary
pointwise and filament (polyline) sensors.  Pointwise and boundary
observations are unbounded on L2; here they act on truncated smooth states
only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
import shapely
from scipy.interpolate import RegularGridInterpolator

from .errors import GeometryError, SensorError
from .geometry import Box, as_point
from .quadrature import composite_gauss, composite_gauss_box
from .spectral import EigenBasis, SpectralState, TimeGrid

__all__ = [
    "KINDS",
    "UniformProfile",
    "SymmetricProfile",
    "TableProfile",
    "Sensor",
    "OutputTrajectory",
    "zone",
    "pointwise",
    "boundary_point",
    "boundary_zone",
    "filament",
    "validate_suite",
    "output_row",
    "output_matrix",
    "simulate_output",
]

KINDS = ("zone-internal", "pointwise-internal", "zone-boundary", "pointwise-boundary", "filament")

QUAD_TOL = 1e-12
GEOM_TOL = 1e-12


@dataclass(frozen=True)
class UniformProfile:
    value: float = 1.0


# Even bump shapes about the support centre, in units of the half-width.
_FACTOR_SHAPES = {
    "uniform": lambda u: np.ones_like(u),
    "cosine": lambda u: np.cos(0.5 * np.pi * u),
    "hat": lambda u: 1.0 - np.abs(u),
    "parabolic": lambda u: 1.0 - u ** 2,
}


@dataclass(frozen=True)
class SymmetricProfile:
    """Separable profile ``f(x) = prod_a g_a((x_a - c_a) / h_a)``.

    Every factor is even about the support centre ``c`` so symmetry holds by
    construction.  ``shapes`` names one entry of the factor table per axis.
    """

    shapes: tuple[str, ...]

    def __post_init__(self):
        shapes = (self.shapes,) if isinstance(self.shapes, str) else tuple(self.shapes)
        for s in shapes:
            if s not in _FACTOR_SHAPES:
                raise SensorError(f"unknown symmetric factor {s!r}; choose from {sorted(_FACTOR_SHAPES)}")
        object.__setattr__(self, "shapes", shapes)

    def factor(self, axis: int, x: np.ndarray, lo: float, hi: float) -> np.ndarray:
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        return _FACTOR_SHAPES[self.shapes[axis]]((x - c) / h)


@dataclass(frozen=True, eq=False)
class TableProfile:
    """Profile sampled on a grid and interpolated (bi)linearly.

    For zone sensors ``axes`` hold absolute coordinates covering the support.
    For filaments a single axis holds the arc-length fraction in ``[0, 1]``.
    """

    axes: tuple[np.ndarray, ...]
    values: np.ndarray

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float).reshape(-1) for a in self.axes)
        vals = np.asarray(self.values, dtype=float)
        if len(axes) == 0 or vals.size == 0:
            raise SensorError("profile table is empty")
        if vals.shape != tuple(len(a) for a in axes):
            raise SensorError(f"table values shape {vals.shape} does not match axes")
        for a in axes:
            if len(a) < 2 or np.any(np.diff(a) <= 0):
                raise SensorError("table axes need at least two strictly increasing nodes")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if len(self.axes) == 1:
            return np.interp(pts.reshape(-1), self.axes[0], self.values, left=0.0, right=0.0)
        interp = RegularGridInterpolator(self.axes, self.values, bounds_error=False, fill_value=0.0)
        return interp(pts.reshape(-1, len(self.axes)))


@dataclass(frozen=True, eq=False)
class Sensor:
    """A measurement device.

    ``support`` depends on ``kind``: a :class:`Box` for internal zones, a point
    tuple for pointwise kinds, a pair of points for boundary zones and an
    ``(M, 2)`` vertex array for filaments.
    """

    kind: str
    support: object
    profile: object = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SensorError(f"unknown sensor kind {self.kind!r}")
        if self.kind == "zone-internal":
            if not isinstance(self.support, Box):
                raise SensorError("zone support must be a Box")
        elif self.kind in ("pointwise-internal", "pointwise-boundary"):
            pt = np.atleast_1d(np.asarray(self.support, dtype=float))
            object.__setattr__(self, "support", tuple(float(v) for v in pt))
        elif self.kind == "zone-boundary":
            seg = np.asarray(self.support, dtype=float)
            if seg.shape != (2, 2):
                raise SensorError("boundary zone support must be two 2D endpoints")
            if np.linalg.norm(seg[1] - seg[0]) <= 0:
                raise SensorError("boundary zone support has zero length")
            object.__setattr__(self, "support", seg)
        elif self.kind == "filament":
            verts = np.asarray(self.support, dtype=float)
            if verts.ndim != 2 or verts.shape[1] != 2 or len(verts) < 2:
                raise SensorError("filament needs a polyline of at least two 2D vertices")
            if np.any(np.linalg.norm(np.diff(verts, axis=0), axis=1) <= 0):
                raise SensorError("filament has a zero-length segment")
            object.__setattr__(self, "support", verts)
        if self.profile is None:
            object.__setattr__(self, "profile", UniformProfile())
        if isinstance(self.profile, TableProfile) and self.kind in ("pointwise-internal", "pointwise-boundary"):
            raise SensorError("pointwise sensors take no profile table")

    @property
    def center(self) -> tuple[float, ...]:
        if self.kind == "zone-internal":
            return self.support.center
        if self.kind in ("pointwise-internal", "pointwise-boundary"):
            return self.support
        pts = np.asarray(self.support)
        return tuple(0.5 * (pts.min(axis=0) + pts.max(axis=0)))

    def moved_to(self, center: Sequence[float]) -> "Sensor":
        """Copy translated so that its centre sits at ``center``."""
        shift = np.asarray(center, dtype=float) - np.asarray(self.center, dtype=float)
        if self.kind == "zone-internal":
            sup = Box(tuple(np.add(self.support.lower, shift)), tuple(np.add(self.support.upper, shift)))
        elif self.kind in ("pointwise-internal", "pointwise-boundary"):
            sup = tuple(np.add(self.support, shift))
        else:
            sup = np.asarray(self.support) + shift[None, :]
        return Sensor(self.kind, sup, self.profile, self.label)


def zone(support: Box, profile=None, label: str = "") -> Sensor:
    return Sensor("zone-internal", support, profile, label)


def pointwise(point, label: str = "") -> Sensor:
    return Sensor("pointwise-internal", point, None, label)


def boundary_point(point, label: str = "") -> Sensor:
    return Sensor("pointwise-boundary", point, None, label)


def boundary_zone(start, end, profile=None, label: str = "") -> Sensor:
    return Sensor("zone-boundary", np.array([start, end], dtype=float), profile, label)


def filament(vertices, profile=None, label: str = "") -> Sensor:
    return Sensor("filament", vertices, profile, label)


def _geometry(sensor: Sensor):
    if sensor.kind == "zone-internal":
        b = sensor.support
        if b.dim == 1:
            return ("interval", b.lower[0], b.upper[0])
        return shapely.box(b.lower[0], b.lower[1], b.upper[0], b.upper[1])
    if sensor.kind in ("pointwise-internal", "pointwise-boundary"):
        if len(sensor.support) == 1:
            return ("interval", sensor.support[0], sensor.support[0])
        return shapely.Point(sensor.support)
    return shapely.LineString(np.asarray(sensor.support))


def validate_suite(sensors: Sequence[Sensor], domain: Box) -> None:
    """Check that each support fits ``domain`` and supports are pairwise disjoint."""
    if len(sensors) == 0:
        raise SensorError("sensor suite is empty")
    for s in sensors:
        _check_support(s, domain)
    for (i, a), (j, b) in combinations(enumerate(sensors), 2):
        ga, gb = _geometry(a), _geometry(b)
        if isinstance(ga, tuple) != isinstance(gb, tuple):
            raise SensorError("sensor dimensions differ inside one suite")
        if isinstance(ga, tuple):
            hit = max(ga[1], gb[1]) <= min(ga[2], gb[2])
        else:
            hit = ga.intersects(gb)
        if hit:
            raise SensorError(f"sensors {a.label or i} and {b.label or j} have intersecting supports")


def _boundary_normal(point: tuple[float, ...], box: Box) -> tuple[int, float]:
    """Axis and sign of the outward normal at a boundary point."""
    hits = []
    for axis, (a, b) in enumerate(zip(box.lower, box.upper)):
        if abs(point[axis] - a) <= GEOM_TOL:
            hits.append((axis, -1.0))
        elif abs(point[axis] - b) <= GEOM_TOL:
            hits.append((axis, 1.0))
    if len(hits) != 1:
        raise GeometryError(f"point {point} is not on a single face of {box.to_json()}")
    return hits[0]


def _check_support(sensor: Sensor, box: Box) -> None:
    kind = sensor.kind
    if kind == "zone-internal":
        if sensor.support.dim != box.dim or not box.contains_box(sensor.support):
            raise GeometryError(f"zone support {sensor.support.to_json()} is outside {box.to_json()}")
    elif kind == "pointwise-internal":
        p = as_point(sensor.support, box.dim)
        if not box.contains_point(p, open_=True):
            raise GeometryError(f"pointwise sensor at {p} is not inside the open box {box.to_json()}")
    elif kind == "pointwise-boundary":
        p = as_point(sensor.support, box.dim)
        if not box.on_boundary(p):
            raise GeometryError(f"boundary sensor at {p} is not on the boundary of {box.to_json()}")
        _boundary_normal(p, box)
    elif kind == "zone-boundary":
        if box.dim != 2:
            raise GeometryError("boundary zone sensors need a 2D domain")
        _segment_face(sensor.support, box)
    else:
        if box.dim != 2:
            raise GeometryError("filament sensors need a 2D domain")
        for v in sensor.support:
            if not box.contains_point(v):
                raise GeometryError(f"filament vertex {tuple(v)} is outside {box.to_json()}")


def _segment_face(seg: np.ndarray, box: Box) -> tuple[int, float, int]:
    """Normal axis, outward sign and tangent axis of a boundary segment."""
    p0, p1 = tuple(seg[0]), tuple(seg[1])
    for axis, (a, b) in enumerate(zip(box.lower, box.upper)):
        for edge, sign in ((a, -1.0), (b, 1.0)):
            if abs(p0[axis] - edge) <= GEOM_TOL and abs(p1[axis] - edge) <= GEOM_TOL:
                t = 1 - axis
                lo, hi = sorted((p0[t], p1[t]))
                if lo < box.lower[t] - GEOM_TOL or hi > box.upper[t] + GEOM_TOL:
                    break
                return axis, sign, t
    raise GeometryError(f"segment {seg.tolist()} does not lie on one face of {box.to_json()}")


def _axis_sine_integral(basis: EigenBasis, axis: int, lo: float, hi: float, derivative: bool = False) -> np.ndarray:
    """Closed form of the integral of each mode's axis factor over ``[lo, hi]``."""
    a = basis.region.lower[axis]
    length = basis.region.lengths[axis]
    k = basis.indices[:, axis] * np.pi / length
    s = np.sqrt(2.0 / length)
    if derivative:
        # int s k cos(k (x - a)) dx
        return s * (np.sin(k * (hi - a)) - np.sin(k * (lo - a)))
    return s * (np.cos(k * (lo - a)) - np.cos(k * (hi - a))) / k


def _zone_row(sensor: Sensor, basis: EigenBasis) -> np.ndarray:
    sup = sensor.support
    prof = sensor.profile
    if isinstance(prof, UniformProfile):
        row = np.full(basis.N, prof.value)
        for axis in range(basis.dim):
            row *= _axis_sine_integral(basis, axis, sup.lower[axis], sup.upper[axis])
        return row
    if isinstance(prof, SymmetricProfile):
        if len(prof.shapes) != basis.dim:
            raise SensorError("symmetric profile needs one factor per axis")
        row = np.ones(basis.N)
        for axis in range(basis.dim):
            lo, hi = sup.lower[axis], sup.upper[axis]
            row *= composite_gauss(
                lambda x, ax=axis, lo=lo, hi=hi: basis.axis_factor(ax, x) * prof.factor(ax, x, lo, hi),
                lo, hi, tol=QUAD_TOL,
            )
        return row
    if isinstance(prof, TableProfile):
        if len(prof.axes) != basis.dim:
            raise SensorError("profile table dimension does not match the basis")
        return composite_gauss_box(lambda pts: basis.values(pts) * prof(pts), sup, tol=QUAD_TOL)
    raise SensorError(f"unsupported profile {prof!r}")


def _boundary_zone_row(sensor: Sensor, basis: EigenBasis) -> np.ndarray:
    seg = sensor.support
    axis, sign, t = _segment_face(seg, basis.region)
    edge = seg[0, axis]
    lo, hi = sorted((seg[0, t], seg[1, t]))
    normal = sign * basis.axis_factor(axis, [edge], derivative=True)[:, 0]
    prof = sensor.profile
    if isinstance(prof, UniformProfile):
        return prof.value * normal * _axis_sine_integral(basis, t, lo, hi)
    if isinstance(prof, SymmetricProfile):
        weight = lambda x: prof.factor(0, x, lo, hi)
    elif isinstance(prof, TableProfile):
        if len(prof.axes) != 1:
            raise SensorError("boundary zone tables are 1D along the face")
        weight = prof
    else:
        raise SensorError(f"unsupported profile {prof!r}")
    tangential = composite_gauss(lambda x: basis.axis_factor(t, x) * weight(x), lo, hi, tol=QUAD_TOL)
    return normal * tangential


def _filament_row(sensor: Sensor, basis: EigenBasis) -> np.ndarray:
    verts = sensor.support
    seg_len = np.linalg.norm(np.diff(verts, axis=0), axis=1)
    total = seg_len.sum()
    start = np.concatenate([[0.0], np.cumsum(seg_len)[:-1]])
    prof = sensor.profile
    row = np.zeros(basis.N)
    for p0, p1, s0, L in zip(verts[:-1], verts[1:], start, seg_len):
        def integrand(s, p0=p0, p1=p1, s0=s0, L=L):
            pts = p0[None, :] + s[:, None] * (p1 - p0)[None, :]
            vals = basis.values(pts)
            if isinstance(prof, UniformProfile):
                w = prof.value
            elif isinstance(prof, TableProfile):
                w = prof((s0 + s * L) / total)
            else:
                raise SensorError("filament profiles are uniform or tabulated by arc fraction")
            return vals * w * L
        row += composite_gauss(integrand, 0.0, 1.0, tol=1e-10 / len(seg_len))
    return row


def output_row(sensor: Sensor, basis: EigenBasis) -> np.ndarray:
    """Action of one sensor on every mode of ``basis`` (length ``N``)."""
    _check_support(sensor, basis.region)
    kind = sensor.kind
    if kind == "pointwise-internal":
        return basis.values(np.array([sensor.support]))[:, 0]
    if kind == "pointwise-boundary":
        axis, sign = _boundary_normal(sensor.support, basis.region)
        return sign * basis.values(np.array([sensor.support]), derivative_axis=axis)[:, 0]
    if kind == "zone-internal":
        return _zone_row(sensor, basis)
    if kind == "zone-boundary":
        return _boundary_zone_row(sensor, basis)
    return _filament_row(sensor, basis)


def output_matrix(sensors: Sequence[Sensor], basis: EigenBasis) -> np.ndarray:
    """Stack of output rows, shape ``(q, N)``."""
    if len(sensors) == 0:
        return np.zeros((0, basis.N))
    return np.vstack([output_row(s, basis) for s in sensors])


@dataclass(frozen=True, eq=False)
class OutputTrajectory:
    times: TimeGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if vals.shape[1] != len(self.times):
            raise ValueError(f"{vals.shape[1]} columns for {len(self.times)} time samples")
        object.__setattr__(self, "values", vals)

    @property
    def q(self) -> int:
        return self.values.shape[0]


def simulate_output(x0: SpectralState, sensors: Sequence[Sensor], times: TimeGrid,
                    C: np.ndarray | None = None) -> OutputTrajectory:
    """Sensor outputs of the free evolution of ``x0`` on the time grid."""
    if C is None:
        if len(sensors) == 0:
            raise SensorError("no sensors to simulate")
        C = output_matrix(sensors, x0.basis)
    modal = np.exp(np.outer(x0.basis.eigenvalues, times.samples)) * x0.coefficients[:, None]
    return OutputTrajectory(times, C @ modal)
