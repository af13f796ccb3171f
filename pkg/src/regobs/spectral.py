"""Truncated Dirichlet eigenbases on intervals and rectangles.

Every basis is orthonormal on its own box.  A basis built on the whole
domain describes the dynamics; a basis built on a subregion gives
coordinates for regional states.  Functions of one basis can be paired with
functions of another over any box inside both, in closed form.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import BasisError, GeometryError
from .geometry import Box, as_point

__all__ = [
    "CONVENTIONS",
    "EigenBasis",
    "SpectralState",
    "TimeGrid",
    "PiecewiseControl",
    "build_basis",
    "evolve",
    "evolve_with_input",
    "inner_product_region",
    "cross_gram",
    "restrict",
    "extend",
    "eval_state",
]

CONVENTIONS = ("laplacian", "paper")


def _axis_eigenvalue(k, length, convention: str):
    scale = np.pi ** 2 if convention == "laplacian" else 1.0
    return -scale * np.asarray(k, dtype=float) ** 2 / length ** 2


@dataclass(frozen=True, eq=False)
class EigenBasis:
    """First ``N`` Dirichlet eigenpairs of the Laplacian on ``region``.

    ``indices`` has shape ``(N, dim)`` with 1-based mode numbers along each
    axis; ``eigenvalues`` are sorted by magnitude.  ``next_eigenvalue`` is the
    eigenvalue of the first mode left out, used to detect multiplicity
    groups cut by the truncation.
    """

    region: Box
    indices: np.ndarray
    eigenvalues: np.ndarray
    convention: str = "laplacian"
    next_eigenvalue: float = float("nan")

    def __len__(self) -> int:
        return len(self.eigenvalues)

    @property
    def N(self) -> int:
        return len(self.eigenvalues)

    @property
    def dim(self) -> int:
        return self.region.dim

    def mode_label(self, pos: int):
        idx = tuple(int(v) for v in self.indices[pos])
        return idx[0] if self.dim == 1 else idx

    def position(self, mode) -> int:
        """0-based position of a mode given as ``j`` (1D) or ``(i, j)`` (2D)."""
        target = np.atleast_1d(np.asarray(mode, dtype=int))
        if target.shape != (self.dim,):
            raise BasisError(f"mode {mode!r} does not match a {self.dim}D basis")
        hits = np.flatnonzero(np.all(self.indices == target[None, :], axis=1))
        if hits.size == 0:
            raise BasisError(f"mode {mode!r} is not among the first {self.N} modes")
        return int(hits[0])

    def axis_factor(self, axis: int, x, derivative: bool = False) -> np.ndarray:
        """1D factors of every mode along ``axis`` at coordinates ``x``.

        Returns shape ``(N, len(x))``; points outside the box give zero.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        a, b = self.region.lower[axis], self.region.upper[axis]
        length = b - a
        k = self.indices[:, axis].astype(float)[:, None] * np.pi / length
        s = np.sqrt(2.0 / length)
        arg = k * (x[None, :] - a)
        vals = s * k * np.cos(arg) if derivative else s * np.sin(arg)
        inside = (x >= a - 1e-12) & (x <= b + 1e-12)
        return np.where(inside[None, :], vals, 0.0)

    def values(self, points, derivative_axis: int | None = None) -> np.ndarray:
        """Mode values (or one partial derivative) at points, shape ``(N, P)``."""
        pts = np.asarray(points, dtype=float)
        if self.dim == 1:
            pts = pts.reshape(-1, 1)
        pts = pts.reshape(-1, self.dim)
        out = np.ones((self.N, len(pts)))
        for axis in range(self.dim):
            out *= self.axis_factor(axis, pts[:, axis], derivative=(axis == derivative_axis))
        return out


def build_basis(region: Box, N: int, convention: str = "laplacian") -> EigenBasis:
    """Build the truncated eigenbasis of ``region``.

    In 2D all products ``sin(i.) sin(j.)`` are ranked by eigenvalue magnitude,
    ties broken by ``(i, j)``, and the first ``N`` are kept.  Under the
    ``paper`` convention the eigenvalues carry no ``pi**2`` factor; the
    eigenfunctions are the same.
    """
    if not isinstance(region, Box):
        raise GeometryError("region must be a Box")
    if int(N) != N or N < 1:
        raise BasisError(f"truncation N must be a positive integer, got {N!r}")
    if convention not in CONVENTIONS:
        raise BasisError(f"unknown eigenvalue convention {convention!r}")
    N = int(N)
    if region.dim == 1:
        idx = np.arange(1, N + 2)[:, None]
    else:
        i, j = np.meshgrid(np.arange(1, N + 2), np.arange(1, N + 2), indexing="ij")
        idx = np.column_stack([i.ravel(), j.ravel()])
    lam = np.zeros(len(idx))
    for axis, length in enumerate(region.lengths):
        lam += _axis_eigenvalue(idx[:, axis], length, convention)
    if region.dim == 1:
        order = np.arange(len(idx))
    else:
        order = np.lexsort((idx[:, 1], idx[:, 0], -lam))
    idx, lam = idx[order], lam[order]
    return EigenBasis(region, idx[:N].copy(), lam[:N].copy(), convention, float(lam[N]))


@dataclass(frozen=True, eq=False)
class SpectralState:
    """State ``sum_k c_k phi_k`` over a basis."""

    basis: EigenBasis
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if c.shape != (self.basis.N,):
            raise BasisError(f"expected {self.basis.N} coefficients, got {c.size}")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def mode(cls, basis: EigenBasis, mode, amplitude: float = 1.0) -> "SpectralState":
        c = np.zeros(basis.N)
        c[basis.position(mode)] = amplitude
        return cls(basis, c)

    @property
    def norm(self) -> float:
        """L2 norm over the basis box (orthonormal coordinates)."""
        return float(np.linalg.norm(self.coefficients))

    def __add__(self, other: "SpectralState") -> "SpectralState":
        if other.basis is not self.basis:
            raise BasisError("cannot add states over different bases")
        return SpectralState(self.basis, self.coefficients + other.coefficients)

    def __mul__(self, scalar: float) -> "SpectralState":
        return SpectralState(self.basis, scalar * self.coefficients)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class TimeGrid:
    T: float
    samples: np.ndarray

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"horizon T must be positive, got {self.T}")
        s = np.asarray(self.samples, dtype=float).reshape(-1)
        if s.size < 2:
            raise ValueError("time grid needs at least two samples")
        if s[0] < 0 or s[-1] > self.T * (1 + 1e-12) or np.any(np.diff(s) <= 0):
            raise ValueError("time samples must be strictly increasing inside [0, T]")
        object.__setattr__(self, "samples", s)

    @classmethod
    def uniform(cls, T: float, count: int = 64) -> "TimeGrid":
        return cls(T, np.linspace(0.0, T, count))

    def __len__(self) -> int:
        return len(self.samples)


def evolve(state: SpectralState, t: float) -> SpectralState:
    """Apply the heat semigroup for time ``t``."""
    if t < 0:
        raise ValueError(f"evolution time must be non-negative, got {t}")
    return SpectralState(state.basis, np.exp(state.basis.eigenvalues * t) * state.coefficients)


@dataclass(frozen=True, eq=False)
class PiecewiseControl:
    """Controls constant on ``[breaks[s], breaks[s+1])``, one row per actuator."""

    breaks: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        br = np.asarray(self.breaks, dtype=float).reshape(-1)
        vals = np.atleast_2d(np.asarray(self.values, dtype=float))
        if br.size < 2 or np.any(np.diff(br) <= 0):
            raise ValueError("control breakpoints must be strictly increasing")
        if vals.shape[1] != br.size - 1:
            raise ValueError(f"need {br.size - 1} control values per actuator, got {vals.shape[1]}")
        object.__setattr__(self, "breaks", br)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, values: Sequence[float], t0: float, t1: float) -> "PiecewiseControl":
        v = np.asarray(values, dtype=float).reshape(-1, 1)
        return cls(np.array([t0, t1]), v)


def evolve_with_input(state: SpectralState, t: float, actuators, control: PiecewiseControl) -> SpectralState:
    """Mild solution with input ``B u`` built from actuator profiles.

    Each actuator is a sensor-shaped object; its spatial profile projected on
    the basis gives one column of ``B``.
    """
    from .sensors import output_row

    out = evolve(state, t)
    if len(actuators) == 0:
        return out
    if control.values.shape[0] != len(actuators):
        raise ValueError(f"{len(actuators)} actuators but {control.values.shape[0]} control rows")
    if control.breaks[0] < 0 or control.breaks[-1] > t * (1 + 1e-12):
        raise ValueError("control breakpoints must lie inside [0, t]")
    lam = state.basis.eigenvalues
    if np.any(np.abs(lam) < 1e-300):
        raise BasisError("zero eigenvalue in basis")
    B = np.column_stack([output_row(a, state.basis) for a in actuators])  # (N, p)
    start, end = control.breaks[:-1], control.breaks[1:]
    # integral of exp(lam (t - tau)) over each piece
    kernel = (np.exp(lam[:, None] * (t - start[None, :])) - np.exp(lam[:, None] * (t - end[None, :]))) / lam[:, None]
    forced = np.einsum("kp,ps,ks->k", B, control.values, kernel)
    return SpectralState(state.basis, out.coefficients + forced)


def _sine_product_integral(ka, ca, kb, cb, lo, hi):
    """Closed form of int_lo^hi sin(ka x - ca) sin(kb x - cb) dx (broadcast)."""
    h = hi - lo
    m = 0.5 * (lo + hi)

    def cos_integral(k, c):
        # int_lo^hi cos(k x - c) dx, stable as k -> 0
        return h * np.cos(k * m - c) * np.sinc(k * h / (2.0 * np.pi))

    return 0.5 * (cos_integral(ka - kb, ca - cb) - cos_integral(ka + kb, ca + cb))


def _axis_cross(basis_a: EigenBasis, basis_b: EigenBasis, axis: int, lo: float, hi: float) -> np.ndarray:
    la, lb = basis_a.region.lengths[axis], basis_b.region.lengths[axis]
    aa, ab = basis_a.region.lower[axis], basis_b.region.lower[axis]
    ka = basis_a.indices[:, axis][:, None] * np.pi / la
    kb = basis_b.indices[:, axis][None, :] * np.pi / lb
    s = np.sqrt(2.0 / la) * np.sqrt(2.0 / lb)
    return s * _sine_product_integral(ka, ka * aa, kb, kb * ab, lo, hi)


def cross_gram(basis_a: EigenBasis, basis_b: EigenBasis, region: Box | None = None) -> np.ndarray:
    """Matrix of ``<phi_m, psi_k>`` over ``region``, shape ``(N_a, N_b)``.

    ``region`` defaults to the region of ``basis_b`` and must lie inside the
    boxes of both bases.
    """
    region = basis_b.region if region is None else region
    if region.dim != basis_a.dim or region.dim != basis_b.dim:
        raise GeometryError("bases and region must share a dimension")
    for basis in (basis_a, basis_b):
        if not basis.region.contains_box(region):
            raise GeometryError(f"region {region.to_json()} is outside basis box {basis.region.to_json()}")
    out = np.ones((basis_a.N, basis_b.N))
    for axis in range(region.dim):
        out *= _axis_cross(basis_a, basis_b, axis, region.lower[axis], region.upper[axis])
    return out


def inner_product_region(basis_a: EigenBasis, mode_a, basis_b: EigenBasis, mode_b, region: Box) -> float:
    """Exact ``int_region phi_a phi_b`` for one pair of modes."""
    sub_a = _single_mode(basis_a, mode_a)
    sub_b = _single_mode(basis_b, mode_b)
    return float(cross_gram(sub_a, sub_b, region)[0, 0])


def _single_mode(basis: EigenBasis, mode) -> EigenBasis:
    pos = basis.position(mode)
    return EigenBasis(basis.region, basis.indices[pos:pos + 1], basis.eigenvalues[pos:pos + 1], basis.convention)


def restrict(state: SpectralState, region: Box, region_basis: EigenBasis) -> SpectralState:
    """Coordinates of ``state`` restricted to ``region`` in ``region_basis``."""
    if region_basis.region != region:
        raise BasisError("region basis is not built on the requested region")
    if region_basis is state.basis:
        return SpectralState(region_basis, state.coefficients.copy())
    X = cross_gram(state.basis, region_basis, region)
    return SpectralState(region_basis, X.T @ state.coefficients)


def extend(region_state: SpectralState, basis: EigenBasis) -> SpectralState:
    """Extension by zero of a regional state, projected on ``basis``."""
    if region_state.basis is basis:
        return SpectralState(basis, region_state.coefficients.copy())
    X = cross_gram(basis, region_state.basis, region_state.basis.region)
    return SpectralState(basis, X @ region_state.coefficients)


def eval_state(state: SpectralState, point) -> float:
    """Value of the state at a point of the basis box."""
    p = as_point(point, state.basis.dim)
    if not state.basis.region.contains_point(p):
        raise GeometryError(f"point {p} is outside {state.basis.region.to_json()}")
    return float(state.coefficients @ state.basis.values(np.array([p]))[:, 0])
