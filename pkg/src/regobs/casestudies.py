"""Worked scenarios: the 1D pointwise counter-example and rectangle placement screens.

The placement predicates are advisory screens built on one mechanism: a
mode that is antisymmetric about the symmetry centre of a sensor gives a
zero pairing with it.  The authoritative verdict always comes from
:func:`regobs.observability.rank_test` or the Gramian test, and the reports
carry both.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GeometryError, PredicateError
from .geometry import Box, as_point, interval, unit_interval
from .observability import (
    EPS_GROUP,
    TAU_GRAM,
    TAU_RANK,
    StrategicReport,
    gramian_test,
    group_eigenvalues,
    rank_test,
    regional_gramian,
)
from .sensors import Sensor, SymmetricProfile, UniformProfile, output_matrix, pointwise
from .spectral import EigenBasis, TimeGrid, build_basis, cross_gram, inner_product_region

__all__ = [
    "Q_MAX",
    "TAU_RAT",
    "RationalWitness",
    "PlacementVerdict",
    "CounterExampleReport",
    "rational_detect",
    "tan_condition",
    "counterexample_1d",
    "corollary_41_predicate",
    "corollary_42_predicate",
    "corollary_43_predicate",
    "multiplicity_condition_29",
    "axis_index_limits",
]

Q_MAX = 1000
TAU_RAT = 1e-9

MEMBERSHIP_NOTE = (
    "pointwise screen uses the 'not an integer' form of the index condition; "
    "the 'is an integer' wording would declare exactly the nodal placements strategic"
)


@dataclass(frozen=True)
class RationalWitness:
    value: float
    detected: tuple[int, int] | None
    q_max: int
    tau_rat: float

    @property
    def is_rational(self) -> bool:
        return self.detected is not None

    def to_dict(self) -> dict:
        return {"value": self.value, "detected": list(self.detected) if self.detected else None,
                "q_max": self.q_max, "tau_rat": self.tau_rat}


def rational_detect(x: float, q_max: int = Q_MAX, tau_rat: float = TAU_RAT) -> RationalWitness:
    """First continued-fraction convergent ``p/q`` (``q <= q_max``) within ``tau_rat`` of ``x``."""
    if q_max < 1:
        raise ValueError("q_max must be at least 1")
    x = float(x)
    h_prev, h = 1, math.floor(x)
    k_prev, k = 0, 1
    rest = x - math.floor(x)
    while k <= q_max:
        if abs(x - h / k) < tau_rat:
            g = math.gcd(h, k)
            return RationalWitness(x, (h // g, k // g), q_max, tau_rat)
        if rest < 1e-15:
            break
        inv = 1.0 / rest
        a = math.floor(inv)
        rest = inv - a
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
    return RationalWitness(x, None, q_max, tau_rat)


def tan_condition(i0: int, j0: int, alpha: float) -> tuple[float, float, bool]:
    """Cross-multiplied form of ``i0 tan(j0 pi a) = j0 tan(i0 pi a)``.

    ``lhs = i0 sin(j0 pi a) cos(i0 pi a)``, ``rhs = j0 sin(i0 pi a) cos(j0 pi a)``,
    free of tangent poles.
    """
    lhs = i0 * math.sin(j0 * math.pi * alpha) * math.cos(i0 * math.pi * alpha)
    rhs = j0 * math.sin(i0 * math.pi * alpha) * math.cos(j0 * math.pi * alpha)
    equal = abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), abs(rhs))
    return lhs, rhs, equal


def _integer_hits(ratio: float, i_max: int, tau_rat: float) -> list[int]:
    return [i for i in range(1, i_max + 1) if abs(i * ratio - round(i * ratio)) < tau_rat]


@dataclass
class PlacementVerdict:
    """Outcome of an advisory placement screen."""

    candidate: bool
    failing: dict[int, list[int]]
    ratios: tuple[float, ...]
    i_max: tuple[int, ...]
    tau_rat: float
    checked_axes: tuple[int, ...]
    notes: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.candidate

    def to_dict(self) -> dict:
        return {
            "candidate": self.candidate,
            "advisory": True,
            "failing": {str(k + 1): v for k, v in self.failing.items()},
            "ratios": list(self.ratios),
            "i_max": list(self.i_max),
            "tau_rat": self.tau_rat,
            "notes": list(self.notes),
        }


def _per_axis(i_max, dim: int) -> tuple[int, ...]:
    if np.ndim(i_max) == 0:
        return (int(i_max),) * dim
    vals = tuple(int(v) for v in i_max)
    if len(vals) != dim:
        raise ValueError(f"i_max needs {dim} entries")
    return vals


def axis_index_limits(basis: EigenBasis) -> tuple[int, ...]:
    """Largest mode number present along each axis of a basis."""
    return tuple(int(v) for v in basis.indices.max(axis=0))


def _center_screen(center, region: Box, i_max, tau_rat: float, axes: Sequence[int]) -> PlacementVerdict:
    limits = _per_axis(i_max, region.dim)
    ratios = tuple((c - a) / l for c, a, l in zip(center, region.lower, region.lengths))
    failing = {}
    for axis in axes:
        hits = _integer_hits(ratios[axis], limits[axis], tau_rat)
        if hits:
            failing[axis] = hits
    return PlacementVerdict(not failing, failing, ratios, limits, tau_rat, tuple(axes))


def corollary_42_predicate(b, region: Box, i_max=10, tau_rat: float = TAU_RAT) -> PlacementVerdict:
    """Screen a pointwise location: no ``i (b_a - alpha_a) / L_a`` may be an integer."""
    p = as_point(b, region.dim)
    if not region.contains_point(p, open_=True):
        raise GeometryError(f"sensor location {p} is not strictly inside {region.to_json()}")
    out = _center_screen(p, region, i_max, tau_rat, range(region.dim))
    out.notes.append(MEMBERSHIP_NOTE)
    return out


def corollary_41_predicate(sensor: Sensor, region: Box, i_max=10, tau_rat: float = TAU_RAT) -> PlacementVerdict:
    """Screen a zone sensor with an even separable profile by its support centre."""
    if sensor.kind != "zone-internal":
        raise PredicateError("zone screen needs an internal zone sensor")
    if not isinstance(sensor.profile, (SymmetricProfile, UniformProfile)):
        raise PredicateError("zone screen needs a symmetric-product profile")
    if not region.contains_point(sensor.center):
        raise GeometryError(f"support centre {sensor.center} is outside {region.to_json()}")
    out = _center_screen(sensor.center, region, i_max, tau_rat, range(region.dim))
    out.notes.append("support half-widths can add zero pairings that this screen does not test")
    return out


def _mirror_axes(verts: np.ndarray, tol: float = 1e-10) -> tuple[list[int], tuple[float, float]]:
    """Axes ``a`` such that reflection about ``x_a = centre_a`` maps the vertex set to itself."""
    center = 0.5 * (verts.min(axis=0) + verts.max(axis=0))
    axes = []
    for axis in range(2):
        mirrored = verts.copy()
        mirrored[:, axis] = 2 * center[axis] - mirrored[:, axis]
        d = np.linalg.norm(mirrored[:, None, :] - verts[None, :, :], axis=2)
        if np.all(d.min(axis=1) <= tol):
            axes.append(axis)
    return axes, (float(center[0]), float(center[1]))


def corollary_43_predicate(sensor: Sensor, region: Box, i_max=10, tau_rat: float = TAU_RAT) -> PlacementVerdict:
    """Screen a filament that is mirror-symmetric about an axis-parallel line.

    The integer test runs on every axis along which the polyline is symmetric,
    with the symmetry-centre coordinate.
    """
    if sensor.kind != "filament":
        raise PredicateError("filament screen needs a filament sensor")
    if not isinstance(sensor.profile, UniformProfile):
        raise PredicateError("filament screen needs a uniform weight along the curve")
    axes, center = _mirror_axes(np.asarray(sensor.support))
    if not axes:
        raise PredicateError("filament is not symmetric about an axis-parallel line")
    if not region.contains_point(center):
        raise GeometryError(f"filament centre {center} is outside {region.to_json()}")
    return _center_screen(center, region, i_max, tau_rat, axes)


def multiplicity_condition_29(region: Box, q_max: int = Q_MAX, tau_rat: float = TAU_RAT,
                              N: int = 25, eps_group: float = EPS_GROUP) -> dict:
    """Rational test of the squared side ratio, checked against the grouped spectrum."""
    if region.dim != 2:
        raise GeometryError("condition needs a 2D region")
    l1, l2 = region.lengths
    witness = rational_detect(l1 ** 2 / l2 ** 2, q_max, tau_rat)
    grouped = group_eigenvalues(build_basis(region, N), eps_group)
    return {
        "witness": witness,
        "predicts_simple_spectrum": not witness.is_rational,
        "observed_r": grouped.r,
        "N": N,
    }


@dataclass
class CounterExampleReport:
    alpha: float
    b: float
    beta: float
    N: int
    T: float
    even_J: list[int]
    numeric_blind: list[int]
    global_report: StrategicReport
    regional_report: StrategicReport
    tan_table: list[dict]
    cross_products: list[dict]
    candidate_states: list[dict]
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "b": self.b,
            "beta": self.beta,
            "N": self.N,
            "T": self.T,
            "even_J": self.even_J,
            "numeric_blind": self.numeric_blind,
            "global": self.global_report.to_dict(),
            "regional": self.regional_report.to_dict(),
            "tan_condition": self.tan_table,
            "cross_products": self.cross_products,
            "candidate_states": self.candidate_states,
            "notes": list(self.notes),
        }


def counterexample_1d(alpha: float = 0.25, b: float = 0.5, N: int = 20, T: float = 1.0,
                      pairs: Sequence[tuple[int, int]] = ((6, 4),), N_region: int | None = None,
                      samples: int = 64, convention: str = "laplacian",
                      tau_rank: float = TAU_RANK, tau_gram: float = TAU_GRAM,
                      tau_rat: float = TAU_RAT) -> CounterExampleReport:
    """Pointwise sensor at ``b`` on ``(0, 1)``, observed on ``[alpha, alpha + b]``.

    Runs the rank test on the unit interval and the Gramian test on the
    region, and tabulates the modal quantities behind the verdicts.
    """
    beta = alpha + b
    if not (0 < alpha and beta <= 1 + 1e-15 and 0 < b < 1):
        raise GeometryError(f"region [{alpha}, {beta}] is not inside [0, 1] with b in (0, 1)")
    need = max((max(p) for p in pairs), default=1)
    if N < need:
        raise ValueError(f"N={N} is smaller than the largest tabulated index {need}")
    domain = unit_interval()
    region = interval(alpha, min(beta, 1.0))
    basis = build_basis(domain, N, convention)
    region_basis = build_basis(region, N_region or N, convention)
    sensors = [pointwise(b)]
    times = TimeGrid.uniform(T, samples)

    global_report = rank_test(sensors, basis, tau_rank=tau_rank, times=times)
    regional_report = gramian_test(sensors, basis, region_basis, T, tau_gram=tau_gram,
                                   tau_rank=tau_rank, times=times)

    even_J = []
    for j in range(1, N + 1):
        m = round(j * b)
        if m > 0 and m % 2 == 0 and abs(j * b - m) < tau_rat:
            even_J.append(j)
    C = output_matrix(sensors, basis)[0]
    blind_thr = tau_rank * np.max(np.abs(C))
    numeric_blind = [j for j in range(1, N + 1) if abs(C[j - 1]) <= blind_thr]

    tan_table = []
    cross = []
    for i0, j0 in pairs:
        lhs, rhs, equal = tan_condition(i0, j0, alpha)
        tan_table.append({"i0": i0, "j0": j0, "alpha": alpha, "lhs": lhs, "rhs": rhs, "equal": equal})
        cross.append({"j0": j0, "i0": i0,
                      "value": inner_product_region(basis, j0, basis, i0, region)})

    W = regional_gramian(sensors, basis, basis, T, C=C[None, :]).matrix
    G_region = cross_gram(basis, basis, region)
    candidates = []
    for j in sorted({j for pair in pairs for j in pair}):
        # phi_j restricted to the region and extended by zero
        c = G_region[:, j - 1]
        energy = float(c @ W @ c)
        ysup = float(np.max(np.abs(C @ (np.exp(np.outer(basis.eigenvalues, times.samples)) * c[:, None]))))
        candidates.append({
            "mode": j,
            "region_norm": float(np.sqrt(G_region[j - 1, j - 1])),
            "output_energy": energy,
            "output_sup": ysup,
            "regionally_visible": bool(energy > tau_gram * float(np.trace(W)) / N),
        })

    notes = []
    if set(even_J) != set(numeric_blind):
        notes.append(
            "index set {j : j b even} differs from the modes that vanish at b; "
            "a mode vanishes whenever j b is any integer"
        )
    for g in (global_report, regional_report):
        notes.extend(g.notes)
    return CounterExampleReport(alpha, b, beta, N, T, even_J, numeric_blind, global_report,
                                regional_report, tan_table, cross, candidates, notes)
