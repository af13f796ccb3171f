"""Regional observability tests at finite truncation.

Two routes decide whether a sensor suite is strategic:

* the rank route groups equal eigenvalues and asks that every group matrix
  ``G_n`` (sensor action on the eigenspace) has full column rank, which
  needs at least as many sensors as the largest multiplicity;
* the Gramian route assembles ``M = X^T W X`` where ``W`` is the output
  Gramian over ``[0, T]`` in global coordinates and ``X`` maps regional
  coordinates to global ones by extension by zero.  ``M`` positive definite
  means every regional initial state leaves a trace in the output.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ObservabilityError, SensorError, SingularGramianError, UnderdeterminedError
from .geometry import Box
from .sensors import OutputTrajectory, Sensor, output_matrix, simulate_output, validate_suite
from .spectral import EigenBasis, SpectralState, TimeGrid, cross_gram, extend

__all__ = [
    "EPS_GROUP",
    "TAU_RANK",
    "TAU_GRAM",
    "WITNESS_TOL",
    "GroupedSpectrum",
    "GroupMatrix",
    "Gramian",
    "StrategicReport",
    "Reconstruction",
    "group_eigenvalues",
    "rank_test",
    "regional_gramian",
    "gramian_test",
    "observability_constant",
    "kernel_witness",
    "witness_output_sup",
    "reconstruct_initial_state",
    "region_norm",
    "reconstruction_errors",
]

EPS_GROUP = 1e-9
TAU_RANK = 1e-8
TAU_GRAM = 1e-10
WITNESS_TOL = 1e-8


@dataclass(frozen=True)
class GroupedSpectrum:
    eigenvalues: tuple[float, ...]
    positions: tuple[tuple[int, ...], ...]
    eps_group: float
    tail_truncated: bool = False

    @property
    def multiplicities(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.positions)

    @property
    def r(self) -> int:
        return max(self.multiplicities)

    def __len__(self) -> int:
        return len(self.positions)


def _close(a: float, b: float, eps: float) -> bool:
    return abs(a - b) <= eps * max(1.0, abs(a))


def group_eigenvalues(basis: EigenBasis, eps_group: float = EPS_GROUP) -> GroupedSpectrum:
    """Split the sorted spectrum into contiguous groups of equal eigenvalues.

    ``tail_truncated`` flags a last group that continues past the truncation.
    """
    lam = basis.eigenvalues
    groups: list[list[int]] = [[0]]
    for k in range(1, len(lam)):
        if _close(lam[groups[-1][0]], lam[k], eps_group):
            groups[-1].append(k)
        else:
            groups.append([k])
    tail = bool(np.isfinite(basis.next_eigenvalue)
                and _close(lam[groups[-1][0]], basis.next_eigenvalue, eps_group))
    return GroupedSpectrum(
        tuple(float(lam[g[0]]) for g in groups),
        tuple(tuple(g) for g in groups),
        eps_group,
        tail,
    )


@dataclass(frozen=True, eq=False)
class GroupMatrix:
    """Sensor action on one eigenspace, ``q x r_n``."""

    group_id: int
    eigenvalue: float
    positions: tuple[int, ...]
    modes: tuple
    matrix: np.ndarray
    singular_values: np.ndarray
    threshold: float
    rank: int
    null_space: np.ndarray  # (r_n, r_n - rank), orthonormal columns
    basis: EigenBasis = field(repr=False)

    @property
    def multiplicity(self) -> int:
        return len(self.positions)

    @property
    def full_rank(self) -> bool:
        return self.rank == self.multiplicity

    @property
    def smallest_singular_value(self) -> float:
        """``r_n``-th singular value, zero when there are fewer sensors."""
        if len(self.singular_values) < self.multiplicity:
            return 0.0
        return float(self.singular_values[self.multiplicity - 1])

    def to_dict(self) -> dict:
        return {
            "group": self.group_id,
            "eigenvalue": self.eigenvalue,
            "modes": [list(m) if isinstance(m, tuple) else m for m in self.modes],
            "multiplicity": self.multiplicity,
            "rank": self.rank,
            "singular_values": self.singular_values.tolist(),
            "threshold": self.threshold,
        }


@dataclass(frozen=True, eq=False)
class Gramian:
    """Regional observability Gramian in orthonormal regional coordinates."""

    matrix: np.ndarray
    T: float
    global_basis: EigenBasis = field(repr=False)
    region_basis: EigenBasis = field(repr=False)
    output_gramian: np.ndarray = field(repr=False, default=None)
    cross: np.ndarray = field(repr=False, default=None)

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def threshold(self, tau_gram: float = TAU_GRAM) -> float:
        n = self.matrix.shape[0]
        return tau_gram * float(np.trace(self.matrix)) / n


@dataclass(eq=False)
class StrategicReport:
    method: str
    strategic: bool
    q: int
    r: int
    q_ge_r: bool
    groups: list[GroupMatrix]
    thresholds: dict
    N: int
    N_region: int
    T: float | None = None
    region: Box | None = None
    gramian_min: float | None = None
    gramian_max: float | None = None
    gramian_threshold: float | None = None
    witnesses: list[SpectralState] = field(default_factory=list)
    witness_sup: list[float] = field(default_factory=list)
    unverified_null_directions: int = 0
    tail_truncated: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def verdict(self) -> str:
        return "strategic" if self.strategic else "not-strategic"

    @property
    def failing_groups(self) -> list[GroupMatrix]:
        return [g for g in self.groups if not g.full_rank]

    @property
    def min_sv(self) -> float:
        """Smallest group singular value relative to the largest one."""
        if not self.groups:
            return float("nan")
        scale = max((float(g.singular_values[0]) for g in self.groups if g.singular_values.size), default=0.0)
        if scale == 0.0:
            return 0.0
        return min(g.smallest_singular_value for g in self.groups) / scale

    @property
    def score(self) -> float:
        """Margin statistic of the method used: relative ``min_sv`` or min Gramian eigenvalue."""
        return self.gramian_min if self.method == "gramian" else self.min_sv

    def to_dict(self) -> dict:
        out = {
            "verdict": self.verdict,
            "method": self.method,
            "q": self.q,
            "r": self.r,
            "q_ge_r": self.q_ge_r,
            "N": self.N,
            "N_region": self.N_region,
            "T": self.T,
            "region": self.region.to_json() if self.region is not None else None,
            "thresholds": dict(self.thresholds),
            "min_sv": self.min_sv,
            "failing_groups": [g.to_dict() for g in self.failing_groups],
            "gramian": None if self.gramian_min is None else {
                "min_eigenvalue": self.gramian_min,
                "max_eigenvalue": self.gramian_max,
                "threshold": self.gramian_threshold,
            },
            "kernel_witnesses": [
                {
                    "basis_region": w.basis.region.to_json(),
                    "modes": [_mode_json(w.basis.mode_label(k)) for k in range(w.basis.N)],
                    "coefficients": w.coefficients.tolist(),
                    "output_sup": s,
                }
                for w, s in zip(self.witnesses, self.witness_sup)
            ],
            "unverified_null_directions": self.unverified_null_directions,
            "tail_truncated": self.tail_truncated,
            "notes": list(self.notes),
        }
        return out


def _mode_json(m):
    return list(m) if isinstance(m, tuple) else m


def _group_matrices(C: np.ndarray, basis: EigenBasis, grouped: GroupedSpectrum, tau_rank: float) -> list[GroupMatrix]:
    q = C.shape[0]
    blocks = [C[:, list(pos)] for pos in grouped.positions]
    svals = [np.linalg.svd(G, compute_uv=False) if q else np.zeros(0) for G in blocks]
    scale = max((float(s[0]) for s in svals if s.size), default=0.0)
    out = []
    for gid, (pos, G, s) in enumerate(zip(grouped.positions, blocks, svals)):
        rn = len(pos)
        thr = tau_rank * scale * max(q, rn)
        rank = int(np.sum(s > thr)) if scale > 0 else 0
        if q:
            _, _, vt = np.linalg.svd(G, full_matrices=True)
        else:
            vt = np.eye(rn)
        null = vt[rank:].T.copy()
        out.append(GroupMatrix(
            gid, grouped.eigenvalues[gid], tuple(pos),
            tuple(basis.mode_label(p) for p in pos),
            G, s, thr, rank, null, basis,
        ))
    return out


def witness_output_sup(state: SpectralState, sensors: Sequence[Sensor], times: TimeGrid,
                       global_basis: EigenBasis | None = None) -> float:
    """Sup norm over the grid of the outputs produced by a candidate witness."""
    if global_basis is not None and state.basis is not global_basis:
        state = extend(state, global_basis)
    traj = simulate_output(state, sensors, times)
    return float(np.max(np.abs(traj.values))) if traj.values.size else 0.0


def rank_test(sensors: Sequence[Sensor], basis: EigenBasis, grouped: GroupedSpectrum | None = None,
              tau_rank: float = TAU_RANK, eps_group: float = EPS_GROUP,
              times: TimeGrid | None = None) -> StrategicReport:
    """Multiplicity-aware rank test over the eigenvalue groups of ``basis``.

    ``basis`` is either the domain basis (strategic on the domain) or a basis
    built on the region (strategic on the region); sensor supports must lie
    in the basis box.  The numerical rank of a group matrix counts singular
    values above ``tau_rank * s_max * max(q, r_n)`` where ``s_max`` is the largest
    singular value over all groups.
    """
    if len(sensors) == 0:
        raise SensorError("sensor suite is empty")
    validate_suite(sensors, basis.region)
    grouped = grouped if grouped is not None else group_eigenvalues(basis, eps_group)
    C = output_matrix(sensors, basis)
    q = C.shape[0]
    groups = _group_matrices(C, basis, grouped, tau_rank)
    q_ge_r = q >= grouped.r
    strategic = q_ge_r and all(g.full_rank for g in groups)
    times = times if times is not None else TimeGrid.uniform(1.0, 64)
    report = StrategicReport(
        method="rank", strategic=strategic, q=q, r=grouped.r, q_ge_r=q_ge_r, groups=groups,
        thresholds={"eps_group": grouped.eps_group, "tau_rank": tau_rank},
        N=basis.N, N_region=basis.N, T=float(times.T), region=basis.region,
        tail_truncated=grouped.tail_truncated,
    )
    if grouped.tail_truncated:
        report.notes.append("last eigenvalue group is cut by the truncation")
    for g in report.failing_groups:
        w = kernel_witness(g)
        sup = witness_output_sup(w, sensors, times)
        if sup < WITNESS_TOL:
            report.witnesses.append(w)
            report.witness_sup.append(sup)
        else:
            report.unverified_null_directions += 1
    return report


def regional_gramian(sensors: Sequence[Sensor], global_basis: EigenBasis, region_basis: EigenBasis,
                     T: float, C: np.ndarray | None = None) -> Gramian:
    """Assemble ``M = X^T W X`` in closed form.

    ``W[m, n] = sum_i C_im C_in (exp((l_m + l_n) T) - 1) / (l_m + l_n)`` and
    ``X[m, k] = <phi_m, psi_k>`` over the region of ``region_basis``.
    """
    if not T > 0:
        raise ValueError(f"horizon T must be positive, got {T}")
    region = region_basis.region
    if not global_basis.region.contains_box(region):
        raise ObservabilityError(f"region {region.to_json()} is not inside {global_basis.region.to_json()}")
    if C is None:
        C = output_matrix(sensors, global_basis) if len(sensors) else np.zeros((0, global_basis.N))
    lam = global_basis.eigenvalues
    s = lam[:, None] + lam[None, :]
    small = np.abs(s) < 1e-12
    safe = np.where(small, 1.0, s)
    time_factor = np.where(small, T, np.expm1(safe * T) / safe)
    W = (C.T @ C) * time_factor
    if region_basis is global_basis:
        X = np.eye(global_basis.N)
        M = W
    else:
        X = cross_gram(global_basis, region_basis, region)
        M = X.T @ W @ X
    M = 0.5 * (M + M.T)
    return Gramian(M, float(T), global_basis, region_basis, W, X)


def observability_constant(gramian: Gramian, tau_gram: float = TAU_GRAM) -> float:
    """Smallest ``nu`` with ``|x|_region <= nu |K x|`` on the truncated space."""
    lam_min = float(gramian.eigenvalues[0])
    if not lam_min > gramian.threshold(tau_gram):
        raise SingularGramianError(
            f"Gramian min eigenvalue {lam_min:.3e} is below threshold {gramian.threshold(tau_gram):.3e}"
        )
    return 1.0 / np.sqrt(lam_min)


def kernel_witness(source, tau_gram: float = TAU_GRAM) -> SpectralState:
    """Unit-norm state in the kernel of a failing group or a singular Gramian."""
    if isinstance(source, GroupMatrix):
        if source.full_rank:
            raise ObservabilityError(f"group {source.group_id} has full rank; no kernel witness")
        c = np.zeros(source.basis.N)
        v = source.null_space[:, 0]
        c[list(source.positions)] = v / np.linalg.norm(v)
        return SpectralState(source.basis, c)
    if isinstance(source, Gramian):
        evals, evecs = np.linalg.eigh(source.matrix)
        if evals[0] > source.threshold(tau_gram):
            raise ObservabilityError("Gramian is positive definite; no kernel witness")
        return SpectralState(source.region_basis, evecs[:, 0])
    raise TypeError(f"cannot extract a witness from {type(source).__name__}")


def gramian_test(sensors: Sequence[Sensor], global_basis: EigenBasis, region_basis: EigenBasis,
                 T: float, tau_gram: float = TAU_GRAM, eps_group: float = EPS_GROUP,
                 tau_rank: float = TAU_RANK, times: TimeGrid | None = None,
                 max_witnesses: int = 8) -> StrategicReport:
    """Approximate regional observability via the Gramian spectrum."""
    if len(sensors) == 0:
        raise SensorError("sensor suite is empty")
    validate_suite(sensors, global_basis.region)
    C = output_matrix(sensors, global_basis)
    grouped = group_eigenvalues(global_basis, eps_group)
    groups = _group_matrices(C, global_basis, grouped, tau_rank)
    gram = regional_gramian(sensors, global_basis, region_basis, T, C=C)
    evals, evecs = np.linalg.eigh(gram.matrix)
    thr = gram.threshold(tau_gram)
    strategic = bool(evals[0] > thr)
    times = times if times is not None else TimeGrid.uniform(T, 64)
    report = StrategicReport(
        method="gramian", strategic=strategic, q=C.shape[0], r=grouped.r,
        q_ge_r=C.shape[0] >= grouped.r, groups=groups,
        thresholds={"eps_group": eps_group, "tau_rank": tau_rank, "tau_gram": tau_gram},
        N=global_basis.N, N_region=region_basis.N, T=float(T), region=region_basis.region,
        gramian_min=float(evals[0]), gramian_max=float(evals[-1]), gramian_threshold=thr,
        tail_truncated=grouped.tail_truncated,
    )
    for k in np.flatnonzero(evals <= thr)[:max_witnesses]:
        w = SpectralState(region_basis, evecs[:, k])
        sup = witness_output_sup(w, sensors, times, global_basis)
        if sup < WITNESS_TOL:
            report.witnesses.append(w)
            report.witness_sup.append(sup)
        else:
            report.unverified_null_directions += 1
    return report


@dataclass(frozen=True, eq=False)
class Reconstruction:
    state: SpectralState
    residual: float
    rank: int
    singular_values: np.ndarray = field(repr=False)


def _stacked_operator(C: np.ndarray, lam: np.ndarray, times: TimeGrid, X: np.ndarray) -> np.ndarray:
    # rows ordered (sample, sensor) to match values.T.ravel()
    E = np.exp(np.outer(times.samples, lam))  # (S, N)
    blocks = (C[None, :, :] * E[:, None, :]) @ X  # (S, q, N_region)
    return blocks.reshape(-1, X.shape[1])


def reconstruct_initial_state(trajectory: OutputTrajectory, sensors: Sequence[Sensor],
                              global_basis: EigenBasis, region_basis: EigenBasis,
                              ridge: float = 0.0, tau_rank: float = TAU_RANK) -> Reconstruction:
    """Least-squares estimate of the regional initial state from sampled outputs.

    The unknown is supported on the region: ``x0 = extension of sum_k a_k psi_k``.
    Without ridge the stacked system must have full numerical column rank,
    otherwise :class:`UnderdeterminedError` is raised.
    """
    if ridge < 0:
        raise ValueError("ridge must be non-negative")
    C = output_matrix(sensors, global_basis)
    if C.shape[0] != trajectory.q:
        raise SensorError(f"trajectory has {trajectory.q} channels for {C.shape[0]} sensors")
    X = np.eye(global_basis.N) if region_basis is global_basis else cross_gram(global_basis, region_basis)
    A = _stacked_operator(C, global_basis.eigenvalues, trajectory.times, X)
    y = trajectory.values.T.ravel()
    s = np.linalg.svd(A, compute_uv=False)
    thr = tau_rank * (s[0] if s.size else 0.0) * max(A.shape)
    rank = int(np.sum(s > thr)) if s.size and s[0] > 0 else 0
    n = A.shape[1]
    if ridge == 0.0:
        if rank < n:
            raise UnderdeterminedError(
                f"reconstruction is underdetermined: numerical rank {rank} < {n} unknowns"
            )
        a, *_ = np.linalg.lstsq(A, y, rcond=None)
    else:
        A_aug = np.vstack([A, np.sqrt(ridge) * np.eye(n)])
        y_aug = np.concatenate([y, np.zeros(n)])
        a, *_ = np.linalg.lstsq(A_aug, y_aug, rcond=None)
    residual = float(np.linalg.norm(A @ a - y))
    return Reconstruction(SpectralState(region_basis, a), residual, rank, s)


def region_norm(state: SpectralState, region: Box) -> float:
    """Exact L2 norm of a state over a sub-box of its basis box."""
    G = cross_gram(state.basis, state.basis, region)
    val = float(state.coefficients @ G @ state.coefficients)
    return float(np.sqrt(max(val, 0.0)))


def reconstruction_errors(truth: SpectralState, estimate: SpectralState, region: Box) -> tuple[float, float]:
    """Error of one estimate measured on ``region`` and on the whole basis box."""
    if truth.basis is not estimate.basis:
        raise ValueError("truth and estimate must share a basis")
    err = SpectralState(truth.basis, truth.coefficients - estimate.coefficients)
    return region_norm(err, region), err.norm
