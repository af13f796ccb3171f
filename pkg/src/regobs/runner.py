"""Glue between a :class:`RunConfig` and the library calls."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from .config import RunConfig
from .errors import ConfigError
from .observability import StrategicReport, gramian_test, rank_test
from .sensors import Sensor
from .spectral import EigenBasis, SpectralState, TimeGrid, build_basis, extend

__all__ = ["Bases", "make_bases", "evaluate", "state_from_spec", "region_state_from_spec"]


class Bases:
    """Global and regional bases for one configuration."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.global_basis = build_basis(config.domain, config.N, config.convention)
        if config.regional:
            self.region_basis = build_basis(config.region, config.N_region or config.N, config.convention)
        else:
            self.region_basis = self.global_basis
        self.times = TimeGrid.uniform(config.T, config.samples)


def make_bases(config: RunConfig) -> Bases:
    return Bases(config)


def evaluate(config: RunConfig, sensors: Sequence[Sensor] | None = None,
             bases: Bases | None = None) -> StrategicReport:
    """Run the configured strategic test.

    ``rank`` on a regional configuration tests against the basis built on the
    region, so every sensor must lie inside the region.
    """
    bases = bases or make_bases(config)
    sensors = list(config.sensors if sensors is None else sensors)
    method = config.resolved_method
    if method == "rank":
        return rank_test(sensors, bases.region_basis, tau_rank=config.tau_rank,
                         eps_group=config.eps_group, times=bases.times)
    return gramian_test(sensors, bases.global_basis, bases.region_basis, config.T,
                        tau_gram=config.tau_gram, eps_group=config.eps_group,
                        tau_rank=config.tau_rank, times=bases.times)


def state_from_spec(spec: dict, bases: Bases) -> SpectralState:
    """Global state from ``{"mode": ...}``, ``{"coefficients": ...}`` or ``{"region_coefficients": ...}``."""
    if "region_coefficients" in spec:
        return extend(region_state_from_spec(spec, bases), bases.global_basis)
    return _state(spec, bases.global_basis, "coefficients")


def region_state_from_spec(spec: dict, bases: Bases) -> SpectralState:
    """Regional state; global specs are restricted to the region."""
    from .spectral import restrict

    if "region_coefficients" in spec:
        return _state(spec, bases.region_basis, "region_coefficients")
    g = _state(spec, bases.global_basis, "coefficients")
    return restrict(g, bases.region_basis.region, bases.region_basis)


def _state(spec: dict, basis: EigenBasis, key: str) -> SpectralState:
    if "mode" in spec:
        try:
            return SpectralState.mode(basis, spec["mode"], float(spec.get("amplitude", 1.0)))
        except ValueError as exc:
            raise ConfigError(f"x0/mode: {exc}") from exc
    if key not in spec:
        raise ConfigError(f"state spec needs 'mode' or '{key}'")
    coeffs = np.asarray(spec[key], dtype=float)
    if coeffs.size != basis.N:
        raise ConfigError(f"{key}: expected {basis.N} values, got {coeffs.size}")
    return SpectralState(basis, coeffs)
