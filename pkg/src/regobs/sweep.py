"""Placement sweeps: move one sensor over a grid and record verdicts."""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .config import RunConfig, SweepSpec
from .errors import ConfigError, RegobsError
from .runner import Bases, evaluate

__all__ = ["SweepResult", "run_sweep", "format_float"]


def format_float(x: float) -> str:
    return f"{x:.17g}"


@dataclass(frozen=True, eq=False)
class SweepResult:
    coordinates: np.ndarray
    strategic: np.ndarray
    scores: np.ndarray
    failing_groups: np.ndarray
    method: str
    N: int

    def __len__(self) -> int:
        return len(self.strategic)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        dim = self.coordinates.shape[1]
        writer.writerow([f"x{k + 1}" for k in range(dim)] + ["verdict", "min_sv", "failing_groups"])
        for p, ok, s, nf in zip(self.coordinates, self.strategic, self.scores, self.failing_groups):
            writer.writerow([format_float(v) for v in p]
                            + ["strategic" if ok else "not-strategic", format_float(s), int(nf)])
        return buf.getvalue()

    def summary(self) -> dict:
        n = len(self)
        return {
            "points": n,
            "method": self.method,
            "N": self.N,
            "strategic_count": int(self.strategic.sum()),
            "strategic_fraction": float(self.strategic.mean()) if n else 0.0,
            "non_strategic_loci": self.coordinates[~self.strategic].tolist(),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


def _check_grid(config: RunConfig, spec: SweepSpec, coords: np.ndarray) -> None:
    if coords.size == 0:
        raise ConfigError("sweep grid is empty")
    base = config.sensors[spec.sensor]
    box = config.region if config.resolved_method == "rank" else config.domain
    for p in coords:
        moved = base.moved_to(p)
        if moved.kind in ("pointwise-internal",):
            ok = box.contains_point(p, open_=True)
        elif moved.kind == "zone-internal":
            ok = box.contains_box(moved.support)
        elif moved.kind == "filament":
            ok = all(box.contains_point(v) for v in moved.support)
        else:
            raise ConfigError("sweeps move internal pointwise, zone or filament sensors")
        if not ok:
            raise ConfigError(f"sweep point {p.tolist()} puts the sensor outside {box.to_json()}")


_WORKER_STATE: dict = {}


def _init_worker(config: RunConfig):
    _WORKER_STATE["config"] = config
    _WORKER_STATE["bases"] = Bases(config)


def _evaluate_point(point) -> tuple[bool, float, int]:
    config = _WORKER_STATE["config"]
    bases = _WORKER_STATE["bases"]
    spec = config.sweep
    sensors = list(config.sensors)
    sensors[spec.sensor] = sensors[spec.sensor].moved_to(point)
    try:
        rep = evaluate(config, sensors, bases)
    except RegobsError:
        # moved sensor collides with another support
        return False, float("nan"), -1
    return bool(rep.strategic), float(rep.score), len(rep.failing_groups)


def run_sweep(config: RunConfig, workers: int | None = None) -> SweepResult:
    """Evaluate the configured test at every grid point, in grid order.

    Results do not depend on ``workers``; each point is a pure computation.
    """
    if config.sweep is None:
        raise ConfigError("sweep: section missing from config")
    if not config.sensors:
        raise ConfigError("sensors: sweep needs at least one sensor")
    spec = config.sweep
    coords = spec.coordinates()
    _check_grid(config, spec, coords)
    workers = workers or config.workers
    if workers <= 1 or len(coords) < 2 * workers:
        _init_worker(config)
        rows = [_evaluate_point(p) for p in coords]
    else:
        chunk = max(1, len(coords) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(config,)) as pool:
            rows = list(pool.map(_evaluate_point, coords, chunksize=chunk))
    ok, score, nf = zip(*rows)
    return SweepResult(coords, np.array(ok, dtype=bool), np.array(score, dtype=float),
                       np.array(nf, dtype=int), config.resolved_method, config.N)
