"""``regobs`` command line.

Exit codes: 0 strategic / success, 1 not strategic (or no unique
reconstruction), 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .casestudies import counterexample_1d
from .config import RunConfig, load_config
from .errors import ConfigError, GeometryError, RegobsError, UnderdeterminedError
from .observability import reconstruct_initial_state, reconstruction_errors
from .runner import Bases, evaluate, region_state_from_spec, state_from_spec
from .sensors import OutputTrajectory, simulate_output
from .spectral import TimeGrid
from .sweep import format_float, run_sweep

EXIT_OK = 0
EXIT_NOT_STRATEGIC = 1
EXIT_CONFIG = 2


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _out_path(args, config: RunConfig | None) -> str | None:
    return args.out or (config.output_path if config else None)


def cmd_strategic(config: RunConfig, out: str | None = None, seed: int | None = None) -> int:
    if not config.sensors:
        raise ConfigError("sensors: at least one sensor is required")
    report = evaluate(config)
    doc = report.to_dict()
    doc["seed"] = config.seed if seed is None else seed
    _emit(json.dumps(doc, indent=2), out)
    return EXIT_OK if report.strategic else EXIT_NOT_STRATEGIC


def trajectory_csv(traj: OutputTrajectory) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t"] + [f"y_{i + 1}" for i in range(traj.q)])
    for k, t in enumerate(traj.times.samples):
        writer.writerow([format_float(t)] + [format_float(v) for v in traj.values[:, k]])
    return buf.getvalue()


def read_trajectory_csv(text: str, T: float, q: int) -> OutputTrajectory:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise ConfigError("trajectory CSV is empty")
    header = [h.strip() for h in rows[0]]
    expected = ["t"] + [f"y_{i + 1}" for i in range(q)]
    if header != expected:
        raise ConfigError(f"trajectory header {header} does not match {expected}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"trajectory CSV has a non-numeric entry: {exc}") from exc
    if data.ndim != 2 or data.shape[0] < 2:
        raise ConfigError("trajectory CSV needs at least two samples")
    try:
        times = TimeGrid(T, data[:, 0])
    except ValueError as exc:
        raise ConfigError(f"trajectory times: {exc}") from exc
    return OutputTrajectory(times, data[:, 1:].T)


def cmd_simulate(config: RunConfig, out: str | None = None) -> int:
    if not config.sensors:
        raise ConfigError("sensors: at least one sensor is required")
    if config.x0 is None:
        raise ConfigError("x0: initial state is required for simulate")
    bases = Bases(config)
    x0 = state_from_spec(config.x0, bases)
    traj = simulate_output(x0, list(config.sensors), bases.times)
    _emit(trajectory_csv(traj), out)
    return EXIT_OK


def cmd_sweep(config: RunConfig, out: str | None = None, summary: str | None = None,
              workers: int | None = None) -> int:
    result = run_sweep(config, workers)
    _emit(result.to_csv(), out)
    summary = summary or config.summary_path or (str(Path(out).with_suffix(".json")) if out else None)
    if summary:
        Path(summary).write_text(result.summary_json() + "\n")
    else:
        sys.stderr.write(result.summary_json() + "\n")
    return EXIT_OK


def cmd_reconstruct(config: RunConfig, trajectory_path: str, out: str | None = None) -> int:
    if not config.sensors:
        raise ConfigError("sensors: at least one sensor is required")
    try:
        text = Path(trajectory_path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read trajectory {trajectory_path}: {exc}") from exc
    sensors = list(config.sensors)
    traj = read_trajectory_csv(text, config.T, len(sensors))
    bases = Bases(config)
    try:
        rec = reconstruct_initial_state(traj, sensors, bases.global_basis, bases.region_basis,
                                        ridge=config.ridge, tau_rank=config.tau_rank)
    except UnderdeterminedError as exc:
        sys.stderr.write(f"underdetermined: {exc}\n")
        return EXIT_NOT_STRATEGIC
    rb = rec.state.basis
    doc = {
        "region": config.region.to_json(),
        "modes": [_json_mode(rb.mode_label(k)) for k in range(rb.N)],
        "coefficients": rec.state.coefficients.tolist(),
        "residual": rec.residual,
        "rank": rec.rank,
        "ridge": config.ridge,
    }
    if config.ground_truth is not None:
        truth_region = region_state_from_spec(config.ground_truth, bases)
        truth_global = state_from_spec(config.ground_truth, bases)
        errors = {"regional_solve_error": float(np.linalg.norm(truth_region.coefficients - rec.state.coefficients))}
        try:
            glob = reconstruct_initial_state(traj, sensors, bases.global_basis, bases.global_basis,
                                             ridge=config.ridge, tau_rank=config.tau_rank)
            on_region, on_domain = reconstruction_errors(truth_global, glob.state, config.region)
            errors["global_estimate"] = {
                "error_on_region": on_region,
                "error_on_domain": on_domain,
                "region_not_worse": bool(on_region <= on_domain),
            }
        except UnderdeterminedError as exc:
            errors["global_estimate"] = {"underdetermined": str(exc)}
        doc["errors"] = errors
    _emit(json.dumps(doc, indent=2), out)
    return EXIT_OK


def _json_mode(m):
    return list(m) if isinstance(m, tuple) else m


def cmd_counterexample(alpha: float = 0.25, b: float = 0.5, N: int = 20, T: float = 1.0,
                       out: str | None = None) -> int:
    rep = counterexample_1d(alpha, b, N, T)
    _emit(json.dumps(rep.to_dict(), indent=2), out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="regobs", description="Regional strategic sensor analysis")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="JSON run configuration")
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--seed", type=int, help="seed recorded with the report")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("strategic", help="decide whether the sensor suite is strategic")
    common(p)
    p.add_argument("--method", choices=["gramian", "rank"])

    p = sub.add_parser("simulate", help="write the sensor output trajectory as CSV")
    common(p)

    p = sub.add_parser("sweep", help="move one sensor over a grid")
    common(p)
    p.add_argument("--method", choices=["gramian", "rank"])
    p.add_argument("--summary", help="summary JSON path")
    p.add_argument("--threads", type=int, help="worker processes (overrides config and REGOBS_THREADS)")

    p = sub.add_parser("reconstruct", help="estimate the regional initial state from a trajectory")
    common(p)
    p.add_argument("--trajectory", required=True, help="CSV with header t,y_1..y_q")

    p = sub.add_parser("counterexample", help="1D pointwise counter-example report")
    common(p, config_required=False)
    p.add_argument("--alpha", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--N", type=int)
    p.add_argument("--T", type=float)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "counterexample":
            params = {"alpha": 0.25, "b": 0.5, "N": 20, "T": 1.0}
            config = None
            if args.config:
                config = load_config(args.config)
                params.update(config.counterexample)
            for key in params:
                if getattr(args, key) is not None:
                    params[key] = getattr(args, key)
            return cmd_counterexample(out=_out_path(args, config), **params)
        config = load_config(args.config)
        if args.seed is not None:
            from dataclasses import replace
            config = replace(config, seed=args.seed)
        out = _out_path(args, config)
        if args.command == "strategic":
            return cmd_strategic(config.with_method(args.method), out)
        if args.command == "simulate":
            return cmd_simulate(config, out)
        if args.command == "sweep":
            return cmd_sweep(config.with_method(args.method), out, args.summary, args.threads)
        return cmd_reconstruct(config, args.trajectory, out)
    except (ConfigError, GeometryError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return EXIT_CONFIG
    except (RegobsError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
