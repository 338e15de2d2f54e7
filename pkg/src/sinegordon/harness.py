"""Command-line front end: experiment runs, convergence studies, scheme comparisons.

Outputs are CSV tables plus a ``meta.json`` that echoes every config field, so
a run is reproducible from its metadata alone.  Data files carry no
timestamps and all reductions are deterministic, so repeated runs of the same
config produce byte-identical CSVs; the wall-clock columns (``cpu.csv`` and
the ``cpu_s`` column of ``convergence.csv``) are the documented exception.

Exit status: 0 on success, 1 on numerical failure (with the last good level's
diagnostics flushed), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import EnergyRecorder, error_vs_exact, convergence_orders
from .grid import Boundary, Grid
from .linear_solver import NumericalError
from .problems import PROBLEMS, DirichletBoundary, Problem, get_problem, mirror_field
from .schemes import SCHEMES, TimeGrid, run


class ConfigError(Exception):
    """Invalid run configuration; maps to exit status 2."""


@dataclass
class RunConfig:
    problem: str
    scheme: str = "li-leps"
    n1: int = 100
    n2: int | None = None
    tau: float = 0.01
    T: float = 1.0
    record_every: int = 1
    snap_times: tuple[float, ...] = ()
    out_dir: str = "out"
    cg_tol: float = 1e-14
    fp_tol: float = 1e-14
    fp_max: int = 50
    transform: bool = False
    mirror: bool = False

    def validate(self) -> None:
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; "
                              f"available: {sorted(PROBLEMS)}")
        if self.record_every < 1:
            raise ConfigError("record cadence must be at least 1")
        if self.tau <= 0:
            raise ConfigError("tau must be positive")
        if self.T < 0:
            raise ConfigError("T must be nonnegative")


def _fmt(x: float) -> str:
    return repr(float(x))


def _build(cfg: RunConfig) -> tuple[Problem, Grid, TimeGrid]:
    cfg.validate()
    problem = get_problem(cfg.problem)
    try:
        grid = problem.grid(cfg.n1, cfg.n2)
        time_grid = TimeGrid.from_final_time(cfg.tau, cfg.T)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return problem, grid, time_grid


def _snapshot_steps(cfg: RunConfig, time_grid: TimeGrid) -> dict[int, float]:
    """Map requested snapshot times to step indices; reject mismatches beyond tau/2."""
    times = cfg.snap_times or tuple(sorted({0.0, cfg.T}))
    steps: dict[int, float] = {}
    for t in times:
        k = int(round(t / time_grid.tau))
        if abs(k * time_grid.tau - t) > time_grid.tau / 2 + 1e-12:
            raise ConfigError(f"snapshot time {t} is not within tau/2 of any step")
        if k < 0 or k > time_grid.m:
            raise ConfigError(f"snapshot time {t} lies outside [0, T]")
        steps[k] = t
    return steps


def write_energy_csv(path: Path, records) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "e_modified", "e_original", "deviation"])
        for rec in records:
            w.writerow([_fmt(rec.t), _fmt(rec.e_modified),
                        _fmt(rec.e_original), _fmt(rec.deviation)])


def write_field_csv(path: Path, grid, values: np.ndarray) -> None:
    X, Y = grid.meshgrid
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for xv, yv, vv in zip(X.ravel(), Y.ravel(), np.asarray(values).ravel()):
            w.writerow([_fmt(xv), _fmt(yv), _fmt(vv)])


def _write_meta(out: Path, command: str, config: dict, extra: dict) -> None:
    meta = {"command": command, "package_version": __version__, "config": config}
    meta.update(extra)
    with open(out / "meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


class _SnapshotRecorder:
    def __init__(self, steps: dict[int, float]):
        self.steps = steps
        self.fields: dict[int, np.ndarray] = {}

    def __call__(self, step: int, state) -> None:
        if step in self.steps:
            self.fields[step] = state.u.copy()


def cmd_run(cfg: RunConfig) -> int:
    problem, grid, time_grid = _build(cfg)
    snap_steps = _snapshot_steps(cfg, time_grid)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    bc = DirichletBoundary(problem, grid) if grid.boundary is Boundary.DIRICHLET_EXACT else None
    energy = EnergyRecorder(every=cfg.record_every, bc=bc)
    snaps = _SnapshotRecorder(snap_steps)

    failure = None
    try:
        result = run(problem, grid, time_grid, scheme=cfg.scheme,
                     recorders=(energy, snaps), cg_tol=cfg.cg_tol,
                     fp_tol=cfg.fp_tol, fp_max=cfg.fp_max)
    except NumericalError as exc:
        failure = str(exc)
        result = None

    write_energy_csv(out / "energy.csv", energy.records)
    for step, t_req in sorted(snaps.steps.items()):
        if step not in snaps.fields:
            continue
        values = snaps.fields[step]
        if cfg.transform and problem.display_transform is not None:
            values = problem.display_transform(values)
        if cfg.mirror:
            values = mirror_field(problem, values)
        write_field_csv(out / f"field_t{t_req:g}.csv", grid, values)

    extra = {"n_steps": time_grid.m, "h1": grid.h1, "h2": grid.h2}
    if result is not None:
        extra.update({
            "wall_seconds_stepping": result.wall_seconds,
            "cg_iterations": result.cg_iterations,
            "cg_iterations_max": result.cg_iterations_max,
            "fp_sweeps": result.fp_sweeps,
        })
    else:
        extra["failure"] = failure
    _write_meta(out, "run", asdict(cfg), extra)
    return 0 if failure is None else 1


def cmd_converge(cfg: RunConfig, levels: int) -> int:
    """Run a halving (h, tau) ladder and emit the error/order table."""
    if levels < 2:
        raise ConfigError("need at least 2 refinement levels")
    problem, _, _ = _build(cfg)
    if problem.exact is None:
        raise ConfigError(f"problem {cfg.problem!r} has no exact solution to converge against")
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for lvl in range(levels):
        scale = 2**lvl
        n1 = cfg.n1 * scale
        n2 = None if cfg.n2 is None else cfg.n2 * scale
        grid = problem.grid(n1, n2)
        time_grid = TimeGrid.from_final_time(cfg.tau / scale, cfg.T)
        result = run(problem, grid, time_grid, scheme=cfg.scheme,
                     cg_tol=cfg.cg_tol, fp_tol=cfg.fp_tol, fp_max=cfg.fp_max)
        err = error_vs_exact(result.state, problem)
        rows.append({"h": grid.h1, "tau": time_grid.tau, "l2": err.l2,
                     "linf": err.linf, "h1": err.h1, "cpu_s": result.wall_seconds})

    orders = {norm: convergence_orders([(r["h"], r["tau"], r[norm]) for r in rows])
              for norm in ("l2", "linf", "h1")}
    with open(out / "convergence.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "tau", "l2", "l2_order", "linf", "linf_order",
                    "h1", "h1_order", "cpu_s"])
        for i, row in enumerate(rows):
            w.writerow([
                _fmt(row["h"]), _fmt(row["tau"]),
                _fmt(row["l2"]), "" if i == 0 else _fmt(orders["l2"][i - 1]),
                _fmt(row["linf"]), "" if i == 0 else _fmt(orders["linf"][i - 1]),
                _fmt(row["h1"]), "" if i == 0 else _fmt(orders["h1"][i - 1]),
                _fmt(row["cpu_s"]),
            ])
    _write_meta(out, "converge", {**asdict(cfg), "levels": levels}, {})
    return 0


def _validate_compare_pair(cfg_a: RunConfig, cfg_b: RunConfig) -> None:
    """Scheme comparisons must share the mesh, the step, and the horizon."""
    for name in ("problem", "n1", "n2", "tau", "T"):
        if getattr(cfg_a, name) != getattr(cfg_b, name):
            raise ConfigError(f"compare configs disagree on {name}: "
                              f"{getattr(cfg_a, name)!r} vs {getattr(cfg_b, name)!r}")


def cmd_compare(cfg: RunConfig) -> int:
    """Run both schemes on one config; emit per-scheme energy traces and cpu.csv.

    The schemes run sequentially so the wall-clock comparison is not skewed by
    contention.
    """
    from dataclasses import replace

    configs = {scheme: replace(cfg, scheme=scheme) for scheme in SCHEMES}
    _validate_compare_pair(*configs.values())
    problem, grid, time_grid = _build(cfg)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    bc = DirichletBoundary(problem, grid) if grid.boundary is Boundary.DIRICHLET_EXACT else None
    cpu_rows = []
    solver_stats = {}
    for scheme in SCHEMES:
        energy = EnergyRecorder(every=cfg.record_every, bc=bc)
        result = run(problem, grid, time_grid, scheme=scheme, recorders=(energy,),
                     cg_tol=cfg.cg_tol, fp_tol=cfg.fp_tol, fp_max=cfg.fp_max)
        write_energy_csv(out / f"energy_{scheme}.csv", energy.records)
        cpu_rows.append((scheme, grid.num_nodes, result.wall_seconds))
        solver_stats[scheme] = {"cg_iterations": result.cg_iterations,
                                "fp_sweeps": result.fp_sweeps,
                                "wall_seconds_stepping": result.wall_seconds}

    with open(out / "cpu.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scheme", "nodes", "wall_seconds"])
        for scheme, nodes, wall in cpu_rows:
            w.writerow([scheme, nodes, _fmt(wall)])
    _write_meta(out, "compare", asdict(cfg), {"solver": solver_stats})
    return 0


def _parse_n(text: str) -> tuple[int, int | None]:
    parts = text.split(",")
    try:
        if len(parts) == 1:
            return int(parts[0]), None
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise ConfigError(f"--n expects n1 or n1,n2; got {text!r}")


def _parse_snaps(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip() != "")
    except ValueError:
        raise ConfigError(f"--snap expects comma-separated times; got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", required=True)
    p.add_argument("--n", required=True, help="nodes per axis: n1 or n1,n2")
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--out", default="out")
    p.add_argument("--record-every", type=int, default=1)
    p.add_argument("--cg-tol", type=float, default=1e-14)
    p.add_argument("--fp-tol", type=float, default=1e-14)
    p.add_argument("--fp-max", type=int, default=50)


def _config_from_args(args: argparse.Namespace, scheme: str | None = None) -> RunConfig:
    n1, n2 = _parse_n(args.n)
    return RunConfig(
        problem=args.problem,
        scheme=scheme if scheme is not None else getattr(args, "scheme", "li-leps"),
        n1=n1, n2=n2,
        tau=args.tau, T=args.T,
        record_every=args.record_every,
        snap_times=_parse_snaps(args.snap) if getattr(args, "snap", None) else (),
        out_dir=args.out,
        cg_tol=args.cg_tol, fp_tol=args.fp_tol, fp_max=args.fp_max,
        transform=getattr(args, "transform", False),
        mirror=getattr(args, "mirror", False),
    )


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sinegordon",
        description="Structure-preserving sine-Gordon solvers and experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one problem and emit traces/snapshots")
    _add_common(p_run)
    p_run.add_argument("--scheme", choices=list(SCHEMES), default="li-leps")
    p_run.add_argument("--snap", help="comma-separated snapshot times")
    p_run.add_argument("--transform", action="store_true",
                       help="apply the problem's display transform to snapshots")
    p_run.add_argument("--mirror", action="store_true",
                       help="mirror emitted fields across the problem's midlines")

    p_conv = sub.add_parser("converge", help="halving (h, tau) refinement study")
    _add_common(p_conv)
    p_conv.add_argument("--scheme", choices=list(SCHEMES), default="li-leps")
    p_conv.add_argument("--levels", type=int, required=True)

    p_cmp = sub.add_parser("compare", help="run both schemes; energy traces and cpu table")
    _add_common(p_cmp)

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(_config_from_args(args))
        if args.command == "converge":
            return cmd_converge(_config_from_args(args), args.levels)
        if args.command == "compare":
            return cmd_compare(_config_from_args(args))
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
