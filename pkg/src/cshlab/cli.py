"""Command-line front end.

Subcommands: ``solve``, ``enumerate``, ``degree``, ``sweep``, ``system`` and
``check``.  Experiments are described by a JSON config (see README for the
schema); results stream as JSON lines to stdout or ``--out``, except sweeps,
which emit a flat CSV.  Exit codes: 0 success, 2 config error, 3 solver
failure, 4 invariant violation.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import checks
from .continuation import sweep_lambda
from .degree import degree_by_enumeration, homotopy_audit
from .errors import ConfigError, GraphError, SolverError
from .graphs import (
    WeightedGraph,
    average,
    dirac_source,
    graph_from_dict,
    load_graph,
    solve_poisson,
    sup_norm,
)
from .scalar import ScalarModel, residual
from .solve import ClassifiedSolution, SolveOptions, enumerate_report, solve_scalar, solve_system
from .system import SystemModel, apriori_bound_system

__all__ = ["main"]


def _load_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    return cfg


def _load_graph_from(cfg: dict, args) -> WeightedGraph:
    src = args.graph or cfg.get("graph")
    if src is None:
        raise ConfigError("no graph given: pass --graph or a 'graph' config entry")
    try:
        if isinstance(src, dict):
            return graph_from_dict(src)
        return load_graph(src)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load graph {src}: {exc}") from exc


def _source_values(g: WeightedGraph, spec, name: str) -> np.ndarray:
    if spec is None:
        raise ConfigError(f"missing source specification for {name}")
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ConfigError(
            f"source {name} must be exactly one of "
            '{"constant": c}, {"values": {...}}, {"dirac": {...}}'
        )
    kind, payload = next(iter(spec.items()))
    if kind == "constant":
        return np.full(g.ell, float(payload))
    if kind == "values":
        try:
            return np.array([float(payload[v]) for v in g.vertices])
        except KeyError as exc:
            raise ConfigError(f"source {name} misses a value for vertex {exc}") from None
    if kind == "dirac":
        points = payload.get("points", [])
        coeff = float(payload.get("coefficient", 4.0 * np.pi))
        try:
            return dirac_source(g, points, coeff)
        except GraphError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown source kind {kind!r} for {name}")


def _build_model(g: WeightedGraph, cfg: dict):
    kind = cfg.get("model", "scalar")
    params = cfg.get("parameters", {})
    source = cfg.get("source", {})
    try:
        if kind == "scalar":
            return ScalarModel(
                lam=float(params.get("lambda", 1.0)),
                f=_source_values(g, source.get("f"), "f"),
                p=int(params.get("p", 1)),
                sigma=float(params.get("sigma", 1.0)),
            )
        if kind == "system":
            return SystemModel(
                p=float(params.get("p", 0.5)),
                q=float(params.get("q", 0.5)),
                f=_source_values(g, source.get("f"), "f"),
                g=_source_values(g, source.get("g"), "g"),
                sigma=float(params.get("sigma", 1.0)),
            )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown model kind {kind!r}")


def _solve_options(cfg: dict, args) -> SolveOptions:
    tols = dict(cfg.get("tolerances", {}))
    if args.tol is not None:
        tols["tol_residual"] = args.tol
    if args.seed is not None:
        tols["rng_seed"] = args.seed
    try:
        return SolveOptions(**tols)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad tolerances: {exc}") from None


def _point_dict(g: WeightedGraph, values: np.ndarray) -> dict:
    return {v: float(x) for v, x in zip(g.vertices, values)}


def _root_record(g: WeightedGraph, model, sol: ClassifiedSolution) -> dict:
    rec = {
        "kind": "root",
        "residual_norm": sol.residual_norm,
        "morse_index": sol.morse_index,
        "sign_det": sol.sign_det,
        "nondegenerate": sol.nondegenerate,
        "critical_group_ranks": list(sol.critical_group_ranks) if sol.critical_group_ranks else None,
    }
    if isinstance(model, SystemModel):
        rec["u"] = _point_dict(g, sol.point[: g.ell])
        rec["v"] = _point_dict(g, sol.point[g.ell:])
    else:
        rec["point"] = _point_dict(g, sol.point)
    return rec


class _Emitter:
    def __init__(self, out_path: str | None):
        self._fh = open(out_path, "w", encoding="utf-8") if out_path else sys.stdout
        self._owned = out_path is not None

    def emit(self, record: dict) -> None:
        self._fh.write(json.dumps(record) + "\n")

    def write_text(self, text: str) -> None:
        self._fh.write(text)

    def close(self) -> None:
        if self._owned:
            self._fh.close()


# ---------------------------------------------------------------------------
# commands

def cmd_solve(g, model, cfg, opts, emit) -> int:
    section = cfg.get("solve", {})
    if isinstance(model, ScalarModel):
        if model.lam == 0.0:
            fbar = average(g, model.f)
            if abs(fbar) > 1e-14 * (1.0 + sup_norm(model.f)):
                emit.emit({
                    "kind": "solve",
                    "status": "insolvable",
                    "reason": "mean obstruction: with lambda = 0 the integral of f must vanish",
                })
                return 0
            phi = solve_poisson(g, model.f - fbar)
            emit.emit({
                "kind": "solve",
                "status": "family",
                "point": _point_dict(g, phi),
                "note": "point + c solves for every constant c",
                "residual_norm": float(sup_norm(residual(g, model, phi))),
            })
            return 0
        seed = section.get("seed", 0.0)
        sol = solve_scalar(g, model, _seed_array(g, seed), opts)
        emit.emit({**_root_record(g, model, sol), "kind": "solve", "status": "ok"})
        return 0
    seed_u = _seed_array(g, section.get("seed_u", section.get("seed", 0.0)))
    seed_v = _seed_array(g, section.get("seed_v", section.get("seed", 0.0)))
    sol = solve_system(g, model, seed_u, seed_v, opts)
    emit.emit({**_root_record(g, model, sol), "kind": "solve", "status": "ok"})
    return 0


def _seed_array(g: WeightedGraph, seed) -> np.ndarray:
    if isinstance(seed, dict):
        return np.array([float(seed[v]) for v in g.vertices])
    if isinstance(seed, (list, tuple)):
        return np.asarray(seed, dtype=float)
    return np.full(g.ell, float(seed))


def cmd_enumerate(g, model, cfg, opts, emit) -> int:
    section = cfg.get("enumerate", {})
    box = tuple(section["box"]) if "box" in section else None
    report = enumerate_report(g, model, box=box, grid_n=section.get("grid"), opts=opts)
    for sol in report.roots:
        emit.emit(_root_record(g, model, sol))
    emit.emit({
        "kind": "enumeration_summary",
        "count": len(report.roots),
        "grid_levels": report.grid_levels,
        "grid_stable": report.stable,
        "seeds_used": report.seeds_used,
        "box": [report.box[0].tolist(), report.box[1].tolist()],
    })
    return 0


def cmd_degree(g, model, cfg, opts, emit) -> int:
    section = cfg.get("degree", {})
    radius = section.get("radius")
    if radius is None and isinstance(model, SystemModel):
        radius = _system_radius(g, model, cfg)
    report = degree_by_enumeration(g, model, radius=radius, opts=opts, grid_n=section.get("grid"))
    emit.emit(_degree_record(g, model, report))
    return 0


def _degree_record(g, model, report) -> dict:
    rec = {
        "kind": "degree_report",
        "computed": report.computed_degree,
        "expected": report.expected_degree,
        "consistent": report.consistent,
        "radius": report.radius_used,
        "morse_sum": report.morse_sum,
        "degenerate_roots": report.degenerate_roots,
        "grid_levels": report.grid_levels,
        "grid_stable": report.grid_stable,
        "roots": [_root_record(g, model, s) for s in report.roots],
    }
    if report.perturbed is not None:
        rec["perturbed"] = _degree_record(g, model, report.perturbed)
    return rec


def _system_radius(g, model, cfg) -> float:
    section = cfg.get("system", cfg.get("degree", {}))
    lam1 = section.get("Lambda1")
    lam2 = section.get("Lambda2")
    if lam1 is None or lam2 is None:
        raise ConfigError("system degree needs 'radius' or 'Lambda1'/'Lambda2' to derive one")
    return apriori_bound_system(g, model, float(lam1), float(lam2)).bound


def cmd_sweep(g, model, cfg, opts, emit, jobs) -> int:
    if not isinstance(model, ScalarModel):
        raise ConfigError("sweep is defined for the scalar model")
    section = cfg.get("sweep", {})
    if "range" not in section:
        raise ConfigError("sweep needs a 'range': [lambda_from, lambda_to]")
    lo, hi = (float(x) for x in section["range"])
    steps = int(section.get("steps", 11))
    box = tuple(section["box"]) if "box" in section else None
    records = sweep_lambda(
        g, model.f, (lo, hi), steps, opts=opts,
        p=model.p, sigma=model.sigma, box=box, grid_n=section.get("grid"),
    )
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["parameter", "root_id"] + [f"u_{v}" for v in g.vertices]
                    + ["morse_index", "sign_det"])
    for rec in records:
        for i, sol in enumerate(rec.roots):
            writer.writerow(
                [f"{rec.parameter:.12g}", i]
                + [f"{x:.17g}" for x in sol.point]
                + [sol.morse_index, sol.sign_det]
            )
    emit.write_text(buf.getvalue())
    return 0


def cmd_system(g, model, cfg, opts, emit, jobs) -> int:
    if not isinstance(model, SystemModel):
        raise ConfigError("the system command needs a system model")
    section = cfg.get("system", {})
    lam1 = section.get("Lambda1")
    lam2 = section.get("Lambda2")
    if lam1 is None or lam2 is None:
        raise ConfigError("system command needs 'Lambda1' and 'Lambda2'")
    bound = apriori_bound_system(g, model, float(lam1), float(lam2))
    emit.emit({"kind": "system_bound", **dataclasses.asdict(bound)})
    sigma_grid = [float(s) for s in section.get("sigma_grid", [0.0, 0.25, 0.5, 0.75, 1.0])]
    audit = homotopy_audit(g, model, sigma_grid, bound.bound, opts=opts, grid_n=section.get("grid"))
    emit.emit({
        "kind": "homotopy_audit",
        "radius": audit.radius,
        "degree_constant": audit.degree_constant,
        "sigma_zero_empty": audit.sigma_zero_empty,
        "bound_violation": audit.bound_violation,
        "slices": [
            {
                "sigma": s.sigma,
                "degree": s.degree,
                "count": len(s.roots),
                "min_margin": s.min_margin,
                "roots": [_root_record(g, model, r) for r in s.roots],
            }
            for s in audit.slices
        ],
    })
    return 0


def cmd_check(cfg, opts, emit, jobs) -> int:
    suites = {
        "graph_calculus": lambda: checks.check_graph_calculus(opts.rng_seed),
        "elliptic_estimate": lambda: checks.check_elliptic_estimate(opts.rng_seed, n_funcs=200),
        "scalar_consistency": lambda: checks.check_scalar_consistency(opts.rng_seed),
        "gauge_identity": lambda: checks.check_gauge_identity(opts.rng_seed),
        "solution_identity": lambda: checks.check_solution_identity(opts.rng_seed),
        "system_consistency": lambda: checks.check_system_consistency(opts.rng_seed),
        "solver": lambda: checks.check_solver(opts.rng_seed),
    }
    any_bad = False
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {name: pool.submit(fn) for name, fn in suites.items()}
        for name, fut in futures.items():
            violations = fut.result()
            any_bad = any_bad or bool(violations)
            emit.emit({
                "kind": "check",
                "suite": name,
                "passed": not violations,
                "violations": violations[:20],
                "violation_count": len(violations),
            })
    return 4 if any_bad else 0


# ---------------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cshlab",
        description="Solve, enumerate and classify roots of Chern-Simons Higgs "
        "equations on weighted finite graphs.",
    )
    ap.add_argument("command", choices=["solve", "enumerate", "degree", "sweep", "system", "check"])
    ap.add_argument("--graph", help="path to a graph JSON file")
    ap.add_argument("--config", help="path to an experiment config JSON file")
    ap.add_argument("--out", help="write results here instead of stdout")
    ap.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                    help="worker threads for independent subtasks")
    ap.add_argument("--seed", type=int, default=None, help="RNG seed for randomized policies")
    ap.add_argument("--tol", type=float, default=None, help="override the residual tolerance")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    emit = None
    try:
        cfg = _load_config(args)
        opts = _solve_options(cfg, args)
        emit = _Emitter(args.out)
        if args.command == "check":
            return cmd_check(cfg, opts, emit, args.jobs)
        g = _load_graph_from(cfg, args)
        model = _build_model(g, cfg)
        if args.command == "solve":
            return cmd_solve(g, model, cfg, opts, emit)
        if args.command == "enumerate":
            return cmd_enumerate(g, model, cfg, opts, emit)
        if args.command == "degree":
            return cmd_degree(g, model, cfg, opts, emit)
        if args.command == "sweep":
            return cmd_sweep(g, model, cfg, opts, emit, args.jobs)
        if args.command == "system":
            return cmd_system(g, model, cfg, opts, emit, args.jobs)
        raise ConfigError(f"unknown command {args.command}")
    except (ConfigError, GraphError, ValueError) as exc:
        print(f"cshlab {args.command}: config error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"cshlab {args.command}: solver failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 3
    finally:
        if emit is not None:
            emit.close()


if __name__ == "__main__":
    sys.exit(main())
