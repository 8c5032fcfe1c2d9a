"""Benchmark driver: the unit-square experiment behind the library.

Solves -Laplace(u) + nu*u = 1 with u = 1 on the boundary, at a chosen
refinement level, with any of the three matrix-free iterations and/or the
assembled direct solver, and writes convergence histories and solution
fields.  Every solver starts from the same initial guess: the boundary
value extended as a constant over the whole domain (x0 = 1 everywhere), a
conforming start whose error is dominated by the smoothest mode.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .elements import ElementBatch, build_element_batch
from .mesh import MAX_LEVEL, Mesh, build_unit_square_mesh
from .operators import assemble_rhs, constant_dirichlet
from .reference import assemble_sparse, solve_reference
from .solvers import ConvergenceHistory, chebyshev2, chebyshev3, richardson
from .spectrum import operator_bounds

ITERATIVE_SOLVERS = ("richardson", "cheb2", "cheb3")
SOLVER_CHOICES = ITERATIVE_SOLVERS + ("direct", "all")

BOUNDARY_VALUE = 1.0


@dataclass
class ExperimentConfig:
    level: int = 5
    nu: float = 0.0
    iters: int = 124
    solver: str = "all"
    cycle_n: int = 32
    tol: float | None = None
    threads: int = 1
    deterministic: bool = True
    out_dir: str | None = None
    export_vtk: bool = False
    compare_direct: bool = False


@dataclass
class SolverRun:
    name: str
    x: np.ndarray
    history: ConvergenceHistory | None
    final_residual: float | None
    final_error: float | None
    wall_time: float
    diverged: bool = False


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    n_nodes: int
    n_elements: int
    bounds: tuple[float, float] | None
    runs: dict[str, SolverRun] = field(default_factory=dict)

    @property
    def any_diverged(self) -> bool:
        return any(run.diverged for run in self.runs.values())


def _validate(cfg: ExperimentConfig) -> list[str]:
    solvers = _requested_solvers(cfg.solver)
    problems = []
    if not 1 <= cfg.level <= MAX_LEVEL:
        problems.append(
            f"--level must be between 1 and {MAX_LEVEL} (got {cfg.level}); "
            "level 0 has no interior nodes to solve for"
        )
    if cfg.iters < 0:
        problems.append(f"--iters must be nonnegative (got {cfg.iters})")
    if cfg.nu < 0:
        problems.append(f"--nu must be nonnegative (got {cfg.nu})")
    if cfg.cycle_n < 1:
        problems.append(f"--cycle-n must be at least 1 (got {cfg.cycle_n})")
    if cfg.threads < 1:
        problems.append(f"--threads must be at least 1 (got {cfg.threads})")
    if cfg.tol is not None and not cfg.tol > 0:
        problems.append(f"--tol must be positive (got {cfg.tol})")
    if cfg.solver not in SOLVER_CHOICES:
        problems.append(f"unknown solver {cfg.solver!r}; choose from {SOLVER_CHOICES}")
    if "cheb3" in solvers and cfg.level == 1 and cfg.nu == 0:
        problems.append(
            "cheb3 needs distinct spectral bounds, but level 1 has a single "
            "interior node (lambda1 = lambda2); use --level 2 or higher, or "
            "drop cheb3 via --solver"
        )
    return problems


def _requested_solvers(choice: str) -> list[str]:
    if choice == "all":
        return list(ITERATIVE_SOLVERS)
    if choice == "direct":
        return []
    return [choice]


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Build the problem, run the requested solvers, export, summarize."""
    problems = _validate(cfg)
    if problems:
        raise ValueError("; ".join(problems))

    mesh = build_unit_square_mesh(cfg.level)
    batch = build_element_batch(mesh, nu=cfg.nu)
    dirichlet = constant_dirichlet(mesh, BOUNDARY_VALUE)
    solvers = _requested_solvers(cfg.solver)

    bounds = None
    if solvers:
        bounds = operator_bounds(batch, dirichlet, 2**cfg.level + 1, cfg.nu)

    need_reference = cfg.compare_direct or cfg.solver in ("direct", "all")
    reference = None
    ref_time = 0.0
    if need_reference:
        t0 = time.perf_counter()
        A = assemble_sparse(batch.A_e, batch.index.indt)
        b = assemble_rhs(batch.b_e, batch.index.indt)
        reference = solve_reference(A, b, dirichlet)
        ref_time = time.perf_counter() - t0

    report = ExperimentReport(
        config=cfg,
        n_nodes=mesh.n_nodes,
        n_elements=mesh.n_elements,
        bounds=None if bounds is None else (bounds.lambda1, bounds.lambda2),
    )

    x0 = np.full(mesh.n_nodes, BOUNDARY_VALUE)
    common = dict(
        tol=cfg.tol,
        reference=reference if cfg.compare_direct else None,
        threads=cfg.threads,
        deterministic=cfg.deterministic,
    )
    for name in solvers:
        if name == "richardson":
            x, hist = richardson(batch, dirichlet, x0, bounds, cfg.iters, **common)
        elif name == "cheb2":
            x, hist = chebyshev2(batch, dirichlet, x0, bounds, cfg.cycle_n,
                                 cfg.iters, **common)
        else:
            x, hist = chebyshev3(batch, dirichlet, x0, bounds, cfg.iters, **common)
        report.runs[name] = SolverRun(
            name=name,
            x=x,
            history=hist,
            final_residual=float(hist.residual_norms[-1]),
            final_error=(None if hist.error_norms is None
                         else float(hist.error_norms[-1])),
            wall_time=hist.wall_time,
            diverged=hist.diverged,
        )

    if cfg.solver in ("direct", "all") and reference is not None:
        report.runs["direct"] = SolverRun(
            name="direct",
            x=reference,
            history=None,
            final_residual=None,
            final_error=0.0 if cfg.compare_direct else None,
            wall_time=ref_time,
        )

    if cfg.out_dir is not None:
        _export_all(cfg, mesh, report)
    return report


def _export_all(cfg: ExperimentConfig, mesh: Mesh, report: ExperimentReport) -> None:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = ".vtk" if cfg.export_vtk else ".csv"
    for name, run in report.runs.items():
        if run.history is not None:
            export_history(run.history, out / f"history_{name}.csv")
        export_solution(mesh, run.x, out / f"solution_{name}{ext}")


def export_history(history: ConvergenceHistory, path) -> None:
    """Write `k,residual_norm[,error_norm]` rows with 17 significant digits."""
    with_errors = history.error_norms is not None
    lines = ["k,residual_norm,error_norm" if with_errors else "k,residual_norm"]
    for k, rn in enumerate(history.residual_norms):
        row = f"{k},{rn:.17g}"
        if with_errors:
            row += f",{history.error_norms[k]:.17g}"
        lines.append(row)
    Path(path).write_text("\n".join(lines) + "\n")


def export_solution(mesh: Mesh, x: np.ndarray, path) -> None:
    """Nodal solution as `x,y,u` CSV, or legacy VTK when the path ends in .vtk."""
    path = Path(path)
    if path.suffix == ".vtk":
        _write_vtk(mesh, x, path)
        return
    lines = ["x,y,u"]
    for (px, py), val in zip(mesh.nodes, x):
        lines.append(f"{px:.17g},{py:.17g},{val:.17g}")
    path.write_text("\n".join(lines) + "\n")


def _write_vtk(mesh: Mesh, x: np.ndarray, path: Path) -> None:
    n_n, n_e = mesh.n_nodes, mesh.n_elements
    parts = [
        "# vtk DataFile Version 3.0",
        "ebsolve solution",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {n_n} double",
    ]
    parts += [f"{px:.17g} {py:.17g} 0" for px, py in mesh.nodes]
    parts.append(f"CELLS {n_e} {4 * n_e}")
    parts += [f"3 {a} {b} {c}" for a, b, c in mesh.elements]
    parts.append(f"CELL_TYPES {n_e}")
    parts += ["5"] * n_e
    parts += [f"POINT_DATA {n_n}", "SCALARS u double 1", "LOOKUP_TABLE default"]
    parts += [f"{val:.17g}" for val in x]
    path.write_text("\n".join(parts) + "\n")


def _print_report(report: ExperimentReport) -> None:
    cfg = report.config
    print(f"level {cfg.level}: {report.n_nodes} nodes, {report.n_elements} elements, "
          f"nu={cfg.nu:g}, iters={cfg.iters}")
    if report.bounds is not None:
        print(f"spectral bounds: [{report.bounds[0]:.7g}, {report.bounds[1]:.7g}]")
    for name, run in report.runs.items():
        if run.history is None:
            print(f"  {name:10s} wall {run.wall_time:8.3f}s  (assembled direct solve)")
            continue
        status = "DIVERGED" if run.diverged else "ok"
        line = (f"  {name:10s} wall {run.wall_time:8.3f}s  "
                f"||r||: {run.history.residual_norms[0]:.3e} -> "
                f"{run.final_residual:.3e}  [{status}]")
        if run.final_error is not None and run.history.error_norms is not None:
            e0 = run.history.error_norms[0]
            ratio = run.final_error / e0 if e0 > 0 else 0.0
            line += f"  ||x-u||/||e0||: {ratio:.3e}"
        print(line)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ebsolve",
        description="Matrix-free P1 benchmark: -Laplace(u) + nu*u = 1 on the "
                    "unit square, u = 1 on the boundary.",
    )
    p.add_argument("--level", type=int, default=5,
                   help="refinement level L, (2^L+1)^2 nodes (default 5)")
    p.add_argument("--nu", type=float, default=0.0,
                   help="reaction coefficient nu >= 0 (default 0)")
    p.add_argument("--iters", type=int, default=124,
                   help="iteration budget (default 124)")
    p.add_argument("--solver", choices=SOLVER_CHOICES, default="all",
                   help="which solver(s) to run (default all)")
    p.add_argument("--cycle-n", type=int, default=32,
                   help="two-level Chebyshev cycle length N (default 32)")
    p.add_argument("--tol", type=float, default=None,
                   help="optional early stop at ||r^k|| <= tol*||r^0||")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads for the residual kernel (default 1)")
    p.add_argument("--deterministic", action=argparse.BooleanOptionalAction,
                   default=True,
                   help="bitwise thread-count-independent reductions (default on)")
    p.add_argument("--out-dir", default=None,
                   help="directory for history/solution exports")
    p.add_argument("--export-vtk", action="store_true",
                   help="write solutions as legacy VTK instead of CSV")
    p.add_argument("--compare-direct", action="store_true",
                   help="also solve via assembled matrix and record error norms")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = ExperimentConfig(
        level=args.level,
        nu=args.nu,
        iters=args.iters,
        solver=args.solver,
        cycle_n=args.cycle_n,
        tol=args.tol,
        threads=args.threads,
        deterministic=args.deterministic,
        out_dir=args.out_dir,
        export_vtk=args.export_vtk,
        compare_direct=args.compare_direct,
    )
    try:
        report = run_experiment(cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _print_report(report)
    return 3 if report.any_diverged else 0


if __name__ == "__main__":
    sys.exit(main())
