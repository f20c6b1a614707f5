"""Command-line driver for convergence and adaptive studies."""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, fields

from .adapt import adaptive_solve, domain_mesh, write_history_csv
from .analysis import ConvergenceRecord, error_report, write_convergence_csv
from .assembly import assemble
from .femspace import DofMap, FieldPair
from .mesh import build_faces, save_mesh
from .problems import REGISTRY, by_name
from .solver import save_matrix_market, solve_system

COMMANDS = ("converge", "adapt", "solve-once")


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    problem: str = "example1"
    k: float = 1.0
    alpha: float = None
    m: int = 1
    levels: tuple = (5, 10, 20, 40)
    theta: float = 0.25
    steps: int = 10
    dof_budget: int = None
    mu: float = 1.0
    solver: str = "bicgstab"
    tol: float = 1e-10
    out: str = None
    dump_mesh: str = None
    dump_matrix: str = None


def validate_config(cfg: RunConfig) -> RunConfig:
    if cfg.command not in COMMANDS:
        raise UsageError(f"unknown command {cfg.command!r}")
    if cfg.problem not in REGISTRY:
        raise UsageError(f"unknown problem {cfg.problem!r}; "
                         f"choose from {', '.join(sorted(REGISTRY))}")
    if cfg.m not in (1, 2, 3):
        raise UsageError(f"degree m must be 1, 2 or 3, got {cfg.m}")
    if cfg.command == "converge" and not cfg.levels:
        raise UsageError("converge needs a nonempty list of levels")
    if cfg.solver not in ("bicgstab", "cg"):
        raise UsageError(f"solver must be bicgstab or cg, got {cfg.solver!r}")
    if not cfg.k > 0:
        raise UsageError(f"wave number k must be positive, got {cfg.k}")
    if not cfg.tol > 0:
        raise UsageError(f"tolerance must be positive, got {cfg.tol}")
    if not 0.0 < cfg.theta < 1.0:
        raise UsageError(f"theta must lie in (0, 1), got {cfg.theta}")
    if cfg.steps < 1:
        raise UsageError(f"steps must be >= 1, got {cfg.steps}")
    if cfg.mu <= 0:
        raise UsageError(f"penalty weight mu must be positive, got {cfg.mu}")
    return cfg


def _parse_levels(text: str) -> tuple:
    try:
        levels = tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise UsageError(f"cannot parse levels {text!r}") from None
    if any(n < 1 for n in levels):
        raise UsageError(f"levels must be positive integers, got {text!r}")
    return levels


_FIELD_PARSERS = {
    "problem": str,
    "k": float,
    "alpha": float,
    "m": int,
    "levels": _parse_levels,
    "theta": float,
    "steps": int,
    "dof_budget": int,
    "mu": float,
    "solver": str,
    "tol": float,
    "out": str,
    "dump_mesh": str,
    "dump_matrix": str,
}


def read_config_file(path: str) -> dict:
    """Flat key=value lines, # comments, keys matching the flag names."""
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip().replace("-", "_")
            val = val.strip()
            if key == "command":
                continue
            if key not in _FIELD_PARSERS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _FIELD_PARSERS[key](val)
            except UsageError:
                raise
            except ValueError:
                raise UsageError(f"{path}:{lineno}: bad value for {key}: {val!r}") from None
    return values


def format_config(cfg: RunConfig) -> str:
    """Serialize a config as key=value lines; parse_config reads it back."""
    lines = []
    for f in fields(cfg):
        if f.name == "command":
            continue
        val = getattr(cfg, f.name)
        if val is None:
            continue
        if f.name == "levels":
            val = ",".join(str(n) for n in val)
        lines.append(f"{f.name}={val}")
    return "\n".join(lines) + "\n"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="dlsmaxwell",
                 description="Least-squares DG solver for time-harmonic Maxwell")
    sub = ap.add_subparsers(dest="command")
    for name, blurb in (("converge", "uniform-refinement convergence study"),
                        ("adapt", "adaptive refinement study"),
                        ("solve-once", "single solve with optional dumps")):
        p = sub.add_parser(name, help=blurb)
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--problem", default=None)
        p.add_argument("--k", type=float, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--m", type=int, default=None)
        p.add_argument("--levels", default=None,
                       help="comma-separated resolutions; adapt/solve-once use the first")
        p.add_argument("--theta", type=float, default=None)
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--dof-budget", type=int, default=None)
        p.add_argument("--mu", type=float, default=None)
        p.add_argument("--solver", choices=("bicgstab", "cg"), default=None)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", default=None)
        p.add_argument("--dump-mesh", default=None)
        p.add_argument("--dump-matrix", default=None)
    return ap


def parse_config(argv) -> RunConfig:
    """Build a RunConfig from argv; explicit flags override the config file."""
    ap = _build_parser()
    ns = ap.parse_args(argv)
    if ns.command is None:
        ap.print_usage(sys.stderr)
        raise UsageError("a command is required")
    values = {}
    if ns.config is not None:
        values.update(read_config_file(ns.config))
    for name in _FIELD_PARSERS:
        given = getattr(ns, name)
        if given is not None:
            values[name] = _parse_levels(given) if name == "levels" else given
    return validate_config(RunConfig(command=ns.command, **values))


def _solve_level(problem, n, cfg):
    mesh = domain_mesh(problem, n)
    faces = build_faces(mesh)
    dofmap = DofMap(mesh.dim, cfg.m, mesh.n_cells)
    system = assemble(mesh, faces, dofmap, problem, mu=cfg.mu)
    x, stats = solve_system(system.matrix, system.rhs, method=cfg.solver,
                            tol=cfg.tol, dim=mesh.dim)
    return mesh, faces, dofmap, system, x, stats


def run_converge(cfg: RunConfig) -> int:
    problem = by_name(cfg.problem, k=cfg.k, alpha=cfg.alpha)
    reports, iters = [], []
    last = None
    for n in cfg.levels:
        mesh, faces, dofmap, system, x, stats = _solve_level(problem, n, cfg)
        if not stats.converged:
            print(f"solver did not converge at level n={n} "
                  f"(residual {stats.residual:.3e} after {stats.iterations} iterations)",
                  file=sys.stderr)
            return 2
        field = FieldPair(mesh, dofmap, x)
        rep = error_report(mesh, faces, field, problem, mu=cfg.mu, resolution=n)
        reports.append(rep)
        iters.append(stats.iterations)
        last = (mesh, system)
        print(f"n={n}: cells {mesh.n_cells} dofs {dofmap.total_dofs} "
              f"iters {stats.iterations} energy {rep.energy_error:.3e}")
    record = ConvergenceRecord(tuple(reports), tuple(iters))
    out = cfg.out or "convergence.csv"
    with open(out, "w", newline="") as fh:
        write_convergence_csv(record, fh)
    print(f"wrote {out}")
    _write_dumps(cfg, last)
    return 0


def run_adapt(cfg: RunConfig) -> int:
    problem = by_name(cfg.problem, k=cfg.k, alpha=cfg.alpha)
    history = adaptive_solve(problem, cfg.m, theta=cfg.theta, max_steps=cfg.steps,
                             dof_budget=cfg.dof_budget, initial_n=cfg.levels[0],
                             mu=cfg.mu, method=cfg.solver, tol=cfg.tol)
    for s in history.steps:
        print(f"step {s.step}: cells {s.n_cells} dofs {s.n_dofs} "
              f"l2_u {s.l2_u:.3e} marked {s.marked}")
    out = cfg.out or "adaptive.csv"
    with open(out, "w", newline="") as fh:
        write_history_csv(history, fh)
    print(f"wrote {out}")
    if cfg.dump_mesh:
        save_mesh(history.final_mesh, cfg.dump_mesh)
        print(f"wrote {cfg.dump_mesh}")
    if history.aborted:
        print("adaptive loop aborted on solver failure", file=sys.stderr)
        return 2
    return 0


def run_solve_once(cfg: RunConfig) -> int:
    problem = by_name(cfg.problem, k=cfg.k, alpha=cfg.alpha)
    n = cfg.levels[0]
    mesh, faces, dofmap, system, x, stats = _solve_level(problem, n, cfg)
    field = FieldPair(mesh, dofmap, x)
    rep = error_report(mesh, faces, field, problem, mu=cfg.mu, resolution=n)
    print(f"n={n}: cells {mesh.n_cells} dofs {dofmap.total_dofs} "
          f"iters {stats.iterations} converged {stats.converged}")
    print(f"J_h {rep.j_h:.6e} energy {rep.energy_error:.6e} "
          f"l2_u {rep.l2_u:.6e} l2_p {rep.l2_p:.6e}")
    _write_dumps(cfg, (mesh, system))
    if not stats.converged:
        return 2
    return 0


def _write_dumps(cfg: RunConfig, last) -> None:
    if last is None:
        return
    mesh, system = last
    if cfg.dump_mesh:
        save_mesh(mesh, cfg.dump_mesh)
        print(f"wrote {cfg.dump_mesh}")
    if cfg.dump_matrix:
        save_matrix_market(system.matrix, cfg.dump_matrix)
        print(f"wrote {cfg.dump_matrix}")


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    try:
        cfg = parse_config(list(argv))
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    runner = {"converge": run_converge, "adapt": run_adapt,
              "solve-once": run_solve_once}[cfg.command]
    try:
        return runner(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
