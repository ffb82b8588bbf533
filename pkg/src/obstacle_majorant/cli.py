"""Batch driver: run a (benchmark x mesh size) grid and write reports.

Usage::

    obstacle-majorant run --benchmark II --f -10 --phi -1 --levels 1/2..1/64
    obstacle-majorant table out/report.csv
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import fem
from .experiment import CaseResult, RunConfig, run_case
from .io import (
    read_report_csv,
    write_fields_csv,
    write_majorant_trace,
    write_mesh_csv,
    write_report_csv,
    write_solver_trace,
    write_vtk,
)
from .majorant import local_parts

# command-line key -> benchmark parameter name
PARAM_KEYS = {"f": "f", "phi": "phi", "phimax": "phi_max", "rho": "rho", "R": "R"}
OPTION_KEYS = {
    "omega": float,
    "qp_tol": float,
    "qp_max_iter": int,
    "n_iter": int,
    "beta0": float,
    "majorant_rtol": float,
}
OTHER_KEYS = {"benchmark", "levels", "out", "workers", "literal", "load", "fields"}
CONFIG_KEYS = set(PARAM_KEYS) | set(OPTION_KEYS) | OTHER_KEYS


class ConfigError(ValueError):
    pass


def parse_levels(text: str) -> tuple[Fraction, ...]:
    """``"1/2..1/64"`` (halving range), ``"1/8,1/16"`` or ``"1/16"``."""
    out: list[Fraction] = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ".." in part:
                lo, hi = (Fraction(p.strip()) for p in part.split("..", 1))
                if hi <= 0 or lo < hi:
                    raise ConfigError(f"bad level range {part!r}")
                h = lo
                while h > hi:
                    out.append(h)
                    h /= 2
                if h != hi:
                    raise ConfigError(f"{hi} is not {lo} halved repeatedly")
                out.append(hi)
            else:
                out.append(Fraction(part))
        except (ValueError, ZeroDivisionError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"cannot parse mesh size {part!r}") from None
    if not out or any(h <= 0 for h in out):
        raise ConfigError(f"no valid mesh sizes in {text!r}")
    return tuple(out)


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = val
    return values


@dataclass
class GridConfig:
    run: RunConfig
    out: Path
    workers: int
    fields: bool = True


def build_config(values: dict, env=None) -> GridConfig:
    env = os.environ if env is None else env
    unknown = set(values) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys {sorted(unknown)}")
    bench = str(values.get("benchmark", "II")).upper()
    params = {}
    for key, name in PARAM_KEYS.items():
        if values.get(key) is not None:
            try:
                params[name] = float(values[key])
            except ValueError:
                raise ConfigError(f"{key} must be a number, got {values[key]!r}") from None
    options = {}
    for key, typ in OPTION_KEYS.items():
        if values.get(key) is not None:
            try:
                options[key] = typ(values[key])
            except ValueError:
                raise ConfigError(f"{key} must be {typ.__name__}, got {values[key]!r}") from None
    load = str(values.get("load") or "exact")
    if load not in ("exact", "average"):
        raise ConfigError(f"load must be 'exact' or 'average', got {load!r}")
    cfg = RunConfig(benchmark=bench, params=params, load=load,
                    literal=_parse_bool(values.get("literal") or False), **options)
    if values.get("levels") is not None:
        cfg.levels = parse_levels(values["levels"])
    try:
        cfg.exact()
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    out = values.get("out")
    if out is None:
        out = env.get("OBSTACLE_OUT") or "out"
    workers = int(values.get("workers") or os.cpu_count() or 1)
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    return GridConfig(cfg, Path(out), workers, _parse_bool(values.get("fields", True)))


def _level_tag(h: Fraction) -> str:
    return f"h{h.numerator}_{h.denominator}"


def dump_fields(result: CaseResult, directory: Path) -> None:
    """Mesh, VTK and CSV field dumps plus the solver and majorant traces."""
    directory.mkdir(parents=True, exist_ok=True)
    if result.state is None:
        (directory / "DEGENERATE").write_text("empty inscribed rectangulation\n")
        return
    mesh = result.majorant_mesh
    ex = result.exact
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    state = result.state
    p1, p2, p3 = local_parts(result.problem, state.mu, state.tau)
    beta, C2 = state.beta, state.C**2
    tau_c = fem.rt0_values(mesh, state.tau)
    cells = {
        "tau_x": tau_c[:, 0],
        "tau_y": tau_c[:, 1],
        "mu": state.mu,
        "mu0": result.mu0,
        "div_tau": fem.element_divergence(mesh, state.tau),
        "p1": p1,
        "p2": p2,
        "p3": p3,
        "majorant": 0.5 * (1 + beta) * p1 + 0.5 * (1 + 1 / beta) * C2 * p2 + p3,
    }
    points = {
        "v": result.v,
        "u_exact": np.where(mesh.active_nodes, ex.u(x, y), 0.0),
        "phi": ex.phi(x, y),
    }
    write_mesh_csv(directory, mesh)
    write_vtk(directory / "fields.vtk", mesh, points, cells, title=f"benchmark {ex.spec.id}")
    write_fields_csv(directory / "element_fields.csv", mesh, cells)
    write_majorant_trace(directory / "majorant_trace.csv", state.trace)
    write_solver_trace(directory / "solver_trace.csv", result.qp.energy_trace, result.qp.residual_trace)


def _run_one(cfg: RunConfig, h: Fraction, out: Path, fields: bool):
    try:
        result = run_case(cfg, h)
        if fields:
            dump_fields(result, out / "fields" / f"{cfg.benchmark}_{_level_tag(h)}")
        return h, result.report, None
    except Exception:  # reported by the parent, the grid keeps going
        return h, None, traceback.format_exc()


def run_grid(grid: GridConfig):
    """Run every level; returns ``(reports, errors)`` in level order."""
    try:
        grid.out.mkdir(parents=True, exist_ok=True)
        probe = grid.out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {grid.out} is not writable: {exc}") from None
    levels = grid.run.levels
    args = [(grid.run, h, grid.out, grid.fields) for h in levels]
    if grid.workers == 1 or len(levels) == 1:
        results = [_run_one(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=min(grid.workers, len(levels))) as pool:
            results = list(pool.map(_run_one, *zip(*args)))
    reports = [(h, rep) for h, rep, err in results if rep is not None]
    errors = [(h, err) for h, rep, err in results if err is not None]
    return reports, errors


def summary_text(grid: GridConfig, reports, errors) -> str:
    cfg = grid.run
    ex = cfg.exact()
    params = ", ".join(f"{k}={v!r}" for k, v in sorted(ex.spec.params.items()))
    lines = [
        f"benchmark {ex.spec.id} ({params})",
        f"exact energy J(u) = {ex.J_exact:.10f}",
        f"contact radius R = {ex.R:.7f}",
        f"majorant iterations = {cfg.n_iter}, beta0 = {cfg.beta0}, load = {cfg.load}"
        + (", literal flux system" if cfg.literal else ""),
        "",
        f"{'h':>6} {'err2/2':>12} {'J(v)-J(u)':>12} {'M':>12} {'I_eff':>8} {'lower':>6} {'upper':>6}",
    ]
    for h, rep in reports:
        if rep.degenerate:
            lines.append(f"{str(h):>6}  degenerate: {rep.notes.get('reason', '')}")
            continue
        lines.append(
            f"{str(h):>6} {0.5 * rep.err2_l2:12.5e} {rep.energy_gap:12.5e} {rep.majorant:12.5e} "
            f"{rep.ieff:8.4f} {'ok' if rep.lower_ok else 'FAIL':>6} {'ok' if rep.upper_ok else 'FAIL':>6}"
        )
    for h, err in errors:
        lines.append(f"{str(h):>6}  ERROR: {err.strip().splitlines()[-1]}")
    return "\n".join(lines) + "\n"


def print_convergence_table(path) -> str:
    """Aligned table of a report with ratios ``err2(h) / err2(h/2)`` per benchmark."""
    rows = read_report_csv(path)
    cols = ["benchmark", "h", "err2_l0", "err2_l1", "err2_l2", "ratio", "energy_gap", "majorant",
            "ieff", "chain_ok"]
    widths = [9, 10, 12, 12, 12, 8, 12, 12, 8, 8]
    out = [" ".join(c.rjust(w) for c, w in zip(cols, widths))]
    prev = {}
    for row in rows:
        last = prev.get(row["benchmark"])
        ratio = ""
        if last is not None and row["err2_l2"] > 0 and np.isfinite(last):
            ratio = f"{last / row['err2_l2']:.3f}"
        prev[row["benchmark"]] = row["err2_l2"]
        cells = [
            row["benchmark"], f"{row['h']:.6g}", f"{row['err2_l0']:.5e}", f"{row['err2_l1']:.5e}",
            f"{row['err2_l2']:.5e}", ratio, f"{row['energy_gap']:.5e}", f"{row['majorant']:.5e}",
            f"{row['ieff']:.4f}", "true" if row["chain_ok"] else "false",
        ]
        out.append(" ".join(c.rjust(w) for c, w in zip(cells, widths)))
    return "\n".join(out) + "\n"


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="obstacle-majorant", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a benchmark over a list of mesh sizes")
    run.add_argument("--config", help="flat key=value file; command-line flags take precedence")
    run.add_argument("--benchmark", choices=["I", "II", "III"])
    run.add_argument("--f", dest="f", help="constant load (II, III)")
    run.add_argument("--phi", help="constant obstacle (II)")
    run.add_argument("--phimax", help="obstacle top value (III)")
    run.add_argument("--rho", help="sphere radius (III)")
    run.add_argument("--R", dest="R", help="contact radius (I)")
    run.add_argument("--levels", help='mesh sizes, e.g. "1/2..1/64" or "1/8,1/16"')
    run.add_argument("--out", help="output directory (default: $OBSTACLE_OUT or ./out)")
    run.add_argument("--workers", type=int, help="worker processes (default: number of cores)")
    run.add_argument("--omega", help="PSOR relaxation factor")
    run.add_argument("--qp-tol", dest="qp_tol")
    run.add_argument("--qp-max-iter", dest="qp_max_iter")
    run.add_argument("--n-iter", dest="n_iter", help="majorant iterations")
    run.add_argument("--beta0")
    run.add_argument("--majorant-rtol", dest="majorant_rtol", help="stop early on small decrease")
    run.add_argument("--load", choices=["exact", "average"])
    run.add_argument("--literal", action="store_const", const="true",
                     help="flux system and beta ratio without the Friedrichs constant")
    run.add_argument("--no-fields", dest="fields", action="store_const", const="false",
                     help="skip field dumps")

    table = sub.add_parser("table", help="print a convergence table from report.csv")
    table.add_argument("report")
    return parser


def cmd_run(ns) -> int:
    values = read_config_file(ns.config) if ns.config else {}
    for key in CONFIG_KEYS:
        val = getattr(ns, key, None)
        if val is not None:
            values[key] = val
    grid = build_config(values)
    reports, errors = run_grid(grid)
    write_report_csv(grid.out / "report.csv", [rep for _, rep in reports])
    text = summary_text(grid, reports, errors)
    (grid.out / "summary.txt").write_text(text)
    sys.stdout.write(text)
    for h, err in errors:
        sys.stderr.write(f"run h={h} failed:\n{err}")
    return 1 if errors else 0


def main(argv=None) -> int:
    ns = make_parser().parse_args(argv)
    try:
        if ns.command == "run":
            return cmd_run(ns)
        sys.stdout.write(print_convergence_table(ns.report))
        return 0
    except (ConfigError, ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
