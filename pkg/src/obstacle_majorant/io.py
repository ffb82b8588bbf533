"""CSV and legacy-VTK writers for meshes, fields, traces and reports."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .error_metrics import CSV_FIELDS, MajorantReport
from .mesh import RectMesh


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_report_csv(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for rep in reports:
            row = rep.row() if isinstance(rep, MajorantReport) else rep
            w.writerow([_fmt(row[k]) for k in CSV_FIELDS])


def read_report_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        missing = set(CSV_FIELDS) - set(reader.fieldnames)
        if missing:
            raise ValueError(f"malformed report: missing columns {sorted(missing)}")
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            try:
                row = {k: float(raw[k]) for k in CSV_FIELDS if k not in ("benchmark", "chain_ok")}
            except (TypeError, ValueError) as exc:
                raise ValueError(f"malformed report line {lineno}: {exc}") from None
            row["benchmark"] = raw["benchmark"]
            row["chain_ok"] = raw["chain_ok"].strip().lower() == "true"
            rows.append(row)
        return rows


def write_mesh_csv(directory, mesh: RectMesh) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "nodes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "x", "y"])
        for i, (x, y) in enumerate(mesh.nodes):
            w.writerow([i, repr(float(x)), repr(float(y))])
    with open(d / "elements.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "n1", "n2", "n3", "n4", "active"])
        for e, (n1, n2, n3, n4) in enumerate(mesh.elements):
            w.writerow([e, n1, n2, n3, n4, int(mesh.active_elements[e])])


def write_vtk(path, mesh: RectMesh, point_data=None, cell_data=None, title="obstacle") -> None:
    """Legacy ASCII unstructured grid of the active quads.

    ``point_data`` values have one entry per grid node, ``cell_data`` values
    one per active element.
    """
    point_data = point_data or {}
    cell_data = cell_data or {}
    ids = mesh.active_ids
    lines = ["# vtk DataFile Version 3.0", title, "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_nodes} double"]
    lines += [f"{x!r} {y!r} 0.0" for x, y in mesh.nodes.tolist()]
    lines.append(f"CELLS {ids.size} {5 * ids.size}")
    lines += ["4 %d %d %d %d" % tuple(q) for q in mesh.elements[ids].tolist()]
    lines.append(f"CELL_TYPES {ids.size}")
    lines += ["9"] * ids.size
    if point_data:
        lines.append(f"POINT_DATA {mesh.n_nodes}")
        for name, vals in point_data.items():
            vals = np.asarray(vals, dtype=float)
            if vals.shape != (mesh.n_nodes,):
                raise ValueError(f"point field {name!r} has shape {vals.shape}")
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [repr(v) for v in vals.tolist()]
    if cell_data:
        lines.append(f"CELL_DATA {ids.size}")
        for name, vals in cell_data.items():
            vals = np.asarray(vals, dtype=float)
            if vals.shape != (ids.size,):
                raise ValueError(f"cell field {name!r} has shape {vals.shape}")
            lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
            lines += [repr(v) for v in vals.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def write_fields_csv(path, mesh: RectMesh, cell_data: dict) -> None:
    """One row per active element: id, center, then the given element fields."""
    centers = mesh.element_centers()
    names = list(cell_data)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element", "xc", "yc", *names])
        cols = [np.asarray(cell_data[n], dtype=float) for n in names]
        for k, e in enumerate(mesh.active_ids):
            w.writerow([int(e), repr(float(centers[k, 0])), repr(float(centers[k, 1])),
                        *(repr(float(c[k])) for c in cols)])


def write_majorant_trace(path, trace) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iter", "step", "beta", "P1", "P2", "P3", "total"])
        for k, step, beta, P1, P2, P3, total in trace:
            w.writerow([k, step, *(repr(float(x)) for x in (beta, P1, P2, P3, total))])


def write_solver_trace(path, energies, residuals) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sweep", "energy", "residual"])
        for k, (e, r) in enumerate(zip(energies, residuals)):
            w.writerow([k, repr(float(e)), repr(float(r))])
