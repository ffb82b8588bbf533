from fractions import Fraction

import numpy as np
import pytest

from obstacle_majorant import cli
from obstacle_majorant.cli import ConfigError, build_config, parse_levels, print_convergence_table
from obstacle_majorant.error_metrics import CSV_FIELDS
from obstacle_majorant.io import read_report_csv, write_report_csv, write_vtk
from obstacle_majorant.mesh import build_uniform_mesh, classify_ring


@pytest.mark.parametrize(
    "text, expected",
    [
        ("1/2..1/64", [Fraction(1, 2**k) for k in range(1, 7)]),
        ("1/16", [Fraction(1, 16)]),
        ("1/8, 1/16", [Fraction(1, 8), Fraction(1, 16)]),
        ("0.25", [Fraction(1, 4)]),
    ],
)
def test_parse_levels(text, expected):
    assert list(parse_levels(text)) == expected


@pytest.mark.parametrize("text", ["", "abc", "1/2..1/3", "1/64..1/2", "-1/2"])
def test_parse_levels_rejects(text):
    with pytest.raises(ConfigError):
        parse_levels(text)


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# grid\nbenchmark = III\nrho = 2.0\nlevels = 1/4..1/8\nn_iter = 3\n")
    values = cli.read_config_file(cfg)
    values["rho"] = "1.5"
    grid = build_config(values, env={})
    assert grid.run.benchmark == "III"
    assert grid.run.params == {"rho": 1.5}
    assert grid.run.n_iter == 3
    assert grid.run.levels == (Fraction(1, 4), Fraction(1, 8))
    assert str(grid.out) == "out"


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("benchmark = II\ncolour = blue\n")
    with pytest.raises(ConfigError):
        cli.read_config_file(cfg)
    assert cli.main(["run", "--config", str(cfg)]) == 2


@pytest.mark.parametrize("values", [{"benchmark": "II", "rho": "1"}, {"load": "midpoint"}, {"omega": "fast"}])
def test_invalid_values(values):
    with pytest.raises(ConfigError):
        build_config(values, env={})


def test_output_dir_from_environment(tmp_path):
    assert build_config({}, env={"OBSTACLE_OUT": str(tmp_path)}).out == tmp_path
    assert build_config({"out": "x"}, env={"OBSTACLE_OUT": str(tmp_path)}).out.name == "x"


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    code = cli.main(["run", "--benchmark", "II", "--levels", "1/2", "--out", str(blocker / "sub")])
    assert code == 2


def test_run_benchmark2_grid(tmp_path):
    code = cli.main(["run", "--benchmark", "II", "--f", "-10", "--phi", "-1", "--levels", "1/2..1/64",
                     "--out", str(tmp_path), "--workers", "1", "--no-fields"])
    assert code == 0
    rows = read_report_csv(tmp_path / "report.csv")
    assert len(rows) == 6
    assert all(r["chain_ok"] for r in rows)
    assert (tmp_path / "report.csv").read_text().splitlines()[0] == ",".join(CSV_FIELDS)


def test_run_benchmark1_field_dumps(tmp_path):
    assert cli.main(["run", "--benchmark", "I", "--R", "0.7", "--levels", "1/16", "--out", str(tmp_path)]) == 0
    d = tmp_path / "fields" / "I_h1_16"
    nodes = (d / "nodes.csv").read_text().splitlines()
    assert len(nodes) == 1 + 33 * 33
    vtk = (d / "fields.vtk").read_text()
    assert "CELLS 1024 5120" in vtk and "POINT_DATA 1089" in vtk and "CELL_DATA 1024" in vtk
    for name in ("v", "tau_x", "tau_y", "mu", "p1", "p2", "p3"):
        assert f"SCALARS {name} double 1" in vtk
    header = (d / "element_fields.csv").read_text().splitlines()[0]
    assert header.startswith("element,xc,yc,tau_x,tau_y,mu")
    trace = (d / "majorant_trace.csv").read_text().splitlines()
    assert trace[0] == "iter,step,beta,P1,P2,P3,total" and len(trace) == 1 + 1 + 2 * 3
    assert (d / "solver_trace.csv").read_text().startswith("sweep,energy,residual")


def test_run_benchmark3_reports_radius(tmp_path):
    assert cli.main(["run", "--benchmark", "III", "--f", "-10", "--phimax", "-1", "--rho", "1.2",
                     "--levels", "1/8", "--out", str(tmp_path), "--no-fields"]) == 0
    summary = (tmp_path / "summary.txt").read_text()
    line = next(s for s in summary.splitlines() if s.startswith("contact radius"))
    assert float(line.split("=")[1]) == pytest.approx(0.4389205, abs=1e-6)


def test_failed_run_sets_exit_status(tmp_path):
    code = cli.main(["run", "--benchmark", "II", "--levels", "1/8,1/16", "--qp-max-iter", "1",
                     "--out", str(tmp_path), "--no-fields"])
    assert code == 1
    assert "ERROR" in (tmp_path / "summary.txt").read_text()


def test_worker_pool_matches_serial(tmp_path):
    args = ["run", "--benchmark", "III", "--levels", "1/2..1/8", "--no-fields"]
    assert cli.main(args + ["--out", str(tmp_path / "a"), "--workers", "1"]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    assert (tmp_path / "a" / "report.csv").read_bytes() == (tmp_path / "b" / "report.csv").read_bytes()


def test_table_empty_and_two_levels(tmp_path):
    empty = tmp_path / "empty.csv"
    write_report_csv(empty, [])
    assert len(print_convergence_table(empty).splitlines()) == 1
    row = {k: 1.0 for k in CSV_FIELDS} | {"benchmark": "II", "chain_ok": True}
    two = tmp_path / "two.csv"
    write_report_csv(two, [row | {"h": 0.5, "err2_l2": 4.0}, row | {"h": 0.25, "err2_l2": 1.0}])
    lines = print_convergence_table(two).splitlines()
    assert len(lines) == 3
    ratios = [line.split()[5] for line in lines[1:] if len(line.split()) == len(lines[0].split())]
    assert ratios == ["4.000"]


def test_table_rejects_malformed(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("benchmark,h\nII,0.5\n")
    with pytest.raises(ValueError):
        read_report_csv(bad)
    assert cli.main(["table", str(bad)]) == 2


def test_vtk_field_shape_checked(tmp_path):
    mesh = classify_ring(build_uniform_mesh((-1, 1, -1, 1), Fraction(1, 4))).inscribed
    with pytest.raises(ValueError):
        write_vtk(tmp_path / "x.vtk", mesh, cell_data={"mu": np.zeros(mesh.n_elements + 1)})
    write_vtk(tmp_path / "ok.vtk", mesh, {"v": np.zeros(mesh.n_nodes)}, {"mu": np.ones(mesh.n_active)})
    text = (tmp_path / "ok.vtk").read_text().splitlines()
    assert text[0].startswith("# vtk DataFile")
    assert f"CELL_TYPES {mesh.n_active}" in text
