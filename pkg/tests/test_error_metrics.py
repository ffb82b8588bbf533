from fractions import Fraction

import numpy as np
import pytest
from numpy.testing import assert_allclose

from obstacle_majorant import fem
from obstacle_majorant.benchmarks import benchmark2
from obstacle_majorant.error_metrics import (
    CSV_FIELDS,
    all_levels,
    build_chain,
    energy_error_sq,
    estimate_chain,
    ring_energies,
    ring_estimate_chain,
    zero_extend,
)
from obstacle_majorant.experiment import RunConfig, run_case
from obstacle_majorant.majorant import MajorantState
from obstacle_majorant.mesh import build_uniform_mesh, classify_ring
from obstacle_majorant.obstacle_qp import discrete_energy, obstacle_problem, solve_obstacle_qp
from obstacle_majorant.sparse_linalg import cg_solve

SQUARE = (-1, 1, -1, 1)


def curved(x, y):
    return np.sin(x) * np.exp(y)


def test_interpolant_has_zero_level0_error():
    mesh = build_uniform_mesh(SQUARE, Fraction(1, 4))
    chain = build_chain(mesh)
    v = curved(*mesh.nodes.T)
    assert energy_error_sq(chain, v, curved, 0) == pytest.approx(0.0, abs=1e-28)
    assert energy_error_sq(chain, v, curved, 2) > 0


def test_bilinear_field_has_zero_error_on_all_levels():
    mesh = build_uniform_mesh(SQUARE, Fraction(1, 4))
    u = lambda x, y: 1 + 2 * x - y + 3 * x * y  # noqa: E731
    e = all_levels(build_chain(mesh), u(*mesh.nodes.T), u)
    assert_allclose(e, 0.0, atol=1e-24)


def test_level_beyond_chain():
    chain = build_chain(build_uniform_mesh(SQUARE, Fraction(1, 2)), levels=1)
    with pytest.raises(ValueError):
        energy_error_sq(chain, np.zeros(25), curved, 2)


def test_levels_within_factor_two_benchmark2():
    res = run_case(RunConfig(benchmark="II"), Fraction(1, 8))
    e = np.array([res.report.err2_l0, res.report.err2_l1, res.report.err2_l2])
    assert e.max() <= 2 * e.min()


def test_discrete_minimiser_has_zero_discrete_gap():
    mesh = build_uniform_mesh(SQUARE, Fraction(1, 8))
    K = fem.assemble_global(mesh, "KBIL")
    b = fem.load_vector(mesh, np.full(mesh.n_active, -3.0))
    bnd = np.flatnonzero(mesh.boundary_nodes)
    p = obstacle_problem(mesh, K, b, np.full(mesh.n_nodes, -1.0), bnd, 0.0)
    v = solve_obstacle_qp(p).v
    free = np.flatnonzero(p.free)
    ref = np.zeros(mesh.n_nodes)
    ref[free] = cg_solve(K.submatrix(free), b[free], tol=1e-14)
    gap = discrete_energy(K, b, v) - discrete_energy(K, b, ref)
    assert abs(gap) <= 1e-12


def test_chain_violation_is_flagged_not_raised():
    state = MajorantState(1.0, np.zeros(1), np.zeros(1), P1=0.1, P2=0.0, P3=0.0, total=0.05)
    rep = estimate_chain("X", 0.5, 9, 12, (0.1, 0.1, 0.1), J_v=1.0, J_u=0.9, state=state)
    assert rep.lower_ok and not rep.upper_ok and not rep.chain_ok
    assert rep.ieff == pytest.approx(0.5)
    assert list(rep.row()) == CSV_FIELDS


def test_benchmark1_chain_fine_mesh():
    rep = run_case(RunConfig(benchmark="I"), Fraction(1, 64)).report
    assert rep.chain_ok, rep


@pytest.mark.parametrize("h", [Fraction(1, 4), Fraction(1, 16)])
def test_zero_extension_identity(h):
    pair = classify_ring(build_uniform_mesh(SQUARE, h))
    ins = pair.inscribed
    K = fem.assemble_global(ins, "KBIL")
    b = fem.load_vector(ins, np.full(ins.n_active, -10.0))
    p = obstacle_problem(ins, K, b, np.full(ins.n_nodes, -1.0), pair.dirichlet_nodes_inscribed, 0.0)
    v = solve_obstacle_qp(p).v
    J_in, J_out, v_out = ring_energies(pair, v, np.full(ins.n_active, -10.0),
                                       np.full(pair.circumscribed.n_active, -10.0))
    assert abs(J_in - J_out) <= 1e-12
    assert_allclose(v_out, v)


def test_zero_extend_rejects_nonzero_trace():
    pair = classify_ring(build_uniform_mesh(SQUARE, Fraction(1, 4)))
    v = np.zeros(pair.full.n_nodes)
    v[pair.dirichlet_nodes_inscribed[0]] = 1.0
    with pytest.raises(ValueError):
        zero_extend(pair, v)


def test_degenerate_ring_mesh():
    pair = classify_ring(build_uniform_mesh(SQUARE, 1))
    rep = ring_estimate_chain(pair, None, benchmark2(), 1.0, None, None, None)
    assert rep.degenerate and not rep.chain_ok
    assert "reason" in rep.notes


def test_degenerate_run_case():
    rep = run_case(RunConfig(benchmark="III"), Fraction(1, 1)).report
    assert rep.degenerate
