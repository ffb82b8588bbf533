from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from obstacle_majorant import fem
from obstacle_majorant.benchmarks import benchmark2
from obstacle_majorant.mesh import build_uniform_mesh, classify_ring
from obstacle_majorant.obstacle_qp import (
    QPProblem,
    QPSolution,
    discrete_energy,
    obstacle_problem,
    recover_mu0,
    solve_obstacle_qp,
)
from obstacle_majorant.sparse_linalg import ConvergenceError, assemble, cg_solve

from oracles import dense_active_set

EMPTY = np.array([], dtype=np.int64)


def ring_problem(h, f=-10.0, phi=-1.0):
    pair = classify_ring(build_uniform_mesh((-1, 1, -1, 1), h))
    mesh = pair.inscribed
    K = fem.assemble_global(mesh, "KBIL")
    b = fem.load_vector(mesh, np.full(mesh.n_active, f))
    p = obstacle_problem(mesh, K, b, np.full(mesh.n_nodes, phi), pair.dirichlet_nodes_inscribed, 0.0)
    return mesh, p


def kkt_residuals(p, v):
    free = p.free
    r = (p.K @ v - p.b)[free]
    gap = (v - p.lower)[free]
    return {
        "primal": max(0.0, -gap.min(initial=0.0)),
        "dual": max(0.0, -r.min(initial=0.0)),
        "complementarity": np.abs(r * gap).max(initial=0.0),
    }


def test_scalar_kkt():
    p = QPProblem(assemble(1, [(0, 0, 2.0)]), np.array([-4.0]), np.array([-1.0]), EMPTY, np.array([]))
    sol = solve_obstacle_qp(p)
    assert sol.v[0] == pytest.approx(-1.0)
    assert sol.nodal_multiplier[0] == pytest.approx(2.0)
    assert sol.active_set[0]


def test_inactive_obstacle_equals_cg():
    mesh, p = ring_problem(Fraction(1, 8), f=-3.0)
    sol = solve_obstacle_qp(p)
    free = np.flatnonzero(p.free)
    ref = np.zeros(mesh.n_nodes)
    ref[free] = cg_solve(p.K.submatrix(free), p.b[free], tol=1e-14)
    assert_allclose(sol.v, ref, atol=1e-9)
    assert not sol.active_set.any()
    assert_array_equal(recover_mu0(sol, mesh), 0.0)


@pytest.mark.parametrize("h", [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)])
def test_benchmark2_matches_active_set_oracle(h):
    mesh, p = ring_problem(h)
    sol = solve_obstacle_qp(p)
    fixed = ~p.free
    vals = np.zeros(mesh.n_nodes)
    vals[p.dirichlet] = p.dirichlet_values
    ref, _ = dense_active_set(p.K.toarray(), p.b, p.lower, fixed, vals)
    assert np.max(np.abs(sol.v - ref)) <= 1e-8
    assert max(kkt_residuals(p, sol.v).values()) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(
    n=st.sampled_from([2, 4, 8]),
    f=st.floats(-20, 5),
    seed=st.integers(0, 2**32 - 1),
)
def test_random_obstacles_match_oracle(n, f, seed):
    mesh = build_uniform_mesh((0, 1, 0, 1), Fraction(1, n))
    rng = np.random.default_rng(seed)
    K = fem.assemble_global(mesh, "KBIL")
    b = fem.load_vector(mesh, np.full(mesh.n_active, f))
    phi = rng.uniform(-0.5, 0.1, mesh.n_nodes)
    bnd = np.flatnonzero(mesh.boundary_nodes)
    p = obstacle_problem(mesh, K, b, phi, bnd, np.maximum(phi[bnd], 0.0))
    sol = solve_obstacle_qp(p)
    ref, lam = dense_active_set(K.toarray(), b, phi, ~p.free, np.where(p.free, 0.0, sol.v))
    assert np.max(np.abs(sol.v - ref)) <= 1e-8
    assert np.all(sol.v[p.free] >= phi[p.free])
    assert max(kkt_residuals(p, sol.v).values()) <= 1e-8


@pytest.mark.parametrize("omega", [0.8, 1.0, 1.5, 1.9])
def test_energy_decreases_every_sweep(omega):
    _, p = ring_problem(Fraction(1, 8))
    sol = solve_obstacle_qp(p, omega=omega, v0=np.zeros(p.K.n))
    e = sol.energy_trace
    assert np.all(np.diff(e) <= 1e-13 * np.abs(e[:-1]))
    assert sol.residual <= 1e-10


def test_bad_omega():
    _, p = ring_problem(Fraction(1, 4))
    with pytest.raises(ValueError):
        solve_obstacle_qp(p, omega=2.0)


def test_nonconvergence_raises():
    _, p = ring_problem(Fraction(1, 16))
    with pytest.raises(ConvergenceError):
        solve_obstacle_qp(p, max_iter=2, v0=np.zeros(p.K.n))


def test_mu0_lumped_mass_inversion():
    mesh = build_uniform_mesh((-1, 1, -1, 1), Fraction(1, 4))
    centre = np.flatnonzero(np.all(np.isclose(mesh.nodes, 0), axis=1))[0]
    q = 7.0
    lam = np.zeros(mesh.n_nodes)
    lam[centre] = mesh.hx * mesh.hy * q
    active = lam > 0
    sol = QPSolution(np.zeros(mesh.n_nodes), active, lam, 0, 0.0, np.zeros(1), np.zeros(1))
    mu = recover_mu0(sol, mesh)
    incident = np.any(mesh.elements[mesh.active_ids] == centre, axis=1)
    assert incident.sum() == 4
    # pointwise value q at the node, averaged with three zero vertices
    assert_allclose(mu[incident], q / 4)
    assert_allclose(mu[~incident], 0.0)


def test_mu0_on_contact_is_minus_f():
    mesh, p = ring_problem(Fraction(1, 16))
    mu = recover_mu0(solve_obstacle_qp(p), mesh)
    r = np.hypot(*mesh.element_centers().T)
    deep = r < 0.3
    assert deep.any()
    assert_allclose(mu[deep], 10.0, atol=10 * float(mesh.hx))


def test_discrete_energy_examples():
    K = assemble(1, [(0, 0, 2.0)])
    assert discrete_energy(K, np.array([2.0]), np.array([0.0])) == 0.0
    assert discrete_energy(K, np.array([2.0]), np.array([1.0])) == -1.0


def test_discrete_energy_converges_benchmark2():
    J = benchmark2().J_exact
    errs = []
    for h in (Fraction(1, 8), Fraction(1, 16), Fraction(1, 32)):
        _, p = ring_problem(h)
        errs.append(discrete_energy(p.K, p.b, solve_obstacle_qp(p).v) - J)
    assert all(e > 0 for e in errs)
    assert errs[0] > errs[1] > errs[2]
