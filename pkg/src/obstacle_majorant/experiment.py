"""One (benchmark, mesh size) run: solve, minimise the majorant, evaluate errors."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import fem
from .benchmarks import ExactSolution, get_benchmark
from .error_metrics import MajorantReport, all_levels, build_chain, estimate_chain, ring_estimate_chain
from .majorant import MajorantProblem, MajorantState, friedrichs_constant, run_algorithm1
from .mesh import RectMesh, build_uniform_mesh, classify_ring
from .obstacle_qp import QPSolution, discrete_energy, obstacle_problem, recover_mu0, solve_obstacle_qp

BOX = (-1.0, 1.0, -1.0, 1.0)


@dataclass
class RunConfig:
    benchmark: str = "II"
    params: dict = field(default_factory=dict)
    levels: tuple = (Fraction(1, 2), Fraction(1, 4), Fraction(1, 8),
                     Fraction(1, 16), Fraction(1, 32), Fraction(1, 64))
    omega: float = 1.5
    qp_tol: float = 1e-10
    qp_max_iter: int = 1_000_000
    n_iter: int = 2
    beta0: float = 1.0
    literal: bool = False  # flux system and beta ratio without C
    load: str = "exact"  # "exact": Gauss quadrature of f; "average": four-vertex means
    majorant_rtol: float | None = None

    def exact(self) -> ExactSolution:
        return get_benchmark(self.benchmark, **self.params)


@dataclass
class CaseResult:
    report: MajorantReport
    exact: ExactSolution
    solve_mesh: RectMesh  # where v was computed
    majorant_mesh: RectMesh  # where the majorant was minimised
    v: np.ndarray | None = None
    qp: QPSolution | None = None
    state: MajorantState | None = None
    mu0: np.ndarray | None = None
    problem: MajorantProblem | None = None
    seconds: float = 0.0


def _load(mesh: RectMesh, exact: ExactSolution, load: str):
    """Piecewise-constant load, its oscillation and the load vector."""
    if load not in ("exact", "average"):
        raise ValueError(f"unknown load quadrature {load!r}")
    if load == "exact":
        means, osc = fem.element_mean(mesh, exact.f)
        return means, osc, fem.load_vector_exact(mesh, exact.f)
    fbar = fem.element_average(mesh, exact.f)
    return fbar, 0.0, fem.load_vector(mesh, fbar)


def _solve(mesh, exact, b, dirichlet, dirichlet_values, cfg):
    K = fem.assemble_global(mesh, "KBIL")
    phi = exact.phi(mesh.nodes[:, 0], mesh.nodes[:, 1])
    p = obstacle_problem(mesh, K, b, phi, dirichlet, dirichlet_values)
    sol = solve_obstacle_qp(p, omega=cfg.omega, tol=cfg.qp_tol, max_iter=cfg.qp_max_iter)
    return K, phi, sol


def run_square(cfg: RunConfig, h, exact: ExactSolution) -> CaseResult:
    mesh = build_uniform_mesh(BOX, h)
    fbar, osc, b = _load(mesh, exact, cfg.load)
    bnd = np.flatnonzero(mesh.boundary_nodes)
    xb, yb = mesh.nodes[bnd].T
    K, phi, sol = _solve(mesh, exact, b, bnd, exact.u(xb, yb), cfg)
    v = sol.v
    J_v = discrete_energy(K, b, v)
    mu0 = recover_mu0(sol, mesh)
    prob = MajorantProblem(mesh, v, fbar, phi, friedrichs_constant("square_side2"), osc)
    state = run_algorithm1(prob, mu0, cfg.beta0, cfg.n_iter, literal=cfg.literal, rtol=cfg.majorant_rtol)
    err2 = all_levels(build_chain(mesh), v, exact.u)
    report = estimate_chain(exact.spec.id, float(h), mesh.n_nodes, mesh.n_edges, err2, J_v,
                            exact.J_exact, state)
    return CaseResult(report, exact, mesh, mesh, v, sol, state, mu0, prob)


def run_ring(cfg: RunConfig, h, exact: ExactSolution) -> CaseResult:
    pair = classify_ring(build_uniform_mesh(BOX, h))
    ins, circ = pair.inscribed, pair.circumscribed
    if pair.degenerate:
        report = ring_estimate_chain(pair, None, exact, float(h), None, None, None)
        return CaseResult(report, exact, ins, circ)
    fbar_in, _, b_in = _load(ins, exact, cfg.load)
    fbar_out, osc_out, _ = _load(circ, exact, cfg.load)
    bnd = pair.dirichlet_nodes_inscribed
    K, _, sol = _solve(ins, exact, b_in, bnd, 0.0, cfg)
    v = sol.v
    mu0 = ins.transfer_elements(circ, recover_mu0(sol, ins))
    phi_out = exact.phi(circ.nodes[:, 0], circ.nodes[:, 1])
    prob = MajorantProblem(circ, v, fbar_out, phi_out, friedrichs_constant("unit_disk_in_square"), osc_out)
    state = run_algorithm1(prob, mu0, cfg.beta0, cfg.n_iter, literal=cfg.literal, rtol=cfg.majorant_rtol)
    report = ring_estimate_chain(pair, v, exact, float(h), state, fbar_in, fbar_out)
    return CaseResult(report, exact, ins, circ, v, sol, state, mu0, prob)


def run_case(cfg: RunConfig, h) -> CaseResult:
    exact = cfg.exact()
    t0 = time.perf_counter()
    runner = run_square if exact.domain == "square" else run_ring
    result = runner(cfg, h, exact)
    result.seconds = time.perf_counter() - t0
    result.report.notes["R"] = exact.R
    return result
