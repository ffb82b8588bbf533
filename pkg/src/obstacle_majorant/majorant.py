"""Functional error majorant for the obstacle problem and its minimisation.

For a discrete solution ``v`` the majorant reads

    M = (1+beta)/2 * P1 + (1 + 1/beta)/2 * C^2 * P2 + P3,
    P1 = ||grad v - tau||^2,  P2 = ||div tau + f + mu||^2,  P3 = int mu (v - phi),

with ``tau`` in RT0, ``mu >= 0`` piecewise constant and ``C`` the Friedrichs
constant of the domain.  The minimisation alternates exact block updates of
``tau``, ``mu`` and ``beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import fem
from .mesh import RectMesh
from .sparse_linalg import cg_solve

BETA_MIN = 1e-8
BETA_MAX = 1e8


class DegenerateBeta(ArithmeticError):
    """``P1 == 0``: the flux equals the gradient and beta has no finite minimiser."""


def friedrichs_constant(domain: str) -> float:
    """Friedrichs constant ``C`` with ``||v|| <= C ||grad v||`` on ``V_0``.

    Both supported domains use the constant of the square ``(-1, 1)^2``; the
    disk rectangulations embed in that square by zero extension.
    """
    if domain in ("square_side2", "square", "unit_disk_in_square", "disk"):
        return math.sqrt(2.0) / math.pi
    raise ValueError(f"no Friedrichs constant for domain {domain!r}")


@dataclass
class MajorantState:
    beta: float
    mu: np.ndarray
    tau: np.ndarray
    P1: float = math.nan
    P2: float = math.nan
    P3: float = math.nan
    total: float = math.nan
    C: float = math.sqrt(2.0) / math.pi
    iterations: int = 0
    trace: list = field(default_factory=list)  # (iteration, step, beta, P1, P2, P3, total)

    @property
    def parts(self):
        return self.P1, self.P2, self.P3


class MajorantProblem:
    """Data fixed during the minimisation: mesh, ``v``, load, obstacle.

    ``fbar`` is the piecewise-constant load used everywhere.  ``oscillation`` is
    ``||f - fbar||^2`` and is zero when the load is taken as exactly
    piecewise constant.
    """

    def __init__(self, mesh: RectMesh, v, fbar, phi, C: float, oscillation: float = 0.0):
        self.mesh = mesh
        self.v = np.asarray(v, dtype=float)
        self.fbar = np.broadcast_to(np.asarray(fbar, dtype=float), (mesh.n_active,)).copy()
        self.phi = np.broadcast_to(np.asarray(phi, dtype=float), (mesh.n_nodes,)).copy()
        self.C = float(C)
        self.oscillation = float(oscillation)
        self.edge_ids = np.flatnonzero(mesh.active_edges)
        K = fem.assemble_global(mesh, "KRT0").csr
        M = fem.assemble_global(mesh, "MRT0").csr
        self.K_rt = K[self.edge_ids][:, self.edge_ids]
        self.M_rt = M[self.edge_ids][:, self.edge_ids]
        self.vbar = fem.element_average(mesh, self.v)
        self.phibar = fem.element_average(mesh, self.phi)
        self.c, _ = fem.flux_rhs(mesh, self.v, 0.0)


def _weights(beta: float, C: float, literal: bool):
    # literal=True: unit weight on the div-div block instead of C^2
    w_div = (1.0 + 1.0 / beta) * (1.0 if literal else C * C)
    return 1.0 + beta, w_div


def flux_step(prob: MajorantProblem, beta: float, fbar_plus_mu, literal: bool = False, tol: float = 1e-12):
    """Minimise the majorant over RT0 fluxes for fixed ``beta`` and ``mu``.

    Solves ``[(1+b) M + (1+1/b) C^2 K] y = (1+b) c - (1+1/b) C^2 d``; with
    ``literal=True`` the factor ``C^2`` is omitted.  No boundary conditions are
    imposed on ``y``.
    """
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    mesh = prob.mesh
    _, d = fem.flux_rhs(mesh, np.zeros(mesh.n_nodes), fbar_plus_mu)
    w_mass, w_div = _weights(beta, prob.C, literal)
    A = (w_mass * prob.M_rt + w_div * prob.K_rt).tocsr()
    rhs = w_mass * prob.c[prob.edge_ids] - w_div * d[prob.edge_ids]
    y = np.zeros(mesh.n_edges)
    y[prob.edge_ids] = cg_solve(A, rhs, tol=tol)
    return y


def multiplier_step(mesh: RectMesh, beta, tau, fbar, vbar, phibar, C):
    """Elementwise minimiser ``[-div tau - f - (v - phi)/(C^2 (1 + 1/beta))]^+``."""
    if not (beta > 0 and C > 0):
        raise ValueError("beta and C must be positive")
    div = fem.element_divergence(mesh, tau)
    mu = -div - np.asarray(fbar) - (np.asarray(vbar) - np.asarray(phibar)) / (C * C * (1.0 + 1.0 / beta))
    return np.maximum(mu, 0.0)


def beta_step(P1: float, P2: float, C: float = 1.0, literal: bool = False) -> float:
    """Minimiser of ``(1+b)/2 P1 + (1+1/b)/2 C^2 P2`` over ``b``, clamped.

    ``literal=True`` returns the ratio without ``C``.  Raises
    :class:`DegenerateBeta` when ``P1 == 0``.
    """
    if P1 <= 0.0:
        raise DegenerateBeta("flux equals gradient; keep previous beta")
    scale = 1.0 if literal else C
    beta = scale * math.sqrt(max(P2, 0.0)) / math.sqrt(P1)
    return min(max(beta, BETA_MIN), BETA_MAX)


def local_parts(prob: MajorantProblem, mu, tau):
    """Per-element contributions to P1, P2 and P3."""
    mesh = prob.mesh
    area = mesh.element_area
    p1 = fem.gradient_minus_flux_sq(mesh, prob.v, tau)
    div = fem.element_divergence(mesh, tau)
    p2 = area * (div + prob.fbar + mu) ** 2
    p3 = area * mu * (prob.vbar - prob.phibar)
    return p1, p2, p3


def combine(beta, C, P1, P2, P3):
    return 0.5 * (1.0 + beta) * P1 + 0.5 * (1.0 + 1.0 / beta) * C * C * P2 + P3


def evaluate_majorant(prob: MajorantProblem, beta, mu, tau):
    """Return ``(P1, P2, P3, total)``."""
    p1, p2, p3 = local_parts(prob, np.asarray(mu, dtype=float), tau)
    P1, P2, P3 = float(p1.sum()), float(p2.sum()) + prob.oscillation, float(p3.sum())
    return P1, P2, P3, combine(beta, prob.C, P1, P2, P3)


def run_algorithm1(
    prob: MajorantProblem,
    mu0,
    beta0: float = 1.0,
    n_iter: int = 2,
    literal: bool = False,
    rtol: float | None = None,
) -> MajorantState:
    """Alternate flux, multiplier and beta updates ``n_iter`` times.

    Every intermediate majorant value is appended to ``state.trace``.  With
    ``rtol`` set, iteration stops early once an outer iteration lowers the
    majorant by less than ``rtol`` relative.  ``n_iter=0`` evaluates the
    majorant at ``tau = 0``.
    """
    mesh = prob.mesh
    mu = np.asarray(mu0, dtype=float).copy()
    if mu.shape != (mesh.n_active,) or np.any(mu < 0):
        raise ValueError("initial multiplier must be nonnegative with one value per active element")
    if not beta0 > 0:
        raise ValueError("initial beta must be positive")
    beta = float(beta0)
    tau = np.zeros(mesh.n_edges)
    state = MajorantState(beta, mu, tau, C=prob.C)

    def record(k, step):
        P1, P2, P3, total = evaluate_majorant(prob, beta, mu, tau)
        state.trace.append((k, step, beta, P1, P2, P3, total))
        return total

    last = record(0, "init")
    for k in range(1, n_iter + 1):
        tau = flux_step(prob, beta, prob.fbar + mu, literal=literal)
        record(k, "flux")
        mu = multiplier_step(mesh, beta, tau, prob.fbar, prob.vbar, prob.phibar, prob.C)
        P1, P2, P3, _ = evaluate_majorant(prob, beta, mu, tau)
        state.trace.append((k, "multiplier", beta, P1, P2, P3, combine(beta, prob.C, P1, P2, P3)))
        try:
            beta = beta_step(P1, P2, prob.C, literal=literal)
        except DegenerateBeta:
            pass
        total = record(k, "beta")
        state.iterations = k
        if rtol is not None and last - total <= rtol * abs(last):
            break
        last = total

    state.beta, state.mu, state.tau = beta, mu, tau
    state.P1, state.P2, state.P3, state.total = evaluate_majorant(prob, beta, mu, tau)
    return state


def trace_is_monotone(state: MajorantState, rtol: float = 1e-12) -> bool:
    totals = np.array([row[-1] for row in state.trace])
    slack = rtol * np.maximum(np.abs(totals[:-1]), np.abs(totals[1:]))
    return bool(np.all(np.diff(totals) <= slack))

