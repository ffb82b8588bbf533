"""Discrete obstacle problem: bound-constrained QP solved by projected SOR."""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

from .mesh import RectMesh
from .sparse_linalg import ConvergenceError, SparseSymMatrix, cg_solve


@dataclass(frozen=True, eq=False)
class QPProblem:
    """``min 1/2 w^T K w - b^T w`` with ``w_i >= lower_i`` on free nodes and
    ``w_j = value_j`` on Dirichlet nodes.

    Nodes outside the active rectangulation belong to the Dirichlet set with
    value zero.
    """

    K: SparseSymMatrix
    b: np.ndarray
    lower: np.ndarray  # full length; only entries at free nodes matter
    dirichlet: np.ndarray  # node indices
    dirichlet_values: np.ndarray

    def __post_init__(self):
        n = self.K.n
        if self.b.shape != (n,) or self.lower.shape != (n,):
            raise ValueError("b and lower must have one entry per node")
        if self.dirichlet.shape != self.dirichlet_values.shape:
            raise ValueError("dirichlet indices and values differ in length")
        if np.unique(self.dirichlet).size != self.dirichlet.size:
            raise ValueError("duplicate Dirichlet node")

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.K.n, dtype=bool)
        mask[self.dirichlet] = False
        return mask


@dataclass(frozen=True, eq=False)
class QPSolution:
    v: np.ndarray
    active_set: np.ndarray  # free nodes with v_i == lower_i
    nodal_multiplier: np.ndarray  # K v - b on free nodes, 0 on Dirichlet nodes
    sweeps: int
    residual: float
    energy_trace: np.ndarray = field(repr=False)
    residual_trace: np.ndarray = field(repr=False)


def obstacle_problem(mesh: RectMesh, K, b, phi_nodal, dirichlet_nodes, dirichlet_values) -> QPProblem:
    """QP on ``mesh``'s active rectangulation; nodes off it are pinned to zero."""
    dirichlet_nodes = np.asarray(dirichlet_nodes, dtype=np.int64)
    pinned = np.zeros(mesh.n_nodes, dtype=bool)
    pinned[dirichlet_nodes] = True
    outside = np.flatnonzero(~mesh.active_nodes & ~pinned)
    values = np.zeros(mesh.n_nodes)
    values[dirichlet_nodes] = np.broadcast_to(dirichlet_values, dirichlet_nodes.shape)
    idx = np.concatenate([dirichlet_nodes, outside])
    return QPProblem(K, np.asarray(b, dtype=float), np.asarray(phi_nodal, dtype=float), idx, values[idx])


@numba.njit(cache=True)
def _psor(indptr, indices, data, b, lower, free, v, omega, tol, max_iter):
    n = b.size
    diag = np.zeros(n)
    for i in range(n):
        for k in range(indptr[i], indptr[i + 1]):
            if indices[k] == i:
                diag[i] = data[k]
    energies = np.empty(max_iter + 1)
    measures = np.empty(max_iter + 1)
    Kv = np.empty(n)

    def diagnostics():
        e = 0.0
        m = 0.0
        for i in range(n):
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                s += data[k] * v[indices[k]]
            Kv[i] = s
            e += 0.5 * v[i] * s - b[i] * v[i]
            if free[i]:
                target = max(lower[i], v[i] - (s - b[i]) / diag[i])
                m = max(m, abs(v[i] - target))
        return e, m

    energies[0], measures[0] = diagnostics()
    it = 0
    while measures[it] > tol and it < max_iter:
        for i in range(n):
            if not free[i]:
                continue
            s = b[i]
            for k in range(indptr[i], indptr[i + 1]):
                s -= data[k] * v[indices[k]]
            v[i] = max(lower[i], v[i] + omega * s / diag[i])
        it += 1
        energies[it], measures[it] = diagnostics()
    return it, energies[: it + 1], measures[: it + 1], Kv


def solve_obstacle_qp(
    p: QPProblem, omega: float = 1.5, tol: float = 1e-10, max_iter: int = 1_000_000, v0=None
) -> QPSolution:
    """Projected SOR sweeps in node order until the projected step is below ``tol``.

    The default start is the unconstrained CG solution clipped to the bounds.
    """
    if not 0.0 < omega < 2.0:
        raise ValueError(f"relaxation parameter must lie in (0, 2), got {omega}")
    free = p.free
    if not np.all(np.isfinite(p.lower[free])):
        raise ValueError("obstacle values must be finite at free nodes")
    v = np.zeros(p.K.n)
    v[p.dirichlet] = p.dirichlet_values
    fidx = np.flatnonzero(free)
    if v0 is not None:
        v[fidx] = np.asarray(v0, dtype=float)[fidx]
    elif fidx.size:
        Kff = p.K.submatrix(fidx)
        rhs = p.b[fidx] - p.K.submatrix(fidx, p.dirichlet) @ p.dirichlet_values
        v[fidx] = cg_solve(Kff, rhs)
    v[fidx] = np.maximum(v[fidx], p.lower[fidx])

    K = p.K.csr
    sweeps, energies, measures, Kv = _psor(
        K.indptr.astype(np.int64), K.indices.astype(np.int64), K.data, p.b, p.lower, free, v,
        float(omega), float(tol), int(max_iter),
    )
    if measures[-1] > tol:
        raise ConvergenceError("projected SOR did not converge", float(measures[-1]), int(sweeps))
    lam = np.where(free, Kv - p.b, 0.0)
    active = free & (v == p.lower)
    return QPSolution(v, active, lam, int(sweeps), float(measures[-1]), energies, measures)


def recover_mu0(sol: QPSolution, mesh: RectMesh) -> np.ndarray:
    """Piecewise-constant multiplier from the nodal KKT residual.

    Nodal values at contact nodes are divided by the lumped mass, averaged over
    the four vertices of each element and clipped at zero.  Inactive nodes
    contribute zero by complementarity.
    """
    lam = np.where(sol.active_set, sol.nodal_multiplier, 0.0)
    mass = mesh.lumped_mass
    pointwise = np.divide(lam, mass, out=np.zeros_like(lam), where=mass > 0)
    mu = pointwise[mesh.elements[mesh.active_ids]].mean(axis=1)
    return np.maximum(mu, 0.0)


def discrete_energy(K, b, v) -> float:
    v = np.asarray(v, dtype=float)
    return float(0.5 * v @ (K @ v) - np.asarray(b) @ v)
