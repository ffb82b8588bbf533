"""Energy-norm errors on nested meshes and the two-sided estimate.

The squared error of a discrete solution is approximated by the stiffness
quadratic form of ``P v - I u`` on the same mesh (level 0) and on the once
(level 1) or twice (level 2) refined mesh, ``P`` being nodal prolongation and
``I u`` nodal interpolation of the exact solution.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import fem
from .majorant import MajorantState
from .mesh import RectMesh, RingMeshPair, refine_uniform
from .obstacle_qp import discrete_energy
from .sparse_linalg import quad_form

CHAIN_RTOL = 1e-10
ZERO_EXTENSION_TOL = 1e-12

CSV_FIELDS = [
    "benchmark", "h", "n_nodes", "n_edges", "err2_l0", "err2_l1", "err2_l2",
    "energy_gap", "majorant", "P1", "P2", "P3", "beta", "ieff", "chain_ok",
]


@dataclass(frozen=True, eq=False)
class MeshChain:
    meshes: tuple  # (T_h, T_h/2, T_h/4, ...)
    maps: tuple  # prolongations between consecutive levels

    @property
    def depth(self) -> int:
        return len(self.meshes) - 1

    def lift(self, v, level: int) -> np.ndarray:
        if level > self.depth:
            raise ValueError(f"chain has {self.depth} refinements, level {level} requested")
        for pmap in self.maps[:level]:
            v = pmap.matrix @ v
        return v


def build_chain(mesh: RectMesh, levels: int = 2) -> MeshChain:
    meshes, maps = [mesh], []
    for _ in range(levels):
        fine, pmap = refine_uniform(meshes[-1])
        meshes.append(fine)
        maps.append(pmap)
    return MeshChain(tuple(meshes), tuple(maps))


def energy_error_sq(chain: MeshChain, v, exact_u, level: int = 2) -> float:
    """``(P v - I u)^T K (P v - I u)`` on refinement ``level`` of the chain."""
    mesh = chain.meshes[level] if level <= chain.depth else None
    if mesh is None:
        raise ValueError(f"missing refinement level {level}")
    vl = chain.lift(np.asarray(v, dtype=float), level)
    ul = np.where(mesh.active_nodes, exact_u(mesh.nodes[:, 0], mesh.nodes[:, 1]), 0.0)
    K = fem.assemble_global(mesh, "KBIL")
    e = vl - ul
    return quad_form(K, e)


@dataclass
class MajorantReport:
    benchmark: str
    h: float
    n_nodes: int
    n_edges: int
    err2_l0: float = math.nan
    err2_l1: float = math.nan
    err2_l2: float = math.nan
    J_v: float = math.nan
    J_u: float = math.nan
    energy_gap: float = math.nan
    majorant: float = math.nan
    P1: float = math.nan
    P2: float = math.nan
    P3: float = math.nan
    beta: float = math.nan
    iterations: int = 0
    ieff: float = math.nan
    lower_slack: float = math.nan  # (gap - err2/2) / M
    upper_slack: float = math.nan  # (M - gap) / M
    lower_ok: bool = False
    upper_ok: bool = False
    degenerate: bool = False
    notes: dict = field(default_factory=dict)

    @property
    def chain_ok(self) -> bool:
        return self.lower_ok and self.upper_ok and not self.degenerate

    def row(self) -> dict:
        d = asdict(self)
        d["chain_ok"] = self.chain_ok
        return {k: d[k] for k in CSV_FIELDS}


def estimate_chain(benchmark: str, h: float, n_nodes: int, n_edges: int, err2, J_v: float,
                   J_u: float, state: MajorantState) -> MajorantReport:
    """Record ``err2/2 <= J(v) - J(u) <= M`` using the level-2 error.

    Violations are recorded in the report, never raised.
    """
    e0, e1, e2 = err2
    gap = J_v - J_u
    M = state.total
    scale = abs(M) if M != 0 else 1.0
    lower = (gap - 0.5 * e2) / scale
    upper = (M - gap) / scale
    return MajorantReport(
        benchmark=benchmark, h=h, n_nodes=n_nodes, n_edges=n_edges,
        err2_l0=e0, err2_l1=e1, err2_l2=e2, J_v=J_v, J_u=J_u, energy_gap=gap,
        majorant=M, P1=state.P1, P2=state.P2, P3=state.P3, beta=state.beta,
        iterations=state.iterations, ieff=M / gap if gap != 0 else math.inf,
        lower_slack=lower, upper_slack=upper,
        lower_ok=bool(lower >= -CHAIN_RTOL), upper_ok=bool(upper >= -CHAIN_RTOL),
    )


def all_levels(chain: MeshChain, v, exact_u):
    return tuple(energy_error_sq(chain, v, exact_u, lvl) for lvl in range(3))


def zero_extend(pair: RingMeshPair, v_inscribed) -> np.ndarray:
    """Zero extension of an inscribed-mesh field to the circumscribed mesh.

    Both rectangulations share the node numbering of the full grid, so the
    extension only checks that ``v`` vanishes on and outside the inscribed
    boundary.
    """
    v = np.asarray(v_inscribed, dtype=float)
    ins = pair.inscribed
    interior = ins.active_nodes & ~ins.boundary_nodes
    outside = v[~interior]
    if np.any(outside != 0.0):
        raise ValueError("field has nonzero trace on the inscribed boundary")
    return v.copy()


def ring_energies(pair: RingMeshPair, v_inscribed, fbar_in, fbar_out):
    """``J`` of the inscribed solution and of its zero extension."""
    v_out = zero_extend(pair, v_inscribed)
    K_in = fem.assemble_global(pair.inscribed, "KBIL")
    K_out = fem.assemble_global(pair.circumscribed, "KBIL")
    J_in = discrete_energy(K_in, fem.load_vector(pair.inscribed, fbar_in), v_inscribed)
    J_out = discrete_energy(K_out, fem.load_vector(pair.circumscribed, fbar_out), v_out)
    return J_in, J_out, v_out


def ring_estimate_chain(pair: RingMeshPair, v_inscribed, exact, h: float, state: MajorantState,
                        fbar_in, fbar_out, chain: MeshChain | None = None) -> MajorantReport:
    """Two-sided estimate for the disk benchmarks on inscribed/circumscribed meshes.

    ``state`` is the majorant minimised on the circumscribed rectangulation
    for the zero-extended solution.
    """
    if pair.degenerate:
        rep = MajorantReport(exact.spec.id, h, 0, 0, degenerate=True)
        rep.notes["reason"] = "empty inscribed rectangulation"
        return rep
    J_in, J_out, _ = ring_energies(pair, v_inscribed, fbar_in, fbar_out)
    if abs(J_in - J_out) > ZERO_EXTENSION_TOL * max(1.0, abs(J_in)):
        raise ValueError(f"zero extension changed the energy: {J_in!r} vs {J_out!r}")
    chain = build_chain(pair.inscribed) if chain is None else chain
    err2 = all_levels(chain, v_inscribed, exact.u)
    circ = pair.circumscribed
    rep = estimate_chain(exact.spec.id, h, int(circ.active_nodes.sum()), int(circ.active_edges.sum()),
                         err2, J_out, exact.J_exact, state)
    rep.notes["J_inscribed"] = J_in
    rep.notes["zero_extension_diff"] = J_in - J_out
    return rep
