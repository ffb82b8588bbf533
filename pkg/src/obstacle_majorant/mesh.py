"""Uniform rectangular meshes, ring classification and nested refinement.

Numbering is lexicographic by (row, column).  For a grid with ``nx`` by
``ny`` elements the node in column ``i`` and row ``j`` has index
``j * (nx + 1) + i`` and the element whose lower-left vertex is that node has
index ``j * nx + i``.  Horizontal edges come first (``nx * (ny + 1)`` of them,
normal ``+y``), then vertical edges (normal ``+x``).  Every element lists its
vertices counter-clockwise from the lower-left corner and its edges as
bottom, right, top, left.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np
import scipy.sparse as sp

INSIDE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class RectMesh:
    """Uniform rectangulation of an axis-aligned box.

    The full structured grid is always stored; ``active_elements`` selects the
    sub-rectangulation that assembly and fields refer to.
    """

    nx: int
    ny: int
    hx: float
    hy: float
    origin: tuple[float, float]
    active_elements: np.ndarray = field(repr=False)

    def __post_init__(self):
        mask = np.asarray(self.active_elements, dtype=bool)
        if mask.shape != (self.nx * self.ny,):
            raise ValueError(
                f"active mask has shape {mask.shape}, expected ({self.nx * self.ny},)"
            )
        mask.setflags(write=False)
        object.__setattr__(self, "active_elements", mask)

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def n_edges(self) -> int:
        return self.nx * (self.ny + 1) + self.ny * (self.nx + 1)

    @property
    def n_horizontal_edges(self) -> int:
        return self.nx * (self.ny + 1)

    @property
    def element_area(self) -> float:
        return self.hx * self.hy

    @cached_property
    def nodes(self) -> np.ndarray:
        x = self.origin[0] + self.hx * np.arange(self.nx + 1)
        y = self.origin[1] + self.hy * np.arange(self.ny + 1)
        X, Y = np.meshgrid(x, y)
        return np.column_stack([X.ravel(), Y.ravel()])

    @cached_property
    def elements(self) -> np.ndarray:
        i, j = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        n1 = (j * (self.nx + 1) + i).ravel()
        return np.column_stack([n1, n1 + 1, n1 + self.nx + 2, n1 + self.nx + 1])

    @cached_property
    def edges(self) -> np.ndarray:
        nx, ny = self.nx, self.ny
        i, j = np.meshgrid(np.arange(nx), np.arange(ny + 1))
        a = (j * (nx + 1) + i).ravel()
        horizontal = np.column_stack([a, a + 1])
        i, j = np.meshgrid(np.arange(nx + 1), np.arange(ny))
        a = (j * (nx + 1) + i).ravel()
        vertical = np.column_stack([a, a + nx + 1])
        return np.vstack([horizontal, vertical])

    @cached_property
    def elem_edges(self) -> np.ndarray:
        nx, ny = self.nx, self.ny
        i, j = np.meshgrid(np.arange(nx), np.arange(ny))
        i, j = i.ravel(), j.ravel()
        H = nx * (ny + 1)
        bottom = j * nx + i
        right = H + j * (nx + 1) + i + 1
        top = (j + 1) * nx + i
        left = H + j * (nx + 1) + i
        return np.column_stack([bottom, right, top, left])

    @cached_property
    def edge_normals(self) -> np.ndarray:
        normals = np.zeros((self.n_edges, 2))
        normals[: self.n_horizontal_edges, 1] = 1.0
        normals[self.n_horizontal_edges :, 0] = 1.0
        return normals

    @cached_property
    def active_ids(self) -> np.ndarray:
        return np.flatnonzero(self.active_elements)

    @property
    def n_active(self) -> int:
        return int(self.active_ids.size)

    @cached_property
    def active_nodes(self) -> np.ndarray:
        """Boolean node mask: node belongs to at least one active element."""
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.elements[self.active_ids].ravel()] = True
        return mask

    @cached_property
    def active_edges(self) -> np.ndarray:
        mask = np.zeros(self.n_edges, dtype=bool)
        mask[self.elem_edges[self.active_ids].ravel()] = True
        return mask

    @cached_property
    def boundary_nodes(self) -> np.ndarray:
        """Nodes of the active rectangulation lying on its boundary.

        A node is on the boundary if it is on the box boundary or touches an
        element that is not active.
        """
        touches_inactive = np.zeros(self.n_nodes, dtype=bool)
        touches_inactive[self.elements[~self.active_elements].ravel()] = True
        i = np.tile(np.arange(self.nx + 1), self.ny + 1)
        j = np.repeat(np.arange(self.ny + 1), self.nx + 1)
        on_box = (i == 0) | (i == self.nx) | (j == 0) | (j == self.ny)
        return self.active_nodes & (on_box | touches_inactive)

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        """Per-node sum of ``hx*hy/4`` over incident active elements."""
        m = np.zeros(self.n_nodes)
        np.add.at(m, self.elements[self.active_ids].ravel(), self.element_area / 4)
        return m

    def element_centers(self, active_only: bool = True) -> np.ndarray:
        ids = self.active_ids if active_only else np.arange(self.n_elements)
        return self.nodes[self.elements[ids, 0]] + 0.5 * np.array([self.hx, self.hy])

    def with_mask(self, mask) -> "RectMesh":
        return RectMesh(self.nx, self.ny, self.hx, self.hy, self.origin, mask)

    def scatter_elements(self, values, fill: float = 0.0) -> np.ndarray:
        """Expand an active-element field to all grid elements."""
        full = np.full(self.n_elements, fill, dtype=float)
        full[self.active_ids] = values
        return full

    def transfer_elements(self, other: "RectMesh", values, fill: float = 0.0):
        """Move an element field from this mesh's active set to ``other``'s.

        Both meshes must share the same grid.
        """
        if (other.nx, other.ny) != (self.nx, self.ny):
            raise ValueError("meshes do not share a grid")
        return self.scatter_elements(values, fill)[other.active_ids]


def _as_count(length: float, h) -> int:
    n = Fraction(length).limit_denominator(1 << 20) / Fraction(h).limit_denominator(1 << 20)
    if n.denominator != 1 or n <= 0:
        raise ValueError(f"mesh size h={h} does not divide box side {length}")
    return int(n)


def build_uniform_mesh(box=(-1.0, 1.0, -1.0, 1.0), h=0.5) -> RectMesh:
    """Uniform mesh with square elements of side ``h`` on ``box=(x0, x1, y0, y1)``.

    ``h`` may be a float or a ``Fraction``; it must divide both side lengths.
    """
    x0, x1, y0, y1 = box
    if x1 <= x0 or y1 <= y0:
        raise ValueError(f"degenerate box {box}")
    nx = _as_count(x1 - x0, h)
    ny = _as_count(y1 - y0, h)
    hx = (x1 - x0) / nx
    hy = (y1 - y0) / ny
    return RectMesh(nx, ny, hx, hy, (float(x0), float(y0)), np.ones(nx * ny, dtype=bool))


@dataclass(frozen=True, eq=False)
class RingMeshPair:
    """Inscribed and circumscribed rectangulations of the unit disk."""

    full: RectMesh
    inscribed_mask: np.ndarray
    circumscribed_mask: np.ndarray

    @cached_property
    def inscribed(self) -> RectMesh:
        return self.full.with_mask(self.inscribed_mask)

    @cached_property
    def circumscribed(self) -> RectMesh:
        return self.full.with_mask(self.circumscribed_mask)

    @property
    def dirichlet_nodes_inscribed(self) -> np.ndarray:
        return np.flatnonzero(self.inscribed.boundary_nodes)

    @property
    def degenerate(self) -> bool:
        return not self.inscribed_mask.any()


def classify_ring(mesh: RectMesh) -> RingMeshPair:
    """Split the elements of a mesh on ``[-1, 1]^2`` against the unit circle.

    An element is inscribed when all four vertices satisfy
    ``x^2 + y^2 <= 1 + 1e-12``; it is circumscribed when at least one vertex
    satisfies ``x^2 + y^2 < 1 - 1e-12``.
    """
    r2 = np.sum(mesh.nodes**2, axis=1)[mesh.elements]
    inscribed = np.all(r2 <= 1.0 + INSIDE_TOL, axis=1)
    circumscribed = np.any(r2 < 1.0 - INSIDE_TOL, axis=1)
    return RingMeshPair(mesh.with_mask(np.ones(mesh.n_elements, dtype=bool)), inscribed, circumscribed)


@dataclass(frozen=True, eq=False)
class ProlongationMap:
    coarse_to_fine: np.ndarray  # fine index of each coarse node
    matrix: sp.csr_matrix  # (n_fine, n_coarse) bilinear interpolation

    @property
    def shape(self):
        return self.matrix.shape


def refine_uniform(mesh: RectMesh) -> tuple[RectMesh, ProlongationMap]:
    """Split every element into four and build the nodal prolongation."""
    nx, ny = mesh.nx, mesh.ny
    fx, fy = 2 * nx, 2 * ny
    ci, cj = np.meshgrid(np.arange(nx), np.arange(ny))
    ci, cj = ci.ravel(), cj.ravel()
    fine_mask = np.zeros(fx * fy, dtype=bool)
    for di in (0, 1):
        for dj in (0, 1):
            fine_mask[(2 * cj + dj) * fx + 2 * ci + di] = mesh.active_elements
    fine = RectMesh(fx, fy, mesh.hx / 2, mesh.hy / 2, mesh.origin, fine_mask)

    I, J = np.meshgrid(np.arange(fx + 1), np.arange(fy + 1))
    I, J = I.ravel(), J.ravel()
    fine_ids = J * (fx + 1) + I
    rows, cols, vals = [], [], []
    for oi in (0, 1):
        for oj in (0, 1):
            # parent node (I//2 + oi*(I odd), J//2 + oj*(J odd)) contributes
            use = ((oi == 0) | (I % 2 == 1)) & ((oj == 0) | (J % 2 == 1))
            pi = I[use] // 2 + oi
            pj = J[use] // 2 + oj
            weight = (0.5 ** (I[use] % 2)) * (0.5 ** (J[use] % 2))
            rows.append(fine_ids[use])
            cols.append(pj * (nx + 1) + pi)
            vals.append(weight)
    P = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(fine.n_nodes, mesh.n_nodes),
    )
    cj_n, ci_n = np.divmod(np.arange(mesh.n_nodes), nx + 1)
    coarse_to_fine = 2 * cj_n * (fx + 1) + 2 * ci_n
    return fine, ProlongationMap(coarse_to_fine, P)


def prolongate(pmap: ProlongationMap, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (pmap.shape[1],):
        raise ValueError(f"field has shape {v.shape}, expected ({pmap.shape[1]},)")
    return pmap.matrix @ v
