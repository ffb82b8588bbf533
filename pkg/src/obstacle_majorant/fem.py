"""Bilinear and lowest-order Raviart-Thomas assembly on rectangular meshes.

Local vertex order is (0,0), (hx,0), (hx,hy), (0,hy) and local edge order is
bottom, right, top, left.  RT0 edge functions carry unit flux along the
global normal (``+y`` for horizontal edges, ``+x`` for vertical ones), so
no orientation signs are needed.
"""

from __future__ import annotations

import numpy as np

from .mesh import RectMesh
from .sparse_linalg import SparseSymMatrix, assemble

# 2x2 Gauss-Legendre on [0, 1]
GAUSS2_PTS = 0.5 + np.array([-1.0, 1.0]) / (2.0 * np.sqrt(3.0))
GAUSS2_WTS = np.array([0.5, 0.5])


def _check_lengths(hx, hy):
    if not (hx > 0 and hy > 0):
        raise ValueError(f"element lengths must be positive, got hx={hx}, hy={hy}")


def local_kbil(hx: float, hy: float) -> np.ndarray:
    _check_lengths(hx, hy)
    a, b = hx * hx, hy * hy
    K = np.array(
        [
            [2 * a + 2 * b, a - 2 * b, -a - b, -2 * a + b],
            [a - 2 * b, 2 * a + 2 * b, -2 * a + b, -a - b],
            [-a - b, -2 * a + b, 2 * a + 2 * b, a - 2 * b],
            [-2 * a + b, -a - b, a - 2 * b, 2 * a + 2 * b],
        ]
    )
    return K / (6.0 * hx * hy)


def rt0_divergence(hx: float, hy: float) -> np.ndarray:
    """Constant divergences of the four local RT0 functions."""
    return np.array([-1.0 / hy, 1.0 / hx, 1.0 / hy, -1.0 / hx])


def local_rt0(hx: float, hy: float) -> tuple[np.ndarray, np.ndarray]:
    """Local RT0 stiffness (div-div) and mass matrices."""
    _check_lengths(hx, hy)
    r, s = hx / hy, hy / hx
    K = np.array(
        [
            [r, -1.0, -r, 1.0],
            [-1.0, s, 1.0, -s],
            [-r, 1.0, r, -1.0],
            [1.0, -s, -1.0, s],
        ]
    )
    M = hx * hy * np.array(
        [
            [1 / 3, 0, 1 / 6, 0],
            [0, 1 / 3, 0, 1 / 6],
            [1 / 6, 0, 1 / 3, 0],
            [0, 1 / 6, 0, 1 / 3],
        ]
    )
    return K, M


def bilinear_basis(s, t):
    """Reference bilinear basis at unit-square coordinates ``(s, t)``; shape (4, ...)."""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    return np.array([(1 - s) * (1 - t), s * (1 - t), s * t, (1 - s) * t])


def bilinear_gradients(s, t, hx, hy):
    """Physical gradients of the local bilinear basis; shape (4, 2, ...)."""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    dx = np.array([-(1 - t), 1 - t, t, -t]) / hx
    dy = np.array([-(1 - s), -s, s, 1 - s]) / hy
    return np.stack([dx, dy], axis=1)


def rt0_basis(s, t):
    """Reference RT0 functions at ``(s, t)``; shape (4, 2, ...)."""
    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    z = np.zeros_like(s * t)
    return np.array([[z, 1 - t], [s + z, z], [z, t + z], [1 - s, z]])


def assemble_global(mesh: RectMesh, which: str) -> SparseSymMatrix:
    """Assemble ``'KBIL'``, ``'KRT0'`` or ``'MRT0'`` over the active elements."""
    ids = mesh.active_ids
    if which == "KBIL":
        local = local_kbil(mesh.hx, mesh.hy)
        dofs, n = mesh.elements[ids], mesh.n_nodes
    elif which in ("KRT0", "MRT0"):
        K, M = local_rt0(mesh.hx, mesh.hy)
        local = K if which == "KRT0" else M
        dofs, n = mesh.elem_edges[ids], mesh.n_edges
    else:
        raise ValueError(f"unknown matrix {which!r}")
    rows = np.repeat(dofs, 4, axis=1).ravel()
    cols = np.tile(dofs, (1, 4)).ravel()
    vals = np.tile(local.ravel(), ids.size)
    return assemble(n, (rows, cols, vals))


def element_average(mesh: RectMesh, g) -> np.ndarray:
    """Mean of the four vertex values per active element.

    ``g`` is a nodal array or a vectorised callable ``g(x, y)``.
    """
    if callable(g):
        g = g(mesh.nodes[:, 0], mesh.nodes[:, 1])
    g = np.broadcast_to(np.asarray(g, dtype=float), (mesh.n_nodes,))
    return g[mesh.elements[mesh.active_ids]].mean(axis=1)


def element_quadrature_points(mesh: RectMesh, order: int = 3):
    """Tensor Gauss points per active element: (x, y, weights/area)."""
    pts, wts = np.polynomial.legendre.leggauss(order)
    pts, wts = 0.5 * (pts + 1.0), 0.5 * wts
    S, T = np.meshgrid(pts, pts)
    W = np.outer(wts, wts)
    corner = mesh.nodes[mesh.elements[mesh.active_ids, 0]]
    x = corner[:, :1] + mesh.hx * S.ravel()[None, :]
    y = corner[:, 1:] + mesh.hy * T.ravel()[None, :]
    return x, y, S.ravel(), T.ravel(), W.ravel()


def element_mean(mesh: RectMesh, f, order: int = 3) -> tuple[np.ndarray, float]:
    """Gauss-quadrature mean of ``f`` per active element and its L2 oscillation.

    Returns ``(means, osc)`` with ``osc`` approximating
    ``sum_T int_T (f - mean_T f)^2``.
    """
    x, y, _, _, w = element_quadrature_points(mesh, order)
    fx = f(x, y)
    means = fx @ w
    osc = float(np.sum(((fx - means[:, None]) ** 2) @ w) * mesh.element_area)
    return means, osc


def load_vector(mesh: RectMesh, fbar) -> np.ndarray:
    """``b_i = int fbar psi_i`` for a piecewise-constant ``fbar`` on active elements."""
    fbar = np.broadcast_to(np.asarray(fbar, dtype=float), (mesh.n_active,))
    b = np.zeros(mesh.n_nodes)
    contrib = np.repeat(fbar * (mesh.element_area / 4.0), 4)
    np.add.at(b, mesh.elements[mesh.active_ids].ravel(), contrib)
    return b


def load_vector_exact(mesh: RectMesh, f, order: int = 3) -> np.ndarray:
    """``b_i = int f psi_i`` by tensor Gauss quadrature of a callable ``f``."""
    x, y, s, t, w = element_quadrature_points(mesh, order)
    psi = bilinear_basis(s, t)  # (4, q)
    local = (f(x, y) * w[None, :]) @ psi.T * mesh.element_area  # (ne, 4)
    b = np.zeros(mesh.n_nodes)
    np.add.at(b, mesh.elements[mesh.active_ids].ravel(), local.ravel())
    return b


def local_gradient_flux(mesh: RectMesh, v) -> np.ndarray:
    """``int_T grad v . eta_k`` for the four local edges of each active element."""
    v = np.asarray(v, dtype=float)
    ve = v[mesh.elements[mesh.active_ids]]
    v1, v2, v3, v4 = ve.T
    cy = mesh.hx / 4.0 * (v4 - v1 + v3 - v2)
    cx = mesh.hy / 4.0 * (v2 - v1 + v3 - v4)
    return np.column_stack([cy, cx, cy, cx])


def flux_rhs(mesh: RectMesh, v, fbar_plus_mu) -> tuple[np.ndarray, np.ndarray]:
    """Right-hand sides ``c_i = int grad v . eta_i`` and ``d_i = int g div eta_i``."""
    g = np.broadcast_to(np.asarray(fbar_plus_mu, dtype=float), (mesh.n_active,))
    dofs = mesh.elem_edges[mesh.active_ids].ravel()
    c = np.zeros(mesh.n_edges)
    np.add.at(c, dofs, local_gradient_flux(mesh, v).ravel())
    div = rt0_divergence(mesh.hx, mesh.hy)
    d = np.zeros(mesh.n_edges)
    np.add.at(d, dofs, (np.outer(g, div) * mesh.element_area).ravel())
    return c, d


def element_divergence(mesh: RectMesh, y) -> np.ndarray:
    """Constant divergence of an RT0 field on each active element."""
    ye = np.asarray(y, dtype=float)[mesh.elem_edges[mesh.active_ids]]
    return ye @ rt0_divergence(mesh.hx, mesh.hy)


def gradient_minus_flux_sq(mesh: RectMesh, v, y) -> np.ndarray:
    """``int_T |grad v - tau|^2`` per active element (exact, 2x2 Gauss)."""
    v = np.asarray(v, dtype=float)
    ve = v[mesh.elements[mesh.active_ids]]
    ye = np.asarray(y, dtype=float)[mesh.elem_edges[mesh.active_ids]]
    S, T = np.meshgrid(GAUSS2_PTS, GAUSS2_PTS)
    S, T, W = S.ravel(), T.ravel(), np.outer(GAUSS2_WTS, GAUSS2_WTS).ravel()
    grad = bilinear_gradients(S, T, mesh.hx, mesh.hy)  # (4, 2, q)
    eta = rt0_basis(S, T)  # (4, 2, q)
    diff = np.einsum("ek,kdq->edq", ve, grad) - np.einsum("ek,kdq->edq", ye, eta)
    return np.einsum("edq,q->e", diff**2, W) * mesh.element_area


def rt0_values(mesh: RectMesh, y, s=0.5, t=0.5) -> np.ndarray:
    """Evaluate an RT0 field at local point ``(s, t)`` of every active element."""
    ye = np.asarray(y, dtype=float)[mesh.elem_edges[mesh.active_ids]]
    return np.einsum("ek,kd->ed", ye, rt0_basis(s, t))
