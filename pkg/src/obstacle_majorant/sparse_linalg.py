"""Symmetric sparse matrices, triplet assembly and Jacobi-preconditioned CG."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float, iterations: int):
        super().__init__(f"{message} (residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True, eq=False)
class SparseSymMatrix:
    """Immutable CSR matrix assumed symmetric by construction."""

    csr: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.csr.shape[0]

    @property
    def shape(self):
        return self.csr.shape

    @property
    def indptr(self):
        return self.csr.indptr

    @property
    def indices(self):
        return self.csr.indices

    @property
    def data(self):
        return self.csr.data

    def __getitem__(self, ij):
        return self.csr[ij]

    def __matmul__(self, x):
        return self.csr @ x

    def diagonal(self) -> np.ndarray:
        return self.csr.diagonal()

    def toarray(self) -> np.ndarray:
        return self.csr.toarray()

    def submatrix(self, rows, cols=None) -> sp.csr_matrix:
        cols = rows if cols is None else cols
        return self.csr[rows][:, cols]

    def __add__(self, other: "SparseSymMatrix") -> "SparseSymMatrix":
        return SparseSymMatrix((self.csr + other.csr).tocsr())

    def __mul__(self, s: float) -> "SparseSymMatrix":
        return SparseSymMatrix((self.csr * s).tocsr())

    __rmul__ = __mul__


def assemble(n: int, triplets) -> SparseSymMatrix:
    """Build an ``n x n`` matrix summing duplicate entries.

    ``triplets`` is either an iterable of ``(i, j, value)`` or a tuple of three
    equal-length arrays ``(rows, cols, values)``.
    """
    if isinstance(triplets, tuple) and len(triplets) == 3 and np.ndim(triplets[0]) == 1:
        rows, cols, vals = (np.asarray(a) for a in triplets)
    else:
        t = list(triplets)
        rows = np.array([a[0] for a in t], dtype=np.int64)
        cols = np.array([a[1] for a in t], dtype=np.int64)
        vals = np.array([a[2] for a in t], dtype=float)
    rows = rows.astype(np.int64, copy=False)
    cols = cols.astype(np.int64, copy=False)
    if rows.size and (rows.min() < 0 or cols.min() < 0 or rows.max() >= n or cols.max() >= n):
        raise IndexError(f"triplet index out of range for dimension {n}")
    A = sp.coo_matrix((vals.astype(float), (rows, cols)), shape=(n, n)).tocsr()
    A.sum_duplicates()
    A.eliminate_zeros()
    A.sort_indices()
    return SparseSymMatrix(A)


def quad_form(A, x, y=None) -> float:
    """Return ``x^T A y`` (``y`` defaults to ``x``)."""
    x = np.asarray(x, dtype=float)
    y = x if y is None else np.asarray(y, dtype=float)
    n = A.shape[0]
    if x.shape != (n,) or y.shape != (n,):
        raise ValueError(f"vector sizes {x.shape}, {y.shape} do not match matrix of size {n}")
    return float(x @ (A @ y))


def cg_solve(A, rhs, tol: float = 1e-12, max_iter: int | None = None, x0=None) -> np.ndarray:
    """Jacobi-preconditioned conjugate gradients.

    Stops once ``||A x - rhs|| <= tol * ||rhs||``.  ``A`` may be a
    :class:`SparseSymMatrix` or anything supporting ``@`` and ``diagonal()``.
    """
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.size
    max_iter = 20 * n if max_iter is None else max_iter
    op = A.csr if isinstance(A, SparseSymMatrix) else A
    diag = op.diagonal()
    if np.any(diag <= 0):
        raise ValueError("matrix has nonpositive diagonal entries; not SPD")
    inv_d = 1.0 / diag

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return np.zeros(n)
    target = tol * bnorm
    r = rhs - op @ x
    rnorm = np.linalg.norm(r)
    if rnorm <= target:
        return x
    z = inv_d * r
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = op @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        rnorm = np.linalg.norm(r)
        if rnorm <= target:
            # recursive residual drifts; confirm with the true one
            r = rhs - op @ x
            rnorm = np.linalg.norm(r)
            if rnorm <= target:
                return x
        z = inv_d * r
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise ConvergenceError("CG did not converge", rnorm / bnorm, max_iter)
