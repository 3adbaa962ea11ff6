"""Sparse symmetric matrices and their Cholesky factorizations.

A :class:`SparseSymMatrix` stores the full symmetric matrix in CSC form.
``cholesky`` permutes it with a fill-reducing (or caller-supplied) ordering
and factors P A P^T = L L^T with a compiled up-looking kernel.  The factor
keeps its columns diagonal-first, which the solve, selected-inverse and
sequential-sampling kernels all rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from . import _kernels
from .errors import ComputationError, InputError, NotPositiveDefiniteError

__all__ = [
    "SparseSymMatrix",
    "CholeskyFactor",
    "cholesky",
    "minimum_degree_ordering",
]


@dataclass(frozen=True)
class SparseSymMatrix:
    """Symmetric positive-definite-candidate matrix in full CSC storage."""

    csc: sparse.csc_matrix

    def __post_init__(self):
        m = self.csc
        if m.shape[0] != m.shape[1]:
            raise InputError("matrix must be square, got shape %s" % (m.shape,))
        if m.shape[0] == 0:
            raise InputError("matrix must have at least one row")

    @classmethod
    def from_csc(cls, m, tol: float = 1e-10) -> "SparseSymMatrix":
        m = sparse.csc_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        gap = abs(m - m.T)
        scale = max(abs(m).max(), 1.0)
        if gap.nnz and gap.max() > tol * scale:
            raise InputError("matrix is not symmetric within tolerance")
        sym = (m + m.T) * 0.5
        sym = sparse.csc_matrix(sym)
        sym.sort_indices()
        return cls(sym)

    @classmethod
    def from_triplets(cls, n: int, rows, cols, vals) -> "SparseSymMatrix":
        """Build from entries given once per unordered pair (either triangle)."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if not (rows.shape == cols.shape == vals.shape):
            raise InputError("triplet arrays must have matching lengths")
        if rows.size and (rows.min() < 0 or cols.min() < 0
                          or rows.max() >= n or cols.max() >= n):
            raise InputError("triplet index out of range for n=%d" % n)
        off = rows != cols
        r = np.concatenate([rows, cols[off]])
        c = np.concatenate([cols, rows[off]])
        v = np.concatenate([vals, vals[off]])
        m = sparse.coo_matrix((v, (r, c)), shape=(n, n)).tocsc()
        m.sum_duplicates()
        m.sort_indices()
        return cls(m)

    @property
    def n(self) -> int:
        return self.csc.shape[0]

    @property
    def nnz(self) -> int:
        return self.csc.nnz

    def diagonal(self) -> np.ndarray:
        return self.csc.diagonal()

    def to_triplets(self):
        """Lower-triangle entries (diagonal included) as (rows, cols, vals)."""
        coo = sparse.tril(self.csc).tocoo()
        order = np.lexsort((coo.col, coo.row))
        return coo.row[order], coo.col[order], coo.data[order]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.csc @ x


def minimum_degree_ordering(m: sparse.csc_matrix) -> np.ndarray:
    """Approximate minimum degree ordering for a symmetric pattern.

    Returned array maps factor position k to the original index placed there.
    """
    if m.shape[0] == 1:
        return np.zeros(1, dtype=np.int64)
    lu = splu(m.tocsc().astype(np.float64),
              permc_spec="MMD_AT_PLUS_A",
              diag_pivot_thresh=0.0,
              options=dict(SymmetricMode=True))
    return np.asarray(lu.perm_c, dtype=np.int64)


def _check_permutation(perm: np.ndarray, n: int) -> np.ndarray:
    perm = np.asarray(perm, dtype=np.int64)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise InputError("ordering must be a permutation of 0..n-1")
    return perm


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor of P A P^T with its permutation.

    ``perm[k]`` is the original index sitting at factor position k.
    """

    perm: np.ndarray
    Lp: np.ndarray
    Li: np.ndarray
    Lx: np.ndarray
    _inv_perm: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.perm.shape[0]

    @property
    def nnz(self) -> int:
        return int(self.Lp[-1])

    @property
    def logdet(self) -> float:
        """Log determinant of the factored matrix."""
        return float(_kernels.logdet_from_factor(self.n, self.Lp, self.Lx))

    def L(self) -> sparse.csc_matrix:
        m = sparse.csc_matrix((self.Lx, self.Li, self.Lp), shape=(self.n, self.n))
        m.sort_indices()
        return m

    def permute(self, x: np.ndarray) -> np.ndarray:
        """Reorder node-indexed values into factor positions."""
        return np.asarray(x, dtype=np.float64)[..., self.perm]

    def unpermute(self, y: np.ndarray) -> np.ndarray:
        """Reorder factor-position values back to node indexing."""
        return np.asarray(y)[..., self._inv_perm]

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve A x = b for one vector or a stack of rows (m, n)."""
        b = np.asarray(b, dtype=np.float64)
        single = b.ndim == 1
        work = np.ascontiguousarray(np.atleast_2d(b)[:, self.perm])
        if work.shape[1] != self.n:
            raise InputError("right-hand side length %d does not match n=%d"
                             % (work.shape[1], self.n))
        _kernels.solve_lower_multi(self.n, self.Lp, self.Li, self.Lx, work)
        _kernels.solve_upper_multi(self.n, self.Lp, self.Li, self.Lx, work)
        out = work[:, self._inv_perm]
        return out[0] if single else out

    def solve_upper_inplace(self, work: np.ndarray) -> None:
        """Solve L^T y = z in place for rows of ``work`` (factor coordinates)."""
        _kernels.solve_upper_multi(self.n, self.Lp, self.Li, self.Lx, work)

    def selected_inverse_diagonal(self) -> np.ndarray:
        """Diagonal of A^{-1} via the selected-inverse recursion on the factor pattern."""
        Z = np.zeros_like(self.Lx)
        misses = _kernels.takahashi(self.n, self.Lp, self.Li, self.Lx, Z)
        if misses:
            raise ComputationError(
                "selected inverse pattern lookup failed (%d misses)" % misses)
        diag_perm = Z[self.Lp[:-1]]
        return diag_perm[self._inv_perm]


def cholesky(matrix: SparseSymMatrix, ordering=None) -> CholeskyFactor:
    """Factor P A P^T = L L^T.

    ``ordering`` is either None (approximate minimum degree) or an explicit
    permutation array mapping factor position to original index.  Raises
    :class:`NotPositiveDefiniteError` when a pivot fails.
    """
    n = matrix.n
    if ordering is None:
        perm = minimum_degree_ordering(matrix.csc)
    else:
        perm = _check_permutation(ordering, n)
    inv = np.empty(n, dtype=np.int64)
    inv[perm] = np.arange(n, dtype=np.int64)
    pm = matrix.csc[perm][:, perm]
    upper = sparse.triu(pm, format="csc")
    upper.sort_indices()
    Ap = upper.indptr.astype(np.int64)
    Ai = upper.indices.astype(np.int64)
    Ax = upper.data.astype(np.float64)
    parent = _kernels.etree(n, Ap, Ai)
    counts = _kernels.column_counts(n, Ap, Ai, parent)
    Lp = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=Lp[1:])
    Li = np.empty(Lp[-1], dtype=np.int64)
    Lx = np.empty(Lp[-1], dtype=np.float64)
    status = _kernels.chol_numeric(n, Ap, Ai, Ax, parent, Lp, Li, Lx)
    if status != 0:
        raise NotPositiveDefiniteError(
            "matrix is not positive definite (pivot %d)" % (-status - 1))
    return CholeskyFactor(perm=perm, Lp=Lp, Li=Li, Lx=Lx, _inv_perm=inv)
