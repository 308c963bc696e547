"""Minimal CSR matrix: construction from COO triplets, matvec, slicing.

Rows keep sorted unique column indices; duplicate COO entries are summed in
a deterministic (stable-sort) order so that symmetric inputs assemble to a
bitwise-symmetric matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class CsrMatrix:
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    shape: tuple

    @classmethod
    def from_coo(cls, rows, cols, vals, shape):
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.complex128)
        order = np.lexsort((cols, rows))
        r, c, v = rows[order], cols[order], vals[order]
        if r.size:
            first = np.empty(r.size, dtype=bool)
            first[0] = True
            first[1:] = (r[1:] != r[:-1]) | (c[1:] != c[:-1])
            starts = np.flatnonzero(first)
            v = np.add.reduceat(v, starts)
            r, c = r[starts], c[starts]
        counts = np.bincount(r, minlength=shape[0])
        indptr = np.concatenate([[0], np.cumsum(counts)])
        return cls(indptr.astype(np.int64), c, v, tuple(shape))

    @property
    def nnz(self):
        return self.indices.size

    def matvec(self, x):
        x = np.asarray(x, dtype=np.complex128)
        prod = self.data * x[self.indices]
        out = np.zeros(self.shape[0], dtype=np.complex128)
        starts = self.indptr[:-1]
        nonempty = np.diff(self.indptr) > 0
        if prod.size:
            out[nonempty] = np.add.reduceat(prod, starts[nonempty])
        return out

    def to_dense(self):
        out = np.zeros(self.shape, dtype=np.complex128)
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        out[rows, self.indices] = self.data
        return out

    def diagonal(self):
        d = np.zeros(self.shape[0], dtype=np.complex128)
        for i in range(min(self.shape)):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            seg = self.indices[lo:hi]
            pos = np.searchsorted(seg, i)
            if pos < seg.size and seg[pos] == i:
                d[i] = self.data[lo + pos]
        return d

    def submatrix(self, row_mask, col_mask):
        """Restriction to the True rows/columns of the two boolean masks."""
        row_mask = np.asarray(row_mask, dtype=bool)
        col_mask = np.asarray(col_mask, dtype=bool)
        rows = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        keep = row_mask[rows] & col_mask[self.indices]
        rmap = np.cumsum(row_mask) - 1
        cmap = np.cumsum(col_mask) - 1
        return CsrMatrix.from_coo(
            rmap[rows[keep]], cmap[self.indices[keep]], self.data[keep],
            (int(row_mask.sum()), int(col_mask.sum())))

    def scaled_add(self, other, alpha):
        """self + alpha * other (matching shapes; structures may differ)."""
        rows_a = np.repeat(np.arange(self.shape[0]), np.diff(self.indptr))
        rows_b = np.repeat(np.arange(other.shape[0]), np.diff(other.indptr))
        return CsrMatrix.from_coo(
            np.concatenate([rows_a, rows_b]),
            np.concatenate([self.indices, other.indices]),
            np.concatenate([self.data, alpha * other.data]),
            self.shape)
