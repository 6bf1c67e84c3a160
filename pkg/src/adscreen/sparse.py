"""Minimal CSR sparse matrix used for document-term features.

Just enough structure for this package: construction from per-row
(column, value) pairs, row slicing for cross-validation, dense export for
kernel computations (corpora here are small), and column extraction for
tree split search.  Column indices are kept sorted within each row and all
values must be finite.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import NonFinite


class SparseMatrix:
    """Compressed sparse row matrix over float64 values."""

    __slots__ = ("indptr", "indices", "data", "shape")

    def __init__(self, indptr, indices, data, shape):
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.data = np.asarray(data, dtype=np.float64)
        self.shape = (int(shape[0]), int(shape[1]))
        if len(self.indptr) != self.shape[0] + 1:
            raise ValueError("indptr length must be rows + 1")
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.data):
            raise ValueError("indptr endpoints inconsistent with data")
        if len(self.indices) != len(self.data):
            raise ValueError("indices and data length mismatch")
        if len(self.data) and not np.all(np.isfinite(self.data)):
            raise NonFinite("sparse matrix contains non-finite values")
        if len(self.indices) and (self.indices.min() < 0 or self.indices.max() >= self.shape[1]):
            raise ValueError("column index out of range")
        for r in range(self.shape[0]):
            row = self.indices[self.indptr[r]:self.indptr[r + 1]]
            if len(row) > 1 and np.any(np.diff(row) <= 0):
                raise ValueError(f"row {r}: column indices not strictly increasing")

    # --- constructors ---

    @classmethod
    def from_rows(cls, rows: Sequence[dict[int, float]], n_cols: int) -> "SparseMatrix":
        """Build from one {column: value} mapping per row (zeros dropped)."""
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for row in rows:
            for col in sorted(row):
                val = row[col]
                if val != 0.0:
                    indices.append(col)
                    data.append(val)
            indptr.append(len(indices))
        return cls(indptr, indices, data, (len(rows), n_cols))

    @classmethod
    def from_dense(cls, dense) -> "SparseMatrix":
        dense = np.asarray(dense, dtype=np.float64)
        rows = [{int(j): float(v) for j, v in enumerate(r) if v != 0.0} for r in dense]
        return cls.from_rows(rows, dense.shape[1] if dense.ndim == 2 else 0)

    # --- views and exports ---

    @property
    def nnz(self) -> int:
        return len(self.data)

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.data[lo:hi]

    def take_rows(self, row_indices: Iterable[int]) -> "SparseMatrix":
        row_indices = list(row_indices)
        indptr = [0]
        chunks_idx = []
        chunks_val = []
        for i in row_indices:
            lo, hi = self.indptr[i], self.indptr[i + 1]
            chunks_idx.append(self.indices[lo:hi])
            chunks_val.append(self.data[lo:hi])
            indptr.append(indptr[-1] + (hi - lo))
        indices = np.concatenate(chunks_idx) if chunks_idx else np.empty(0, dtype=np.int64)
        data = np.concatenate(chunks_val) if chunks_val else np.empty(0, dtype=np.float64)
        return SparseMatrix(indptr, indices, data, (len(row_indices), self.shape[1]))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.float64)
        for i in range(self.shape[0]):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            out[i, self.indices[lo:hi]] = self.data[lo:hi]
        return out

    def column(self, j: int) -> np.ndarray:
        """Dense column j (implicit zeros materialized)."""
        out = np.zeros(self.shape[0], dtype=np.float64)
        hits = self.indices == j
        if hits.any():
            rows = np.searchsorted(self.indptr, np.nonzero(hits)[0], side="right") - 1
            out[rows] = self.data[hits]
        return out

    def append_dense_columns(self, columns) -> "SparseMatrix":
        """Return a new matrix with extra dense columns on the right."""
        columns = np.asarray(columns, dtype=np.float64)
        if columns.ndim == 1:
            columns = columns[:, None]
        if columns.shape[0] != self.shape[0]:
            raise ValueError("column block row count mismatch")
        if columns.size and not np.all(np.isfinite(columns)):
            raise NonFinite("appended columns contain non-finite values")
        base = self.shape[1]
        indptr = [0]
        indices: list[np.ndarray] = []
        data: list[np.ndarray] = []
        for i in range(self.shape[0]):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            extra = np.nonzero(columns[i])[0]
            indices.append(self.indices[lo:hi])
            indices.append(extra + base)
            data.append(self.data[lo:hi])
            data.append(columns[i, extra])
            indptr.append(indptr[-1] + (hi - lo) + len(extra))
        return SparseMatrix(
            indptr,
            np.concatenate(indices) if indices else np.empty(0, dtype=np.int64),
            np.concatenate(data) if data else np.empty(0, dtype=np.float64),
            (self.shape[0], base + columns.shape[1]),
        )

    def row_norms(self) -> np.ndarray:
        sq = np.zeros(self.shape[0])
        for i in range(self.shape[0]):
            lo, hi = self.indptr[i], self.indptr[i + 1]
            sq[i] = np.dot(self.data[lo:hi], self.data[lo:hi])
        return np.sqrt(sq)

    def l2_normalize_rows(self) -> "SparseMatrix":
        """Scale each row to unit L2 norm; all-zero rows stay zero."""
        norms = self.row_norms()
        data = self.data.copy()
        for i in range(self.shape[0]):
            if norms[i] > 0:
                lo, hi = self.indptr[i], self.indptr[i + 1]
                data[lo:hi] /= norms[i]
        return SparseMatrix(self.indptr.copy(), self.indices.copy(), data, self.shape)

    def __repr__(self):
        return f"SparseMatrix(shape={self.shape}, nnz={self.nnz})"
