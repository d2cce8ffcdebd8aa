"""Compressed-sparse-column matrix model and lower-triangular tooling.

A :class:`CscMatrix` is the package-wide carrier for square sparse
matrices.  Construction enforces only *structural* well-formedness
(monotone column pointers, strictly increasing row indices inside each
column, indices in range); whether the matrix is a valid lower-triangular
solver input is a separate, reportable property checked by
:func:`validate_lower_triangular`.  This split matters because file
ingestion legitimately produces general (non-triangular) matrices that
are extracted afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DimensionMismatch,
    MatrixStructureError,
    MissingDiagonal,
    ZeroDiagonal,
)


class DiagonalPolicy(Enum):
    """What extraction does when a column has no stored diagonal."""

    REQUIRE_EXPLICIT = "require-explicit"
    INSERT_UNIT = "insert-unit"


@dataclass(frozen=True)
class CscMatrix:
    """Square sparse matrix in compressed-sparse-column form.

    ``col_ptr[j] .. col_ptr[j+1]`` delimits column ``j``'s entries in
    ``row_idx`` / ``values``.  Row indices are strictly increasing within
    each column, so a stored diagonal is always the first entry of its
    column.  Instances are immutable and safe for concurrent reads.
    """

    n: int
    col_ptr: np.ndarray
    row_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "col_ptr", np.asarray(self.col_ptr, dtype=np.int64))
        object.__setattr__(self, "row_idx", np.asarray(self.row_idx, dtype=np.int64))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        _check_structure(self.n, self.col_ptr, self.row_idx, self.values)
        self.col_ptr.setflags(write=False)
        self.row_idx.setflags(write=False)
        self.values.setflags(write=False)

    @property
    def nnz(self) -> int:
        return int(self.col_ptr[-1])

    def column(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices and values of column ``j``."""
        lo, hi = int(self.col_ptr[j]), int(self.col_ptr[j + 1])
        return self.row_idx[lo:hi], self.values[lo:hi]

    def entry_columns(self) -> np.ndarray:
        """Column index of every stored entry, in storage order."""
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.col_ptr))

    def to_dense(self) -> np.ndarray:
        """Dense copy; intended for tests and tiny matrices only."""
        dense = np.zeros((self.n, self.n))
        dense[self.row_idx, self.entry_columns()] = self.values
        return dense

    @staticmethod
    def from_entries(n: int, entries: dict[tuple[int, int], float]) -> "CscMatrix":
        """Build from an ``{(row, col): value}`` mapping (test convenience)."""
        items = sorted(entries.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        rows = np.array([r for (r, _c), _v in items], dtype=np.int64)
        cols = np.array([c for (_r, c), _v in items], dtype=np.int64)
        vals = np.array([v for _rc, v in items], dtype=np.float64)
        col_ptr = np.zeros(n + 1, dtype=np.int64)
        np.add.at(col_ptr, cols + 1, 1)
        np.cumsum(col_ptr, out=col_ptr)
        return CscMatrix(n=n, col_ptr=col_ptr, row_idx=rows, values=vals)


def _check_structure(n, col_ptr, row_idx, values):
    if n < 0:
        raise MatrixStructureError(f"negative dimension {n}")
    if col_ptr.shape != (n + 1,):
        raise MatrixStructureError(f"col_ptr has length {col_ptr.shape[0]}, expected {n + 1}")
    if col_ptr[0] != 0:
        raise MatrixStructureError(f"col_ptr[0] = {col_ptr[0]}, expected 0")
    if np.any(np.diff(col_ptr) < 0):
        raise MatrixStructureError("col_ptr is not non-decreasing")
    nnz = int(col_ptr[-1])
    if row_idx.shape != (nnz,) or values.shape != (nnz,):
        raise MatrixStructureError(
            f"entry arrays have lengths {row_idx.shape[0]}/{values.shape[0]}, expected {nnz}"
        )
    if nnz and (row_idx.min() < 0 or row_idx.max() >= n):
        raise MatrixStructureError("row index out of range")
    # Strictly increasing rows inside each column: the only non-increasing
    # steps in the flat diff must be the column boundaries.
    if nnz > 1:
        steps = np.diff(row_idx) <= 0
        boundaries = np.zeros(nnz - 1, dtype=bool)
        inner = col_ptr[1:-1]
        inner = inner[(inner > 0) & (inner < nnz)]
        boundaries[inner - 1] = True
        bad = steps & ~boundaries
        if np.any(bad):
            raise MatrixStructureError(
                f"rows not strictly increasing within a column near entry {int(np.argmax(bad))}"
            )


@dataclass(frozen=True)
class Violation:
    """One violated lower-triangular invariant, located by column."""

    kind: str
    col: int

    def __str__(self) -> str:
        return f"{self.kind}(col={self.col})"


def validate_lower_triangular(l: CscMatrix) -> list[Violation]:
    """Report every violated lower-triangular solver-input invariant.

    Empty list iff ``l`` is a valid solver input: every stored entry on or
    below the diagonal, each column led by a stored, nonzero diagonal.
    """
    report: list[Violation] = []
    cols = l.entry_columns()
    upper = np.unique(cols[l.row_idx < cols])
    report.extend(Violation("UpperTriangularEntry", int(j)) for j in upper)

    diag_mask = l.row_idx == cols
    has_diag = np.zeros(l.n, dtype=bool)
    has_diag[cols[diag_mask]] = True
    report.extend(Violation("MissingDiagonal", int(j)) for j in np.nonzero(~has_diag)[0])
    zero_diag = cols[diag_mask][l.values[diag_mask] == 0.0]
    report.extend(Violation("ZeroDiagonal", int(j)) for j in zero_diag)
    report.sort(key=lambda v: (v.col, v.kind))
    return report


def ensure_lower_triangular(l: CscMatrix) -> None:
    """Raise on the first violated solver-input invariant."""
    report = validate_lower_triangular(l)
    if not report:
        return
    worst = report[0]
    if worst.kind == "ZeroDiagonal":
        raise ZeroDiagonal(worst.col)
    if worst.kind == "MissingDiagonal":
        raise MissingDiagonal(worst.col)
    raise MatrixStructureError(f"not lower triangular: {worst}")


def extract_lower_triangular(a: CscMatrix, policy: DiagonalPolicy) -> CscMatrix:
    """Keep entries with row >= col and normalize the diagonal.

    Under ``INSERT_UNIT`` a column with no stored diagonal gains an
    explicit 1.0 one; under ``REQUIRE_EXPLICIT`` that column is an error.
    A stored diagonal of exactly 0 is always an error: the result must be
    directly solvable.
    """
    cols = a.entry_columns()
    keep = a.row_idx >= cols
    rows = a.row_idx[keep]
    kept_cols = cols[keep]
    vals = a.values[keep]

    has_diag = np.zeros(a.n, dtype=bool)
    has_diag[kept_cols[rows == kept_cols]] = True
    missing = np.nonzero(~has_diag)[0]
    if missing.size:
        if policy is DiagonalPolicy.REQUIRE_EXPLICIT:
            raise MissingDiagonal(int(missing[0]))
        rows = np.concatenate([rows, missing])
        kept_cols = np.concatenate([kept_cols, missing])
        vals = np.concatenate([vals, np.ones(missing.size)])
        order = np.lexsort((rows, kept_cols))
        rows, kept_cols, vals = rows[order], kept_cols[order], vals[order]

    counts = np.bincount(kept_cols, minlength=a.n)
    col_ptr = np.concatenate(([0], np.cumsum(counts)))
    starts = col_ptr[:-1]
    zero = vals[starts] == 0.0
    if np.any(zero):
        raise ZeroDiagonal(int(np.nonzero(zero)[0][0]))

    return CscMatrix(n=a.n, col_ptr=col_ptr, row_idx=rows, values=vals)


def spmv_lower(l: CscMatrix, x: np.ndarray) -> np.ndarray:
    """Column-wise product ``L @ x`` with a fixed accumulation order.

    Entries are accumulated in storage order (columns ascending), so the
    result is bit-reproducible for identical inputs; used for residuals.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (l.n,):
        raise DimensionMismatch(f"vector has shape {x.shape}, matrix is {l.n}x{l.n}")
    contrib = l.values * x[l.entry_columns()]
    return np.bincount(l.row_idx, weights=contrib, minlength=l.n)


def column_lists(l: CscMatrix) -> tuple[list[float], list[list[int]], list[list[float]]]:
    """Per-column plain-Python views: diagonal, off-diagonal rows, values.

    Solver hot loops iterate these instead of numpy arrays; scalar
    indexing on ndarrays is an order of magnitude slower in tight loops.
    Requires a validated lower-triangular matrix (diagonal first per column).
    """
    col_ptr = l.col_ptr.tolist()
    rows = l.row_idx.tolist()
    vals = l.values.tolist()
    diag: list[float] = [0.0] * l.n
    off_rows: list[list[int]] = [[] for _ in range(l.n)]
    off_vals: list[list[float]] = [[] for _ in range(l.n)]
    for j in range(l.n):
        lo, hi = col_ptr[j], col_ptr[j + 1]
        diag[j] = vals[lo]
        off_rows[j] = rows[lo + 1 : hi]
        off_vals[j] = vals[lo + 1 : hi]
    return diag, off_rows, off_vals
