"""Dependency analysis: in-degrees, level sets, and workload metrics.

A component ``i`` (one solution entry) depends on every earlier component
``j`` that stores an off-diagonal entry in row ``i`` of column ``j``.
Grouping components into level sets by longest dependency chain exposes
how much of the matrix could be solved concurrently; the derived metrics
summarize that structure per matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matrix import CscMatrix


def compute_in_degrees(l: CscMatrix) -> np.ndarray:
    """Number of stored off-diagonal entries in each row.

    Counts stored entries, not numeric nonzeros: an explicitly stored 0.0
    still gates its row exactly like any other entry.
    """
    cols = l.entry_columns()
    off = l.row_idx != cols
    return np.bincount(l.row_idx[off], minlength=l.n).astype(np.int64)


@dataclass(frozen=True)
class LevelSchedule:
    """Earliest-level assignment of components.

    ``level_of[i]`` is the longest dependency path ending at ``i``;
    ``levels[k]`` lists the components of level ``k`` in ascending order.
    """

    level_of: np.ndarray
    levels: list[list[int]]
    n_levels: int


def compute_level_schedule(l: CscMatrix) -> LevelSchedule:
    """Canonical level sets via one ascending pass.

    For a lower-triangular matrix every dependency of column ``i`` lies in
    an earlier column, so a single ascending sweep that pushes
    ``level + 1`` to each dependent row finalizes levels in order.
    """
    n = l.n
    col_ptr = l.col_ptr.tolist()
    rows = l.row_idx.tolist()
    level = [0] * n
    for j in range(n):
        bumped = level[j] + 1
        for k in range(col_ptr[j], col_ptr[j + 1]):
            rid = rows[k]
            if rid != j and level[rid] < bumped:
                level[rid] = bumped
    n_levels = (max(level) + 1) if n else 0
    levels: list[list[int]] = [[] for _ in range(n_levels)]
    for i, lv in enumerate(level):
        levels[lv].append(i)
    return LevelSchedule(level_of=np.array(level, dtype=np.int64), levels=levels, n_levels=n_levels)


def parallelism_metric(n_rows: int, n_levels: int) -> int:
    """Average concurrently solvable components per level (floor division)."""
    return n_rows // n_levels


def dependency_metric(nnz: int, n_rows: int) -> float:
    """Average stored entries per component."""
    return nnz / n_rows


@dataclass(frozen=True)
class MatrixStats:
    n_rows: int
    nnz: int
    n_levels: int
    parallelism: int
    dependency: float

    def to_json_dict(self, name: str | None = None) -> dict:
        record = {
            "n_rows": self.n_rows,
            "nnz": self.nnz,
            "n_levels": self.n_levels,
            "parallelism": self.parallelism,
            "dependency": self.dependency,
        }
        if name is not None:
            record = {"name": name, **record}
        return record


def compute_stats(l: CscMatrix) -> MatrixStats:
    schedule = compute_level_schedule(l)
    return MatrixStats(
        n_rows=l.n,
        nnz=l.nnz,
        n_levels=schedule.n_levels,
        parallelism=parallelism_metric(l.n, schedule.n_levels),
        dependency=dependency_metric(l.nnz, l.n),
    )
