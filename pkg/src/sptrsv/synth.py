"""Deterministic synthetic lower-triangular matrix generators.

Desk-scale stand-ins for factorized benchmark inputs.  Every generator
returns a valid solver input (diagonal-first columns, nonzero diagonal)
and is a pure function of its spec: same spec and seed, same matrix,
bit for bit.  Value magnitudes are constrained (|diag| >= 1, |off| <= 1)
so random instances stay well conditioned for tolerance-based checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidSpec
from .matrix import CscMatrix


class SyntheticKind(Enum):
    DIAGONAL = "diagonal"
    BIDIAGONAL = "bidiagonal"
    RANDOM_BANDED = "banded"
    BLOCK_DIAGONAL = "blockdiag"
    DENSE_LOWER = "denselower"


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for one synthetic matrix.

    ``bandwidth`` and ``density`` apply to RANDOM_BANDED (bandwidth
    defaults to n-1, i.e. unbanded); ``block`` applies to BLOCK_DIAGONAL.
    """

    kind: SyntheticKind
    n: int
    seed: int = 0
    bandwidth: int | None = None
    block: int | None = None
    density: float | None = None

    def describe(self) -> str:
        parts = [self.kind.value, str(self.n)]
        if self.bandwidth is not None:
            parts.append(f"bandwidth={self.bandwidth}")
        if self.block is not None:
            parts.append(f"block={self.block}")
        if self.density is not None:
            parts.append(f"density={self.density:g}")
        return ":".join(parts)


def generate_synthetic(spec: SyntheticSpec) -> CscMatrix:
    """Build the matrix described by ``spec``."""
    if spec.n < 1:
        raise InvalidSpec(f"n must be >= 1, got {spec.n}")
    if spec.kind is SyntheticKind.DIAGONAL:
        return _diagonal(spec.n)
    if spec.kind is SyntheticKind.BIDIAGONAL:
        return _bidiagonal(spec.n)
    if spec.kind is SyntheticKind.RANDOM_BANDED:
        return _random_banded(spec)
    if spec.kind is SyntheticKind.BLOCK_DIAGONAL:
        return _block_diagonal(spec)
    if spec.kind is SyntheticKind.DENSE_LOWER:
        return _dense_lower(spec)
    raise InvalidSpec(f"unknown kind {spec.kind!r}")


def random_lower(n: int, density: float, seed: int) -> CscMatrix:
    """Unbanded random lower-triangular matrix (test-suite convenience)."""
    return generate_synthetic(
        SyntheticSpec(kind=SyntheticKind.RANDOM_BANDED, n=n, seed=seed, density=density)
    )


def _diagonal(n: int) -> CscMatrix:
    col_ptr = np.arange(n + 1, dtype=np.int64)
    return CscMatrix(n=n, col_ptr=col_ptr, row_idx=np.arange(n, dtype=np.int64), values=np.ones(n))


def _bidiagonal(n: int) -> CscMatrix:
    # diag 1.0, first subdiagonal -1.0: a length-n dependency chain.
    counts = np.full(n, 2, dtype=np.int64)
    counts[-1] = 1
    col_ptr = np.concatenate(([0], np.cumsum(counts)))
    rows = np.empty(int(col_ptr[-1]), dtype=np.int64)
    vals = np.empty(rows.size)
    rows[col_ptr[:-1]] = np.arange(n)
    vals[col_ptr[:-1]] = 1.0
    sub = col_ptr[:-2] + 1
    rows[sub] = np.arange(1, n)
    vals[sub] = -1.0
    return CscMatrix(n=n, col_ptr=col_ptr, row_idx=rows, values=vals)


def _signed_units(rng: np.random.Generator, size: int) -> np.ndarray:
    """Diagonal values with magnitude in [1, 2) and random sign."""
    return rng.choice([-1.0, 1.0], size=size) * rng.uniform(1.0, 2.0, size=size)


def _random_banded(spec: SyntheticSpec) -> CscMatrix:
    n = spec.n
    bandwidth = spec.bandwidth if spec.bandwidth is not None else n - 1
    density = spec.density if spec.density is not None else 0.05
    if bandwidth < 0:
        raise InvalidSpec(f"bandwidth must be >= 0, got {bandwidth}")
    if not 0.0 <= density <= 1.0:
        raise InvalidSpec(f"density must be in [0, 1], got {density}")
    rng = np.random.default_rng(spec.seed)
    rows_parts: list[np.ndarray] = []
    cols_parts: list[np.ndarray] = []
    counts = np.zeros(n, dtype=np.int64)
    for j in range(n):
        lo = j + 1
        hi = min(j + bandwidth, n - 1)
        width = hi - lo + 1
        if width <= 0:
            continue
        take = rng.binomial(width, density)
        if take == 0:
            continue
        picked = rng.choice(width, size=take, replace=False) + lo
        picked.sort()
        rows_parts.append(picked.astype(np.int64))
        cols_parts.append(np.full(take, j, dtype=np.int64))
        counts[j] = take
    off_rows = np.concatenate(rows_parts) if rows_parts else np.empty(0, dtype=np.int64)
    off_cols = np.concatenate(cols_parts) if cols_parts else np.empty(0, dtype=np.int64)
    off_vals = rng.uniform(-1.0, 1.0, size=off_rows.size)
    diag_vals = _signed_units(rng, n)
    return _assemble(n, counts, off_rows, off_cols, off_vals, diag_vals)


def _block_diagonal(spec: SyntheticSpec) -> CscMatrix:
    n = spec.n
    block = spec.block if spec.block is not None else 4
    if not 1 <= block <= n:
        raise InvalidSpec(f"block must be in [1, n], got {block}")
    rng = np.random.default_rng(spec.seed)
    rows_parts: list[np.ndarray] = []
    cols_parts: list[np.ndarray] = []
    counts = np.zeros(n, dtype=np.int64)
    for start in range(0, n, block):
        end = min(start + block, n)
        for j in range(start, end):
            below = np.arange(j + 1, end, dtype=np.int64)
            if below.size == 0:
                continue
            rows_parts.append(below)
            cols_parts.append(np.full(below.size, j, dtype=np.int64))
            counts[j] = below.size
    off_rows = np.concatenate(rows_parts) if rows_parts else np.empty(0, dtype=np.int64)
    off_cols = np.concatenate(cols_parts) if cols_parts else np.empty(0, dtype=np.int64)
    off_vals = rng.uniform(-1.0, 1.0, size=off_rows.size)
    diag_vals = _signed_units(rng, n)
    return _assemble(n, counts, off_rows, off_cols, off_vals, diag_vals)


def _dense_lower(spec: SyntheticSpec) -> CscMatrix:
    full = SyntheticSpec(
        kind=SyntheticKind.BLOCK_DIAGONAL, n=spec.n, seed=spec.seed, block=spec.n
    )
    return _block_diagonal(full)


def _assemble(n, off_counts, off_rows, off_cols, off_vals, diag_vals) -> CscMatrix:
    """Interleave a full diagonal with sorted off-diagonal entries."""
    counts = off_counts + 1
    col_ptr = np.concatenate(([0], np.cumsum(counts)))
    nnz = int(col_ptr[-1])
    rows = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    starts = col_ptr[:-1]
    rows[starts] = np.arange(n)
    vals[starts] = diag_vals
    if off_rows.size:
        # Off-diagonals are already grouped by ascending column with sorted
        # rows; their slot is the column start plus 1 plus rank-in-column.
        rank = np.arange(off_rows.size) - np.repeat(
            np.concatenate(([0], np.cumsum(off_counts)))[:-1], off_counts
        )
        slots = starts[off_cols] + 1 + rank
        rows[slots] = off_rows
        vals[slots] = off_vals
    return CscMatrix(n=n, col_ptr=col_ptr, row_idx=rows, values=vals)
