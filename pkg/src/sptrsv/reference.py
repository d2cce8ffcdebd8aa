"""Serial forward-substitution oracle and solution-quality measurement.

The serial solver is the ground truth every concurrent engine is checked
against.  It processes columns in ascending order, accumulating partial
sums for later rows as each component is solved; accumulation order is
fixed (ascending column, storage order inside a column), so repeated
calls are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch
from .matrix import CscMatrix, column_lists, ensure_lower_triangular, spmv_lower


def solve_serial(l: CscMatrix, b: np.ndarray) -> np.ndarray:
    """Solve ``L x = b`` by forward substitution over stored entries."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (l.n,):
        raise DimensionMismatch(f"rhs has shape {b.shape}, matrix is {l.n}x{l.n}")
    ensure_lower_triangular(l)
    diag, off_rows, off_vals = column_lists(l)
    bl = b.tolist()
    x = [0.0] * l.n
    left_sum = [0.0] * l.n
    for i in range(l.n):
        xi = (bl[i] - left_sum[i]) / diag[i]
        x[i] = xi
        for rid, v in zip(off_rows[i], off_vals[i]):
            left_sum[rid] += v * xi
    return np.array(x)


def residual_norm(l: CscMatrix, x: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Infinity-norm residual of ``L x = b``, absolute and relative.

    The relative norm guards the denominator with the smallest positive
    normal double so a zero right-hand side cannot divide by zero.
    """
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if x.shape != (l.n,) or b.shape != (l.n,):
        raise DimensionMismatch(f"shapes {x.shape}/{b.shape} do not match n={l.n}")
    abs_err = float(np.max(np.abs(spmv_lower(l, x) - b))) if l.n else 0.0
    scale = max(float(np.max(np.abs(b))) if l.n else 0.0, float(np.finfo(np.float64).tiny))
    return abs_err, abs_err / scale


@dataclass(frozen=True)
class SolutionComparison:
    max_abs_error: float
    max_rel_error: float
    worst_component: int
    within_tol: bool


def compare_solutions(x: np.ndarray, x_ref: np.ndarray, tol: float) -> SolutionComparison:
    """Componentwise comparison against a reference solution.

    Per-component relative error divides by ``max(|ref_i|, 1)`` so
    near-zero reference components do not blow up the metric.
    """
    x = np.asarray(x, dtype=np.float64)
    x_ref = np.asarray(x_ref, dtype=np.float64)
    if x.shape != x_ref.shape or x.ndim != 1:
        raise DimensionMismatch(f"cannot compare shapes {x.shape} and {x_ref.shape}")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if x.size == 0:
        return SolutionComparison(0.0, 0.0, 0, True)
    abs_err = np.abs(x - x_ref)
    rel_err = abs_err / np.maximum(np.abs(x_ref), 1.0)
    worst = int(np.argmax(rel_err))
    max_rel = float(rel_err[worst])
    return SolutionComparison(
        max_abs_error=float(np.max(abs_err)),
        max_rel_error=max_rel,
        worst_component=worst,
        within_tol=bool(max_rel <= tol),
    )
