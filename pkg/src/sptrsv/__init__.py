"""Multicore sparse triangular solver with synchronization-free scheduling.

Solves ``L x = b`` for sparse lower-triangular ``L`` on a model machine
of processing elements (PEs), each owning a published memory segment.
Ships a shared-atomics engine, a partitioned engine whose cross-PE
communication is read-only, level-set analysis, and block / round-robin
task distribution, plus a benchmark CLI.
"""

from .analysis import (
    LevelSchedule,
    MatrixStats,
    compute_in_degrees,
    compute_level_schedule,
    compute_stats,
    dependency_metric,
    parallelism_metric,
)
from .engine import (
    Backoff,
    Engine,
    EngineState,
    PeStats,
    SolveReport,
    SolverConfig,
    reduce_contributions,
    solve,
    solve_partitioned,
    solve_shared_atomics,
)
from .matrix import (
    CscMatrix,
    DiagonalPolicy,
    Violation,
    extract_lower_triangular,
    spmv_lower,
    validate_lower_triangular,
)
from .mmio import matrix_market_string, parse_matrix_market, write_matrix_market
from .partition import (
    PartitionPlan,
    TaskRange,
    block_partition,
    owner_of,
    task_round_robin_partition,
)
from .reference import SolutionComparison, compare_solutions, residual_norm, solve_serial
from .synth import SyntheticKind, SyntheticSpec, generate_synthetic, random_lower

__version__ = "0.1.0"

__all__ = [
    "Backoff",
    "CscMatrix",
    "DiagonalPolicy",
    "Engine",
    "EngineState",
    "LevelSchedule",
    "MatrixStats",
    "PartitionPlan",
    "PeStats",
    "SolutionComparison",
    "SolveReport",
    "SolverConfig",
    "SyntheticKind",
    "SyntheticSpec",
    "TaskRange",
    "Violation",
    "block_partition",
    "compare_solutions",
    "compute_in_degrees",
    "compute_level_schedule",
    "compute_stats",
    "dependency_metric",
    "extract_lower_triangular",
    "generate_synthetic",
    "matrix_market_string",
    "owner_of",
    "parallelism_metric",
    "parse_matrix_market",
    "random_lower",
    "reduce_contributions",
    "residual_norm",
    "solve",
    "solve_partitioned",
    "solve_serial",
    "solve_shared_atomics",
    "spmv_lower",
    "task_round_robin_partition",
    "validate_lower_triangular",
    "write_matrix_market",
]
