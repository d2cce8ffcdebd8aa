"""Exception taxonomy shared across the package.

Class names double as stable diagnostic labels: the CLI prints them
verbatim, so renaming one is a breaking change to the error contract.
"""

from __future__ import annotations


class SptrsvError(Exception):
    """Base class for all errors raised by this package."""


# --- Matrix Market ingestion ---------------------------------------------

class MatrixMarketError(SptrsvError):
    """Base class for Matrix Market parse failures."""


class MalformedHeader(MatrixMarketError):
    pass


class MalformedEntry(MatrixMarketError):
    pass


class NonSquare(MatrixMarketError):
    pass


class IndexOutOfRange(MatrixMarketError):
    pass


class ComplexFieldUnsupported(MatrixMarketError):
    pass


# --- Matrix structure ------------------------------------------------------

class MatrixStructureError(SptrsvError):
    """Raised when CSC arrays are not a well-formed sparse matrix."""


class MissingDiagonal(SptrsvError):
    def __init__(self, col: int):
        super().__init__(f"column {col} has no stored diagonal entry")
        self.col = col


class ZeroDiagonal(SptrsvError):
    def __init__(self, col: int):
        super().__init__(f"stored diagonal of column {col} is exactly 0")
        self.col = col


class InvalidSpec(SptrsvError):
    """Synthetic matrix recipe is out of range or inconsistent."""


class DimensionMismatch(SptrsvError):
    pass


# --- Partitioning ----------------------------------------------------------

class InvalidPeCount(SptrsvError):
    pass


class TooManyTasks(SptrsvError):
    pass


class IndivisibleTaskTotal(SptrsvError):
    pass


# --- Engines ----------------------------------------------------------------

class SolveTimeout(SptrsvError):
    """Deadlock guard tripped: a solve did not finish within the configured bound."""
