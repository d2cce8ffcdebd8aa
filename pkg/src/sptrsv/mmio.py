"""Matrix Market coordinate-format reader and writer.

Accepts square ``matrix coordinate`` files with real, integer, or pattern
fields and general or symmetric symmetry.  Symmetric storage is expanded,
duplicate coordinates are summed, pattern entries become 1.0, and 1-based
indices are converted to 0-based.  The writer emits ``real general``
column-major coordinates that round-trip bit-exactly through the reader.
"""

from __future__ import annotations

import io
from os import PathLike
from typing import BinaryIO, Iterable, Union

import numpy as np

from .errors import (
    ComplexFieldUnsupported,
    IndexOutOfRange,
    MalformedEntry,
    MalformedHeader,
    NonSquare,
)
from .matrix import CscMatrix

_BANNER = "%%MatrixMarket"

Source = Union[str, PathLike, bytes, BinaryIO, io.TextIOBase]


def _lines(source: Source) -> Iterable[str]:
    if isinstance(source, (str, PathLike)):
        with open(source, "r", encoding="ascii", errors="replace") as fh:
            yield from fh
    elif isinstance(source, bytes):
        yield from source.decode("ascii", errors="replace").splitlines()
    elif isinstance(source, io.TextIOBase):
        yield from source
    else:
        yield from (raw.decode("ascii", errors="replace") for raw in source)


def parse_matrix_market(source: Source) -> CscMatrix:
    """Parse a Matrix Market file into a general (unvalidated) CscMatrix.

    The result contains every stored entry of the file; lower-triangular
    extraction and validation are separate steps.
    """
    lines = iter(enumerate(_lines(source), start=1))
    try:
        _, header = next(lines)
    except StopIteration:
        raise MalformedHeader("empty input") from None
    tokens = header.strip().split()
    if len(tokens) != 5 or tokens[0] != _BANNER:
        raise MalformedHeader(f"bad banner line {header.strip()!r}")
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MalformedHeader(f"object {obj!r} unsupported")
    if fmt != "coordinate":
        raise MalformedHeader(f"format {fmt!r} unsupported, need coordinate")
    if field == "complex":
        raise ComplexFieldUnsupported("complex matrices not supported")
    if field not in ("real", "integer", "pattern"):
        raise MalformedHeader(f"field {field!r} unsupported")
    if symmetry not in ("general", "symmetric"):
        raise MalformedHeader(f"symmetry {symmetry!r} unsupported")

    size = None
    for lineno, line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise MalformedHeader(f"bad size line {lineno}: {stripped!r}")
        try:
            n_rows, n_cols, n_decl = (int(p) for p in parts)
        except ValueError:
            raise MalformedHeader(f"non-integer size line {lineno}") from None
        size = (n_rows, n_cols, n_decl)
        break
    if size is None:
        raise MalformedHeader("missing size line")
    n_rows, n_cols, n_decl = size
    if n_rows != n_cols:
        raise NonSquare(f"{n_rows} rows != {n_cols} columns")
    n = n_rows

    pattern = field == "pattern"
    want = 2 if pattern else 3
    rows = np.empty(n_decl, dtype=np.int64)
    cols = np.empty(n_decl, dtype=np.int64)
    vals = np.empty(n_decl, dtype=np.float64)
    k = 0
    for lineno, line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith("%"):
            continue
        parts = stripped.split()
        if len(parts) != want:
            raise MalformedEntry(f"line {lineno} has {len(parts)} fields, expected {want}")
        try:
            r = int(parts[0])
            c = int(parts[1])
            v = 1.0 if pattern else float(parts[2])
        except ValueError:
            raise MalformedEntry(f"unparsable entry at line {lineno}: {stripped!r}") from None
        if not (1 <= r <= n and 1 <= c <= n):
            raise IndexOutOfRange(f"entry ({r},{c}) at line {lineno} outside 1..{n}")
        if k >= n_decl:
            raise MalformedEntry(f"more than the declared {n_decl} entries")
        rows[k] = r - 1
        cols[k] = c - 1
        vals[k] = v
        k += 1
    if k != n_decl:
        raise MalformedEntry(f"{k} entries found, {n_decl} declared")

    if symmetry == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )

    return _coo_to_csc(n, rows, cols, vals)


def _coo_to_csc(n: int, rows: np.ndarray, cols: np.ndarray, vals: np.ndarray) -> CscMatrix:
    """Sort column-major and sum duplicate coordinates."""
    order = np.lexsort((rows, cols))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        fresh = np.ones(rows.size, dtype=bool)
        fresh[1:] = (np.diff(rows) != 0) | (np.diff(cols) != 0)
        group = np.cumsum(fresh) - 1
        summed = np.bincount(group, weights=vals)
        rows, cols, vals = rows[fresh], cols[fresh], summed
    counts = np.bincount(cols, minlength=n)
    col_ptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    return CscMatrix(n=n, col_ptr=col_ptr, row_idx=rows, values=vals)


def write_matrix_market(m: CscMatrix, target, comment: str | None = None) -> None:
    """Write ``m`` as ``matrix coordinate real general``, column-major.

    ``target`` may be a path or a text stream.  Values use shortest
    round-trip formatting so parse(write(m)) reproduces m exactly.
    """
    if isinstance(target, (str, PathLike)):
        with open(target, "w", encoding="ascii") as fh:
            write_matrix_market(m, fh, comment=comment)
        return
    target.write("%%MatrixMarket matrix coordinate real general\n")
    if comment:
        for line in comment.splitlines():
            target.write(f"% {line}\n")
    target.write(f"{m.n} {m.n} {m.nnz}\n")
    cols = m.entry_columns()
    for r, c, v in zip(m.row_idx.tolist(), cols.tolist(), m.values.tolist()):
        target.write(f"{r + 1} {c + 1} {v!r}\n")


def matrix_market_string(m: CscMatrix, comment: str | None = None) -> str:
    buf = io.StringIO()
    write_matrix_market(m, buf, comment=comment)
    return buf.getvalue()
