import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from sptrsv import (
    CscMatrix,
    DiagonalPolicy,
    extract_lower_triangular,
    spmv_lower,
    validate_lower_triangular,
)
from sptrsv.errors import (
    DimensionMismatch,
    MatrixStructureError,
    MissingDiagonal,
    ZeroDiagonal,
)

from conftest import bidiagonal, random_instance


class TestStructure:
    def test_from_entries_layout(self, worked_3x3):
        l, _, _ = worked_3x3
        assert l.n == 3 and l.nnz == 5
        assert_array_equal(l.col_ptr, [0, 2, 4, 5])
        assert_array_equal(l.row_idx, [0, 1, 1, 2, 2])
        assert_allclose(l.values, [2.0, 1.0, 1.0, 3.0, 4.0])

    def test_arrays_are_frozen(self, identity4):
        with pytest.raises(ValueError):
            identity4.values[0] = 9.0

    def test_bad_col_ptr_rejected(self):
        with pytest.raises(MatrixStructureError, match="non-decreasing"):
            CscMatrix(n=2, col_ptr=[0, 2, 1], row_idx=[0, 1], values=[1.0, 1.0])

    def test_col_ptr_must_start_at_zero(self):
        with pytest.raises(MatrixStructureError, match="expected 0"):
            CscMatrix(n=1, col_ptr=[1, 1], row_idx=[], values=[])

    def test_unsorted_rows_rejected(self):
        with pytest.raises(MatrixStructureError, match="strictly increasing"):
            CscMatrix(n=2, col_ptr=[0, 2, 2], row_idx=[1, 0], values=[1.0, 1.0])

    def test_duplicate_rows_rejected(self):
        with pytest.raises(MatrixStructureError, match="strictly increasing"):
            CscMatrix(n=2, col_ptr=[0, 2, 2], row_idx=[0, 0], values=[1.0, 1.0])

    def test_row_out_of_range_rejected(self):
        with pytest.raises(MatrixStructureError, match="out of range"):
            CscMatrix(n=2, col_ptr=[0, 1, 2], row_idx=[0, 2], values=[1.0, 1.0])

    def test_entry_count_mismatch_rejected(self):
        with pytest.raises(MatrixStructureError, match="entry arrays"):
            CscMatrix(n=2, col_ptr=[0, 1, 3], row_idx=[0, 1], values=[1.0, 1.0])


class TestExtract:
    def test_identity_unchanged(self, identity4):
        out = extract_lower_triangular(identity4, DiagonalPolicy.REQUIRE_EXPLICIT)
        assert_array_equal(out.col_ptr, identity4.col_ptr)
        assert_array_equal(out.row_idx, identity4.row_idx)
        assert_allclose(out.values, identity4.values)

    def test_dense_2x2_drops_upper(self):
        a = CscMatrix.from_entries(2, {(0, 0): 2.0, (0, 1): 5.0, (1, 0): 1.0, (1, 1): 3.0})
        out = extract_lower_triangular(a, DiagonalPolicy.REQUIRE_EXPLICIT)
        assert out.nnz == 3
        assert_array_equal(out.to_dense(), [[2.0, 0.0], [1.0, 3.0]])

    def test_insert_unit_fills_missing_diagonals(self):
        a = CscMatrix.from_entries(2, {(1, 0): 4.0})
        out = extract_lower_triangular(a, DiagonalPolicy.INSERT_UNIT)
        assert out.nnz == 3
        assert_array_equal(out.to_dense(), [[1.0, 0.0], [4.0, 1.0]])

    def test_require_explicit_raises_on_missing(self):
        a = CscMatrix.from_entries(2, {(1, 0): 4.0})
        with pytest.raises(MissingDiagonal) as exc:
            extract_lower_triangular(a, DiagonalPolicy.REQUIRE_EXPLICIT)
        assert exc.value.col == 0

    def test_zero_diagonal_raises_under_both_policies(self):
        a = CscMatrix.from_entries(2, {(0, 0): 0.0, (1, 1): 1.0})
        for policy in DiagonalPolicy:
            with pytest.raises(ZeroDiagonal) as exc:
                extract_lower_triangular(a, policy)
            assert exc.value.col == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_idempotent(self, seed):
        l, _ = random_instance(seed)
        once = extract_lower_triangular(l, DiagonalPolicy.INSERT_UNIT)
        twice = extract_lower_triangular(once, DiagonalPolicy.INSERT_UNIT)
        assert_array_equal(once.col_ptr, twice.col_ptr)
        assert_array_equal(once.row_idx, twice.row_idx)
        assert_array_equal(once.values, twice.values)


class TestValidate:
    def test_valid_bidiagonal_clean(self):
        assert validate_lower_triangular(bidiagonal(6)) == []

    def test_upper_entry_reported(self):
        m = CscMatrix.from_entries(2, {(0, 0): 1.0, (0, 1): 2.0, (1, 1): 1.0})
        kinds = {(v.kind, v.col) for v in validate_lower_triangular(m)}
        assert ("UpperTriangularEntry", 1) in kinds

    def test_zero_diagonal_reported(self):
        entries = {(j, j): 1.0 for j in range(5)}
        entries[(3, 3)] = 0.0
        m = CscMatrix.from_entries(5, entries)
        assert [(v.kind, v.col) for v in validate_lower_triangular(m)] == [("ZeroDiagonal", 3)]

    def test_missing_diagonal_reported(self):
        m = CscMatrix.from_entries(3, {(0, 0): 1.0, (2, 1): 1.0, (2, 2): 1.0})
        assert [(v.kind, v.col) for v in validate_lower_triangular(m)] == [("MissingDiagonal", 1)]

    @pytest.mark.parametrize("seed", range(8))
    def test_synthetic_instances_valid(self, seed):
        l, _ = random_instance(seed)
        assert validate_lower_triangular(l) == []


class TestSpmv:
    def test_identity(self):
        l = CscMatrix.from_entries(2, {(0, 0): 1.0, (1, 1): 1.0})
        assert_allclose(spmv_lower(l, [3.0, 7.0]), [3.0, 7.0])

    def test_small_dense(self):
        l = CscMatrix.from_entries(2, {(0, 0): 2.0, (1, 0): 1.0, (1, 1): 3.0})
        assert_allclose(spmv_lower(l, [1.0, 1.0]), [2.0, 4.0])

    def test_bidiagonal_ones(self):
        assert_allclose(spmv_lower(bidiagonal(3), [1.0, 1.0, 1.0]), [1.0, 0.0, 0.0])

    def test_dimension_mismatch(self, identity4):
        with pytest.raises(DimensionMismatch):
            spmv_lower(identity4, np.ones(5))

    @pytest.mark.parametrize("seed", range(3))
    def test_basis_vectors_scatter_columns(self, seed):
        l, _ = random_instance(seed, n_hi=64)
        for j in range(0, l.n, max(1, l.n // 7)):
            e = np.zeros(l.n)
            e[j] = 1.0
            expected = np.zeros(l.n)
            rows, vals = l.column(j)
            expected[rows] = vals
            assert_allclose(spmv_lower(l, e), expected)
