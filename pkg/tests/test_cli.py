import csv
import io
import json
from pathlib import Path

import jsonschema
import pytest

from sptrsv import cli, write_matrix_market
from sptrsv.cli import RECORD_FIELDS, main

SCHEMA = json.loads(
    (Path(__file__).resolve().parent.parent / "docs" / "record_schema.json").read_text()
)


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_records(out: str) -> list[dict]:
    records = [json.loads(line) for line in out.splitlines() if line]
    for r in records:
        jsonschema.validate(r, SCHEMA)
    return records


class TestAnalyze:
    def test_diagonal_synthetic(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--synthetic", "diagonal:100")
        assert code == 0
        record = json.loads(out)
        assert record["n_levels"] == 1
        assert record["parallelism"] == 100
        assert record["dependency"] == 1.0

    def test_bidiagonal_synthetic(self, capsys):
        code, out, _ = run_cli(capsys, "analyze", "--synthetic", "bidiagonal:100")
        assert code == 0
        record = json.loads(out)
        assert record["n_levels"] == 100
        assert record["parallelism"] == 1
        assert record["dependency"] == pytest.approx(1.99)

    def test_matrix_file(self, capsys, tmp_path, worked_3x3):
        l, _, _ = worked_3x3
        path = tmp_path / "l.mtx"
        write_matrix_market(l, path)
        code, out, _ = run_cli(capsys, "analyze", "--matrix", str(path))
        assert code == 0
        record = json.loads(out)
        assert record == {
            "name": "l",
            "n_rows": 3,
            "nnz": 5,
            "n_levels": 3,
            "parallelism": 1,
            "dependency": 5 / 3,
        }

    def test_deterministic_given_seed(self, capsys):
        args = ("analyze", "--synthetic", "banded:64:density=0.2", "--seed", "9")
        _, first, _ = run_cli(capsys, *args)
        _, second, _ = run_cli(capsys, *args)
        assert first == second

    def test_requires_exactly_one_source(self, capsys):
        code, _, err = run_cli(capsys, "analyze")
        assert code == 1
        assert "InvalidSpec" in err


class TestSolve:
    def test_identity_shared_single_pe(self, capsys):
        code, out, _ = run_cli(
            capsys, "solve", "--synthetic", "diagonal:10", "--engine", "shared",
            "--pes", "1", "--repeats", "2",
        )
        assert code == 0
        (record,) = parse_records(out)
        assert record["max_rel_error"] == 0.0
        assert record["engine_runs"] == 2
        assert record["engine"] == "shared"

    def test_worked_example_partitioned(self, capsys, tmp_path, worked_3x3):
        l, _, _ = worked_3x3
        path = tmp_path / "l.mtx"
        write_matrix_market(l, path)
        rhs = tmp_path / "b.txt"
        rhs.write_text("2\n2\n7\n")
        code, out, _ = run_cli(
            capsys, "solve", "--matrix", str(path), "--engine", "partitioned",
            "--pes", "3", "--rhs", str(rhs), "--repeats", "1",
        )
        assert code == 0
        (record,) = parse_records(out)
        assert record["max_rel_error"] <= 1e-12
        assert record["n_pes"] == 3

    def test_zero_diagonal_file_fails_labeled(self, capsys, tmp_path):
        path = tmp_path / "bad.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 0.0\n2 2 1.0\n"
        )
        code, _, err = run_cli(capsys, "solve", "--matrix", str(path), "--pes", "1")
        assert code == 1
        assert "ZeroDiagonal" in err

    def test_no_verify_leaves_error_null(self, capsys):
        code, out, _ = run_cli(
            capsys, "solve", "--synthetic", "diagonal:10", "--no-verify", "--repeats", "1",
        )
        assert code == 0
        (record,) = parse_records(out)
        assert record["max_rel_error"] is None

    def test_repeats_counted(self, capsys, monkeypatch):
        calls = []
        real = cli._run_engine

        def counting(*args):
            calls.append(1)
            return real(*args)

        monkeypatch.setattr(cli, "_run_engine", counting)
        code, out, _ = run_cli(
            capsys, "solve", "--synthetic", "banded:64:density=0.1", "--repeats", "5",
            "--pes", "2", "--tasks-per-pe", "2",
        )
        assert code == 0
        (record,) = parse_records(out)
        assert record["engine_runs"] == 5 == len(calls)

    def test_random_rhs_seeded(self, capsys):
        args = (
            "solve", "--synthetic", "banded:48:density=0.1", "--rhs", "random",
            "--seed", "4", "--repeats", "1",
        )
        code, out, _ = run_cli(capsys, *args)
        assert code == 0
        (record,) = parse_records(out)
        code2, out2, _ = run_cli(capsys, *args)
        (record2,) = parse_records(out2)
        # structure is bit-identical across invocations; times may differ
        for key in ("n", "nnz", "n_levels", "parallelism", "dependency"):
            assert record[key] == record2[key]

    def test_out_file(self, tmp_path, capsys):
        out_path = tmp_path / "records.jsonl"
        code, out, _ = run_cli(
            capsys, "solve", "--synthetic", "diagonal:10", "--repeats", "1",
            "--out", str(out_path),
        )
        assert code == 0 and out == ""
        parse_records(out_path.read_text())

    def test_zero_repeats_rejected(self, capsys):
        code, _, err = run_cli(
            capsys, "solve", "--synthetic", "diagonal:10", "--repeats", "0",
        )
        assert code == 1
        assert "InvalidSpec" in err

    def test_timeout_exit_labeled(self, capsys):
        code, _, err = run_cli(
            capsys, "solve", "--synthetic", "bidiagonal:20000", "--pes", "4",
            "--tasks-per-pe", "4", "--repeats", "1", "--timeout-secs", "0.002",
        )
        assert code == 1
        assert "Timeout" in err


class TestCsv:
    def test_analyze_csv(self, capsys):
        code, out, _ = run_cli(
            capsys, "analyze", "--synthetic", "diagonal:10", "--format", "csv"
        )
        assert code == 0
        reader = csv.DictReader(io.StringIO(out))
        (row,) = list(reader)
        assert row["n_levels"] == "1" and row["parallelism"] == "10"

    def test_same_fields_as_json(self, capsys):
        code, out, _ = run_cli(
            capsys, "solve", "--synthetic", "diagonal:10", "--repeats", "1",
            "--format", "csv",
        )
        assert code == 0
        reader = csv.DictReader(io.StringIO(out))
        assert tuple(reader.fieldnames) == RECORD_FIELDS
        (row,) = list(reader)
        assert row["name"] == "diagonal:10"
        assert int(row["n"]) == 10


class TestSweeps:
    def test_sweep_tasks_produces_verified_records(self, capsys):
        code, out, _ = run_cli(
            capsys, "sweep-tasks", "--synthetic", "blockdiag:512:block=16",
            "--pes", "4", "--tasks", "4,8,16", "--repeats", "1",
        )
        assert code == 0
        records = parse_records(out)
        assert [r["tasks_per_pe"] for r in records] == [4, 8, 16]
        assert all(r["max_rel_error"] is not None and r["max_rel_error"] <= 1e-9 for r in records)

    @pytest.mark.slow
    def test_sweep_tasks_at_scale(self, capsys):
        code, out, _ = run_cli(
            capsys, "sweep-tasks", "--synthetic", "blockdiag:65536:block=64",
            "--pes", "4", "--tasks", "1,4,8", "--repeats", "1",
        )
        assert code == 0
        records = parse_records(out)
        assert [r["tasks_per_pe"] for r in records] == [1, 4, 8]
        assert all(r["max_rel_error"] <= 1e-9 for r in records)

    def test_sweep_tasks_too_many(self, capsys):
        code, _, err = run_cli(
            capsys, "sweep-tasks", "--synthetic", "diagonal:16",
            "--pes", "4", "--tasks", "8", "--repeats", "1",
        )
        assert code == 1
        assert "TooManyTasks" in err

    def test_sweep_pes_fixed_total(self, capsys):
        code, out, _ = run_cli(
            capsys, "sweep-pes", "--synthetic", "blockdiag:256:block=8",
            "--pes-list", "1,2,4", "--fixed-total-tasks", "32", "--repeats", "1",
        )
        assert code == 0
        records = parse_records(out)
        assert [(r["n_pes"], r["tasks_per_pe"]) for r in records] == [(1, 32), (2, 16), (4, 8)]

    def test_sweep_pes_indivisible_total(self, capsys):
        code, _, err = run_cli(
            capsys, "sweep-pes", "--synthetic", "diagonal:64",
            "--pes-list", "3", "--fixed-total-tasks", "32", "--repeats", "1",
        )
        assert code == 1
        assert "IndivisibleTaskTotal" in err

    def test_sweep_pes_single_matches_solve(self, capsys):
        sweep_code, sweep_out, _ = run_cli(
            capsys, "sweep-pes", "--synthetic", "diagonal:32", "--pes-list", "1",
            "--tasks-per-pe", "1", "--repeats", "1",
        )
        solve_code, solve_out, _ = run_cli(
            capsys, "solve", "--synthetic", "diagonal:32", "--pes", "1",
            "--tasks-per-pe", "1", "--repeats", "1",
        )
        assert sweep_code == solve_code == 0
        (a,) = parse_records(sweep_out)
        (b,) = parse_records(solve_out)
        for key in RECORD_FIELDS:
            if "time" in key:
                continue
            assert a[key] == b[key]
