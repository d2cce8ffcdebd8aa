"""Benchmark and verification command line.

Subcommands: ``analyze`` (structure metrics), ``solve`` (repeated timed
solves verified against the serial reference), ``sweep-tasks`` (task
granularity sensitivity), ``sweep-pes`` (PE-count scaling).  Records go
to stdout or ``--out`` as JSON lines or CSV; the field set is identical
in both formats and documented in docs/record_schema.json.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analysis, engine as engine_mod, mmio, partition, reference, synth
from .engine import Backoff, Engine, SolverConfig
from .errors import DimensionMismatch, IndivisibleTaskTotal, InvalidSpec, SptrsvError
from .matrix import CscMatrix, DiagonalPolicy, extract_lower_triangular

VERIFY_TOL = 1e-9

RECORD_FIELDS = (
    "name",
    "engine",
    "n",
    "nnz",
    "n_levels",
    "parallelism",
    "dependency",
    "n_pes",
    "tasks_per_pe",
    "workers_per_pe",
    "repeats",
    "engine_runs",
    "mean_wall_time",
    "min_wall_time",
    "max_wall_time",
    "mean_setup_time",
    "mean_combined_time",
    "max_rel_error",
    "lock_wait_spins",
    "remote_reads_issued",
    "remote_reads_skipped",
    "local_updates",
    "remote_updates",
)


@dataclass(frozen=True)
class RunSpec:
    """One fully resolved benchmark run request."""

    name: str
    matrix: CscMatrix
    rhs: np.ndarray
    engine: Engine
    n_pes: int
    tasks_per_pe: int
    workers_per_pe: int
    repeats: int
    timeout: float
    remote_read_caching: bool
    verify: bool

    def config(self) -> SolverConfig:
        return SolverConfig(
            engine=self.engine,
            n_pes=self.n_pes,
            workers_per_pe=self.workers_per_pe,
            spin_backoff=Backoff(),
            timeout=self.timeout,
            remote_read_caching=self.remote_read_caching,
        )


class VerificationFailed(SptrsvError):
    pass


def parse_synthetic(text: str, seed: int) -> synth.SyntheticSpec:
    """Parse ``KIND:n[:key=value,...]``, e.g. ``banded:500:density=0.05``."""
    parts = text.split(":")
    if len(parts) < 2:
        raise InvalidSpec(f"synthetic spec {text!r} needs KIND:n")
    kind_name = parts[0].strip().lower()
    try:
        kind = synth.SyntheticKind(kind_name)
    except ValueError:
        valid = ", ".join(k.value for k in synth.SyntheticKind)
        raise InvalidSpec(f"unknown synthetic kind {kind_name!r} (one of: {valid})") from None
    try:
        n = int(parts[1])
    except ValueError:
        raise InvalidSpec(f"synthetic size {parts[1]!r} is not an integer") from None
    kwargs: dict[str, float | int] = {}
    for chunk in parts[2:]:
        for item in chunk.split(","):
            if not item:
                continue
            if "=" not in item:
                raise InvalidSpec(f"bad synthetic parameter {item!r}, need key=value")
            key, _, value = item.partition("=")
            key = key.strip()
            try:
                if key in ("bandwidth", "block"):
                    kwargs[key] = int(value)
                elif key == "density":
                    kwargs[key] = float(value)
                else:
                    raise InvalidSpec(f"unknown synthetic parameter {key!r}")
            except ValueError:
                raise InvalidSpec(f"bad value for {key}: {value!r}") from None
    return synth.SyntheticSpec(kind=kind, n=n, seed=seed, **kwargs)


def _load_matrix(args) -> tuple[str, CscMatrix]:
    if (args.matrix is None) == (args.synthetic is None):
        raise InvalidSpec("exactly one of --matrix and --synthetic is required")
    if args.matrix is not None:
        raw = mmio.parse_matrix_market(args.matrix)
        policy = (
            DiagonalPolicy.REQUIRE_EXPLICIT
            if args.diagonal == "require"
            else DiagonalPolicy.INSERT_UNIT
        )
        return Path(args.matrix).stem, extract_lower_triangular(raw, policy)
    spec = parse_synthetic(args.synthetic, args.seed)
    return spec.describe(), synth.generate_synthetic(spec)


def _make_rhs(args, n: int) -> np.ndarray:
    if args.rhs == "ones":
        return np.ones(n)
    if args.rhs == "random":
        return np.random.default_rng((args.seed, 1)).uniform(-1.0, 1.0, size=n)
    vec = np.loadtxt(args.rhs, dtype=np.float64, ndmin=1)
    if vec.shape != (n,):
        raise DimensionMismatch(f"rhs file has {vec.shape[0]} values, matrix needs {n}")
    return vec


def _run_engine(l, b, plan, cfg):
    return engine_mod.solve(l, b, plan, cfg)


def run_benchmark(spec: RunSpec) -> dict:
    """Run ``repeats`` engine solves plus one reference solve; build a record."""
    if spec.repeats < 1:
        raise InvalidSpec(f"repeats must be >= 1, got {spec.repeats}")
    stats = analysis.compute_stats(spec.matrix)
    plan = partition.task_round_robin_partition(spec.matrix.n, spec.n_pes, spec.tasks_per_pe)
    cfg = spec.config()

    x_ref = reference.solve_serial(spec.matrix, spec.rhs) if spec.verify else None
    solve_times: list[float] = []
    setup_times: list[float] = []
    combined_times: list[float] = []
    max_rel_error = None
    engine_runs = 0
    report = None
    for _ in range(spec.repeats):
        x, report = _run_engine(spec.matrix, spec.rhs, plan, cfg)
        engine_runs += 1
        solve_times.append(report.solve_time)
        setup_times.append(report.setup_time)
        combined_times.append(report.setup_time + report.solve_time)
        if x_ref is not None:
            cmp = reference.compare_solutions(x, x_ref, VERIFY_TOL)
            err = cmp.max_rel_error
            if max_rel_error is None or err > max_rel_error:
                max_rel_error = err
            if not cmp.within_tol:
                raise VerificationFailed(
                    f"run diverged from the serial reference: max relative error "
                    f"{err:.3e} > {VERIFY_TOL:g} at component {cmp.worst_component}"
                )
    rollup = report.totals()
    return {
        "name": spec.name,
        "engine": spec.engine.value,
        "n": spec.matrix.n,
        "nnz": spec.matrix.nnz,
        "n_levels": stats.n_levels,
        "parallelism": stats.parallelism,
        "dependency": stats.dependency,
        "n_pes": spec.n_pes,
        "tasks_per_pe": spec.tasks_per_pe,
        "workers_per_pe": spec.workers_per_pe,
        "repeats": spec.repeats,
        "engine_runs": engine_runs,
        "mean_wall_time": sum(solve_times) / len(solve_times),
        "min_wall_time": min(solve_times),
        "max_wall_time": max(solve_times),
        "mean_setup_time": sum(setup_times) / len(setup_times),
        "mean_combined_time": sum(combined_times) / len(combined_times),
        "max_rel_error": max_rel_error,
        "lock_wait_spins": rollup["lock_wait_spins"],
        "remote_reads_issued": rollup["remote_reads_issued"],
        "remote_reads_skipped": rollup["remote_reads_skipped"],
        "local_updates": rollup["local_updates"],
        "remote_updates": rollup["remote_updates"],
    }


def _emit(records: list[dict], fmt: str, out: str | None) -> None:
    if fmt == "json":
        text = "".join(json.dumps(r) + "\n" for r in records)
    else:
        # Records of one command share a field set; its insertion order is
        # the documented column order.
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=list(records[0]), lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow({k: ("" if v is None else v) for k, v in r.items()})
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _spec_from_args(args, name, l, b, n_pes, tasks_per_pe) -> RunSpec:
    return RunSpec(
        name=name,
        matrix=l,
        rhs=b,
        engine=Engine(args.engine),
        n_pes=n_pes,
        tasks_per_pe=tasks_per_pe,
        workers_per_pe=args.workers_per_pe,
        repeats=args.repeats,
        timeout=args.timeout_secs,
        remote_read_caching=not args.no_remote_read_caching,
        verify=not args.no_verify,
    )


def cmd_analyze(args) -> int:
    name, l = _load_matrix(args)
    record = analysis.compute_stats(l).to_json_dict(name=name)
    _emit([record], args.format, args.out)
    return 0


def cmd_solve(args) -> int:
    name, l = _load_matrix(args)
    b = _make_rhs(args, l.n)
    spec = _spec_from_args(args, name, l, b, args.pes, args.tasks_per_pe)
    _emit([run_benchmark(spec)], args.format, args.out)
    return 0


def cmd_sweep_tasks(args) -> int:
    name, l = _load_matrix(args)
    b = _make_rhs(args, l.n)
    records = []
    for tasks_per_pe in args.tasks:
        spec = _spec_from_args(args, name, l, b, args.pes, tasks_per_pe)
        records.append(run_benchmark(spec))
    _emit(records, args.format, args.out)
    return 0


def cmd_sweep_pes(args) -> int:
    name, l = _load_matrix(args)
    b = _make_rhs(args, l.n)
    records = []
    for n_pes in args.pes_list:
        if args.fixed_total_tasks is not None:
            total = args.fixed_total_tasks
            if total % n_pes != 0:
                raise IndivisibleTaskTotal(
                    f"total task count {total} is not divisible by {n_pes} PEs"
                )
            tasks_per_pe = total // n_pes
        else:
            tasks_per_pe = args.tasks_per_pe
        spec = _spec_from_args(args, name, l, b, n_pes, tasks_per_pe)
        records.append(run_benchmark(spec))
    _emit(records, args.format, args.out)
    return 0


def _int_list(text: str) -> list[int]:
    try:
        values = [int(p) for p in text.split(",") if p]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated integer list")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_matrix_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matrix", help="Matrix Market file (lower triangle is extracted)")
    p.add_argument("--synthetic", help="synthetic spec KIND:n[:key=value,...]")
    p.add_argument(
        "--diagonal",
        choices=("require", "insert-unit"),
        default="insert-unit",
        help="missing-diagonal policy for file inputs (default: insert-unit)",
    )
    p.add_argument("--seed", type=int, default=0, help="seed for synthetic matrix and random rhs")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", help="write records here instead of stdout")


def _add_solve_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--engine", choices=("shared", "partitioned"), default="partitioned")
    p.add_argument("--workers-per-pe", type=int, default=1)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--rhs", default="ones", help="'ones', 'random', or a file of values")
    p.add_argument("--no-verify", action="store_true", help="skip the serial reference check")
    p.add_argument("--timeout-secs", type=float, default=60.0)
    p.add_argument(
        "--no-remote-read-caching",
        action="store_true",
        help="always re-read remote dependency counters while waiting",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sptrsv",
        description="Sparse triangular solve on a model multi-PE machine.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="structure metrics for one matrix")
    _add_matrix_args(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("solve", help="timed, verified solves of one configuration")
    _add_matrix_args(p)
    _add_solve_args(p)
    p.add_argument("--pes", type=int, default=1)
    p.add_argument("--tasks-per-pe", type=int, default=1)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep-tasks", help="sensitivity to tasks per PE")
    _add_matrix_args(p)
    _add_solve_args(p)
    p.add_argument("--pes", type=int, default=4)
    p.add_argument("--tasks", type=_int_list, required=True, help="e.g. 4,8,16")
    p.set_defaults(func=cmd_sweep_tasks)

    p = sub.add_parser("sweep-pes", help="scaling with the PE count")
    _add_matrix_args(p)
    _add_solve_args(p)
    p.add_argument("--pes-list", type=_int_list, required=True, dest="pes_list", help="e.g. 1,2,4")
    p.add_argument("--tasks-per-pe", type=int, default=1)
    p.add_argument(
        "--fixed-total-tasks",
        type=int,
        help="hold total task count fixed; tasks per PE becomes total / n_pes",
    )
    p.set_defaults(func=cmd_sweep_pes)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SptrsvError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IO: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
