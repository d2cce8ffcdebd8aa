"""Concurrent triangular solvers with synchronization-free scheduling.

Two engines solve ``L x = b`` without any level barrier: every component
is handed to a worker up front, and each worker spins at a *lock-wait*
until its component's dependencies are satisfied, then runs
*solve-update*, pushing contributions to dependent rows.

Both engines model a machine of ``n_pes`` processing elements (PEs),
each running ``workers_per_pe`` worker threads:

* ``SHARED_ATOMICS``: one system-wide pair of published arrays
  (``in_degree`` / ``left_sum``) that every PE mutates with atomic
  read-modify-writes, plus PE-private accumulators for PE-local updates.
  All cross-PE traffic contends on the shared arrays.

* ``PARTITIONED_READ_ONLY``: every PE owns a published array pair sized
  ``n`` and *only the owner ever writes it*; other PEs only read.  A
  waiting component gathers the per-PE counters and reduces them, so all
  write contention stays inside one PE.  Optionally, a gather caches
  per-PE counters and skips re-reading any remote PE whose counter
  already reached zero (counters never increase after setup, so a zero
  is final).

Memory model: element reads and writes on the published arrays are
individually atomic under the interpreter lock; read-modify-writes take
a striped mutex.  Each update writes the partial sum *before* touching
the dependency counter inside one critical section, so any reader that
observes the counter change also observes the contribution it counts.

Progress: within a PE, components are dealt to workers by striding over
the PE's task-order sequence, and each worker processes its share in
ascending global order.  Dependencies only point from lower to higher
indices, so the globally smallest unsolved component is always at the
head of some worker's queue with all inputs ready; induction gives
deadlock freedom.  A configurable timeout guards against regressions.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DimensionMismatch, SolveTimeout
from .matrix import CscMatrix, column_lists, ensure_lower_triangular
from .partition import PartitionPlan

_STRIPES = 64  # power of two; index masks pick the guard lock
_MASK = _STRIPES - 1
_SLOW_SLEEP = 2e-4


class Engine(Enum):
    SHARED_ATOMICS = "shared"
    PARTITIONED_READ_ONLY = "partitioned"


@dataclass(frozen=True)
class Backoff:
    """Spin escalation: tight rechecks, then yields, then timed sleeps."""

    initial_pause: int = 16
    max_pause: int = 512


@dataclass(frozen=True)
class SolverConfig:
    engine: Engine
    n_pes: int = 1
    workers_per_pe: int = 1
    spin_backoff: Backoff = Backoff()
    timeout: float = 60.0
    remote_read_caching: bool = True
    capture_state: bool = False
    debug: bool = False

    def __post_init__(self):
        if self.n_pes < 1:
            raise ValueError(f"n_pes must be >= 1, got {self.n_pes}")
        if self.workers_per_pe < 1:
            raise ValueError(f"workers_per_pe must be >= 1, got {self.workers_per_pe}")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be positive, got {self.timeout}")


@dataclass
class PeStats:
    pe: int
    components_solved: int = 0
    lock_wait_spins: int = 0
    remote_reads_issued: int = 0
    remote_reads_skipped: int = 0
    local_updates: int = 0
    remote_updates: int = 0


@dataclass(frozen=True)
class EngineState:
    """Post-solve snapshot of the dependency bookkeeping (for invariants)."""

    s_in_degree: list[np.ndarray]  # one array per published segment
    s_left_sum: list[np.ndarray]
    d_in_degree: np.ndarray  # owner-merged, length n
    d_left_sum: np.ndarray


@dataclass(frozen=True)
class SolveReport:
    x: np.ndarray
    wall_time: float
    setup_time: float
    solve_time: float
    engine: Engine
    n_pes: int
    per_pe: list[PeStats]
    state: EngineState | None = None

    def totals(self) -> dict[str, int]:
        keys = (
            "components_solved",
            "lock_wait_spins",
            "remote_reads_issued",
            "remote_reads_skipped",
            "local_updates",
            "remote_updates",
        )
        return {k: sum(getattr(s, k) for s in self.per_pe) for k in keys}


def reduce_contributions(values) -> float | int:
    """Exact fixed-order pairwise sum of one value per PE.

    Integer inputs reduce exactly; floats get a deterministic tree order
    for any one snapshot of inputs.
    """
    vals = list(values)
    if not vals:
        raise ValueError("need at least one value")
    while len(vals) > 1:
        nxt = [vals[k] + vals[k + 1] for k in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


class _Aborted(Exception):
    pass


class _OwnedList(list):
    """Debug-mode published array that rejects writes by non-owner PEs."""

    __slots__ = ("owner_pe",)

    def __init__(self, iterable, owner_pe: int):
        super().__init__(iterable)
        self.owner_pe = owner_pe

    def __setitem__(self, idx, value):
        tag = getattr(threading.current_thread(), "pe_tag", None)
        if tag is not None and tag != self.owner_pe:
            raise AssertionError(
                f"write locality violated: PE {tag} stored into PE {self.owner_pe}'s array"
            )
        list.__setitem__(self, idx, value)


class _Run:
    """Shared mutable state for one solve call's worker team."""

    def __init__(self, cfg: SolverConfig, plan: PartitionPlan, n: int):
        self.cfg = cfg
        self.plan = plan
        self.n = n
        self.abort = threading.Event()
        self.timeout_info: str | None = None
        self.errors: list[BaseException] = []
        self.error_lock = threading.Lock()
        parties = cfg.n_pes * cfg.workers_per_pe
        self.setup_done_at = 0.0

        def _mark_setup_done():
            self.setup_done_at = time.perf_counter()

        self.barrier = threading.Barrier(parties, action=_mark_setup_done)
        self.stats = [
            [PeStats(pe=p) for _ in range(cfg.workers_per_pe)] for p in range(cfg.n_pes)
        ]

    def fail(self, exc: BaseException):
        with self.error_lock:
            self.errors.append(exc)
        self.abort.set()
        self.barrier.abort()

    def flag_timeout(self, detail: str):
        if self.timeout_info is None:
            self.timeout_info = detail
        self.abort.set()


def _spin_wait_tick(run: _Run, backoff: Backoff, spins: int, deadline: float, what: str):
    """One escalation step inside a lock-wait; raises to unwind on abort."""
    if spins <= backoff.initial_pause:
        return
    if run.abort.is_set():
        raise _Aborted()
    if time.perf_counter() > deadline:
        run.flag_timeout(what)
        raise _Aborted()
    if spins <= backoff.max_pause:
        time.sleep(0)
    else:
        time.sleep(_SLOW_SLEEP)


def _setup_rendezvous(run: _Run, pe: int):
    """All workers meet here between counter setup and the solve phase."""
    try:
        run.barrier.wait(run.cfg.timeout)
    except threading.BrokenBarrierError:
        # Broken either by a failing worker (their error wins at join) or
        # by a genuine setup stall; record the stall case.
        run.flag_timeout(f"setup rendezvous broken on PE {pe}")
        raise _Aborted() from None


def _make_team(run: _Run, worker, args_of):
    threads = []
    for pe in range(run.cfg.n_pes):
        for lane in range(run.cfg.workers_per_pe):
            t = threading.Thread(
                target=_worker_main,
                args=(run, worker, args_of(pe, lane)),
                name=f"pe{pe}w{lane}",
                daemon=True,
            )
            t.pe_tag = pe
            threads.append(t)
    return threads


def _worker_main(run: _Run, worker, args):
    try:
        worker(*args)
    except _Aborted:
        pass
    except threading.BrokenBarrierError:
        pass
    except BaseException as exc:  # propagate real bugs to the caller
        run.fail(exc)


def _launch_and_join(run: _Run, threads, started_at: float):
    for t in threads:
        t.start()
    deadline = started_at + run.cfg.timeout
    for t in threads:
        t.join(max(0.05, deadline + 5.0 - time.perf_counter()))
        if t.is_alive():
            run.flag_timeout(f"worker {t.name} still running at join")
            run.barrier.abort()
    for t in threads:
        t.join(5.0)
    if run.errors:
        raise run.errors[0]
    if run.timeout_info is not None:
        raise SolveTimeout(f"solve exceeded {run.cfg.timeout:g}s ({run.timeout_info})")


def _check_inputs(l: CscMatrix, b, plan: PartitionPlan, cfg: SolverConfig, expected: Engine):
    if cfg.engine is not expected:
        raise ValueError(f"config selects engine {cfg.engine.value!r}, called {expected.value!r}")
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (l.n,):
        raise DimensionMismatch(f"rhs has shape {b.shape}, matrix is {l.n}x{l.n}")
    if plan.n != l.n:
        raise DimensionMismatch(f"plan covers {plan.n} components, matrix has {l.n}")
    if plan.n_pes != cfg.n_pes:
        raise ValueError(f"plan has {plan.n_pes} PEs, config says {cfg.n_pes}")
    ensure_lower_triangular(l)
    return b


def _worker_components(plan: PartitionPlan, pe: int, lane: int, lanes: int) -> list[int]:
    return plan.components_of(pe)[lane::lanes]


def _merge_stats(run: _Run) -> list[PeStats]:
    merged = []
    for pe, lanes in enumerate(run.stats):
        agg = PeStats(pe=pe)
        for s in lanes:
            agg.components_solved += s.components_solved
            agg.lock_wait_spins += s.lock_wait_spins
            agg.remote_reads_issued += s.remote_reads_issued
            agg.remote_reads_skipped += s.remote_reads_skipped
            agg.local_updates += s.local_updates
            agg.remote_updates += s.remote_updates
        merged.append(agg)
    return merged


def _merged_d_arrays(plan: PartitionPlan, d_in, d_ls) -> tuple[np.ndarray, np.ndarray]:
    owner = plan.owner_arr
    n = plan.n
    din = np.empty(n, dtype=np.int64)
    dls = np.empty(n)
    for i in range(n):
        p = owner[i]
        din[i] = d_in[p][i]
        dls[i] = d_ls[p][i]
    return din, dls


# --------------------------------------------------------------------------
# Shared-atomics engine
# --------------------------------------------------------------------------

def solve_shared_atomics(
    l: CscMatrix, b, plan: PartitionPlan, cfg: SolverConfig
) -> tuple[np.ndarray, SolveReport]:
    """Solve with one shared published array pair updated by all PEs."""
    b = _check_inputs(l, b, plan, cfg, Engine.SHARED_ATOMICS)
    n = l.n
    t0 = time.perf_counter()
    diag, off_rows, off_vals = column_lists(l)
    bl = b.tolist()
    owner = plan.owner_arr.tolist()

    s_in = [0] * n
    s_ls = [0.0] * n
    d_in = [[0] * n for _ in range(cfg.n_pes)]
    d_ls = [[0.0] * n for _ in range(cfg.n_pes)]
    x = [0.0] * n

    shared_locks = [threading.Lock() for _ in range(_STRIPES)]
    pe_locks = [[threading.Lock() for _ in range(_STRIPES)] for _ in range(cfg.n_pes)]

    run = _Run(cfg, plan, n)
    deadline = t0 + cfg.timeout
    backoff = cfg.spin_backoff

    def worker(pe: int, lane: int):
        comps = _worker_components(plan, pe, lane, cfg.workers_per_pe)
        stats = run.stats[pe][lane]
        my_d_in = d_in[pe]
        my_d_ls = d_ls[pe]
        my_locks = pe_locks[pe]

        # Phase 1: per-entry counting of every stored entry in owned columns.
        for j in comps:
            lk = shared_locks[j & _MASK]
            lk.acquire()
            s_in[j] += 1
            lk.release()
            for rid in off_rows[j]:
                lk = shared_locks[rid & _MASK]
                lk.acquire()
                s_in[rid] += 1
                lk.release()
        _setup_rendezvous(run, pe)

        # Phase 2: lock-wait then solve-update, ascending order per worker.
        solved = spins = reads = local = remote = 0
        for i in comps:
            spin_i = 0
            while True:
                reads += 1
                if my_d_in[i] + 1 == s_in[i]:
                    break
                spin_i += 1
                _spin_wait_tick(run, backoff, spin_i, deadline, f"component {i} on PE {pe}")
            spins += spin_i

            xi = (bl[i] - my_d_ls[i] - s_ls[i]) / diag[i]
            x[i] = xi
            for rid, v in zip(off_rows[i], off_vals[i]):
                w = v * xi
                if owner[rid] == pe:
                    lk = my_locks[rid & _MASK]
                    lk.acquire()
                    my_d_ls[rid] += w
                    my_d_in[rid] += 1
                    lk.release()
                    local += 1
                else:
                    lk = shared_locks[rid & _MASK]
                    lk.acquire()
                    # Sum before counter: observers of the counter must
                    # see the contribution it accounts for.
                    s_ls[rid] += w
                    s_in[rid] -= 1
                    lk.release()
                    remote += 1
            solved += 1
        stats.components_solved = solved
        stats.lock_wait_spins = spins
        stats.remote_reads_issued = reads
        stats.local_updates = local
        stats.remote_updates = remote

    threads = _make_team(run, worker, lambda pe, lane: (pe, lane))
    _launch_and_join(run, threads, t0)
    t_end = time.perf_counter()

    state = None
    if cfg.capture_state:
        din, dls = _merged_d_arrays(plan, d_in, d_ls)
        state = EngineState(
            s_in_degree=[np.array(s_in, dtype=np.int64)],
            s_left_sum=[np.array(s_ls)],
            d_in_degree=din,
            d_left_sum=dls,
        )
    xv = np.array(x)
    report = SolveReport(
        x=xv,
        wall_time=t_end - t0,
        setup_time=run.setup_done_at - t0,
        solve_time=t_end - run.setup_done_at,
        engine=Engine.SHARED_ATOMICS,
        n_pes=cfg.n_pes,
        per_pe=_merge_stats(run),
        state=state,
    )
    return xv, report


# --------------------------------------------------------------------------
# Partitioned read-only-communication engine
# --------------------------------------------------------------------------

def solve_partitioned(
    l: CscMatrix, b, plan: PartitionPlan, cfg: SolverConfig
) -> tuple[np.ndarray, SolveReport]:
    """Solve with per-PE published segments and owner-only writes."""
    b = _check_inputs(l, b, plan, cfg, Engine.PARTITIONED_READ_ONLY)
    n = l.n
    n_pes = cfg.n_pes
    t0 = time.perf_counter()
    diag, off_rows, off_vals = column_lists(l)
    bl = b.tolist()
    owner = plan.owner_arr.tolist()

    def _published(pe: int, fill):
        data = [fill] * n
        return _OwnedList(data, pe) if cfg.debug else data

    s_in_all = [_published(p, 0) for p in range(n_pes)]
    s_ls_all = [_published(p, 0.0) for p in range(n_pes)]
    d_in = [[0] * n for _ in range(n_pes)]
    d_ls = [[0.0] * n for _ in range(n_pes)]
    x = [0.0] * n

    pe_locks = [[threading.Lock() for _ in range(_STRIPES)] for _ in range(n_pes)]

    run = _Run(cfg, plan, n)
    deadline = t0 + cfg.timeout
    backoff = cfg.spin_backoff
    caching = cfg.remote_read_caching
    debug = cfg.debug

    def worker(pe: int, lane: int):
        comps = _worker_components(plan, pe, lane, cfg.workers_per_pe)
        stats = run.stats[pe][lane]
        my_s_in = s_in_all[pe]
        my_s_ls = s_ls_all[pe]
        my_d_in = d_in[pe]
        my_d_ls = d_ls[pe]
        my_locks = pe_locks[pe]
        pes = range(n_pes)

        # Phase 1: build this PE's own published counters from its owned
        # columns only; no cross-PE traffic here.
        for j in comps:
            lk = my_locks[j & _MASK]
            lk.acquire()
            my_s_in[j] += 1
            lk.release()
            for rid in off_rows[j]:
                lk = my_locks[rid & _MASK]
                lk.acquire()
                my_s_in[rid] += 1
                lk.release()
        _setup_rendezvous(run, pe)

        # Phase 2.
        solved = spins = issued = skipped = local = remote = 0
        cache = [0] * n_pes
        for i in comps:
            spin_i = 0
            first = True
            while True:
                total = 0
                for q in pes:
                    if not first and q != pe and caching and cache[q] == 0:
                        # Counters never rise after setup, so a read zero
                        # is final; skip the remote read (it adds nothing
                        # to the reduction either).
                        skipped += 1
                        continue
                    v = s_in_all[q][i]
                    if q != pe:
                        issued += 1
                    if debug and not first and v > cache[q]:
                        raise AssertionError(
                            f"published counter rose: PE {q} component {i}: {cache[q]} -> {v}"
                        )
                    cache[q] = v
                    total += v
                first = False
                if my_d_in[i] + 1 == total:
                    break
                spin_i += 1
                _spin_wait_tick(run, backoff, spin_i, deadline, f"component {i} on PE {pe}")
            spins += spin_i

            gathered = []
            for q in pes:
                gathered.append(s_ls_all[q][i])
                if q != pe:
                    issued += 1
            x_left = reduce_contributions(gathered)

            xi = (bl[i] - my_d_ls[i] - x_left) / diag[i]
            x[i] = xi
            for rid, v in zip(off_rows[i], off_vals[i]):
                w = v * xi
                if owner[rid] == pe:
                    lk = my_locks[rid & _MASK]
                    lk.acquire()
                    my_d_ls[rid] += w
                    my_d_in[rid] += 1
                    lk.release()
                    local += 1
                else:
                    lk = my_locks[rid & _MASK]
                    lk.acquire()
                    # Owner-only write to this PE's own published pair;
                    # sum lands before the counter drops.
                    my_s_ls[rid] += w
                    my_s_in[rid] -= 1
                    lk.release()
                    remote += 1
            solved += 1
        stats.components_solved = solved
        stats.lock_wait_spins = spins
        stats.remote_reads_issued = issued
        stats.remote_reads_skipped = skipped
        stats.local_updates = local
        stats.remote_updates = remote

    threads = _make_team(run, worker, lambda pe, lane: (pe, lane))
    _launch_and_join(run, threads, t0)
    t_end = time.perf_counter()

    state = None
    if cfg.capture_state:
        din, dls = _merged_d_arrays(plan, d_in, d_ls)
        state = EngineState(
            s_in_degree=[np.array(seg, dtype=np.int64) for seg in s_in_all],
            s_left_sum=[np.array(seg) for seg in s_ls_all],
            d_in_degree=din,
            d_left_sum=dls,
        )
    xv = np.array(x)
    report = SolveReport(
        x=xv,
        wall_time=t_end - t0,
        setup_time=run.setup_done_at - t0,
        solve_time=t_end - run.setup_done_at,
        engine=Engine.PARTITIONED_READ_ONLY,
        n_pes=cfg.n_pes,
        per_pe=_merge_stats(run),
        state=state,
    )
    return xv, report


def solve(l: CscMatrix, b, plan: PartitionPlan, cfg: SolverConfig):
    """Dispatch to the engine selected by ``cfg.engine``."""
    if cfg.engine is Engine.SHARED_ATOMICS:
        return solve_shared_atomics(l, b, plan, cfg)
    return solve_partitioned(l, b, plan, cfg)
