"""Workload distribution across processing elements.

Components are grouped into contiguous tasks covering ``0..n-1``; a plan
assigns each task to a PE.  Block plans give each PE one contiguous
slab (the baseline whose tail PEs wait longest, since dependencies only
point forward); round-robin plans deal many smaller tasks to PEs so
early, highly depended-on components spread across all of them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import IndexOutOfRange, InvalidPeCount, TooManyTasks


@dataclass(frozen=True)
class TaskRange:
    """Contiguous block of components, the smallest schedulable unit."""

    task_id: int
    first: int
    last_exclusive: int
    owner_pe: int


@dataclass(frozen=True)
class PartitionPlan:
    n: int
    n_pes: int
    kind: str  # "block" | "round-robin"
    tasks_per_pe: int
    tasks: tuple[TaskRange, ...]
    owner_arr: np.ndarray = field(repr=False)

    def owner_of(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexOutOfRange(f"component {i} outside 0..{self.n - 1}")
        return int(self.owner_arr[i])

    def components_of(self, pe: int) -> list[int]:
        """PE's components in task order (ascending, since tasks are contiguous)."""
        out: list[int] = []
        for t in self.tasks:
            if t.owner_pe == pe:
                out.extend(range(t.first, t.last_exclusive))
        return out

    def to_json_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n": self.n,
            "n_pes": self.n_pes,
            "tasks": [
                {"id": t.task_id, "first": t.first, "last": t.last_exclusive, "pe": t.owner_pe}
                for t in self.tasks
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())


def _contiguous_tasks(n: int, n_tasks: int) -> list[tuple[int, int]]:
    """Split 0..n-1 into n_tasks contiguous ranges, remainder to the front."""
    base, extra = divmod(n, n_tasks)
    ranges = []
    start = 0
    for t in range(n_tasks):
        size = base + (1 if t < extra else 0)
        ranges.append((start, start + size))
        start += size
    return ranges


def _build(n: int, n_pes: int, n_tasks: int, kind: str, tasks_per_pe: int) -> PartitionPlan:
    ranges = _contiguous_tasks(n, n_tasks)
    owner = np.empty(n, dtype=np.int64)
    tasks = []
    for t, (first, last) in enumerate(ranges):
        pe = t % n_pes
        tasks.append(TaskRange(task_id=t, first=first, last_exclusive=last, owner_pe=pe))
        owner[first:last] = pe
    owner.setflags(write=False)
    return PartitionPlan(
        n=n, n_pes=n_pes, kind=kind, tasks_per_pe=tasks_per_pe, tasks=tuple(tasks), owner_arr=owner
    )


def block_partition(n: int, n_pes: int) -> PartitionPlan:
    """One contiguous range per PE, first ``n mod n_pes`` ranges larger."""
    if not 1 <= n_pes <= n:
        raise InvalidPeCount(f"need 1 <= n_pes <= {n}, got {n_pes}")
    return _build(n, n_pes, n_pes, kind="block", tasks_per_pe=1)


def task_round_robin_partition(n: int, n_pes: int, tasks_per_pe: int) -> PartitionPlan:
    """``n_pes * tasks_per_pe`` contiguous tasks dealt round-robin to PEs."""
    if n_pes < 1:
        raise InvalidPeCount(f"need n_pes >= 1, got {n_pes}")
    if tasks_per_pe < 1:
        raise TooManyTasks(f"tasks_per_pe must be >= 1, got {tasks_per_pe}")
    total = n_pes * tasks_per_pe
    if total > n:
        raise TooManyTasks(f"{total} tasks exceed {n} components")
    return _build(n, n_pes, total, kind="round-robin", tasks_per_pe=tasks_per_pe)


def owner_of(plan: PartitionPlan, i: int) -> int:
    return plan.owner_of(i)
