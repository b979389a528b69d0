"""0/1 quadratic knapsack solvers.

Maximise ``sum(p[i] x[i]) - sum_{i<j} q[i][j] x[i] x[j]`` subject to
``sum(sizes[i] x[i]) <= budget`` with binary ``x``. All discounts are
non-negative, so a set's marginal values only shrink as it grows; both the
branch-and-bound bound and the greedy stopping rule rely on that.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .core import DomainError

EXACT_THRESHOLD = 20
MAX_LOCAL_SEARCH_ITERS = 1000


@dataclass(frozen=True)
class QkpInstance:
    p: np.ndarray
    q: np.ndarray
    sizes: np.ndarray
    budget: int

    def __init__(
        self,
        p: Sequence[float],
        q: Sequence[Sequence[float]] | np.ndarray | None,
        sizes: Sequence[int],
        budget: int,
    ) -> None:
        pv = np.asarray(p, dtype=float).reshape(-1)
        n = pv.size
        qv = np.zeros((n, n)) if q is None else np.array(q, dtype=float).reshape(n, n)
        sv = np.asarray(sizes, dtype=np.int64).reshape(-1)
        if sv.size != n:
            raise DomainError(f"{n} profits but {sv.size} sizes")
        if int(budget) != budget or budget < 0:
            raise DomainError(f"budget must be a non-negative integer, got {budget!r}")
        if np.any(pv < 0):
            raise DomainError("profits must be non-negative")
        if np.any(sv <= 0):
            raise DomainError("sizes must be positive")
        if n and (np.any(qv < 0) or not np.array_equal(qv, qv.T) or np.any(np.diag(qv) != 0)):
            raise DomainError("discounts must be symmetric, non-negative, with zero diagonal")
        for arr in (pv, qv, sv):
            arr.setflags(write=False)
        object.__setattr__(self, "p", pv)
        object.__setattr__(self, "q", qv)
        object.__setattr__(self, "sizes", sv)
        object.__setattr__(self, "budget", int(budget))

    @property
    def n(self) -> int:
        return int(self.p.size)

    def objective(self, chosen: Iterable[int]) -> float:
        return kernels.qkp_objective(self.p, self.q, list(chosen))

    def size_of(self, chosen: Iterable[int]) -> int:
        return int(sum(int(self.sizes[i]) for i in chosen))

    def selection(self, chosen: Iterable[int]) -> "Selection":
        idx = tuple(sorted(int(i) for i in chosen))
        return Selection(idx, self.objective(idx), self.size_of(idx))


@dataclass(frozen=True)
class Selection:
    chosen: tuple[int, ...]
    objective: float
    total_size_bits: int


def solve_exact(inst: QkpInstance, exact_threshold: int = EXACT_THRESHOLD) -> Selection:
    """Provably optimal selection by depth-first branch and bound.

    Among optimal sets, the smaller total size wins, then the
    lexicographically smallest index tuple.
    """
    if inst.n > exact_threshold:
        raise DomainError(
            f"instance has {inst.n} items, above the exact threshold {exact_threshold}"
        )
    if inst.n == 0 or inst.budget == 0:
        return Selection((), 0.0, 0)
    chosen, _ = kernels.qkp_exact(inst.p, inst.q, inst.sizes, inst.budget)
    return inst.selection(chosen)


def solve_greedy(inst: QkpInstance) -> Selection:
    """Add the best marginal value density until nothing positive fits."""
    if inst.n == 0:
        return Selection((), 0.0, 0)
    return inst.selection(kernels.qkp_greedy(inst.p, inst.q, inst.sizes, inst.budget))


def solve_local_search(
    inst: QkpInstance, seed: Selection, max_iters: int = MAX_LOCAL_SEARCH_ITERS
) -> Selection:
    """Best-improvement hill climbing over add, drop and one-for-one swap."""
    if any(not 0 <= i < inst.n for i in seed.chosen):
        raise DomainError("seed selection refers to items outside the instance")
    if inst.size_of(seed.chosen) > inst.budget:
        raise DomainError("seed selection exceeds the budget")
    if inst.n == 0:
        return Selection((), 0.0, 0)
    chosen = kernels.qkp_local_search(
        inst.p, inst.q, inst.sizes, inst.budget, list(seed.chosen), max_iters
    )
    out = inst.selection(chosen)
    # the search only takes strict improvements, but guard against float drift
    return out if out.objective >= seed.objective else inst.selection(seed.chosen)


def solve(inst: QkpInstance, exact_threshold: int = EXACT_THRESHOLD) -> Selection:
    if inst.n <= exact_threshold:
        return solve_exact(inst, exact_threshold)
    return solve_local_search(inst, solve_greedy(inst))
