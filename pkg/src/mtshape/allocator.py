"""Relative-entropy optimal M-type approximation and symbol mappings.

The objective ``sum_i c_i log(c_i / t_i)`` telescopes into per-symbol
increments ``Delta_i(k)``. Because each increment sequence is strictly
increasing in ``k``, repeatedly spending one count on the symbol with the
cheapest next increment yields an optimal allocation.
"""

from __future__ import annotations

import heapq
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .distcore import Allocation, MTypePmf, PmfLike, probabilities, require_support
from .errors import InvalidAllocation, LengthMismatch, SearchSpaceTooLarge

EXHAUSTIVE_CAP = 10**7


def increment(t_i: float, k: int) -> float:
    """Cost ``k log(k/t_i) - (k-1) log((k-1)/t_i)`` of raising a count to ``k``."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if k == 1:
        return -math.log(t_i)
    # rewritten to avoid cancellation between the two large terms
    return math.log(k / t_i) + (k - 1) * math.log1p(1.0 / (k - 1))


def objective(c, t: PmfLike) -> float:
    """``sum over c_i > 0 of c_i log(c_i / t_i)``."""
    counts = c.counts if isinstance(c, (Allocation, MTypePmf)) else tuple(c)
    tp = probabilities(t)
    if len(counts) != len(tp):
        raise LengthMismatch("allocation and pmf differ in length", len_c=len(counts), len_t=len(tp))
    require_support(np.asarray(counts, dtype=float), tp)
    return math.fsum(ci * math.log(ci / ti) for ci, ti in zip(counts, tp) if ci > 0)


def _check_args(t: PmfLike, M: int) -> np.ndarray:
    if M < 1:
        raise ValueError("M must be a positive integer")
    tp = probabilities(t)
    if not np.any(tp > 0):
        raise InvalidAllocation("target has no positive entry")
    return tp


def allocate_greedy(t: PmfLike, M: int) -> MTypePmf:
    """Optimal M-type approximation of ``t`` under relative entropy.

    Uses a binary heap keyed on ``(next increment, index)``, so among equal
    increments the lowest index is served first. O(n + M log n).
    """
    tp = _check_args(t, M)
    counts = [0] * len(tp)
    heap = [(increment(ti, 1), i) for i, ti in enumerate(tp) if ti > 0]
    heapq.heapify(heap)
    for _ in range(M):
        _, j = heap[0]
        counts[j] += 1
        heapq.heapreplace(heap, (increment(tp[j], counts[j] + 1), j))
    return MTypePmf(Allocation(tuple(counts), M))


def allocate_greedy_scan(t: PmfLike, M: int) -> MTypePmf:
    """Reference O(nM) version of :func:`allocate_greedy` using a linear argmin."""
    tp = _check_args(t, M)
    counts = [0] * len(tp)
    candidates = [i for i, ti in enumerate(tp) if ti > 0]
    for _ in range(M):
        best, best_cost = None, math.inf
        for i in candidates:
            cost = increment(tp[i], counts[i] + 1)
            if cost < best_cost:
                best, best_cost = i, cost
        counts[best] += 1
    return MTypePmf(Allocation(tuple(counts), M))


def _compositions(M: int, n: int):
    """All n-tuples of non-negative ints summing to M, in lexicographic order."""
    # stars and bars: bar positions in increasing order give lexicographic counts
    for bars in itertools.combinations(range(M + n - 1), n - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(M + n - 2 - prev)
        yield tuple(parts)


def allocate_exhaustive(t: PmfLike, M: int, cap: int = EXHAUSTIVE_CAP) -> MTypePmf:
    """Brute-force minimizer of the objective over every allocation.

    Ties resolve to the lexicographically smallest allocation.
    """
    tp = _check_args(t, M)
    n = len(tp)
    size = math.comb(M + n - 1, n - 1)
    if size > cap:
        raise SearchSpaceTooLarge(
            "too many allocations to enumerate", compositions=size, cap=cap
        )
    logs = [math.log(ti) if ti > 0 else None for ti in tp]
    best, best_value = None, math.inf
    for counts in _compositions(M, n):
        value = 0.0
        for ci, lt in zip(counts, logs):
            if ci == 0:
                continue
            if lt is None:
                value = math.inf
                break
            value += ci * (math.log(ci) - lt)
        if value < best_value:
            best, best_value = counts, value
    return MTypePmf(Allocation(best, M))


@dataclass(frozen=True)
class SymbolMapping:
    """Deterministic many-to-one map from ``{0..M-1}`` to symbol indices."""

    table: tuple

    @property
    def M(self) -> int:
        return len(self.table)

    def multiplicities(self, n: int) -> tuple:
        out = [0] * n
        for s in self.table:
            out[s] += 1
        return tuple(out)

    def to_dict(self) -> dict:
        return {"M": self.M, "table": list(self.table)}

    @classmethod
    def from_dict(cls, data: dict) -> "SymbolMapping":
        table = tuple(int(s) for s in data["table"])
        if len(table) != int(data["M"]):
            raise InvalidAllocation("table length differs from M", M=data["M"], length=len(table))
        return cls(table)


def synthesize_mapping(d: MTypePmf) -> SymbolMapping:
    """Canonical sorted table: the first ``c_0`` inputs map to 0, and so on."""
    table = []
    for i, c in enumerate(d.counts):
        table.extend([i] * c)
    return SymbolMapping(tuple(table))
