"""Probability mass functions, integer allocations and information measures.

All logarithms are natural (nats). ``0 * log 0`` is taken as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import (
    AbsoluteContinuityViolation,
    Empty,
    InvalidAllocation,
    LengthMismatch,
    NegativeEntry,
    SumOutOfTolerance,
)

DEFAULT_TOLERANCE = 1e-9


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Pmf:
    """A probability vector. Build it through :func:`validate_pmf`."""

    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen_array(self.probs))

    def __len__(self):
        return len(self.probs)

    def __eq__(self, other):
        if not isinstance(other, Pmf):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __repr__(self):
        return f"Pmf({self.probs.tolist()})"


@dataclass(frozen=True)
class Allocation:
    """Non-negative integer counts summing to ``denominator``."""

    counts: tuple
    denominator: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        object.__setattr__(self, "counts", counts)
        if not counts:
            raise Empty("allocation has no entries")
        if self.denominator < 1:
            raise InvalidAllocation("denominator must be positive", denominator=self.denominator)
        if any(c < 0 for c in counts):
            raise InvalidAllocation("counts must be non-negative", counts=list(counts))
        if sum(counts) != self.denominator:
            raise InvalidAllocation(
                "counts must sum to the denominator",
                counts=list(counts),
                denominator=self.denominator,
            )

    def __len__(self):
        return len(self.counts)


@dataclass(frozen=True)
class MTypePmf:
    """The pmf ``counts / M`` of an :class:`Allocation`."""

    allocation: Allocation

    @classmethod
    def from_counts(cls, counts: Sequence[int]) -> "MTypePmf":
        counts = tuple(int(c) for c in counts)
        return cls(Allocation(counts, sum(counts)))

    @property
    def counts(self) -> tuple:
        return self.allocation.counts

    @property
    def M(self) -> int:
        return self.allocation.denominator

    @property
    def probs(self) -> np.ndarray:
        return _frozen_array([c / self.M for c in self.counts])

    def fractions(self) -> list:
        """Exact rational probabilities; they sum to exactly 1."""
        return [Fraction(c, self.M) for c in self.counts]

    def as_pmf(self) -> Pmf:
        return Pmf(self.probs)

    def __len__(self):
        return len(self.counts)


PmfLike = Union[Pmf, MTypePmf]


def probabilities(p) -> np.ndarray:
    """Return the probability vector of a Pmf, MTypePmf or raw sequence."""
    if isinstance(p, (Pmf, MTypePmf)):
        return p.probs
    return np.asarray(p, dtype=np.float64)


def validate_pmf(raw: Sequence[float], tolerance: float = DEFAULT_TOLERANCE) -> Pmf:
    """Check ``raw`` is a probability vector and renormalize it to unit sum.

    Raises Empty, NegativeEntry or SumOutOfTolerance.
    """
    values = np.asarray(raw, dtype=np.float64).ravel()
    if values.size == 0:
        raise Empty("pmf has no entries")
    if not np.all(np.isfinite(values)):
        raise NegativeEntry("pmf entries must be finite", entries=values.tolist())
    negative = np.flatnonzero(values < 0)
    if negative.size:
        raise NegativeEntry(
            "pmf has negative entries", indices=negative.tolist(), values=values[negative].tolist()
        )
    total = math.fsum(values)
    if abs(total - 1.0) > tolerance:
        raise SumOutOfTolerance(
            "pmf entries do not sum to 1", total=total, tolerance=tolerance
        )
    return Pmf(values / total)


def cdf(t: PmfLike) -> np.ndarray:
    """Cumulative sums ``T_1..T_n`` with compensated summation and ``T_n = 1``."""
    probs = probabilities(t)
    out = np.empty(len(probs))
    total = 0.0
    comp = 0.0
    for i, p in enumerate(probs):
        # Neumaier summation
        s = total + p
        if abs(total) >= abs(p):
            comp += (total - s) + p
        else:
            comp += (p - s) + total
        total = s
        out[i] = total + comp
    # rounding must not make the cdf decrease at zero entries
    np.maximum.accumulate(out, out=out)
    out = np.minimum(out, 1.0)
    out[-1] = 1.0
    return out


def support_violation(d: PmfLike, t: PmfLike) -> bool:
    """True when ``d`` puts mass where ``t`` has none (divergence is infinite)."""
    dp, tp = probabilities(d), probabilities(t)
    if len(dp) != len(tp):
        raise LengthMismatch("pmfs differ in length", len_d=len(dp), len_t=len(tp))
    return bool(np.any((dp > 0) & (tp <= 0)))


def kl_divergence(d: PmfLike, t: PmfLike) -> float:
    """Relative entropy D(d||t) in nats.

    Returns ``math.inf`` when ``d`` is not absolutely continuous with respect
    to ``t``; :func:`support_violation` tells that case apart.
    """
    dp, tp = probabilities(d), probabilities(t)
    if len(dp) != len(tp):
        raise LengthMismatch("pmfs differ in length", len_d=len(dp), len_t=len(tp))
    if support_violation(dp, tp):
        return math.inf
    mask = dp > 0
    # difference of logs: the ratio overflows when t_i is subnormal
    terms = dp[mask] * (np.log(dp[mask]) - np.log(tp[mask]))
    return math.fsum(terms)


def entropy(p: PmfLike) -> float:
    probs = probabilities(p)
    nz = probs[probs > 0]
    return max(0.0, -math.fsum(nz * np.log(nz)))


def require_support(d: PmfLike, t: PmfLike) -> None:
    """Raise AbsoluteContinuityViolation when ``d`` is not supported by ``t``."""
    if support_violation(d, t):
        dp, tp = probabilities(d), probabilities(t)
        bad = np.flatnonzero((dp > 0) & (tp <= 0))
        raise AbsoluteContinuityViolation(
            "positive mass on a symbol with zero target probability", indices=bad.tolist()
        )
