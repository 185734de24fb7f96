"""CDF-midpoint quantization of a pmf to an M-type pmf."""

from __future__ import annotations

import numpy as np

from .distcore import Allocation, MTypePmf, PmfLike, cdf, probabilities


def quantize(t: PmfLike, M: int) -> MTypePmf:
    """Quantize ``t`` to denominator ``M``.

    Symbol ``i`` receives one count for every midpoint ``(l - 1/2) / M``,
    ``l = 1..M``, lying in the left-open interval ``(T_{i-1}, T_i]`` of the
    cumulative distribution. Symbols with zero probability get zero counts
    and every count is within one of ``M * t_i``.
    """
    if M < 1:
        raise ValueError("M must be a positive integer")
    boundaries = cdf(t)
    midpoints = (np.arange(1, M + 1) - 0.5) / M
    # midpoints <= T_i, closed on the right
    below = np.searchsorted(midpoints, boundaries, side="right")
    counts = np.diff(below, prepend=0)
    return MTypePmf(Allocation(tuple(counts.tolist()), M))


def convergence_bound(t: PmfLike, M: int) -> float:
    """Upper bound ``1 / (M * min positive t_j)`` on the quantizer's divergence."""
    if M < 1:
        raise ValueError("M must be a positive integer")
    probs = probabilities(t)
    smallest = probs[probs > 0].min()
    return 1.0 / (float(smallest) * M)
