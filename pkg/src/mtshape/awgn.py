"""Probabilistic shaping for the real AWGN channel with unit noise variance.

Equidistant constellations carry a capacity-achieving pmf found by a
power-constrained Blahut-Arimoto iteration. That pmf is then replaced by its
best ``2**m``-type approximation, and the constellation is rescaled to unit
power. All rates are in nats.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import logsumexp

from .allocator import allocate_greedy
from .distcore import MTypePmf, Pmf, PmfLike, kl_divergence, probabilities, validate_pmf
from .errors import InfeasiblePower, LengthMismatch, NonPositiveSnr, ZeroPower
from .quantizer import convergence_bound

HALF_LOG_2PIE = 0.5 * math.log(2 * math.pi * math.e)

DEFAULT_STEP = 0.01
DEFAULT_HALF_WIDTH = 10.0
# Blahut-Arimoto kernel resolution; the trapezoid rule on Gaussian mixtures
# is accurate to ~1e-12 already at this step, see test_awgn
KERNEL_STEP = 0.05

BA_TOLERANCE = 1e-9
BA_MAX_ITER = 10_000

WORKERS_ENV = "MTSHAPE_WORKERS"

# quadrature noise level; a zero-padded larger constellation can otherwise
# beat an identical smaller one by rounding alone
SELECTION_TIE = 1e-12


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def linear_to_db(snr: float) -> float:
    return 10.0 * math.log10(snr)


def _check_snr(snr: float) -> None:
    if not snr > 0:
        raise NonPositiveSnr("snr must be positive", snr=snr)


def capacity(snr: float) -> float:
    """Shannon capacity ``0.5 log(1 + snr)`` in nats."""
    _check_snr(snr)
    return 0.5 * math.log1p(snr)


def canonical_points(k: int) -> np.ndarray:
    """``k`` equidistant points centered at 0 with unit power under the uniform pmf."""
    if k < 1:
        raise ValueError("k must be positive")
    if k == 1:
        return np.zeros(1)
    # variance of a unit-spaced uniform grid is (k^2 - 1) / 12
    spacing = math.sqrt(12.0 / (k * k - 1))
    return spacing * (np.arange(k) - (k - 1) / 2.0)


@dataclass(frozen=True, eq=False)
class Constellation:
    size: int
    base_points: np.ndarray
    spacing_scale: float = 1.0

    @classmethod
    def canonical(cls, k: int, spacing_scale: float = 1.0) -> "Constellation":
        if k < 2:
            raise ValueError("a constellation needs at least two points")
        return cls(k, canonical_points(k), spacing_scale)

    @property
    def points(self) -> np.ndarray:
        return self.spacing_scale * self.base_points


@dataclass(frozen=True)
class ChannelSpec:
    snr: float

    def __post_init__(self):
        _check_snr(self.snr)

    @classmethod
    def from_db(cls, snr_db: float) -> "ChannelSpec":
        return cls(db_to_linear(snr_db))


def output_grid(means: np.ndarray, step: float, half_width: float) -> np.ndarray:
    """Uniform grid symmetric about 0 covering ``[min - R, max + R]``."""
    reach = float(np.max(np.abs(means))) + half_width
    n = int(math.ceil(reach / step))
    return step * np.arange(-n, n + 1)


def _trapezoid_weights(size: int, step: float) -> np.ndarray:
    w = np.full(size, step)
    w[0] = w[-1] = 0.5 * step
    return w


def _log_gauss(y: np.ndarray, means: np.ndarray) -> np.ndarray:
    diff = y[None, :] - means[:, None]
    return -0.5 * diff * diff - 0.5 * math.log(2 * math.pi)


def output_entropy(means, weights, step=DEFAULT_STEP, half_width=DEFAULT_HALF_WIDTH) -> float:
    """Differential entropy of a unit-variance Gaussian mixture (trapezoid rule)."""
    means = np.asarray(means, dtype=float)
    weights = np.asarray(weights, dtype=float)
    keep = weights > 0
    means, weights = means[keep], weights[keep]
    y = output_grid(means, step, half_width)
    log_f = logsumexp(_log_gauss(y, means) + np.log(weights)[:, None], axis=0)
    f = np.exp(log_f)
    return -float(np.dot(_trapezoid_weights(len(y), step), f * log_f))


def mutual_information(
    points,
    pmf: PmfLike,
    snr: float,
    step: float = DEFAULT_STEP,
    half_width: float = DEFAULT_HALF_WIDTH,
    check: bool = False,
    check_tolerance: float = 1e-6,
) -> float:
    """``I(X sqrt(snr); X sqrt(snr) + N)`` for ``X ~ pmf`` on ``points``.

    Computed as ``h(Y) - 0.5 log(2 pi e)``. With ``check=True`` the integral
    is repeated at half the step and a warning is issued when the two results
    differ by more than ``check_tolerance``.
    """
    _check_snr(snr)
    points = np.asarray(points, dtype=float)
    probs = probabilities(pmf)
    if len(points) != len(probs):
        raise LengthMismatch("points and pmf differ in length", points=len(points), pmf=len(probs))
    means = points * math.sqrt(snr)
    value = output_entropy(means, probs, step, half_width) - HALF_LOG_2PIE
    if check:
        finer = output_entropy(means, probs, step / 2, half_width) - HALF_LOG_2PIE
        if abs(finer - value) > check_tolerance:
            warnings.warn(
                f"mutual information not converged in step: {value!r} vs {finer!r}",
                RuntimeWarning,
            )
        value = finer
    return value


# --------------------------------------------------------------------------
# Power-constrained Blahut-Arimoto


class _Kernel:
    """Row-normalized discretized Gaussian channel for fixed signal points."""

    def __init__(self, means: np.ndarray, step: float, half_width: float):
        y = output_grid(means, step, half_width)
        log_w = _log_gauss(y, means) + math.log(step)
        log_w -= logsumexp(log_w, axis=1)[:, None]
        self.W = np.exp(log_w)
        self.neg_entropy = np.sum(self.W * log_w, axis=1)

    def divergences(self, p: np.ndarray) -> np.ndarray:
        """``D(W_i || q)`` for every input ``i`` where ``q = p W``."""
        q = p @ self.W
        log_q = np.log(np.maximum(q, 1e-300))
        return self.neg_entropy - self.W @ log_q


def _tilt(logits: np.ndarray, cost: np.ndarray, budget: float, s0: float = 0.0):
    """Return ``(p, s)`` with ``p ∝ exp(logits - s cost)`` and ``E_p[cost] <= budget``.

    ``s >= 0`` is the smallest multiplier meeting the budget. It is found by
    Newton steps warm-started at ``s0`` and kept inside a bisection bracket.
    """
    cheapest = cost.min()
    if budget < cheapest:
        raise InfeasiblePower("power budget below the cheapest point", budget=budget)

    def at(s):
        z = logits - s * cost
        w = np.exp(z - z.max())
        p = w / w.sum()
        mean = float(p @ cost)
        return p, mean, float(p @ (cost * cost)) - mean * mean

    if budget <= cheapest * (1 + 1e-12) and np.any(cost > budget):
        # only the cheapest points are affordable (the s -> inf limit)
        z = np.where(cost == cheapest, logits, -np.inf)
        w = np.exp(z - z.max())
        return w / w.sum(), math.inf
    s = max(s0, 0.0) if math.isfinite(s0) else 0.0
    p, mean, var = at(s)
    if mean <= budget and s == 0.0:
        return p, 0.0
    lo, hi = 0.0, math.inf
    for _ in range(200):
        if mean > budget:
            lo = s
        else:
            hi = s
        if abs(mean - budget) <= 1e-15 * budget or hi - lo <= 1e-15 * hi < math.inf:
            break
        if hi == 0.0:
            break
        step = (mean - budget) / var if var > 0 else math.inf
        nxt = s + step
        if not lo < nxt < hi:
            nxt = 0.5 * (lo + hi) if hi < math.inf else 2.0 * max(s, 1.0)
        if mean <= budget and nxt <= 0.0:
            nxt = 0.0
        s = nxt
        p, mean, var = at(s)
        if s == 0.0 and mean <= budget:
            break
    return p, s


def _symmetrize(p: np.ndarray) -> np.ndarray:
    return 0.5 * (p + p[::-1])


@dataclass
class BlahutArimotoResult:
    pmf: np.ndarray
    mutual_info: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)


def blahut_arimoto(
    points,
    snr: float,
    max_power: float = 1.0,
    init: Optional[np.ndarray] = None,
    step: float = KERNEL_STEP,
    half_width: float = DEFAULT_HALF_WIDTH,
    tolerance: float = BA_TOLERANCE,
    max_iter: int = BA_MAX_ITER,
    symmetric: bool = True,
    keep_trace: bool = False,
) -> BlahutArimotoResult:
    """Capacity-achieving pmf on fixed ``points`` subject to ``E[X^2] <= max_power``.

    Alternates the closed-form pmf update ``p_i <- p_i exp(D_i - s x_i^2)``
    with a search for the multiplier ``s`` meeting the power constraint. The
    objective ``I(p)`` is non-decreasing; iteration stops once the gain drops
    below ``tolerance``. ``trace`` lists the objective of every accepted
    iterate; a final iterate that does not improve is discarded.
    """
    _check_snr(snr)
    points = np.asarray(points, dtype=float)
    cost = points * points
    if cost.min() > max_power:
        raise InfeasiblePower("no pmf on these points meets the power constraint",
                              min_power=float(cost.min()), max_power=max_power)
    kernel = _Kernel(points * math.sqrt(snr), step, half_width)
    k = len(points)
    start = np.full(k, 1.0 / k) if init is None else np.asarray(init, dtype=float)
    with np.errstate(divide="ignore"):
        p, s = _tilt(np.log(start), cost, max_power)
    if symmetric:
        p = _symmetrize(p)

    trace = []
    previous = -math.inf
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        D = kernel.divergences(p)
        value = float(p @ D)
        if value - previous < tolerance:
            converged = True
            if value < previous:
                # rounding-level regression at the fixed point; reject it
                p, value = best, previous
            elif keep_trace:
                trace.append(value)
            break
        if keep_trace:
            trace.append(value)
        best, previous = p, value
        with np.errstate(divide="ignore"):
            p, s = _tilt(np.log(p) + D, cost, max_power, s)
        if symmetric:
            p = _symmetrize(p)
    else:
        value = previous
        p = best
    return BlahutArimotoResult(p, value, it, converged, trace)


def default_spacing_grid() -> np.ndarray:
    return np.geomspace(0.05, 5.0, 200)


def _max_feasible_scale(base_points: np.ndarray, max_power: float) -> float:
    smallest = float(np.min(base_points**2))
    return math.inf if smallest == 0 else math.sqrt(max_power / smallest)


@dataclass
class CapacityResult:
    pmf: Pmf
    spacing: float
    mutual_info: float
    converged: bool = True
    iterations: int = 0
    traces: Optional[list] = None


def capacity_pmf(
    k: int,
    snr: float,
    spacing_grid: Optional[Sequence[float]] = None,
    refine: int = 50,
    max_power: float = 1.0,
    step: float = KERNEL_STEP,
    half_width: float = DEFAULT_HALF_WIDTH,
    tolerance: float = BA_TOLERANCE,
    max_iter: int = BA_MAX_ITER,
    keep_traces: bool = False,
) -> CapacityResult:
    """Best pmf and spacing scale for ``k`` canonical equidistant points.

    Every scale in ``spacing_grid`` (default: 200 geometric values in
    ``[0.05, 5]``) gets a Blahut-Arimoto solve; the best scale is refined with
    ``refine`` linear steps between its neighbours. Scales at which no pmf
    meets the power constraint are skipped; for even ``k`` the largest
    feasible scale is added to the grid. ``keep_traces`` stores the objective
    trace of every solve.
    """
    _check_snr(snr)
    if k < 2:
        raise ValueError("k must be at least 2")
    base = canonical_points(k)
    grid = np.sort(np.asarray(default_spacing_grid() if spacing_grid is None else spacing_grid, float))
    if grid.size == 0 or np.any(grid <= 0):
        raise ValueError("spacing grid must be non-empty and positive")
    limit = _max_feasible_scale(base, max_power)
    if grid[0] > limit:
        raise InfeasiblePower("smallest spacing in the grid is infeasible", spacing=float(grid[0]), limit=limit)
    if grid[-1] > limit:
        grid = np.append(grid[grid < limit], limit)

    def sweep(values, warm):
        results = []
        for delta in values:
            res = blahut_arimoto(delta * base, snr, max_power, init=warm, step=step,
                                 half_width=half_width, tolerance=tolerance, max_iter=max_iter,
                                 keep_trace=keep_traces)
            results.append(res)
            warm = res.pmf
        return results

    coarse = sweep(grid, None)
    best = max(range(len(grid)), key=lambda i: (coarse[i].mutual_info, -i))
    candidates = list(zip(grid, coarse))
    if refine > 0 and len(grid) > 1:
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, len(grid) - 1)]
        fine = np.linspace(lo, hi, refine + 2)[1:-1]
        start = max(best - 1, 0)
        candidates += list(zip(fine, sweep(fine, coarse[start].pmf)))
    delta, res = max(candidates, key=lambda c: (c[1].mutual_info, -c[0]))
    if not res.converged:
        warnings.warn(f"Blahut-Arimoto hit the iteration cap for k={k}", RuntimeWarning)
    traces = [r.trace for _, r in candidates] if keep_traces else None
    return CapacityResult(validate_pmf(res.pmf, 1e-9), float(delta), res.mutual_info,
                          res.converged, res.iterations, traces)


# --------------------------------------------------------------------------
# CLT baseline and the full design loop


def clt_pmf(m: int) -> MTypePmf:
    """Binomial counts ``C(m, i)`` over ``m + 1`` points with denominator ``2**m``."""
    if m < 1:
        raise ValueError("m must be positive")
    return MTypePmf.from_counts([math.comb(m, i) for i in range(m + 1)])


def rescale_power(base_points, d: PmfLike, max_power: float = 1.0) -> float:
    """Scale ``Delta`` with ``E_d[(Delta X)^2] = max_power``."""
    x = np.asarray(base_points, dtype=float)
    probs = probabilities(d)
    power = math.fsum(probs * x * x)
    if power <= 0:
        raise ZeroPower("all probability mass sits on the zero point")
    return math.sqrt(max_power / power)


def clt_gap(m: int, snr: float, step: float = DEFAULT_STEP) -> float:
    d = clt_pmf(m)
    base = canonical_points(m + 1)
    delta = rescale_power(base, d)
    return capacity(snr) - mutual_information(delta * base, d, snr, step=step)


@dataclass
class KRecord:
    k: int
    target_pmf: Pmf
    target_spacing: float
    target_mutual_info: float
    target_gap: float
    mtype_pmf: MTypePmf
    rescaled_spacing: float
    mutual_info: float
    gap: float
    kl_to_target: float

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "target_pmf": self.target_pmf.probs.tolist(),
            "target_spacing": self.target_spacing,
            "target_mutual_info_nats": self.target_mutual_info,
            "target_gap_nats": self.target_gap,
            "mtype_counts": list(self.mtype_pmf.counts),
            "M": self.mtype_pmf.M,
            "rescaled_spacing": self.rescaled_spacing,
            "mutual_info_nats": self.mutual_info,
            "gap_nats": self.gap,
            "kl_to_target_nats": self.kl_to_target,
        }


@dataclass
class ShapingDesign:
    m: int
    snr: float
    chosen_k: int
    target_pmf: Pmf
    target_spacing: float
    mtype_pmf: MTypePmf
    rescaled_spacing: float
    mutual_info: float
    gap: float
    per_k_records: list

    @property
    def chosen(self) -> KRecord:
        return self.per_k_records[self.chosen_k - 2]

    @property
    def points(self) -> np.ndarray:
        return self.rescaled_spacing * canonical_points(self.chosen_k)

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "snr_db": linear_to_db(self.snr),
            "chosen_k": self.chosen_k,
            "target_pmf": self.target_pmf.probs.tolist(),
            "target_spacing": self.target_spacing,
            "mtype_counts": list(self.mtype_pmf.counts),
            "M": self.mtype_pmf.M,
            "rescaled_spacing": self.rescaled_spacing,
            "mutual_info_nats": self.mutual_info,
            "gap_nats": self.gap,
            "per_k": [r.to_dict() for r in self.per_k_records],
        }


def _worker_count(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _capacity_job(args):
    k, snr, options = args
    return capacity_pmf(k, snr, **options)


def capacity_pmfs(ks, snr: float, workers: Optional[int] = None, **options) -> dict:
    """:func:`capacity_pmf` for several sizes, possibly in parallel; keyed by ``k``."""
    ks = list(ks)
    jobs = [(k, snr, options) for k in ks]
    n = min(_worker_count(workers), len(jobs))
    if n <= 1:
        results = [_capacity_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(n) as pool:
            results = list(pool.map(_capacity_job, jobs))
    return dict(zip(ks, results))


def design_record(k: int, target: CapacityResult, M: int, snr: float,
                  step: float = DEFAULT_STEP) -> KRecord:
    """Steps 3 and 4 of the design for one constellation size."""
    base = canonical_points(k)
    cap = capacity(snr)
    target_mi = mutual_information(target.spacing * base, target.pmf, snr, step=step)
    d = allocate_greedy(target.pmf, M)
    delta = rescale_power(base, d)
    mi = mutual_information(delta * base, d, snr, step=step)
    return KRecord(
        k=k,
        target_pmf=target.pmf,
        target_spacing=target.spacing,
        target_mutual_info=target_mi,
        target_gap=cap - target_mi,
        mtype_pmf=d,
        rescaled_spacing=delta,
        mutual_info=mi,
        gap=cap - mi,
        kl_to_target=kl_divergence(d, target.pmf),
    )


def design_shaping(
    m: int,
    snr: float,
    spacing_grid: Optional[Sequence[float]] = None,
    targets: Optional[dict] = None,
    workers: Optional[int] = None,
    step: float = DEFAULT_STEP,
    **options,
) -> ShapingDesign:
    """Run the shaping design for a ``2**m``-point uniform interface.

    For every ``k = 2..2**m`` the capacity-achieving pmf on ``k`` equidistant
    points is approximated by the relative-entropy optimal ``2**m``-type pmf,
    the constellation is rescaled to unit power and the resulting mutual
    information is evaluated. The size with the greatest mutual information
    wins; sizes within ``SELECTION_TIE`` of the best count as tied and the
    smallest of them is taken. ``targets`` may hold precomputed
    :class:`CapacityResult` values keyed by ``k``.
    """
    if m < 1:
        raise ValueError("m must be positive")
    _check_snr(snr)
    M = 2**m
    ks = range(2, M + 1)
    targets = dict(targets or {})
    missing = [k for k in ks if k not in targets]
    if missing:
        targets.update(capacity_pmfs(missing, snr, workers, spacing_grid=spacing_grid, **options))
    records = [design_record(k, targets[k], M, snr, step) for k in ks]
    best = max(r.mutual_info for r in records)
    chosen = next(r for r in records if r.mutual_info >= best - SELECTION_TIE)
    return ShapingDesign(
        m=m,
        snr=snr,
        chosen_k=chosen.k,
        target_pmf=chosen.target_pmf,
        target_spacing=chosen.target_spacing,
        mtype_pmf=chosen.mtype_pmf,
        rescaled_spacing=chosen.rescaled_spacing,
        mutual_info=chosen.mutual_info,
        gap=chosen.gap,
        per_k_records=records,
    )


def check_bridge(record: KRecord) -> bool:
    """KL of the M-type pmf to its target stays below the quantizer bound."""
    return record.kl_to_target <= convergence_bound(record.target_pmf, record.mtype_pmf.M)
