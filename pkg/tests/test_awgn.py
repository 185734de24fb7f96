import math

import numpy as np
import pytest

from mtshape.awgn import (
    Constellation,
    KERNEL_STEP,
    blahut_arimoto,
    canonical_points,
    capacity,
    capacity_pmf,
    clt_gap,
    clt_pmf,
    db_to_linear,
    design_record,
    mutual_information,
    rescale_power,
)
from mtshape.distcore import MTypePmf, entropy, validate_pmf
from mtshape.errors import InfeasiblePower, LengthMismatch, NonPositiveSnr, ZeroPower

from oracles import mi_fine_grid, simplex_grid_search

ANTIPODAL = np.array([-1.0, 1.0])
HALF = validate_pmf([0.5, 0.5])


def test_capacity_examples():
    assert capacity(1.0) == pytest.approx(0.5 * math.log(2), abs=1e-15)
    assert capacity(1e-12) == pytest.approx(0.0, abs=1e-11)
    assert capacity(10**0.5) == pytest.approx(0.7130312194526841, abs=1e-14)
    with pytest.raises(NonPositiveSnr):
        capacity(0.0)


def test_db_conversion():
    assert db_to_linear(0.0) == 1.0
    assert db_to_linear(5.0) == pytest.approx(3.1622776601683795)


@pytest.mark.parametrize("k", [2, 3, 4, 7, 64])
def test_canonical_constellation(k):
    c = Constellation.canonical(k)
    x = c.base_points
    assert np.allclose(np.diff(x), x[1] - x[0])
    assert abs(x.sum()) < 1e-12
    assert np.mean(x**2) == pytest.approx(1.0, abs=1e-14)


def test_mi_single_point_is_zero():
    assert mutual_information([0.7], [1.0], 3.0) == pytest.approx(0.0, abs=1e-12)


def test_mi_antipodal_matches_oracle():
    value = mutual_information(ANTIPODAL, HALF, 1.0)
    assert value == pytest.approx(mi_fine_grid(ANTIPODAL, HALF.probs, 1.0), abs=1e-6)


def test_mi_high_snr_tends_to_log2():
    assert mutual_information(ANTIPODAL, HALF, 1e4) == pytest.approx(math.log(2), abs=1e-3)


@pytest.mark.parametrize("k, snr", [(3, 1.0), (5, 3.0), (8, 0.5)])
def test_mi_matches_oracle_nonuniform(k, snr):
    rng = np.random.default_rng(k)
    p = validate_pmf(rng.dirichlet(np.ones(k)))
    x = canonical_points(k)
    assert mutual_information(x, p, snr) == pytest.approx(mi_fine_grid(x, p.probs, snr), abs=1e-6)


def test_kernel_step_is_fine_enough():
    x = 1.3 * canonical_points(6)
    p = validate_pmf([0.05, 0.15, 0.3, 0.3, 0.15, 0.05])
    coarse = mutual_information(x, p, 2.0, step=KERNEL_STEP)
    assert coarse == pytest.approx(mutual_information(x, p, 2.0), abs=1e-10)


def test_mi_halving_check():
    assert mutual_information(ANTIPODAL, HALF, 1.0, check=True) == pytest.approx(
        mutual_information(ANTIPODAL, HALF, 1.0), abs=1e-10
    )


def test_mi_length_mismatch():
    with pytest.raises(LengthMismatch):
        mutual_information(ANTIPODAL, [1.0], 1.0)


def test_mi_bounds():
    rng = np.random.default_rng(0)
    for _ in range(30):
        k = int(rng.integers(2, 10))
        p = validate_pmf(rng.dirichlet(np.ones(k)))
        x = canonical_points(k) * rng.uniform(0.2, 1.0)
        power = float(p.probs @ x**2)
        scale = 1 / math.sqrt(power) if power > 1 else 1.0
        x = x * scale
        snr = float(rng.uniform(0.1, 10))
        mi = mutual_information(x, p, snr)
        upper = min(entropy(p), capacity(snr * float(p.probs @ x**2)))
        assert -1e-6 <= mi <= upper + 1e-6


@pytest.mark.parametrize(
    "points, probs, expected",
    [
        ([-1, 1], [0.5, 0.5], 1.0),
        ([-1, 0, 1], [0.25, 0.5, 0.25], math.sqrt(2)),
        ([-3, 3], [0.5, 0.5], 1 / 3),
    ],
)
def test_rescale_power_examples(points, probs, expected):
    delta = rescale_power(points, probs)
    assert delta == pytest.approx(expected, rel=1e-15)
    assert float(np.dot(probs, (delta * np.array(points)) ** 2)) == pytest.approx(1.0, abs=1e-15)


def test_rescale_power_zero():
    with pytest.raises(ZeroPower):
        rescale_power([-1, 0, 1], [0, 1, 0])


@pytest.mark.parametrize(
    "m, counts", [(1, (1, 1)), (2, (1, 2, 1)), (4, (1, 4, 6, 4, 1))]
)
def test_clt_pmf(m, counts):
    d = clt_pmf(m)
    assert d.counts == counts
    assert d.M == 2**m


def test_clt_gap_m1_is_bpsk_gap():
    expected = capacity(1.0) - mi_fine_grid(ANTIPODAL, [0.5, 0.5], 1.0)
    assert clt_gap(1, 1.0) == pytest.approx(expected, abs=1e-6)


def test_clt_gap_decreasing_and_m_times_gap_bounded():
    gaps = [clt_gap(m, 1.0) for m in range(1, 7)]
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    scaled = [m * g for m, g in enumerate(gaps, 1)]
    assert max(scaled) <= 2 * scaled[0]


def test_blahut_arimoto_monotone_and_power_feasible():
    x = 1.6 * canonical_points(5)
    res = blahut_arimoto(x, 1.0, keep_trace=True)
    trace = np.array(res.trace)
    assert np.all(np.diff(trace) >= 0)
    assert float(res.pmf @ x**2) <= 1 + 1e-9
    assert np.allclose(res.pmf, res.pmf[::-1], atol=1e-12)


def test_blahut_arimoto_unconstrained_binary_is_uniform():
    res = blahut_arimoto(ANTIPODAL, 2.0, max_power=5.0)
    assert res.pmf == pytest.approx([0.5, 0.5], abs=1e-12)


def test_blahut_arimoto_infeasible():
    with pytest.raises(InfeasiblePower):
        blahut_arimoto(3 * ANTIPODAL, 1.0)


def test_capacity_pmf_binary():
    res = capacity_pmf(2, 1.0)
    assert res.pmf.probs.tolist() == pytest.approx([0.5, 0.5], abs=1e-12)
    assert float(res.pmf.probs @ (res.spacing * canonical_points(2)) ** 2) == pytest.approx(1.0, abs=1e-12)


def test_capacity_pmf_bad_grid():
    with pytest.raises(InfeasiblePower):
        capacity_pmf(2, 1.0, spacing_grid=[1.5, 2.0])


@pytest.mark.parametrize("k, snr", [(4, 1.0), (5, db_to_linear(5.0))])
def test_capacity_pmf_invariants(k, snr):
    res = capacity_pmf(k, snr, spacing_grid=np.linspace(0.8, 2.5, 18), refine=4)
    p = res.pmf.probs
    assert float(p @ (res.spacing * canonical_points(k)) ** 2) <= 1 + 1e-9
    assert np.allclose(p, p[::-1], atol=1e-6)
    assert res.converged


def test_design_record_bridge_and_power():
    target = capacity_pmf(4, 1.0, spacing_grid=np.linspace(1.0, 2.0, 11), refine=0)
    rec = design_record(4, target, 16, 1.0)
    x = rec.rescaled_spacing * canonical_points(4)
    assert float(rec.mtype_pmf.probs @ x**2) == pytest.approx(1.0, abs=1e-12)
    assert rec.gap >= -1e-9
    assert rec.kl_to_target <= 1 / (16 * target.pmf.probs.min())


def test_parallel_targets_match_serial():
    from mtshape.awgn import capacity_pmfs

    opts = dict(spacing_grid=np.linspace(0.8, 2.0, 8), refine=2)
    serial = capacity_pmfs([2, 3, 4], 1.0, workers=1, **opts)
    parallel = capacity_pmfs([2, 3, 4], 1.0, workers=2, **opts)
    for k in (2, 3, 4):
        assert serial[k].pmf.probs.tobytes() == parallel[k].pmf.probs.tobytes()
        assert serial[k].spacing == parallel[k].spacing
