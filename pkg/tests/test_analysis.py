import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from robustcz.analysis import (
    FAST_DRIFT_REFERENCE_S,
    SLOW_DRIFT_REFERENCE_S,
    channel_decompose,
    drift_to_field,
    reconstruct_phases,
    sweep_shift,
    sweep_shuttle_time,
    walsh_hadamard_transform,
    z_string_labels,
)
from robustcz.control import build_schedule
from robustcz.spin_model import AnalyticHyperfine, SpinPairParams

E_START = 3.8


# ---------------------------------------------------------------------------
# channel decomposition
# ---------------------------------------------------------------------------

def test_labels():
    assert z_string_labels(2) == ["IZ", "ZI", "ZZ"]
    assert z_string_labels(3) == ["IIZ", "IZI", "IZZ", "ZII", "ZIZ", "ZZI", "ZZZ"]


def test_identical_unitaries_give_zero_report():
    u = np.diag(np.exp(1j * np.array([0.1, 0.7, -0.3, 0.2])))
    report = channel_decompose(u, u)
    assert report.leakage_probability == 0.0
    assert all(abs(d) < 1e-15 for d in report.deltas)
    assert all(w < 1e-30 for w in report.worst_case)


def test_single_z_deviation_lands_on_one_channel():
    theta = 0.42
    ideal = np.diag(np.exp(1j * np.array([0.3, -0.1, 0.5, 0.9])))
    z_data = np.diag(np.exp(1j * theta * np.array([0.0, 1.0, 0.0, 1.0])))
    report = channel_decompose(z_data @ ideal, ideal)
    assert abs(report.delta("IZ") - theta) < 1e-12
    assert abs(report.probability("IZ") - math.sin(theta / 2) ** 2) < 1e-12
    assert abs(report.delta("ZI")) < 1e-12
    assert abs(report.delta("ZZ")) < 1e-12


def test_random_diagonal_deviation_round_trip():
    rng = np.random.default_rng(9)
    for n in (2, 3):
        dim = 2 ** n
        for _ in range(50):
            phases = rng.uniform(-0.5, 0.5, dim)
            ideal = np.diag(np.exp(1j * rng.uniform(-math.pi, math.pi, dim)))
            realized = np.diag(np.exp(1j * phases)) @ ideal
            report = channel_decompose(realized, ideal)
            # inverse transform oracle: reconstruction returns the mean-removed
            # deviation phases exactly
            rec = reconstruct_phases(report)
            centered = (phases - phases[0])
            centered -= centered.mean()
            assert np.max(np.abs(rec - centered)) < 1e-12


def test_parseval_identity():
    rng = np.random.default_rng(10)
    for _ in range(50):
        phases = rng.uniform(-0.2, 0.2, 8)
        ideal = np.eye(8, dtype=complex)
        realized = np.diag(np.exp(1j * phases))
        report = channel_decompose(realized, ideal)
        p = phases - phases[0]
        centered = p - p.mean()
        lhs = np.sum(np.asarray(report.deltas) ** 2)
        rhs = 4.0 / 8 * np.sum(centered ** 2)
        assert abs(lhs - rhs) < 1e-12


def test_leakage_of_full_swap():
    swap = np.eye(4, dtype=complex)[:, [0, 2, 1, 3]]
    report = channel_decompose(swap, np.eye(4, dtype=complex))
    assert report.leakage_probability == 1.0


def test_walsh_transform_involution():
    rng = np.random.default_rng(11)
    v = rng.normal(size=16)
    assert_allclose(walsh_hadamard_transform(walsh_hadamard_transform(v)) / 16,
                    v, atol=1e-12)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        channel_decompose(np.eye(4, dtype=complex), np.eye(8, dtype=complex))


# ---------------------------------------------------------------------------
# shuttle-time sweep
# ---------------------------------------------------------------------------

def test_sweep_without_coupling_is_clean():
    params = SpinPairParams(b_mt=100.0,
                            hyperfine=AnalyticHyperfine(a_max_mhz=1e-12))
    template = build_schedule(E_START, 2.0, 2.0, 0.0, dt=2.0 / 400)
    result = sweep_shuttle_time(params, template, [2.0])
    assert result.rows[0][1] < 1e-20


def test_sweep_time_stretching_decreases_probability(default_params):
    template = build_schedule(E_START, 2.0, 2.0, 0.0, dt=2.0 / 1200)
    result = sweep_shuttle_time(default_params, template, [1.0, 4.0, 16.0])
    probs = [p for _, p in result.rows]
    assert probs[0] > probs[1] > probs[2]
    assert result.non_increasing
    assert result.first_below(1e-4) == 4.0


def test_sweep_crosses_threshold_within_a_few_ns(default_params):
    template = build_schedule(E_START, 2.0, 2.0, 0.0, dt=2.0 / 1200)
    times = [0.5, 1.0, 2.0, 4.0, 8.0]
    result = sweep_shuttle_time(default_params, template, times, b_mt=100.0)
    probs = dict(result.rows)
    assert max(probs.values()) > 1e-4       # the fast end is not adiabatic
    assert all(probs[t] < 1e-4 for t in times if t >= 4.0)


def test_sweep_requires_times(default_params, default_schedule):
    with pytest.raises(ValueError):
        sweep_shuttle_time(default_params, default_schedule, [])


# ---------------------------------------------------------------------------
# shift sweep
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def shift_result(default_params, default_tau):
    sched = build_schedule(E_START, 2.0, 8.0, default_tau, dt=8.0 / 1600)
    return sweep_shift(default_params, sched, default_tau,
                       deltas=[0.0, 1e-3, 3.1623e-3, 1e-2, 3.1623e-2, 1e-1])


def test_shift_baseline_at_numerical_floor(shift_result):
    for kind in ("static", "alternating"):
        assert shift_result.max_phase[(kind, 0.0)] < 1e-20


def test_alternating_exceeds_static_on_responding_channels(shift_result):
    responding = ("ZII", "IZI", "IIZ", "ZIZ", "IZZ")
    silent = ("ZZI", "ZZZ")
    by_key = {}
    for kind, d, ch, delta, wc in shift_result.rows:
        by_key[(kind, d, ch)] = wc
    for d in (1e-3, 1e-2, 1e-1):
        for ch in responding:
            assert by_key[("alternating", d, ch)] > by_key[("static", d, ch)]
        for ch in silent:
            # no mechanism couples the two ancillas: floor for both kinds
            assert by_key[("alternating", d, ch)] < 1e-10
            assert by_key[("static", d, ch)] < 1e-10


def test_shift_sweep_slopes(shift_result):
    assert abs(shift_result.slope("static") - 4.0) < 0.5
    assert abs(shift_result.slope("alternating") - 2.0) < 0.5


def test_shift_sweep_ratio(shift_result):
    for d in (1e-3, 1e-2, 1e-1):
        ratio = (shift_result.max_phase[("alternating", d)]
                 / shift_result.max_phase[("static", d)])
        assert ratio > 100.0


def test_shift_sweep_parallel_merge_deterministic(default_params, default_tau):
    sched = build_schedule(E_START, 2.0, 4.0, default_tau, dt=4.0 / 800)
    deltas = [0.0, 1e-2, 1e-1]
    serial = sweep_shift(default_params, sched, default_tau, deltas=deltas, jobs=1)
    parallel = sweep_shift(default_params, sched, default_tau, deltas=deltas, jobs=4)
    assert len(serial.rows) == len(parallel.rows)
    for a, b in zip(serial.rows, parallel.rows):
        assert a[:3] == b[:3]
        for x, y in zip(a[3:], b[3:]):
            assert x == y or (math.isnan(x) and math.isnan(y))


def test_shift_sweep_requires_baseline(default_params, default_schedule,
                                       default_tau):
    with pytest.raises(ValueError):
        sweep_shift(default_params, default_schedule, default_tau, deltas=[1e-3])


# ---------------------------------------------------------------------------
# drift conversion
# ---------------------------------------------------------------------------

def test_drift_product_reference_values():
    assert drift_to_field(3.3, 0.026, 1.0, 1.0) == pytest.approx(0.0858, abs=1e-15)
    got = drift_to_field(3.3, 0.026, FAST_DRIFT_REFERENCE_S, SLOW_DRIFT_REFERENCE_S)
    assert got == pytest.approx(2.9189752768166202e-05, rel=1e-12)


def test_drift_square_root_scaling():
    full = drift_to_field(1.0, 1.0, 16.0, 16.0)
    quarter = drift_to_field(1.0, 1.0, 4.0, 16.0)
    assert quarter == pytest.approx(full / 2, rel=1e-15)


def test_drift_rejects_nonpositive_times():
    with pytest.raises(ValueError):
        drift_to_field(1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        drift_to_field(1.0, 1.0, 1.0, -2.0)
