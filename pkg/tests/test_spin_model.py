import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from robustcz.spin_model import (
    MHZ_TO_RAD_PER_NS,
    AnalyticHyperfine,
    Constants,
    DipolarPair,
    SpinPairParams,
    TableHyperfine,
    cz_rate,
    dipolar_max_strength,
    eigenbasis,
    eigensystem,
    hamiltonian,
    hyperfine_at,
)


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

def test_gyromagnetic_ratios_match_si_values():
    cst = Constants()
    # rad/(ns mT) -> rad/(s T) is a factor 1e12
    assert abs(cst.gyro_phosphorus * 1e12 - 10.8e7) / 10.8e7 < 0.01
    g_factor = cst.gyro_electron * 1e12 * 1.054571817e-34 / 9.2740100783e-24
    assert abs(g_factor - 2.0) < 0.01


def test_dipolar_unit_combination():
    # the internal combination reproduces mu0/(4 pi) * hbar from SI values
    cst = Constants()
    assert abs(cst.mu0_over_4pi * cst.hbar - 1e-7 * 1.054571817e-34 * 1e42) < 1e-9


# ---------------------------------------------------------------------------
# dipolar coupling scales
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("pair,expected", [
    (DipolarPair.electron_electron(1.0), 105e6),
    (DipolarPair.electron_nucleus(1.0), 64e3),
    (DipolarPair.nucleus_nucleus(1.0), 40.0),
])
def test_dipolar_reference_strengths(pair, expected):
    assert abs(dipolar_max_strength(pair) - expected) / expected < 0.02


def test_dipolar_inverse_cube_scaling():
    rng = np.random.default_rng(2)
    for _ in range(20):
        r = float(rng.uniform(0.3, 50.0))
        near = dipolar_max_strength(DipolarPair.electron_nucleus(r))
        far = dipolar_max_strength(DipolarPair.electron_nucleus(2 * r))
        assert abs(near / far - 8.0) < 1e-12


def test_dipolar_rejects_nonpositive_separation():
    with pytest.raises(ValueError):
        dipolar_max_strength(DipolarPair.electron_electron(0.0))


# ---------------------------------------------------------------------------
# hyperfine models
# ---------------------------------------------------------------------------

def test_analytic_maximum_is_exact():
    model = AnalyticHyperfine()
    assert hyperfine_at(model, model.e_rop) == model.a_max_mhz


def test_analytic_quadratic_near_operating_point():
    model = AnalyticHyperfine(a_max_mhz=117.0, e_rop=2.0, kappa=0.01)
    for delta in (0.01, 0.05, 0.2, -0.15):
        expect = 117.0 * (1 - 0.01 * delta ** 2)
        assert abs(hyperfine_at(model, 2.0 + delta) - expect) < 1e-12


def test_analytic_zero_slope_at_operating_point():
    model = AnalyticHyperfine()
    h = 1e-4
    slope = (model.value(model.e_rop + h) - model.value(model.e_rop - h)) / (2 * h)
    assert abs(slope) < 1e-6 * model.a_max_mhz


def test_analytic_nonnegative_single_maximum_continuous():
    model = AnalyticHyperfine()
    e = np.linspace(model.e_rop - 2.5, model.e_rop + 2.5, 20001)
    a = model.value(e)
    assert np.all(a >= 0)
    assert np.sum(a == model.a_max_mhz) == 1  # unique maximum at the knot
    assert np.max(np.abs(np.diff(a))) < 0.2   # no jumps at this resolution
    assert model.value(model.e_rop + model.e_zero + 0.01) == 0.0


def test_analytic_clamp_c2_joins():
    model = AnalyticHyperfine()
    for e0 in (model.e_rop + model.e_knee, model.e_rop + model.e_zero):
        h = 1e-5
        vals = model.value(np.array([e0 - 2 * h, e0 - h, e0, e0 + h, e0 + 2 * h]))
        d2_left = (vals[0] - 2 * vals[1] + vals[2]) / h ** 2
        d2_right = (vals[2] - 2 * vals[3] + vals[4]) / h ** 2
        assert abs(d2_left - d2_right) < 1e-2 * model.a_max_mhz


def test_analytic_parameter_validation():
    with pytest.raises(ValueError):
        AnalyticHyperfine(kappa=0.0)
    with pytest.raises(ValueError):
        AnalyticHyperfine(kappa=2.0, e_knee=1.0)  # parabola hits zero first


def test_table_knot_values(tmp_path):
    model = TableHyperfine(np.array([0.0, 1.0, 2.0]), np.array([0.0, 100.0, 0.0]))
    assert hyperfine_at(model, 1.0) == 100.0
    assert model.e_rop == 1.0
    assert model.a_max_mhz == 100.0
    # interior values stay within the monotone envelope
    grid = np.linspace(0.0, 2.0, 501)
    vals = hyperfine_at(model, grid)
    assert np.all(vals >= 0) and np.all(vals <= 100.0)


def test_table_zero_slope_at_maximum_knot():
    model = TableHyperfine(np.array([0.0, 1.0, 2.0]), np.array([0.0, 100.0, 0.0]))
    h = 1e-6
    slope = (model.value(1.0 + h) - model.value(1.0 - h)) / (2 * h)
    assert abs(slope) < 1e-6 * 100.0


def test_table_domain_is_enforced():
    model = TableHyperfine(np.array([1.0, 2.0]), np.array([10.0, 20.0]))
    with pytest.raises(ValueError):
        hyperfine_at(model, 0.5)
    with pytest.raises(ValueError):
        hyperfine_at(model, np.array([1.5, 2.5]))


def test_table_csv_round_trip(tmp_path):
    path = tmp_path / "table.csv"
    path.write_text("E_MV_per_m,A_MHz\n0.0,0.0\n1.0,100.0\n2.0,0.0\n")
    model = TableHyperfine.from_csv(path)
    assert model.value(1.0) == 100.0


def test_table_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("E,A\n0,0\n1,1\n")
    with pytest.raises(ValueError):
        TableHyperfine.from_csv(path)


def test_table_rejects_nonmonotone_field(tmp_path):
    with pytest.raises(ValueError):
        TableHyperfine(np.array([0.0, 2.0, 1.0]), np.array([0.0, 1.0, 2.0]))


# ---------------------------------------------------------------------------
# Hamiltonian and spectrum
# ---------------------------------------------------------------------------

def test_hamiltonian_zero_limit():
    params = SpinPairParams(b_mt=0.0)
    assert_allclose(hamiltonian(params, 0.0), np.zeros((4, 4)))


def test_hamiltonian_off_diagonal_structure():
    params = SpinPairParams(b_mt=75.0)
    h = hamiltonian(params, 42.0)
    a_ang = MHZ_TO_RAD_PER_NS * 42.0
    off = h - np.diag(np.diag(h))
    expect = np.zeros((4, 4), dtype=complex)
    expect[1, 2] = expect[2, 1] = a_ang / 2
    assert_allclose(off, expect, atol=1e-15)


def test_hamiltonian_hermitian_traceless():
    rng = np.random.default_rng(4)
    for _ in range(50):
        params = SpinPairParams(b_mt=float(rng.uniform(0, 500)))
        h = hamiltonian(params, float(rng.uniform(0, 200)))
        assert np.max(np.abs(h - h.conj().T)) < 1e-15
        assert abs(np.trace(h)) < 1e-12


def test_eigensystem_matches_dense_diagonalization():
    params = SpinPairParams(b_mt=100.0)
    sys = eigensystem(params, 117.0)
    dense = np.linalg.eigvalsh(hamiltonian(params, 117.0))
    assert_allclose(sorted(sys.energies), dense, atol=1e-12)
    # gap and mixing angle against the dense flip-flop block
    h = hamiltonian(params, 117.0)
    block = np.array([[h[1, 1], h[1, 2]], [h[2, 1], h[2, 2]]]).real
    evals, evecs = np.linalg.eigh(block)
    assert abs(sys.gap - (evals[1] - evals[0])) < 1e-12
    theta_dense = math.atan2(abs(evecs[1, 1]), abs(evecs[0, 1]))
    assert abs(sys.mixing_angle - theta_dense) < 1e-12


def test_eigensystem_decoupled_limit():
    params = SpinPairParams(b_mt=100.0)
    cst = params.constants
    sys = eigensystem(params, 0.0)
    assert abs(sys.mixing_angle) < 1e-15
    expect_gap = 100.0 * (cst.gyro_electron + cst.gyro_phosphorus)
    assert abs(sys.gap - expect_gap) < 1e-12


def test_eigensystem_zero_field_contact_limit():
    params = SpinPairParams(b_mt=0.0)
    a_ang = MHZ_TO_RAD_PER_NS * 80.0
    sys = eigensystem(params, 80.0)
    energies = sorted(sys.energies)
    assert_allclose(energies, [-0.75 * a_ang] + [0.25 * a_ang] * 3, atol=1e-12)
    assert abs(sys.mixing_angle - math.pi / 4) < 1e-12


def test_eigensystem_flags_degenerate_block():
    with pytest.raises(ValueError):
        eigensystem(SpinPairParams(b_mt=0.0), 0.0)


def test_eigensystem_invariants():
    rng = np.random.default_rng(6)
    for _ in range(100):
        params = SpinPairParams(b_mt=float(rng.uniform(1, 300)))
        a = float(rng.uniform(0, 150))
        sys = eigensystem(params, a)
        assert abs(sum(sys.energies)) < 1e-12
        assert sys.gap >= MHZ_TO_RAD_PER_NS * a - 1e-15


def test_eigenbasis_diagonalizes_hamiltonian():
    params = SpinPairParams(b_mt=40.0)
    v = eigenbasis(params, 90.0)
    h = hamiltonian(params, 90.0)
    rotated = v.conj().T @ h @ v
    off = rotated - np.diag(np.diag(rotated))
    assert np.max(np.abs(off)) < 1e-12


# ---------------------------------------------------------------------------
# conditional-phase rate
# ---------------------------------------------------------------------------

def test_cz_rate_vanishes_without_coupling():
    assert cz_rate(SpinPairParams(b_mt=120.0), 0.0) == 0.0


def test_cz_rate_high_field_limit():
    # oracle: exact flip-flop block eigenvalues; the alternating-sign energy
    # combination equals the angular coupling strength identically
    params = SpinPairParams(b_mt=200.0)
    for a in (1.0, 50.0, 117.0):
        zsum = 0.5 * 200.0 * (params.constants.gyro_electron
                              + params.constants.gyro_phosphorus)
        a_ang = MHZ_TO_RAD_PER_NS * a
        block_sum = -a_ang / 2  # trace of the flip-flop block
        expect = a_ang / 2 - block_sum
        assert abs(cz_rate(params, a) - expect) < 1e-14
        assert abs(cz_rate(params, a) - a_ang) < 1e-14
        assert zsum > a_ang  # genuinely in the high-field regime


def test_cz_rate_sign_constant_over_coupling():
    params = SpinPairParams(b_mt=100.0)
    rates = [cz_rate(params, a) for a in np.linspace(0.5, 117.0, 40)]
    assert all(r > 0 for r in rates)
