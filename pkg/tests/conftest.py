import numpy as np
import pytest

from robustcz.control import build_schedule
from robustcz.protocol import calibrate_tau
from robustcz.spin_model import AnalyticHyperfine, SpinPairParams

E_START = 3.8


@pytest.fixture(scope="session")
def default_params():
    return SpinPairParams(b_mt=100.0, hyperfine=AnalyticHyperfine())


@pytest.fixture(scope="session")
def default_tau(default_params):
    return calibrate_tau(default_params)


@pytest.fixture(scope="session")
def fast_schedule(default_params, default_tau):
    """Shorter ramps at moderate resolution: quick but still deeply adiabatic."""
    return build_schedule(E_START, default_params.hyperfine.e_rop, 8.0,
                          default_tau, dt=8.0 / 1600)


@pytest.fixture(scope="session")
def default_schedule(default_params, default_tau):
    """The default-config geometry (20 ns ramps, 4000 steps per ramp)."""
    return build_schedule(E_START, default_params.hyperfine.e_rop, 20.0,
                          default_tau, dt=20.0 / 4000)


def as_unitary_error(u1: np.ndarray, u2: np.ndarray) -> float:
    """max |U1 - e^{i phi} U2| with the global phase chosen optimally."""
    m = u1 @ u2.conj().T
    tr = np.trace(m)
    phase = tr / abs(tr) if abs(tr) > 0 else 1.0
    return float(np.max(np.abs(m - phase * np.eye(m.shape[0]))))
