"""Adiabatic shuttle entangling gates for electron-nuclear spin pairs.

Library layout:

    gate_algebra   diagonal-gate phase arithmetic, circuit identities,
                   pure-state simulation
    spin_model     constants, hyperfine-vs-field models, pair Hamiltonian
    control        smooth shuttle schedules and field-shift specs
    dynamics       midpoint exponential propagator, adiabatic cycles
    protocol       tau calibration, refocused double-cycle, composite gate
    analysis       error channels, sensitivity sweeps, drift conversion
    cli            reproducible command-line runs
"""

__version__ = "0.1.0"

from .analysis import (
    ChannelReport,
    channel_decompose,
    drift_to_field,
    sweep_shift,
    sweep_shuttle_time,
)
from .control import ShiftSpec, ShuttleSchedule, apply_shift, build_schedule
from .dynamics import LeakageError, Propagation, adiabatic_cycle, flip_flop_probability, propagate
from .gate_algebra import (
    CycleParams,
    DiagonalGate,
    PureState,
    canonicalize,
    compose,
    composite_ideal,
    double_cycle_net,
    extract_zzc,
    simulate_circuit,
    verify_identities,
    x_conjugate,
)
from .protocol import ProtocolRun, calibrate_tau, composite_run, double_cycle_run
from .spin_model import (
    AnalyticHyperfine,
    Constants,
    DipolarPair,
    SpinPairParams,
    TableHyperfine,
    cz_rate,
    dipolar_max_strength,
    eigensystem,
    hamiltonian,
    hyperfine_at,
)
