"""Assembles the full gate constructions from propagated cycles.

Gate anatomy (all refocusing X pulses are ideal and instantaneous):

* double-cycle: cycle with dwell tau, X on the ancilla (electron), cycle
  with zero dwell.  Cancels the ancilla transit phase and turns the
  conditional transit phase into a deterministic data rotation.
* composite: a double-cycle on (ancilla1, data), an X on the data qubit
  (nucleus), a double-cycle on (ancilla2, data).  Cancels the remaining
  transit-phase dependence; the entangling part is CZ(a1, d) * CZ(a2, d).

Register order for the composite: (ancilla1, ancilla2, data).  Whichever
ancilla is not in play idles under its bare Zeeman precession, which is
tracked exactly and folded into the ideal reference as known single-qubit
corrections.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .control import ShiftSpec, ShuttleSchedule
from .dynamics import (
    FieldWindow,
    LeakageError,
    dwell_phase_params,
    dwell_unitary,
    flip_flop_probability,
    propagate,
)
from .gate_algebra import (
    CycleParams,
    DiagonalCircuit,
    DiagonalGate,
    canonicalize,
    extract_zzc,
    wrap_phase,
)
from .spin_model import SpinPairParams, cz_rate, hyperfine_at

_X2 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class ProtocolRun:
    """One realized protocol execution next to its ideal reference."""

    realized: np.ndarray
    ideal: np.ndarray
    refocus_times: tuple
    total_time: float
    noise: ShiftSpec | None
    cycle_params: tuple  # (dwell cycle, zero-dwell cycle) from the noiseless reference

    def __post_init__(self):
        if self.realized.shape != self.ideal.shape:
            raise ValueError("realized and ideal unitaries differ in dimension")
        for t in self.refocus_times:
            if not 0.0 < t < self.total_time:
                raise ValueError("refocusing pulses must lie inside the timeline")


def calibrate_tau(params: SpinPairParams, schedule: ShuttleSchedule | None = None,
                  mode: str = "dwell") -> float:
    """Dwell time tau that makes the conditional phase accumulate to pi.

    mode "dwell" targets the dwell contribution alone (the phase rate at the
    operating point is the alternating-sign energy combination); mode
    "total" also absorbs the transit conditional phase of the supplied
    schedule.  Either way the estimate is polished with one secant step
    against the simulated phase, which is linear in tau.
    """
    e_rop = params.hyperfine.e_rop
    a_rop = float(hyperfine_at(params.hyperfine, e_rop))
    wzz = cz_rate(params, a_rop)
    if abs(wzz) < 1e-15:
        raise ValueError("conditional phase rate vanishes; cannot calibrate tau")
    target = math.pi

    if mode == "dwell":
        def residual(tau):
            f = dwell_phase_params(params, a_rop, tau)[2]
            return float(wrap_phase(f - target))
    elif mode == "total":
        if schedule is None:
            raise ValueError("total-phase calibration needs the schedule")
        def residual(tau):
            from .dynamics import adiabatic_cycle

            cyc = adiabatic_cycle(params, _with_tau(schedule, tau))[1]
            return float(wrap_phase(cyc.c + cyc.f - target))
    else:
        raise ValueError(f"unknown calibration mode {mode!r}")

    if mode == "dwell":
        tau0 = math.pi / abs(wzz)
    else:
        # seed from the transit conditional phase of the zero-dwell cycle
        from .dynamics import adiabatic_cycle

        c0 = adiabatic_cycle(params, _with_tau(schedule, 0.0))[1].c
        tau0 = float(wrap_phase(c0 - target)) / wzz
        period = 2.0 * math.pi / abs(wzz)
        while tau0 <= 0.0:
            tau0 += period
    r0 = residual(tau0)
    tau1 = tau0 * (1.0 + 1e-3)
    r1 = residual(tau1)
    if r1 != r0:
        tau_star = tau1 - r1 * (tau1 - tau0) / (r1 - r0)
    else:
        tau_star = tau0
    if not 0.0 < tau_star:
        raise ValueError("tau calibration failed to converge to a positive dwell")
    return float(tau_star)


def _with_tau(schedule: ShuttleSchedule, tau: float) -> ShuttleSchedule:
    return ShuttleSchedule(schedule.e_start, schedule.e_rop, schedule.t_ramp,
                           tau, schedule.dt)


def _offset_fn(noise: ShiftSpec | None):
    if noise is None:
        return lambda t: np.zeros_like(np.asarray(t, dtype=float))
    return noise.offset


def _split_at_flip(t0: float, duration: float, noise: ShiftSpec | None):
    """Constant-offset sub-intervals of [t0, t0+duration]."""
    if (noise is None or noise.kind != "alternating"
            or not t0 < noise.flip_time < t0 + duration):
        return [(t0, duration)]
    return [(t0, noise.flip_time - t0), (noise.flip_time, t0 + duration - noise.flip_time)]


class _CycleBuild:
    """Realized unitary and diagnostics of one (possibly shifted) cycle.

    The ramp shapes come from the schedule's in-ramp profile (the out-ramp
    is its mirror), so the same schedule serves any dwell length; the shift
    offset is evaluated at absolute protocol time.
    """

    def __init__(self, params, schedule, tau, t0, noise, transit_idle):
        offset = _offset_fn(noise)
        t_ramp = schedule.t_ramp

        def ramp_field(descending, t_abs0):
            def value(t_local):
                s = np.asarray(t_local, dtype=float)
                base = schedule.value(t_ramp - s if descending else s)
                return base + offset(t_abs0 + s)
            return FieldWindow(lambda t: value(t), 0.0, t_ramp)

        u = np.eye(4, dtype=complex)
        t_cursor = t0
        # leading field-free interval: bare precession at the parked field
        for seg_start, seg_dur in _split_at_flip(t_cursor, transit_idle, noise):
            if seg_dur > 0:
                a_idle = float(hyperfine_at(params.hyperfine,
                                            schedule.e_start + offset(seg_start)))
                u = dwell_unitary(params, a_idle, seg_dur) @ u
        t_cursor += transit_idle
        u = propagate(params, ramp_field(False, t_cursor), schedule.dt).unitary @ u
        t_cursor += t_ramp
        for seg_start, seg_dur in _split_at_flip(t_cursor, tau, noise):
            if seg_dur > 0:
                a_dwell = float(hyperfine_at(params.hyperfine,
                                             schedule.e_rop + offset(seg_start)))
                u = dwell_unitary(params, a_dwell, seg_dur) @ u
        t_cursor += tau
        u = propagate(params, ramp_field(True, t_cursor), schedule.dt).unitary @ u
        self.unitary = u
        self.duration = transit_idle + 2.0 * t_ramp + tau
        self.leakage = flip_flop_probability(u)


def _net_diagonal(u: np.ndarray) -> DiagonalGate:
    return canonicalize(DiagonalGate(2, tuple(np.angle(np.diag(u)))))


@dataclass(frozen=True, eq=False)
class CycleReference:
    """Noiseless single-cycle results reused across a sweep."""

    net_with_dwell: DiagonalGate
    net_without_dwell: DiagonalGate
    params_with_dwell: CycleParams
    params_without_dwell: CycleParams
    leakage: float
    cycle_time: float


def cycle_reference(params, schedule, tau, transit_idle=0.0) -> CycleReference:
    """Simulate the two noiseless cycles every construction is built from."""
    c_tau = _CycleBuild(params, schedule, tau, 0.0, None, transit_idle)
    c_0 = _CycleBuild(params, schedule, 0.0, 0.0, None, transit_idle)
    leak = max(c_tau.leakage, c_0.leakage)
    if leak > 0.5:
        raise LeakageError(f"reference cycle leakage {leak:.3g} is not adiabatic")
    a_rop = float(hyperfine_at(params.hyperfine, schedule.e_rop))

    def split(u, tau_k):
        net = _net_diagonal(u)
        alpha, beta, gamma = extract_zzc(net)
        d, e, f = dwell_phase_params(params, a_rop, tau_k)
        return net, CycleParams(float(wrap_phase(alpha - d)), float(wrap_phase(beta - e)),
                                float(wrap_phase(gamma - f)), d, e, f, tau_k)

    net_tau, cp_tau = split(c_tau.unitary, tau)
    net_0, cp_0 = split(c_0.unitary, 0.0)
    return CycleReference(net_tau, net_0, cp_tau, cp_0, leak, c_tau.duration)


def _electron_idle_phases(params, duration):
    z = 0.5 * params.b_mt * params.constants.gyro_electron
    return np.array([-z * duration, z * duration])


def _nucleus_idle_phases(params, duration):
    z = 0.5 * params.b_mt * params.constants.gyro_phosphorus
    return np.array([z * duration, -z * duration])


def double_cycle_run(params: SpinPairParams, schedule: ShuttleSchedule, tau: float,
                     noise: ShiftSpec | None = None, transit_idle: float = 0.0,
                     reference: CycleReference | None = None) -> ProtocolRun:
    """Simulate cycle(tau), X on the ancilla, cycle(0) on one spin pair.

    The ideal reference is assembled algebraically from the noiseless cycle
    diagonals, so realized-minus-ideal isolates noise and non-adiabaticity.
    """
    if reference is None:
        reference = cycle_reference(params, schedule, tau, transit_idle)
    cyc_len = reference.cycle_time
    t_x = cyc_len
    c1 = _CycleBuild(params, schedule, tau, 0.0, noise, transit_idle)
    c2 = _CycleBuild(params, schedule, 0.0, t_x, noise, transit_idle)
    x_anc = np.kron(_X2, np.eye(2))
    realized = c2.unitary @ x_anc @ c1.unitary

    ckt = DiagonalCircuit(2)
    ckt.apply_diagonal(reference.net_with_dwell)
    ckt.apply_x(0)
    ckt.apply_diagonal(reference.net_without_dwell)
    ideal = ckt.matrix()
    total = 2.0 * cyc_len
    return ProtocolRun(realized, ideal, (t_x,), total, noise,
                       (reference.params_with_dwell, reference.params_without_dwell))


def _embed_pair(u4: np.ndarray, pair) -> np.ndarray:
    """Lift a two-qubit unitary onto qubits ``pair`` of a 3-qubit register."""
    q_idle = ({0, 1, 2} - set(pair)).pop()
    idx = np.arange(8)
    bits = [(idx >> (2 - q)) & 1 for q in range(3)]
    sub = 2 * bits[pair[0]] + bits[pair[1]]
    u8 = np.zeros((8, 8), dtype=complex)
    same_idle = bits[q_idle][:, None] == bits[q_idle][None, :]
    u8[same_idle] = u4[sub[:, None], sub[None, :]][same_idle]
    return u8


def _x_on(qubit: int) -> np.ndarray:
    mats = [np.eye(2, dtype=complex)] * 3
    mats[qubit] = _X2
    return np.kron(np.kron(mats[0], mats[1]), mats[2])


def composite_run(params: SpinPairParams, schedule: ShuttleSchedule, tau: float,
                  noise: ShiftSpec | None = None, travel_idle: float = 0.0,
                  transit_idle: float = 0.0,
                  reference: CycleReference | None = None) -> ProtocolRun:
    """Simulate the two-ancilla composite gate on the 8-dimensional register.

    Double-cycle on (ancilla1, data), ideal X on the data qubit, optional
    field-free travel interval, double-cycle on (ancilla2, data).  Idle
    ancillas precess under their bare Zeeman terms; those phases are exact
    single-qubit corrections and are included in the ideal reference.
    """
    if reference is None:
        reference = cycle_reference(params, schedule, tau, transit_idle)
    cyc_len = reference.cycle_time
    dc_len = 2.0 * cyc_len
    t_x_a1 = cyc_len
    t_x_data = dc_len
    t_x_a2 = dc_len + travel_idle + cyc_len
    total = 2.0 * dc_len + travel_idle

    def double_cycle(t0, pair):
        c1 = _CycleBuild(params, schedule, tau, t0, noise, transit_idle)
        c2 = _CycleBuild(params, schedule, 0.0, t0 + cyc_len, noise, transit_idle)
        u4 = c2.unitary @ np.kron(_X2, np.eye(2)) @ c1.unitary
        return _embed_pair(u4, pair)

    # idle phases are diagonal and commute with the active pair's evolution
    def idle_diag(qubit, phases):
        idx = np.arange(8)
        bit = (idx >> (2 - qubit)) & 1
        return np.diag(np.exp(1j * phases[bit]))

    u = double_cycle(0.0, (0, 2))
    u = idle_diag(1, _electron_idle_phases(params, dc_len)) @ u
    u = _x_on(2) @ u
    if travel_idle > 0:
        for q, ph in ((0, _electron_idle_phases(params, travel_idle)),
                      (1, _electron_idle_phases(params, travel_idle)),
                      (2, _nucleus_idle_phases(params, travel_idle))):
            u = idle_diag(q, ph) @ u
    u = double_cycle(t_x_data + travel_idle, (1, 2)) @ u
    u = idle_diag(0, _electron_idle_phases(params, dc_len)) @ u
    realized = u

    ckt = DiagonalCircuit(3)
    ckt.apply_diagonal(reference.net_with_dwell, qubits=(0, 2))
    ckt.apply_x(0)
    ckt.apply_diagonal(reference.net_without_dwell, qubits=(0, 2))
    ckt.apply_phases(_electron_idle_phases(params, dc_len), qubits=(1,))
    ckt.apply_x(2)
    if travel_idle > 0:
        ckt.apply_phases(_electron_idle_phases(params, travel_idle), qubits=(0,))
        ckt.apply_phases(_electron_idle_phases(params, travel_idle), qubits=(1,))
        ckt.apply_phases(_nucleus_idle_phases(params, travel_idle), qubits=(2,))
    ckt.apply_diagonal(reference.net_with_dwell, qubits=(1, 2))
    ckt.apply_x(1)
    ckt.apply_diagonal(reference.net_without_dwell, qubits=(1, 2))
    ckt.apply_phases(_electron_idle_phases(params, dc_len), qubits=(0,))
    ideal = ckt.matrix()

    return ProtocolRun(realized, ideal, (t_x_a1, t_x_data, t_x_a2), total, noise,
                       (reference.params_with_dwell, reference.params_without_dwell))
