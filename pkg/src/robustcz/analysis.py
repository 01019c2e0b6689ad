"""Error-channel decomposition, sensitivity sweeps, and drift conversion.

A realized gate U is compared against its ideal reference V through the
deviation D = U V^dag.  The orthogonal channel basis for the diagonal part
is the set of Z strings: writing the deviation phases p(b) over basis
states b, the Walsh-Hadamard coefficients c_s = 2^-n sum_b p(b) chi_s(b)
with chi_s(b) = (-1)^{popcount(s & b)} give the rotation angle delta_s =
-2 c_s of the channel exp(-i delta_s/2 Z_s).  The worst-case initial state
for a phase channel is the equal superposition of a +1 and a -1 eigenstate
of Z_s, whose error probability is sin^2(delta_s / 2).  Transition leakage
out of the diagonal is reported separately as the worst-case basis-state
escape probability.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .control import ShiftSpec, ShuttleSchedule, build_schedule
from .dynamics import adiabatic_cycle, flip_flop_probability
from .gate_algebra import wrap_phase
from .protocol import ProtocolRun, composite_run, cycle_reference
from .spin_model import SpinPairParams


def walsh_hadamard_transform(v: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform (involution up to a factor 2^n)."""
    out = np.array(v, dtype=float)
    h = 1
    while h < out.size:
        for i in range(0, out.size, 2 * h):
            a = out[i:i + h].copy()
            b = out[i + h:i + 2 * h].copy()
            out[i:i + h] = a + b
            out[i + h:i + 2 * h] = a - b
        h *= 2
    return out


def z_string_labels(num_qubits: int):
    """Channel names 'ZII', 'IZI', ... for every nontrivial Z string."""
    labels = []
    for s in range(1, 2 ** num_qubits):
        labels.append("".join(
            "Z" if s & (1 << (num_qubits - 1 - q)) else "I"
            for q in range(num_qubits)))
    return labels


@dataclass(frozen=True, eq=False)
class ChannelReport:
    """Per-channel deviation of a realized gate from its ideal reference."""

    leakage_probability: float
    channels: tuple
    deltas: tuple          # signed rotation angles, radians
    worst_case: tuple      # sin^2(delta / 2) per channel

    def delta(self, channel: str) -> float:
        return self.deltas[self.channels.index(channel)]

    def probability(self, channel: str) -> float:
        return self.worst_case[self.channels.index(channel)]

    @property
    def max_phase_probability(self) -> float:
        return max(self.worst_case)


def channel_decompose(run, ideal: np.ndarray | None = None) -> ChannelReport:
    """Decompose realized-vs-ideal deviation into leakage plus Z-string channels."""
    if isinstance(run, ProtocolRun):
        realized, ideal = run.realized, run.ideal
    else:
        realized = run
        if ideal is None:
            raise ValueError("need an ideal reference unitary")
    if realized.shape != ideal.shape:
        raise ValueError("realized and ideal unitaries differ in dimension")
    dim = realized.shape[0]
    n = int(round(math.log2(dim)))
    dev = realized @ ideal.conj().T
    diag = np.diag(dev)
    leakage = float(np.max(1.0 - np.minimum(1.0, np.abs(diag) ** 2)))
    phases = wrap_phase(np.angle(diag) - np.angle(diag[0]))
    coeff = walsh_hadamard_transform(phases) / dim
    deltas = -2.0 * coeff[1:]
    worst = np.sin(deltas / 2.0) ** 2
    return ChannelReport(leakage, tuple(z_string_labels(n)),
                         tuple(float(d) for d in deltas),
                         tuple(float(w) for w in worst))


def reconstruct_phases(report: ChannelReport) -> np.ndarray:
    """Invert the channel expansion back to a (mean-removed) phase vector."""
    dim = len(report.channels) + 1
    coeff = np.zeros(dim)
    coeff[1:] = np.asarray(report.deltas) / -2.0
    return walsh_hadamard_transform(coeff)


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ShuttleSweepResult:
    rows: tuple                 # (shuttle_time_ns, flip_flop_probability)
    non_increasing: bool        # annotation: each point <= its predecessor

    def first_below(self, threshold: float):
        for t, p in self.rows:
            if p < threshold:
                return t
        return None


def sweep_shuttle_time(params: SpinPairParams, template: ShuttleSchedule,
                       times, b_mt: float | None = None,
                       jobs: int = 1) -> ShuttleSweepResult:
    """Flip-flop failure probability of a full out-and-back shuttle vs ramp time.

    Each point rebuilds the template with the given one-way ramp duration
    (zero dwell) at a fixed step count per ramp, propagates the cycle, and
    records the worst-case transition probability.
    """
    times = list(times)
    if not times:
        raise ValueError("need at least one shuttle time")
    if b_mt is not None:
        params = SpinPairParams(b_mt, params.hyperfine, params.constants)
    steps = template.ramp_steps

    def one(t_ramp):
        sched = build_schedule(template.e_start, template.e_rop, t_ramp, 0.0,
                               dt=t_ramp / steps)
        prop, _ = adiabatic_cycle(params, sched)
        return flip_flop_probability(prop)

    probs = _run_jobs(one, times, jobs)
    rows = tuple(zip([float(t) for t in times], probs))
    mono = all(b <= a + 1e-12 for (_, a), (_, b) in zip(rows, rows[1:]))
    return ShuttleSweepResult(rows, mono)


@dataclass(frozen=True, eq=False)
class ShiftSweepResult:
    """Composite-gate sensitivity to field shifts.

    rows: (kind, delta_e, channel, delta_rad, worst_case_probability), with
    'leakage' included as a pseudo-channel.  For alternating shifts each
    channel reports its worst case over flip placements at the three
    refocusing pulses, matching the worst-case-noise reading of the shift.
    slopes: per (kind, channel) log-log slope fitted over the small-delta
    rows; max_phase: per (kind, delta_e) worst phase channel.
    """

    rows: tuple
    slopes: dict
    max_phase: dict

    def slope(self, kind: str, channel: str = "max"):
        return self.slopes.get((kind, channel))


def _fit_slope(deltas, probs, floor=1e-18):
    pts = [(d, p) for d, p in zip(deltas, probs) if d > 0 and p > floor]
    if len(pts) < 3:
        return None
    x = np.log(np.array([d for d, _ in pts]))
    y = np.log(np.array([p for _, p in pts]))
    return float(np.polyfit(x, y, 1)[0])


def _run_jobs(fn, items, jobs):
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def sweep_shift(params: SpinPairParams, schedule: ShuttleSchedule, tau: float,
                kinds=("static", "alternating"), deltas=(0.0,),
                travel_idle: float = 0.0, jobs: int = 1) -> ShiftSweepResult:
    """Composite-gate error channels versus field-shift magnitude."""
    deltas = [float(d) for d in deltas]
    if 0.0 not in deltas:
        raise ValueError("deltas must include 0 for the baseline row")
    for kind in kinds:
        if kind not in ("static", "alternating"):
            raise ValueError(f"unknown shift kind {kind!r}")
    reference = cycle_reference(params, schedule, tau)

    baseline_run = composite_run(params, schedule, tau, noise=None,
                                 travel_idle=travel_idle, reference=reference)
    flip_times = baseline_run.refocus_times
    baseline = channel_decompose(baseline_run)

    def one_report(job):
        kind, delta = job
        if delta == 0.0:
            return baseline
        if kind == "static":
            run = composite_run(params, schedule, tau,
                                noise=ShiftSpec("static", delta),
                                travel_idle=travel_idle, reference=reference)
            return channel_decompose(run)
        reports = []
        for flip in flip_times:
            run = composite_run(params, schedule, tau,
                                noise=ShiftSpec("alternating", delta, flip),
                                travel_idle=travel_idle, reference=reference)
            reports.append(channel_decompose(run))
        # worst case over flip placement, channel by channel
        deltas_max = tuple(
            max((rep.deltas[i] for rep in reports), key=abs)
            for i in range(len(baseline.channels)))
        worst = tuple(max(rep.worst_case[i] for rep in reports)
                      for i in range(len(baseline.channels)))
        leak = max(rep.leakage_probability for rep in reports)
        return ChannelReport(leak, baseline.channels, deltas_max, worst)

    jobs_list = [(kind, d) for kind in kinds for d in deltas]
    reports = dict(zip(jobs_list, _run_jobs(one_report, jobs_list, jobs)))

    rows = []
    slopes = {}
    max_phase = {}
    for kind in kinds:
        series = {ch: [] for ch in baseline.channels}
        maxima = []
        for d in deltas:
            rep = reports[(kind, d)]
            for ch in rep.channels:
                rows.append((kind, d, ch, rep.delta(ch), rep.probability(ch)))
                series[ch].append(rep.probability(ch))
            rows.append((kind, d, "leakage", float("nan"),
                         rep.leakage_probability))
            maxima.append(rep.max_phase_probability)
            max_phase[(kind, d)] = rep.max_phase_probability
        for ch, probs in series.items():
            slopes[(kind, ch)] = _fit_slope(deltas, probs)
        slopes[(kind, "max")] = _fit_slope(deltas, maxima)
    return ShiftSweepResult(tuple(rows), slopes, max_phase)


def drift_to_field(delta_mv: float, lever_arm_mv_per_m_per_mv: float,
                   t_target: float, t_reference: float) -> float:
    """Convert an observed gate-voltage drift to a field shift at another timescale.

    The drift is diffusive (random walk), so the magnitude scales with the
    square root of the elapsed-time ratio; the lever arm converts millivolts
    on the gate to MV/m at the donor.
    """
    if t_target <= 0 or t_reference <= 0:
        raise ValueError("times must be positive")
    return delta_mv * lever_arm_mv_per_m_per_mv * math.sqrt(t_target / t_reference)


FAST_DRIFT_REFERENCE_S = 1e-3     # conservative fast-fluctuation timescale
SLOW_DRIFT_REFERENCE_S = 8640.0   # 0.1 day
