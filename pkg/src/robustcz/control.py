"""Shuttle schedules: smooth field ramps with a dwell, plus noise shifts.

The ramp profile is the quintic step s(x) = 6x^5 - 15x^4 + 10x^3, which has
zero first and second derivatives at both ends, so the field (and anything
smooth composed with it) starts and stops with vanishing velocity and
acceleration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_STEPS_PER_RAMP = 5_000


def smootherstep(x):
    """Quintic step: s(0)=0, s(1)=1, s'=s''=0 at both ends; clamped outside [0,1]."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x ** 3 * (x * (6.0 * x - 15.0) + 10.0)


def _check_commensurate(duration: float, dt: float, what: str) -> int:
    n = int(round(duration / dt))
    if n < 1 or abs(n * dt - duration) > 1e-9 * max(1.0, duration):
        raise ValueError(f"dt = {dt} does not divide the {what} duration {duration}")
    return n


@dataclass(frozen=True)
class ShuttleSchedule:
    """Ramp-in, dwell at the operating field, ramp-out; sampled on a dt grid.

    The dwell holds E = e_rop for tau ns.  value(t) is exact and clamps to
    the endpoints outside [0, total_time].  samples() returns the uniform-dt
    view; when tau is not a multiple of dt the sampled dwell is snapped to
    the nearest grid length (propagation elsewhere always uses the exact tau,
    since a constant segment integrates exactly in one step).
    """

    e_start: float
    e_rop: float
    t_ramp: float
    tau: float
    dt: float

    @property
    def total_time(self) -> float:
        return 2.0 * self.t_ramp + self.tau

    @property
    def ramp_steps(self) -> int:
        return int(round(self.t_ramp / self.dt))

    def value(self, t):
        return self._value_with_tau(t, self.tau)

    def _value_with_tau(self, t, tau):
        t = np.asarray(t, dtype=float)
        total = 2.0 * self.t_ramp + tau
        span = self.e_rop - self.e_start
        up = smootherstep(t / self.t_ramp)
        down = smootherstep((total - t) / self.t_ramp)
        shape = np.where(t <= self.t_ramp, up, np.where(t >= self.t_ramp + tau,
                                                        down, 1.0))
        out = self.e_start + span * shape
        return float(out) if out.ndim == 0 else out

    def samples(self):
        """(times, fields) on the uniform dt grid, dwell snapped if needed."""
        n_dwell = int(round(self.tau / self.dt))
        tau_snap = n_dwell * self.dt
        n_total = 2 * self.ramp_steps + n_dwell
        t = np.arange(n_total + 1) * self.dt
        return t, self._value_with_tau(t, tau_snap)


def build_schedule(e_start: float, e_rop: float, t_ramp: float, tau: float,
                   dt: float | None = None) -> ShuttleSchedule:
    """Validate and construct a shuttle schedule.

    dt defaults to t_ramp / DEFAULT_STEPS_PER_RAMP and must divide t_ramp
    exactly; tau may be any non-negative dwell time.
    """
    for name, v in (("e_start", e_start), ("e_rop", e_rop), ("t_ramp", t_ramp),
                    ("tau", tau)):
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite")
    if t_ramp <= 0:
        raise ValueError("t_ramp must be positive")
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if dt is None:
        dt = t_ramp / DEFAULT_STEPS_PER_RAMP
    if dt <= 0:
        raise ValueError("dt must be positive")
    _check_commensurate(t_ramp, dt, "ramp")
    return ShuttleSchedule(e_start, e_rop, t_ramp, tau, dt)


@dataclass(frozen=True)
class ShiftSpec:
    """A field shift: constant offset, or a sign flip at a refocusing pulse.

    static:       E(t) -> E(t) + delta_e for all t.
    alternating:  E(t) + delta_e/2 before flip_time, E(t) - delta_e/2 from
                  flip_time on (the worst-case higher-frequency limit).
    """

    kind: str
    delta_e: float
    flip_time: float | None = None

    def __post_init__(self):
        if self.kind not in ("static", "alternating"):
            raise ValueError(f"unknown shift kind {self.kind!r}")
        if not math.isfinite(self.delta_e):
            raise ValueError("delta_e must be finite")
        if self.kind == "alternating" and self.flip_time is None:
            raise ValueError("alternating shift needs a flip_time")

    def offset(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "static":
            out = np.full_like(t, self.delta_e)
        else:
            out = np.where(t < self.flip_time, 0.5 * self.delta_e,
                           -0.5 * self.delta_e)
        return float(out) if out.ndim == 0 else out


class ShiftedTimeline:
    """A schedule as seen by the device under a field shift.

    The nominal shape is untouched (the controller is unaware of the shift);
    only the field value the spins experience is offset.
    """

    def __init__(self, base, spec: ShiftSpec):
        if spec.kind == "alternating" and not (
                0.0 <= spec.flip_time <= base.total_time):
            raise ValueError("flip_time lies outside the schedule timeline")
        self.base = base
        self.spec = spec

    @property
    def total_time(self) -> float:
        return self.base.total_time

    @property
    def dt(self) -> float:
        return self.base.dt

    def value(self, t):
        return self.base.value(t) + self.spec.offset(t)

    def samples(self):
        t, e = self.base.samples()
        return t, e + self.spec.offset(t)


def apply_shift(timeline, spec: ShiftSpec) -> ShiftedTimeline:
    return ShiftedTimeline(timeline, spec)


def derivative_report(timeline, dt: float | None = None):
    """(max |dE/dt|, max |d^2E/dt^2|) from central differences of the samples."""
    if hasattr(timeline, "samples") and dt is None:
        t, e = timeline.samples()
    else:
        step = dt if dt is not None else timeline.dt
        n = _check_commensurate(timeline.total_time, step, "timeline")
        t = np.arange(n + 1) * step
        e = timeline.value(t)
    if t.size < 5:
        raise ValueError("need at least 5 samples for a derivative report")
    d1 = np.gradient(e, t)
    d2 = np.gradient(d1, t)
    return float(np.max(np.abs(d1))), float(np.max(np.abs(d2)))


def export_schedule_csv(schedule, hyperfine_model, path) -> None:
    """Write t_ns,E_MV_per_m,A_MHz rows for plotting the control trace."""
    from .spin_model import hyperfine_at

    t, e = schedule.samples()
    a = hyperfine_at(hyperfine_model, e)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t_ns,E_MV_per_m,A_MHz\n")
        for row in zip(t, e, np.broadcast_to(a, e.shape)):
            fh.write("%.17g,%.17g,%.17g\n" % row)
