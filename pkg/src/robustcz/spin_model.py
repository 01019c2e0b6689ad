"""Spin-pair physics: constants, hyperfine-vs-field models, Hamiltonian, dipolar scales.

Internal units, chosen so every simulated number stays within a few orders
of magnitude of 1:

    time                ns
    angular frequency   rad/ns      (energies are stored as E/hbar)
    magnetic field      mT
    electric field      MV/m
    hyperfine coupling  MHz         (converted via 2*pi*1e-3 to rad/ns)
    length              nm

Basis for the electron-nuclear pair, index 0..3, electron bit first:

    |0> = up,up    |1> = up,down    |2> = down,up    |3> = down,down

where the first arrow is the electron spin along the applied field and the
second the nucleus.  The flip-flop-coupled pair is (|1>, |2>).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

MHZ_TO_RAD_PER_NS = 2.0 * math.pi * 1e-3

# SI anchors used only to derive the internal constants below
_HBAR_SI = 1.054571817e-34        # J s
_GYRO_ELECTRON_SI = 1.76085963e11  # rad/(s T); g ~ 2 electron
_GYRO_P31_SI = 1.08289e8           # rad/(s T); 31P nucleus, 17.235 MHz/T


@dataclass(frozen=True)
class Constants:
    """Physical constants in internal units.

    ``mu0_over_4pi`` is coherent with hbar = 1 (energies as angular
    frequencies), gyromagnetic ratios in rad/(ns mT) and distances in nm;
    the dipolar coefficient is then mu0_over_4pi * hbar * g1 * g2 / r^3 in
    rad/ns.
    """

    gyro_electron: float = _GYRO_ELECTRON_SI * 1e-12    # rad/(ns mT)
    gyro_phosphorus: float = _GYRO_P31_SI * 1e-12       # rad/(ns mT)
    hbar: float = 1.0
    mu0_over_4pi: float = 1e-7 * _HBAR_SI * 1e42 / 1.0  # = 10.5457...


DEFAULT_CONSTANTS = Constants()


@dataclass(frozen=True)
class DipolarPair:
    """Two point dipoles a distance r apart; orientation taken as worst case."""

    gyro_1: float  # rad/(ns mT)
    gyro_2: float
    r_nm: float

    @classmethod
    def electron_electron(cls, r_nm, constants=DEFAULT_CONSTANTS):
        return cls(constants.gyro_electron, constants.gyro_electron, r_nm)

    @classmethod
    def electron_nucleus(cls, r_nm, constants=DEFAULT_CONSTANTS):
        return cls(constants.gyro_electron, constants.gyro_phosphorus, r_nm)

    @classmethod
    def nucleus_nucleus(cls, r_nm, constants=DEFAULT_CONSTANTS):
        return cls(constants.gyro_phosphorus, constants.gyro_phosphorus, r_nm)


def dipolar_max_strength(pair: DipolarPair, constants=DEFAULT_CONSTANTS) -> float:
    """Worst-case dipolar coupling coefficient, as an ordinary frequency in Hz.

    The angular factor (1 - 3 cos^2) reaches magnitude 2, so the maximum over
    orientations is twice the radial coefficient; the energy coefficient is
    divided by Planck's constant (here: expressed directly in rad/ns and then
    converted to Hz).
    """
    if pair.r_nm <= 0:
        raise ValueError("separation must be positive")
    omega = (2.0 * constants.mu0_over_4pi * constants.hbar
             * pair.gyro_1 * pair.gyro_2 / pair.r_nm ** 3)  # rad/ns
    return omega * 1e9 / (2.0 * math.pi)


# ---------------------------------------------------------------------------
# Hyperfine coupling vs electric field
# ---------------------------------------------------------------------------


def _quintic_hermite(x, v0, d0, s0):
    """Quintic on [0, 1] with value/slope/curvature (v0, d0, s0) at 0 and (0,0,0) at 1."""
    h00 = 1 + x ** 3 * (-10 + x * (15 - 6 * x))
    h10 = x + x ** 3 * (-6 + x * (8 - 3 * x))
    h20 = 0.5 * x ** 2 * (1 + x * (-3 + x * (3 - x)))
    return v0 * h00 + d0 * h10 + s0 * h20


@dataclass(frozen=True)
class AnalyticHyperfine:
    """Synthetic stand-in for a contact hyperfine coupling versus field curve.

    Between the operating point and the ionization knee the coupling follows
    the gentle parabola A_max * (1 - kappa * (E - e_rop)^2): first-order
    insensitive at the maximum, curvature kappa.  From the knee the electron
    unbinds and the coupling is clamped to exactly zero over ``clamp_width``
    with a C2 (quintic) transition, so the drop is steep but jerk-limited
    control stays smooth.  All parameters are configuration; the defaults
    are synthetic, not device data.
    """

    a_max_mhz: float = 117.0
    e_rop: float = 2.0         # MV/m
    kappa: float = 0.01        # (m/MV)^2 curvature of the fractional dip
    e_knee: float = 1.0        # |E - e_rop| where the parabola hands over to the clamp
    clamp_width: float = 0.5   # |E| span over which A falls smoothly to exactly 0
    e_min: float | None = None  # declared domain; None = unbounded
    e_max: float | None = None

    def __post_init__(self):
        if self.a_max_mhz < 0 or self.kappa <= 0:
            raise ValueError("a_max_mhz must be >= 0 and kappa > 0")
        if self.e_knee <= 0 or self.clamp_width <= 0:
            raise ValueError("e_knee and clamp_width must be positive")
        if self.kappa * self.e_knee ** 2 >= 1.0:
            raise ValueError("parabola reaches zero before the knee; "
                             "shrink kappa or e_knee")
        grid = np.linspace(0.0, self.e_knee + self.clamp_width, 4001)
        a = self._value_offset(grid)
        if np.any(a < -1e-12 * max(self.a_max_mhz, 1.0)) or \
                np.any(np.diff(a) > 1e-9 * max(self.a_max_mhz, 1.0)):
            raise ValueError("clamp parameters break the single-maximum shape; "
                             "widen clamp_width")

    def _value_offset(self, delta):
        """A(|E - e_rop|) in MHz."""
        delta = np.abs(np.asarray(delta, dtype=float))
        knee, width = self.e_knee, self.clamp_width
        core = self.a_max_mhz * (1.0 - self.kappa * delta ** 2)
        x = np.clip((delta - knee) / width, 0.0, 1.0)
        v0 = self.a_max_mhz * (1.0 - self.kappa * knee ** 2)
        d0 = -2.0 * self.a_max_mhz * self.kappa * knee * width
        s0 = -2.0 * self.a_max_mhz * self.kappa * width ** 2
        clamp = _quintic_hermite(x, v0, d0, s0)
        out = np.where(delta <= knee, core, clamp)
        return np.where(delta >= knee + width, 0.0, out)

    @property
    def e_zero(self) -> float:
        """Field offset beyond which the coupling is exactly zero."""
        return self.e_knee + self.clamp_width

    def value(self, e):
        e = np.asarray(e, dtype=float)
        out = self._value_offset(e - self.e_rop)
        return float(out) if out.ndim == 0 else out

    def domain(self):
        return self.e_min, self.e_max


@dataclass(frozen=True, eq=False)
class TableHyperfine:
    """Hyperfine curve from tabulated (E, A) pairs, interpolated shape-safely.

    Monotone (PCHIP) piecewise cubics between knots: no overshoot, zero
    derivative at interior extrema, so a tabulated maximum is a genuine
    operating point.  Queries outside the tabulated field range are refused.
    """

    e_values: np.ndarray
    a_values: np.ndarray
    donor_depth_a0: float | None = None  # metadata, units of the 0.54 nm lattice constant

    def __post_init__(self):
        e = np.asarray(self.e_values, dtype=float)
        a = np.asarray(self.a_values, dtype=float)
        if e.ndim != 1 or e.size < 2 or a.shape != e.shape:
            raise ValueError("need matching 1-d E and A arrays with >= 2 rows")
        if not np.all(np.diff(e) > 0):
            raise ValueError("E values must be strictly increasing")
        if np.any(a < 0):
            raise ValueError("hyperfine values must be non-negative")
        object.__setattr__(self, "e_values", e)
        object.__setattr__(self, "a_values", a)
        object.__setattr__(self, "_interp", PchipInterpolator(e, a, extrapolate=False))

    @classmethod
    def from_csv(cls, path, donor_depth_a0=None):
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["E_MV_per_m", "A_MHz"]:
                raise ValueError(
                    "hyperfine table must start with header 'E_MV_per_m,A_MHz'")
            rows = [(float(r[0]), float(r[1])) for r in reader if r]
        if not rows:
            raise ValueError("hyperfine table has no data rows")
        e, a = zip(*rows)
        return cls(np.array(e), np.array(a), donor_depth_a0)

    @property
    def e_rop(self) -> float:
        return float(self.e_values[int(np.argmax(self.a_values))])

    @property
    def a_max_mhz(self) -> float:
        return float(np.max(self.a_values))

    def value(self, e):
        out = self._interp(np.asarray(e, dtype=float))
        return float(out) if out.ndim == 0 else out

    def domain(self):
        return float(self.e_values[0]), float(self.e_values[-1])


def hyperfine_at(model, e):
    """Hyperfine coupling A(E) in MHz; raises outside the declared domain."""
    e_arr = np.asarray(e, dtype=float)
    lo, hi = model.domain()
    if (lo is not None and np.any(e_arr < lo)) or \
            (hi is not None and np.any(e_arr > hi)):
        raise ValueError(
            f"field outside the model domain [{lo}, {hi}]; no extrapolation")
    return model.value(e_arr if e_arr.ndim else float(e_arr))


# ---------------------------------------------------------------------------
# Electron-nuclear pair Hamiltonian
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpinPairParams:
    """Static field, hyperfine model and constants for one electron-nuclear pair."""

    b_mt: float
    hyperfine: AnalyticHyperfine | TableHyperfine = field(
        default_factory=AnalyticHyperfine)
    constants: Constants = DEFAULT_CONSTANTS

    def __post_init__(self):
        if self.b_mt < 0:
            raise ValueError("field must be non-negative")


def hamiltonian(params: SpinPairParams, a_mhz: float) -> np.ndarray:
    """Pair Hamiltonian (rad/ns): field term gS*B*Sz - gP*B*Iz plus A S.I.

    Spin-1/2 operators; the contact term contributes +-A/4 on the diagonal
    and A/2 between the flip-flop pair via (S+I- + S-I+)/2.
    """
    if a_mhz < 0:
        raise ValueError("hyperfine coupling must be non-negative")
    cst = params.constants
    a = MHZ_TO_RAD_PER_NS * a_mhz
    ze = 0.5 * cst.gyro_electron * params.b_mt
    zp = 0.5 * cst.gyro_phosphorus * params.b_mt
    h = np.zeros((4, 4), dtype=complex)
    h[0, 0] = ze - zp + a / 4
    h[1, 1] = ze + zp - a / 4
    h[2, 2] = -ze - zp - a / 4
    h[3, 3] = -ze + zp + a / 4
    h[1, 2] = h[2, 1] = a / 2
    return h


@dataclass(frozen=True)
class SpinEigensystem:
    """Energies labeled by adiabatic continuation from the A = 0 basis order."""

    energies: tuple        # rad/ns, order (up-up, up-down, down-up, down-down)
    gap: float             # flip-flop block splitting, rad/ns
    mixing_angle: float    # radians; 0 at A = 0, pi/4 at B = 0


def eigensystem(params: SpinPairParams, a_mhz: float) -> SpinEigensystem:
    a = MHZ_TO_RAD_PER_NS * a_mhz
    cst = params.constants
    zsum = 0.5 * params.b_mt * (cst.gyro_electron + cst.gyro_phosphorus)
    zdiff = 0.5 * params.b_mt * (cst.gyro_electron - cst.gyro_phosphorus)
    if zsum == 0.0 and a == 0.0:
        raise ValueError("flip-flop block is degenerate at B = 0, A = 0")
    r = math.hypot(zsum, a / 2)
    energies = (zdiff + a / 4, -a / 4 + r, -a / 4 - r, -zdiff + a / 4)
    theta = 0.5 * math.atan2(a / 2, zsum)
    return SpinEigensystem(energies, 2.0 * r, theta)


def eigenbasis(params: SpinPairParams, a_mhz: float) -> np.ndarray:
    """Columns are the adiabatic eigenstates in the computational basis."""
    theta = eigensystem(params, a_mhz).mixing_angle
    v = np.eye(4)
    c, s = math.cos(theta), math.sin(theta)
    v[1, 1] = v[2, 2] = c
    v[2, 1] = s
    v[1, 2] = -s
    return v


def cz_rate(params: SpinPairParams, a_mhz: float) -> float:
    """Accumulation rate (rad/ns) of the conditional phase at fixed control.

    The alternating-sign combination of the four energies; the field terms
    cancel, leaving the contact-interaction contribution.
    """
    e = eigensystem(params, a_mhz).energies
    return e[0] - e[1] - e[2] + e[3]
