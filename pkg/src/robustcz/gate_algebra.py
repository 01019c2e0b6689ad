"""Phase bookkeeping for diagonal multi-qubit gates plus a small state-vector simulator.

Conventions, fixed once and used everywhere in this package:

* Qubit 0 is the top rail of a circuit diagram.  Basis states are ordered
  lexicographically, so qubit 0 is the most significant bit of the index.
* ``Z_theta = diag(1, exp(i*theta))`` on a single qubit.
* ``CZ_phi`` multiplies only the pair state |11> by ``exp(i*phi)``; a bare
  CZ is ``CZ_pi``.
* Global phase is unobservable.  Canonical form shifts all phases so that
  ``phases[0] == 0`` and wraps everything into ``(-pi, pi]``.

Any symmetric parameterization ``diag(e^{i a}, e^{i b}, e^{i g},
e^{-i(a+b+g)})`` of a two-qubit diagonal maps onto this convention through
the unique canonical decomposition: top-rail phase ``g - a``, bottom-rail
phase ``b - a``, conditional phase ``-2*(b + g)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi

NORM_TOL = 1e-12


def wrap_phase(phi):
    """Reduce an angle (or array of angles) to the half-open interval (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(phi, dtype=float), TWO_PI)


def circle_distance(p, q):
    """Distance between two angles on the circle, in radians."""
    return np.abs(wrap_phase(np.asarray(p) - np.asarray(q)))


@dataclass(frozen=True)
class DiagonalGate:
    """An n-qubit unitary that is diagonal in the computational basis.

    ``phases[k]`` is the phase (radians) applied to basis state k, with
    qubit 0 as the most significant bit of k.
    """

    num_qubits: int
    phases: tuple

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be a positive integer")
        phases = tuple(float(p) for p in self.phases)
        if len(phases) != 2 ** self.num_qubits:
            raise ValueError(
                f"expected {2 ** self.num_qubits} phases, got {len(phases)}"
            )
        if not all(math.isfinite(p) for p in phases):
            raise ValueError("phases must be finite")
        object.__setattr__(self, "phases", phases)

    def phase_vector(self) -> np.ndarray:
        return np.array(self.phases, dtype=float)

    def matrix(self) -> np.ndarray:
        return np.diag(np.exp(1j * self.phase_vector()))


def canonicalize(g: DiagonalGate) -> DiagonalGate:
    """Remove global phase (phases[0] -> 0) and wrap all phases to (-pi, pi]."""
    p = g.phase_vector()
    return DiagonalGate(g.num_qubits, tuple(wrap_phase(p - p[0])))


def compose(g1: DiagonalGate, g2: DiagonalGate) -> DiagonalGate:
    """Product of two diagonal gates: phases add elementwise (canonicalized)."""
    if g1.num_qubits != g2.num_qubits:
        raise ValueError("cannot compose gates of different dimension")
    return canonicalize(
        DiagonalGate(g1.num_qubits, tuple(g1.phase_vector() + g2.phase_vector()))
    )


def identity_gate(num_qubits: int) -> DiagonalGate:
    return DiagonalGate(num_qubits, (0.0,) * (2 ** num_qubits))


def build_zzc(a: float, b: float, c: float) -> DiagonalGate:
    """Two-qubit gate Z_a (qubit 0) * Z_b (qubit 1) * CZ_c, canonical form."""
    return canonicalize(DiagonalGate(2, (0.0, b, a, a + b + c)))


def extract_zzc(g: DiagonalGate):
    """Unique (a, b, c) with canonicalize(g) == Z_a x Z_b * CZ_c.

    a is the top-rail (qubit 0) phase, b the bottom-rail phase, c the
    conditional phase on |11>.  Every two-qubit diagonal decomposes this way.
    """
    if g.num_qubits != 2:
        raise ValueError("extract_zzc requires a two-qubit gate")
    p = canonicalize(g).phase_vector()
    return float(p[2]), float(p[1]), float(wrap_phase(p[3] - p[2] - p[1]))


def _qubit_bit(num_qubits: int, qubit: int) -> int:
    if not 0 <= qubit < num_qubits:
        raise IndexError(f"qubit index {qubit} out of range for {num_qubits} qubits")
    return 1 << (num_qubits - 1 - qubit)


def x_conjugate(g: DiagonalGate, qubit: int) -> DiagonalGate:
    """X_q g X_q: permute phases by flipping bit q, then canonicalize."""
    mask = _qubit_bit(g.num_qubits, qubit)
    p = g.phase_vector()
    perm = np.arange(p.size) ^ mask
    return canonicalize(DiagonalGate(g.num_qubits, tuple(p[perm])))


def embed_phase_vector(phases: np.ndarray, qubits, num_qubits: int) -> np.ndarray:
    """Lift a phase vector on a qubit subset to the full register."""
    phases = np.asarray(phases, dtype=float)
    k = len(qubits)
    if phases.size != 2 ** k:
        raise ValueError("phase vector does not match number of target qubits")
    idx = np.arange(2 ** num_qubits)
    sub = np.zeros_like(idx)
    for pos, q in enumerate(qubits):
        bit = (idx >> (num_qubits - 1 - q)) & 1
        sub |= bit << (k - 1 - pos)
    return phases[sub]


class DiagonalCircuit:
    """Accumulator for circuits made of diagonal gates and X gates.

    Maintains the exact factored form ``U = X_mask * D`` where ``D`` is
    diagonal and ``X_mask`` flips the qubits named by ``mask``.  Appending a
    diagonal gate Q after the current circuit updates the phase vector via
    ``p[b] += q[b ^ mask]``; appending X on qubit q toggles the mask.
    """

    def __init__(self, num_qubits: int):
        self.num_qubits = num_qubits
        self._phases = np.zeros(2 ** num_qubits)
        self._mask = 0

    def apply_diagonal(self, gate: DiagonalGate, qubits=None) -> None:
        if qubits is None:
            qubits = tuple(range(self.num_qubits))
        full = embed_phase_vector(gate.phase_vector(), qubits, self.num_qubits)
        idx = np.arange(full.size) ^ self._mask
        self._phases += full[idx]

    def apply_phases(self, phases, qubits=None) -> None:
        n = int(round(math.log2(len(phases))))
        self.apply_diagonal(DiagonalGate(n, tuple(phases)), qubits)

    def apply_x(self, qubit: int) -> None:
        self._mask ^= _qubit_bit(self.num_qubits, qubit)

    def result(self):
        """Return (x_flags, diagonal): the circuit equals X on the flagged
        qubits applied after the (canonicalized) diagonal."""
        flags = tuple(
            bool(self._mask & _qubit_bit(self.num_qubits, q))
            for q in range(self.num_qubits)
        )
        diag = canonicalize(DiagonalGate(self.num_qubits, tuple(self._phases)))
        return flags, diag

    def matrix(self) -> np.ndarray:
        flags, diag = self.result()
        m = diag.matrix()
        perm = np.arange(2 ** self.num_qubits) ^ self._mask
        return m[perm, :]


@dataclass(frozen=True)
class CycleParams:
    """Six phase angles of one ramp-dwell-ramp control cycle plus the dwell time.

    a, b, c accumulate in transit (ancilla Z, data Z, conditional) and are
    the noise-sensitive parameters; d, e, f accumulate during the dwell of
    length tau (ns) at the operating point.
    """

    a: float
    b: float
    c: float
    d: float
    e: float
    f: float
    tau: float = 0.0

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "e", "f", "tau"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")

    def transit_gate(self) -> DiagonalGate:
        return build_zzc(self.a, self.b, self.c)

    def dwell_gate(self) -> DiagonalGate:
        return build_zzc(self.d, self.e, self.f)

    def as_gate(self) -> DiagonalGate:
        """Net cycle: transit and dwell phases add."""
        return build_zzc(self.a + self.d, self.b + self.e, self.c + self.f)


def double_cycle_net(cycle1: CycleParams, cycle2: CycleParams):
    """Net operation of cycle1, X on the ancilla (qubit 0), cycle2.

    Returns ``(diagonal, trailing_x)``: the sequence equals the diagonal
    followed by an X on the ancilla.  When cycle1 dwells to a conditional
    phase of pi and cycle2 has no dwell, the diagonal is
    Z_d (ancilla) * Z_g (data) * CZ_pi with g = 2b + c + e, and the transit
    phase a has dropped out.
    """
    ckt = DiagonalCircuit(2)
    ckt.apply_diagonal(cycle1.as_gate())
    ckt.apply_x(0)
    ckt.apply_diagonal(cycle2.as_gate())
    flags, diag = ckt.result()
    assert flags == (True, False)
    return diag, True


def composite_ideal(dc1, dc2):
    """Net operation of two ancilla-refocused double-cycles around a data X.

    ``dc1`` and ``dc2`` are (cycle_with_dwell, cycle_without_dwell) pairs;
    the first acts on (ancilla 0, data), the second on (ancilla 1, data) of
    a three-qubit register (ancilla1, ancilla2, data).  Returns
    ``(diagonal, x_flags)`` with the trailing X flags per qubit; when both
    double-cycles share the same transit phases the diagonal reduces to
    CZ(ancilla1, data) * CZ(ancilla2, data) times single-qubit Z phases on
    the ancillas only.
    """
    ckt = DiagonalCircuit(3)
    ckt.apply_diagonal(dc1[0].as_gate(), qubits=(0, 2))
    ckt.apply_x(0)
    ckt.apply_diagonal(dc1[1].as_gate(), qubits=(0, 2))
    ckt.apply_x(2)
    ckt.apply_diagonal(dc2[0].as_gate(), qubits=(1, 2))
    ckt.apply_x(1)
    ckt.apply_diagonal(dc2[1].as_gate(), qubits=(1, 2))
    flags, diag = ckt.result()
    assert flags == (True, True, True)
    return diag, flags


def single_qubit_phases(g: DiagonalGate) -> np.ndarray:
    """Per-qubit Z angles read off the weight-one basis states."""
    p = canonicalize(g).phase_vector()
    n = g.num_qubits
    return np.array([p[_qubit_bit(n, q)] for q in range(n)])


def strip_single_qubit(g: DiagonalGate) -> DiagonalGate:
    """Remove the single-qubit Z content, leaving the entangling part."""
    g = canonicalize(g)
    p = g.phase_vector()
    n = g.num_qubits
    idx = np.arange(p.size)
    for q, theta in enumerate(single_qubit_phases(g)):
        bit = (idx >> (n - 1 - q)) & 1
        p = p - theta * bit
    return canonicalize(DiagonalGate(n, tuple(p)))


# ---------------------------------------------------------------------------
# Pure-state circuit simulation
# ---------------------------------------------------------------------------

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class PureState:
    """State vector of an n-qubit register (qubit 0 = most significant bit)."""

    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (2 ** self.num_qubits,):
            raise ValueError("amplitude vector has wrong length")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state not normalized: |psi|^2 = {norm!r}")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def computational(cls, num_qubits: int, index: int) -> "PureState":
        amps = np.zeros(2 ** num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_amplitudes(cls, amps) -> "PureState":
        amps = np.asarray(amps, dtype=complex)
        n = int(round(math.log2(amps.size)))
        return cls(n, amps)


@dataclass(frozen=True)
class Branch:
    """One measurement branch: recorded outcomes, Born probability, state.

    ``state`` is None when the branch has (numerically) zero probability.
    """

    outcomes: tuple
    probability: float
    state: PureState | None


def _apply_single(amps: np.ndarray, num_qubits: int, qubit: int, u00, u01, u10, u11):
    mask = _qubit_bit(num_qubits, qubit)
    idx = np.arange(amps.size)
    lo = idx[(idx & mask) == 0]
    hi = lo | mask
    a0 = amps[lo].copy()
    a1 = amps[hi].copy()
    amps[lo] = u00 * a0 + u01 * a1
    amps[hi] = u10 * a0 + u11 * a1


def simulate_circuit(initial: PureState, ops):
    """Run a circuit of H, X, Z_theta, CZ_phi and measurements exactly.

    ``ops`` is a sequence of tuples::

        ("h", q)  ("x", q)  ("z", q, theta)  ("cz", q1, q2[, phi])  ("measure", q)

    Measurements are not sampled: every branch is kept with its Born
    probability, so the returned list enumerates all outcome combinations in
    lexicographic order (outcome 0 first at each split).
    """
    n = initial.num_qubits
    branches = [((), 1.0, initial.amplitudes.copy())]
    for op in ops:
        name = op[0].lower()
        if name == "measure":
            qubit = op[1]
            mask = _qubit_bit(n, qubit)
            idx = np.arange(2 ** n)
            out = []
            for outcomes, prob, amps in branches:
                if amps is None:
                    out.append((outcomes + (0,), 0.0, None))
                    out.append((outcomes + (1,), 0.0, None))
                    continue
                sel1 = (idx & mask) != 0
                p1 = float(np.sum(np.abs(amps[sel1]) ** 2))
                p0 = max(0.0, 1.0 - p1)
                for outcome, p, sel in ((0, p0, ~sel1), (1, p1, sel1)):
                    if p <= 1e-24:
                        out.append((outcomes + (outcome,), 0.0, None))
                        continue
                    new = np.zeros_like(amps)
                    new[sel] = amps[sel] / math.sqrt(p)
                    out.append((outcomes + (outcome,), prob * p, new))
            branches = out
            continue
        for outcomes, prob, amps in branches:
            if amps is None:
                continue
            if name == "h":
                _apply_single(amps, n, op[1], _INV_SQRT2, _INV_SQRT2,
                              _INV_SQRT2, -_INV_SQRT2)
            elif name == "x":
                _apply_single(amps, n, op[1], 0.0, 1.0, 1.0, 0.0)
            elif name == "z":
                mask = _qubit_bit(n, op[1])
                idx = np.arange(amps.size)
                amps[(idx & mask) != 0] *= np.exp(1j * op[2])
            elif name == "cz":
                phi = op[3] if len(op) > 3 else math.pi
                m1 = _qubit_bit(n, op[1])
                m2 = _qubit_bit(n, op[2])
                if m1 == m2:
                    raise ValueError("cz requires two distinct qubits")
                idx = np.arange(amps.size)
                both = ((idx & m1) != 0) & ((idx & m2) != 0)
                amps[both] *= np.exp(1j * phi)
            else:
                raise ValueError(f"unknown operation {op!r}")
    return [
        Branch(outcomes, prob, None if amps is None else PureState(n, amps))
        for outcomes, prob, amps in branches
    ]


def mediated_cz_ops():
    """Discard circuit: two ancilla-data CZs with the second ancilla in |0>.

    Register (ancilla1, ancilla2, data); measuring the unused ancilla leaves
    a plain CZ between ancilla1 and the data qubit.
    """
    return [("cz", 0, 2), ("cz", 1, 2), ("measure", 1)]


def mediated_data_data_cz_ops():
    """Data-data CZ mediated by a fresh ancilla (register: ancilla, d1, d2).

    The Hadamard-conjugated CZs copy d1 onto the ancilla, pick up the
    conditional phase against d2, then uncopy; the ancilla measurement is
    deterministic (outcome 0).
    """
    return [
        ("h", 0), ("cz", 0, 1), ("h", 0),
        ("cz", 0, 2),
        ("h", 0), ("cz", 0, 1), ("h", 0),
        ("measure", 0),
    ]


def indirect_measurement_ops():
    """Measure a data qubit through an ancilla (register: ancilla, data)."""
    return [("h", 0), ("cz", 0, 1), ("h", 0), ("measure", 0)]


# ---------------------------------------------------------------------------
# Identity verification suite
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    max_error: float


def _batch_diag(phases: np.ndarray) -> np.ndarray:
    n, d = phases.shape
    u = np.zeros((n, d, d), dtype=complex)
    rng = np.arange(d)
    u[:, rng, rng] = np.exp(1j * phases)
    return u


def _x_matrix(num_qubits: int, qubit: int) -> np.ndarray:
    mask = _qubit_bit(num_qubits, qubit)
    m = np.zeros((2 ** num_qubits,) * 2)
    idx = np.arange(2 ** num_qubits)
    m[idx ^ mask, idx] = 1.0
    return m


def _phase_free_mismatch(u1: np.ndarray, u2: np.ndarray) -> float:
    """max |U1 - e^{i phi} U2| over a batch, minimizing the global phase."""
    m = u1 @ np.conj(np.swapaxes(u2, -1, -2))
    d = m.shape[-1]
    # for U1 = e^{i phi} U2 the product is e^{i phi} I; read phi off the trace
    tr = np.trace(m, axis1=-2, axis2=-1)
    phase = tr / np.abs(tr)
    eye = np.eye(d)
    return float(np.max(np.abs(m - phase[..., None, None] * eye)))


def verify_identities(seed: int = 42, n_sets: int = 10_000, corrupt: bool = False):
    """Check the diagonal-gate circuit identities on random parameter sets.

    Returns a list of IdentityCheck with the worst error found for each
    identity.  ``corrupt`` deliberately breaks the expected data-phase
    formula of the refocused double-cycle; it exists only as a negative
    control for the verification harness itself.
    """
    rng = np.random.default_rng(seed)
    checks = []

    # global-phase removal: shifted inputs canonicalize identically
    p = rng.uniform(-math.pi, math.pi, size=(n_sets, 4))
    shift = rng.uniform(-10, 10, size=(n_sets, 1))
    c1 = wrap_phase(p - p[:, :1])
    c2 = wrap_phase((p + shift) - (p + shift)[:, :1])
    checks.append(IdentityCheck(
        "canonical form invariant under global phase",
        float(np.max(circle_distance(c1, c2)))))

    # Z x Z * CZ decomposition round trip, against the dense matrix product
    abc = rng.uniform(-math.pi, math.pi, size=(n_sets, 3))
    built = np.stack([np.zeros(n_sets), abc[:, 1], abc[:, 0],
                      abc[:, 0] + abc[:, 1] + abc[:, 2]], axis=1)
    za = _batch_diag(np.stack([np.zeros(n_sets), np.zeros(n_sets),
                               abc[:, 0], abc[:, 0]], axis=1))
    zb = _batch_diag(np.stack([np.zeros(n_sets), abc[:, 1],
                               np.zeros(n_sets), abc[:, 1]], axis=1))
    cz = _batch_diag(np.stack([np.zeros(n_sets), np.zeros(n_sets),
                               np.zeros(n_sets), abc[:, 2]], axis=1))
    err_build = float(np.max(np.abs(_batch_diag(built) - za @ zb @ cz)))
    # extraction recovers the parameters from the wrapped canonical phases
    canon = wrap_phase(built - built[:, :1])
    ext = np.stack([canon[:, 2], canon[:, 1],
                    wrap_phase(canon[:, 3] - canon[:, 2] - canon[:, 1])], axis=1)
    err_round = float(np.max(circle_distance(ext, abc)))
    checks.append(IdentityCheck("Z x Z * CZ decomposition round trip",
                                max(err_build, err_round)))

    # three commuting stages compose with elementwise-additive parameters
    s = rng.uniform(-math.pi, math.pi, size=(n_sets, 3, 3))
    stage_phases = np.stack([np.zeros((n_sets, 3)), s[:, :, 1], s[:, :, 0],
                             s.sum(axis=2)], axis=-1)  # (n, stage, 4)
    total = wrap_phase(stage_phases.sum(axis=1))
    summed = s.sum(axis=1)
    expect = wrap_phase(np.stack([np.zeros(n_sets), summed[:, 1], summed[:, 0],
                                  summed.sum(axis=1)], axis=1))
    checks.append(IdentityCheck(
        "three-stage cycle parameters add",
        float(np.max(circle_distance(total, expect)))))

    # ancilla-refocused double-cycle: dense chain vs closed form
    a, b, c, d, e = (rng.uniform(-math.pi, math.pi, size=n_sets) for _ in range(5))
    f = np.full(n_sets, math.pi)
    cyc1 = np.stack([np.zeros(n_sets), b + e, a + d, a + b + c + d + e + f], axis=1)
    cyc0 = np.stack([np.zeros(n_sets), b, a, a + b + c], axis=1)
    x0 = _x_matrix(2, 0)
    lhs = _batch_diag(cyc0) @ x0 @ _batch_diag(cyc1)
    g = 2 * b + c + e
    if corrupt:
        g = 2 * b + c - e
    net = np.stack([np.zeros(n_sets), g, d, g + d + math.pi], axis=1)
    rhs = x0 @ _batch_diag(net)
    err_form = _phase_free_mismatch(lhs, rhs)
    # independence from the transit phase a
    a2 = a + rng.uniform(-math.pi, math.pi, size=n_sets)
    cyc1b = np.stack([np.zeros(n_sets), b + e, a2 + d, a2 + b + c + d + e + f], axis=1)
    cyc0b = np.stack([np.zeros(n_sets), b, a2, a2 + b + c], axis=1)
    lhs_b = _batch_diag(cyc0b) @ x0 @ _batch_diag(cyc1b)
    err_a = _phase_free_mismatch(lhs, lhs_b)
    checks.append(IdentityCheck(
        "refocused double-cycle closed form (data phase 2b+c+e)",
        max(err_form, err_a)))

    # composite gate: dense 8x8 chain; shared-transit dependence cancels
    def composite(a, b, c, d, e):
        f = np.full(n_sets, math.pi)
        net1 = np.stack([np.zeros(n_sets), 2 * b + c + e, d,
                         2 * b + c + e + d + math.pi], axis=1)
        u2 = _x_matrix(2, 0) @ _batch_diag(net1)
        lift1 = np.zeros((n_sets, 8, 8), dtype=complex)
        lift2 = np.zeros((n_sets, 8, 8), dtype=complex)
        idx = np.arange(8)
        b0, b1, b2 = (idx >> 2) & 1, (idx >> 1) & 1, idx & 1
        sub1 = 2 * b0 + b2
        sub2 = 2 * b1 + b2
        for i in range(8):
            for j in range(8):
                if b1[i] == b1[j]:
                    lift1[:, i, j] = u2[:, sub1[i], sub1[j]]
                if b0[i] == b0[j]:
                    lift2[:, i, j] = u2[:, sub2[i], sub2[j]]
        return lift2 @ _x_matrix(3, 2) @ lift1

    a, b, c, d, e = (rng.uniform(-math.pi, math.pi, size=n_sets) for _ in range(5))
    u = composite(a, b, c, d, e)
    czcz = np.zeros(8)
    idx = np.arange(8)
    czcz += math.pi * (((idx >> 2) & 1) & (idx & 1))
    czcz += math.pi * (((idx >> 1) & 1) & (idx & 1))
    singles = d[:, None] * ((idx >> 2) & 1)[None, :] \
        + (d + math.pi)[:, None] * ((idx >> 1) & 1)[None, :]
    ideal = _batch_diag(czcz[None, :] + singles)
    xs = _x_matrix(3, 0) @ _x_matrix(3, 1) @ _x_matrix(3, 2)
    err_comp = _phase_free_mismatch(u, xs @ ideal)
    # vary the shared transit phases: the full unitary must not move
    b2_, c2_ = (rng.uniform(-math.pi, math.pi, size=n_sets) for _ in range(2))
    err_g = _phase_free_mismatch(u, composite(a, b2_, c2_, d, e))
    checks.append(IdentityCheck(
        "composite gate equals CZ*CZ up to known singles; transit cancels",
        max(err_comp, err_g)))

    # circuit-level checks (measurement identities)
    checks.append(IdentityCheck("ancilla-discard circuit acts as CZ",
                                _check_mediated_cz(rng)))
    checks.append(IdentityCheck("mediated data-data CZ circuit",
                                _check_data_data_cz(rng)))
    checks.append(IdentityCheck("indirect measurement Born probabilities",
                                _check_indirect_measurement(rng)))
    return checks


def _random_state(rng, num_qubits: int) -> np.ndarray:
    amps = rng.normal(size=2 ** num_qubits) + 1j * rng.normal(size=2 ** num_qubits)
    return amps / np.linalg.norm(amps)


def _check_mediated_cz(rng, n_random: int = 20) -> float:
    cz = np.diag(np.exp(1j * math.pi * np.array([0, 0, 0, 1.0])))
    worst = 0.0
    plus = np.full(4, 0.5, dtype=complex)
    states = [np.eye(4)[k] for k in range(4)] + [plus] \
        + [_random_state(rng, 2) for _ in range(n_random)]
    for psi in states:
        full = np.zeros(8, dtype=complex)
        # interleave ancilla2 = |0> as the middle qubit
        full[[0, 1, 4, 5]] = psi
        branches = simulate_circuit(PureState.from_amplitudes(full),
                                    mediated_cz_ops())
        live = [br for br in branches if br.probability > 1e-24]
        worst = max(worst, abs(live[0].probability - 1.0),
                    float(len(live) != 1))
        out = live[0].state.amplitudes[[0, 1, 4, 5]]
        worst = max(worst, float(np.max(np.abs(out - cz @ psi))))
    return worst


def _check_data_data_cz(rng, n_random: int = 20) -> float:
    cz = np.diag(np.exp(1j * math.pi * np.array([0, 0, 0, 1.0])))
    worst = 0.0
    states = [np.eye(4)[k] for k in range(4)] \
        + [_random_state(rng, 2) for _ in range(n_random)]
    for psi in states:
        full = np.zeros(8, dtype=complex)
        full[:4] = psi  # ancilla |0> is the top qubit
        branches = simulate_circuit(PureState.from_amplitudes(full),
                                    mediated_data_data_cz_ops())
        live = [br for br in branches if br.probability > 1e-24]
        worst = max(worst, abs(live[0].probability - 1.0),
                    float(live[0].outcomes != (0,)), float(len(live) != 1))
        out = live[0].state.amplitudes[:4]
        worst = max(worst, float(np.max(np.abs(out - cz @ psi))))
    return worst


def _check_indirect_measurement(rng, n_random: int = 20) -> float:
    worst = 0.0
    probs = [0.3] + [float(p) for p in rng.uniform(0, 1, size=n_random)]
    for p0 in probs:
        alpha, beta = math.sqrt(p0), math.sqrt(1 - p0)
        phase = np.exp(1j * rng.uniform(-math.pi, math.pi))
        psi = np.array([alpha, beta * phase], dtype=complex)
        full = np.zeros(4, dtype=complex)
        full[:2] = psi  # ancilla |0>, data on qubit 1
        branches = simulate_circuit(PureState.from_amplitudes(full),
                                    indirect_measurement_ops())
        got = {br.outcomes[0]: br.probability for br in branches}
        worst = max(worst, abs(got[0] - p0), abs(got[1] - (1 - p0)))
    return worst
