"""Dense statevector simulation core.

Conventions (normative for the whole package):

* qubit 0 is the leftmost symbol of a ket and the most significant bit of a
  basis index, so ``|q0 q1 q2>`` reads left to right;
* states are compared up to global phase; where amplitude-exact output is
  needed the phase is fixed by making the first nonzero amplitude real and
  positive (:func:`phase_fixed`);
* U3(theta, phi, lam) = [[cos(t/2),            -e^{i lam} sin(t/2)],
                         [e^{i phi} sin(t/2),  e^{i(phi+lam)} cos(t/2)]],
  chosen so that U3(pi/2, 0, 0)|0> = (|0> + |1>)/sqrt(2).

All operations are pure: they return new values and never mutate inputs.
The per-gate kernels also accept a batch axis (shape ``(batch, 2**n)``),
which the noise module uses to run many trajectories at once with arithmetic
identical to the single-vector path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .rng import STREAM_MEASURE, uniforms

MAX_QUBITS = 24  # dense amplitudes only; 2^24 complex doubles = 256 MiB

NORM_ATOL = 1e-12


class InvariantViolation(RuntimeError):
    """An internal consistency check failed (maps to CLI exit code 3)."""


# ---------------------------------------------------------------------------
# gate model
# ---------------------------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_SDG = np.array([[1, 0], [0, -1j]], dtype=np.complex128)

_FIXED_1Q = {"H": _H, "X": _X, "Y": _Y, "Z": _Z, "SDG": _SDG}


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array(
        [
            [c, -np.exp(1j * lam) * s],
            [np.exp(1j * phi) * s, np.exp(1j * (phi + lam)) * c],
        ],
        dtype=np.complex128,
    )


@dataclass(frozen=True)
class Gate:
    """One circuit operation.

    ``kind`` is one of H, X, Y, Z, SDG, U3 (single-qubit, acting on
    ``target``) or CONTROLLED (``base`` in {X, Z} on ``target``, conditioned
    on ``controls``).  Each control is ``(qubit, closed)`` where ``closed``
    True conditions on |1> and False ("open" control) conditions on |0>.
    Y and SDG are U3 specializations kept as named kinds for readable
    circuit dumps.
    """

    kind: str
    target: int
    params: tuple[float, ...] = ()
    controls: tuple[tuple[int, bool], ...] = ()
    base: str = ""

    def __post_init__(self):
        if self.kind == "CONTROLLED":
            if self.base not in ("X", "Z"):
                raise ValueError(f"controlled base must be X or Z, got {self.base!r}")
            if not self.controls:
                raise ValueError("CONTROLLED gate needs at least one control")
        elif self.kind == "U3":
            if len(self.params) != 3:
                raise ValueError("U3 takes exactly (theta, phi, lam)")
        elif self.kind not in _FIXED_1Q:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        qubits = self.qubits
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"gate qubits must be distinct, got {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError(f"gate qubits must be non-negative, got {qubits}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.controls) + (self.target,)

    def matrix_1q(self) -> np.ndarray:
        """2x2 matrix of the single-qubit action (base matrix if controlled)."""
        if self.kind == "U3":
            return u3_matrix(*self.params)
        if self.kind == "CONTROLLED":
            return _FIXED_1Q[self.base]
        return _FIXED_1Q[self.kind]


def h(q: int) -> Gate:
    return Gate("H", q)


def x(q: int) -> Gate:
    return Gate("X", q)


def y(q: int) -> Gate:
    return Gate("Y", q)


def z(q: int) -> Gate:
    return Gate("Z", q)


def sdg(q: int) -> Gate:
    """Adjoint phase gate diag(1, -i)."""
    return Gate("SDG", q)


def u3(q: int, theta: float, phi: float, lam: float) -> Gate:
    return Gate("U3", q, params=(theta, phi, lam))


def controlled(base: str, controls, target: int) -> Gate:
    return Gate("CONTROLLED", target, controls=tuple((int(q), bool(c)) for q, c in controls), base=base)


def cnot(control: int, target: int) -> Gate:
    return controlled("X", [(control, True)], target)


def cz(control: int, target: int) -> Gate:
    return controlled("Z", [(control, True)], target)


def ccnot(c0: int, c1: int, target: int) -> Gate:
    return controlled("X", [(c0, True), (c1, True)], target)


def ccz(c0: int, c1: int, target: int) -> Gate:
    return controlled("Z", [(c0, True), (c1, True)], target)


def pauli_gate(label: str, q: int) -> Gate:
    if label not in ("X", "Y", "Z"):
        raise ValueError(f"not a non-identity Pauli label: {label!r}")
    return Gate(label, q)


# ---------------------------------------------------------------------------
# states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitudes over 2**n_qubits basis states (qubit 0 = MSB)."""

    n_qubits: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 1 << self.n_qubits:
            raise ValueError(
                f"expected {1 << self.n_qubits} amplitudes for {self.n_qubits} qubits, got {amps.shape[0]}"
            )
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_normalized(self, atol: float = NORM_ATOL) -> None:
        if abs(self.norm() - 1.0) > atol:
            raise InvariantViolation(f"state norm {self.norm()} deviates from 1 beyond {atol}")

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def basis_label(self, index: int) -> str:
        return format(index, f"0{self.n_qubits}b")


def zero_state(n: int) -> StateVector:
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n must be in [1, {MAX_QUBITS}], got {n}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return StateVector(n, amps)


def plus_state(n: int) -> StateVector:
    """|+>^n: every amplitude 2^(-n/2), the starting point of every channel."""
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n must be in [1, {MAX_QUBITS}], got {n}")
    amps = np.full(1 << n, 2.0 ** (-n / 2), dtype=np.complex128)
    return StateVector(n, amps)


def from_amplitudes(amps, n_qubits: int | None = None, normalize: bool = False) -> StateVector:
    amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
    if n_qubits is None:
        n_qubits = int(round(math.log2(amps.shape[0])))
    if normalize:
        nrm = np.linalg.norm(amps)
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        amps = amps / nrm
    return StateVector(n_qubits, amps)


def phase_fixed(state: StateVector, atol: float = 1e-12) -> StateVector:
    """Rotate the global phase so the first nonzero amplitude is real > 0."""
    amps = state.amplitudes
    nz = np.flatnonzero(np.abs(amps) > atol)
    if nz.size == 0:
        return state
    a = amps[nz[0]]
    return StateVector(state.n_qubits, amps * (np.conj(a) / abs(a)))


def states_equal_up_to_phase(a: StateVector, b: StateVector, atol: float = 1e-10) -> bool:
    if a.n_qubits != b.n_qubits:
        return False
    return abs(abs(np.vdot(a.amplitudes, b.amplitudes)) - 1.0) <= atol


# ---------------------------------------------------------------------------
# gate application
# ---------------------------------------------------------------------------


def _apply_1q_raw(amps: np.ndarray, n: int, q: int, u: np.ndarray) -> None:
    """Apply 2x2 ``u`` on qubit ``q`` in place; ``amps`` is (..., 2**n)."""
    lead = amps.shape[:-1]
    view = amps.reshape(*lead, 1 << q, 2, 1 << (n - 1 - q))
    a0 = view[..., 0, :].copy()
    a1 = view[..., 1, :]
    view[..., 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    view[..., 1, :] = u[1, 0] * a0 + u[1, 1] * a1


def _control_mask(n: int, controls: tuple[tuple[int, bool], ...]) -> np.ndarray:
    idx = np.arange(1 << n)
    mask = np.ones(1 << n, dtype=bool)
    for q, closed in controls:
        bit = (idx >> (n - 1 - q)) & 1
        mask &= (bit == 1) if closed else (bit == 0)
    return mask


def _apply_controlled_raw(amps: np.ndarray, n: int, gate: Gate) -> None:
    tbit = 1 << (n - 1 - gate.target)
    mask = _control_mask(n, gate.controls)
    if gate.base == "Z":
        idx = np.arange(1 << n)
        sel = np.flatnonzero(mask & ((idx & tbit) != 0))
        amps[..., sel] *= -1
    else:  # X
        idx = np.arange(1 << n)
        lo = np.flatnonzero(mask & ((idx & tbit) == 0))
        hi = lo | tbit
        tmp = amps[..., lo].copy()
        amps[..., lo] = amps[..., hi]
        amps[..., hi] = tmp


def apply_gate_raw(amps: np.ndarray, n: int, gate: Gate) -> None:
    """In-place kernel shared by the pure API and the trajectory batcher."""
    for q in gate.qubits:
        if q >= n:
            raise ValueError(f"gate touches qubit {q} but state has {n} qubits")
    if gate.kind == "CONTROLLED":
        _apply_controlled_raw(amps, n, gate)
    else:
        _apply_1q_raw(amps, n, gate.target, gate.matrix_1q())


def apply_gate(state: StateVector, gate: Gate) -> StateVector:
    """Return gate * state (norm preserved to 1e-12)."""
    amps = state.amplitudes.copy()
    apply_gate_raw(amps, state.n_qubits, gate)
    out = StateVector(state.n_qubits, amps)
    out.check_normalized()
    return out


def apply_circuit(state: StateVector, gates) -> StateVector:
    amps = state.amplitudes.copy()
    for g in gates:
        apply_gate_raw(amps, state.n_qubits, g)
    out = StateVector(state.n_qubits, amps)
    out.check_normalized()
    return out


def gate_unitary(gate: Gate, n: int) -> np.ndarray:
    """Dense 2**n x 2**n matrix of the embedded gate (test/diagnostic use)."""
    dim = 1 << n
    rows = np.eye(dim, dtype=np.complex128)  # row j = gate applied to |j>
    apply_gate_raw(rows, n, gate)
    return rows.T.copy()


# ---------------------------------------------------------------------------
# measurement sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShotHistogram:
    """Counts of measured bit strings, with the seed that produced them."""

    n_qubits: int
    counts: dict[str, int]
    shots: int
    seed: int

    def __post_init__(self):
        if self.shots <= 0:
            raise ValueError("shots must be positive")
        total = sum(self.counts.values())
        if total != self.shots:
            raise InvariantViolation(f"counts sum to {total}, expected {self.shots}")
        for key, c in self.counts.items():
            if len(key) != self.n_qubits or set(key) - {"0", "1"}:
                raise InvariantViolation(f"bad histogram key {key!r}")
            if c < 0:
                raise InvariantViolation(f"negative count for {key!r}")

    def frequencies(self) -> dict[str, float]:
        return {k: v / self.shots for k, v in self.counts.items()}


def sample_outcome_indices(probs: np.ndarray, shots: int, seed: int, shot_offset: int = 0) -> np.ndarray:
    """Outcome index per shot, drawn from ``probs`` via the measurement stream.

    Shot ``i`` consumes the single uniform addressed by
    (seed, STREAM_MEASURE, shot_offset + i, 0), so any partition of the shot
    range yields the same multiset of outcomes.
    """
    if shots <= 0:
        raise ValueError("shots must be positive")
    cum = np.cumsum(probs)
    cum[-1] = max(cum[-1], 1.0)  # guard the last interval against rounding
    u = uniforms(seed, STREAM_MEASURE, np.arange(shot_offset, shot_offset + shots))
    return np.searchsorted(cum, u, side="right")


def histogram_from_indices(indices: np.ndarray, n: int, shots: int, seed: int) -> ShotHistogram:
    counts = np.bincount(indices, minlength=1 << n)
    packed = {format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c > 0}
    return ShotHistogram(n, packed, shots, seed)


def sample_shots(state: StateVector, shots: int, seed: int) -> ShotHistogram:
    """Measure every qubit, ``shots`` times, i.i.d. from |amplitude|^2.

    Deterministic: the same (state, shots, seed) always returns the same
    histogram, and splitting the shot range across workers merges to the
    identical result.
    """
    state.check_normalized()
    idx = sample_outcome_indices(state.probabilities(), shots, seed)
    return histogram_from_indices(idx, state.n_qubits, shots, seed)


# ---------------------------------------------------------------------------
# expectation values and marginals
# ---------------------------------------------------------------------------

PAULI_MATRICES = {"I": np.eye(2, dtype=np.complex128), "X": _X, "Y": _Y, "Z": _Z}


def expectation_pauli(state: StateVector, labels: str) -> float:
    """<state| P |state> for P the tensor product of the labelled Paulis.

    Uses P|x> = phase(x) |x ^ m> with m the X/Y flip mask, so no matrix is
    ever materialized; the result is real to 1e-12 and clipped to [-1, 1].
    """
    n = state.n_qubits
    if len(labels) != n:
        raise ValueError(f"label string must have length {n}, got {len(labels)}")
    bad = set(labels) - set("IXYZ")
    if bad:
        raise ValueError(f"invalid Pauli labels: {sorted(bad)}")

    idx = np.arange(state.dim)
    flip = 0
    phase = np.ones(state.dim, dtype=np.complex128)
    for q, lab in enumerate(labels):
        bit = (idx >> (n - 1 - q)) & 1
        if lab == "X":
            flip |= 1 << (n - 1 - q)
        elif lab == "Y":
            flip |= 1 << (n - 1 - q)
            phase = phase * (1j * np.where(bit == 1, -1.0, 1.0))
        elif lab == "Z":
            phase = phase * np.where(bit == 1, -1.0, 1.0)
    amps = state.amplitudes
    val = np.sum(np.conj(amps[idx ^ flip]) * phase * amps)
    if abs(val.imag) > 1e-12:
        raise InvariantViolation(f"Pauli expectation has imaginary part {val.imag}")
    return float(np.clip(val.real, -1.0, 1.0))


def reduced_density(state: StateVector, keep) -> np.ndarray:
    """Partial trace onto ``keep`` (in the given order); Hermitian, trace 1."""
    keep = list(keep)
    n = state.n_qubits
    if not keep:
        raise ValueError("keep list must not be empty")
    if len(set(keep)) != len(keep):
        raise ValueError(f"keep indices must be distinct, got {keep}")
    if any(q < 0 or q >= n for q in keep):
        raise ValueError(f"keep indices out of range for {n} qubits: {keep}")
    rest = [q for q in range(n) if q not in keep]
    tensor = state.amplitudes.reshape((2,) * n)
    tensor = np.transpose(tensor, axes=keep + rest)
    mat = tensor.reshape(1 << len(keep), 1 << len(rest))
    rho = mat @ mat.conj().T
    return rho
