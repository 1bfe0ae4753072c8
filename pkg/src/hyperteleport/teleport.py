"""Teleportation protocols over the two hypergraph channels.

Single-qubit protocol (4 qubits: message a, Alice's a1/a2, Bob's b):
CNOT(a->a1), CNOT(a->a2), H(a), H(a2); Alice measures (a, a1, a2) and Bob
applies Z^{m_a} X^{m_a1}.  The a2 bit is always 0 and each of the four
possible outcomes occurs with probability 1/4 regardless of the message.

Two-qubit protocol (6 qubits: message 1/2, Alice's a1/a2, Bob's b1/b2):
CNOT(1->a1), CNOT(2->a2), H(1), H(2); outcome bits m1 m2 m3 m4 select the
correction Z^{m1} X^{m3} on b1 and Z^{m2} X^{m4} on b2.  All 16 outcomes are
uniform at 1/16.

"ZX" means X first, then Z (ZX = iY up to global phase).  Corrections are
exact, so every branch's corrected Bob state equals the message: the
protocols are deterministic with success probability 1.

Besides the normative measure-then-correct semantics, a deferred-measurement
variant is provided (corrections as controlled gates before measurement,
CNOT then CZ per Bob qubit); both leave Bob's marginal identical, and only
the deferred form can run as a plain circuit under the trajectory executor.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import hypergraph as hg
from . import statevec as sv
from .rng import STREAM_BRANCH, uniforms
from .statevec import Gate, StateVector

MSG_NORM_ATOL = 1e-12


def _check_unit(total: float) -> None:
    if abs(total - 1.0) > MSG_NORM_ATOL:
        raise ValueError(f"message amplitudes have squared norm {total}, expected 1")


def u3_angles(alpha: complex, beta: complex) -> tuple[float, float, float]:
    """U3 angles preparing alpha|0> + beta|1> from |0>, up to global phase."""
    theta = 2.0 * math.atan2(abs(beta), abs(alpha))
    if abs(beta) < 1e-15:
        return 0.0, 0.0, 0.0
    if abs(alpha) < 1e-15:
        return math.pi, cmath.phase(beta), 0.0
    return theta, cmath.phase(beta) - cmath.phase(alpha), 0.0


@dataclass(frozen=True)
class SingleQubitMessage:
    alpha: complex
    beta: complex

    def __post_init__(self):
        _check_unit(abs(self.alpha) ** 2 + abs(self.beta) ** 2)

    @classmethod
    def from_u3(cls, theta: float, phi: float, lam: float) -> "SingleQubitMessage":
        col = sv.u3_matrix(theta, phi, lam)[:, 0]
        return cls(complex(col[0]), complex(col[1]))

    @classmethod
    def from_dict(cls, data: dict) -> "SingleQubitMessage":
        return cls(_complex_of(data["alpha"]), _complex_of(data["beta"]))

    def to_dict(self) -> dict:
        return {"alpha": _pair_of(self.alpha), "beta": _pair_of(self.beta)}

    def state(self) -> StateVector:
        return StateVector(1, np.array([self.alpha, self.beta]))

    def prep_gates(self, qubit: int = 0) -> list[Gate]:
        return [sv.u3(qubit, *u3_angles(self.alpha, self.beta))]


@dataclass(frozen=True)
class TwoQubitMessage:
    alpha: complex
    beta: complex
    gamma: complex
    delta: complex

    def __post_init__(self):
        total = abs(self.alpha) ** 2 + abs(self.beta) ** 2 + abs(self.gamma) ** 2 + abs(self.delta) ** 2
        _check_unit(total)

    @classmethod
    def from_u3_pair(cls, angles_first, angles_second) -> "TwoQubitMessage":
        a = sv.u3_matrix(*angles_first)[:, 0]
        b = sv.u3_matrix(*angles_second)[:, 0]
        amps = np.kron(a, b)
        return cls(*(complex(v) for v in amps))

    @classmethod
    def from_dict(cls, data: dict) -> "TwoQubitMessage":
        return cls(*(_complex_of(data[k]) for k in ("alpha", "beta", "gamma", "delta")))

    def to_dict(self) -> dict:
        return {
            "alpha": _pair_of(self.alpha),
            "beta": _pair_of(self.beta),
            "gamma": _pair_of(self.gamma),
            "delta": _pair_of(self.delta),
        }

    def amplitudes(self) -> np.ndarray:
        return np.array([self.alpha, self.beta, self.gamma, self.delta])

    def state(self) -> StateVector:
        return StateVector(2, self.amplitudes())

    def factor(self) -> tuple[tuple[float, float, float], tuple[float, float, float]] | None:
        """U3 angle pair if the message is a product state, else None.

        Circuit preparation (needed by the noisy trajectory pipeline) covers
        only product messages; entangled messages work everywhere else.
        """
        m = self.amplitudes().reshape(2, 2)
        u_, s_, vh_ = np.linalg.svd(m)
        if s_[1] > 1e-10:
            return None
        a = u_[:, 0] * s_[0]
        b = vh_[0, :]
        return u3_angles(a[0], a[1]), u3_angles(b[0], b[1])

    def prep_gates(self, qubits: tuple[int, int] = (0, 1)) -> list[Gate]:
        pair = self.factor()
        if pair is None:
            raise ValueError("only product-form two-qubit messages can be prepared as a circuit")
        return [sv.u3(qubits[0], *pair[0]), sv.u3(qubits[1], *pair[1])]


def _complex_of(pair) -> complex:
    re, im = pair
    return complex(float(re), float(im))


def _pair_of(value: complex) -> list[float]:
    return [value.real, value.imag]


# ---------------------------------------------------------------------------
# correction tables
# ---------------------------------------------------------------------------

# Literal correction tables: one Pauli word per Bob qubit, keyed by Alice's
# measured bits.  "ZX" applies X first, then Z.
TABLE_SINGLE: dict[str, tuple[str, ...]] = {
    "000": ("I",),
    "100": ("Z",),
    "010": ("X",),
    "110": ("ZX",),
}

TABLE_TWO: dict[str, tuple[str, ...]] = {
    "0000": ("I", "I"),
    "0001": ("I", "X"),
    "0010": ("X", "I"),
    "0011": ("X", "X"),
    "0100": ("I", "Z"),
    "0101": ("I", "ZX"),
    "0110": ("X", "Z"),
    "0111": ("X", "ZX"),
    "1000": ("Z", "I"),
    "1001": ("Z", "X"),
    "1010": ("ZX", "I"),
    "1011": ("ZX", "X"),
    "1100": ("Z", "Z"),
    "1101": ("Z", "ZX"),
    "1110": ("ZX", "Z"),
    "1111": ("ZX", "ZX"),
}


def correction_lookup(protocol: str, alice_bits: str) -> tuple[str, ...]:
    """Bob's Pauli word(s) for a given Alice outcome, straight from the tables."""
    if protocol == "single":
        table = TABLE_SINGLE
    elif protocol == "two":
        table = TABLE_TWO
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    try:
        return table[alice_bits]
    except KeyError:
        raise KeyError(f"no correction defined for outcome {alice_bits!r} in the {protocol} protocol") from None


def correction_rule(alice_bits: str, z_bit: int, x_bit: int) -> str:
    """Compact exponent form Z^{m_z} X^{m_x} of one Bob qubit's correction."""
    word = ""
    if alice_bits[z_bit] == "1":
        word += "Z"
    if alice_bits[x_bit] == "1":
        word += "X"
    return word or "I"


def _apply_pauli_word(state: StateVector, word: str, qubit: int) -> StateVector:
    # word is read right-to-left: "ZX" applies X, then Z
    out = state
    for ch in reversed(word):
        if ch == "I":
            continue
        out = sv.apply_gate(out, sv.pauli_gate(ch, qubit))
    return out


# ---------------------------------------------------------------------------
# protocol execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TeleportOutcome:
    alice_bits: str
    probability: float
    bob_state_raw: StateVector
    bob_state_corrected: StateVector
    applied_correction: tuple[str, ...]


@dataclass(frozen=True)
class ProtocolTrace:
    """Labelled joint-state snapshots after each protocol step."""

    stages: tuple[tuple[str, StateVector], ...]

    def state(self, label: str) -> StateVector:
        for name, st in self.stages:
            if name == label:
                return st
        raise KeyError(label)


def _joint_state(msg_state: StateVector, channel: hg.ChannelState) -> StateVector:
    amps = np.kron(msg_state.amplitudes, channel.state.amplitudes)
    return StateVector(msg_state.n_qubits + channel.state.n_qubits, amps)


def alice_gates_single(offset: int = 0) -> list[Gate]:
    a, a1, a2 = offset, offset + 1, offset + 2
    return [sv.cnot(a, a1), sv.cnot(a, a2), sv.h(a), sv.h(a2)]


def alice_gates_two(offset: int = 0) -> list[Gate]:
    q1, q2, a1, a2 = offset, offset + 1, offset + 2, offset + 3
    return [sv.cnot(q1, a1), sv.cnot(q2, a2), sv.h(q1), sv.h(q2)]


def _enumerate_branches(state: StateVector, n_alice: int, n_bob: int, protocol: str) -> list[TeleportOutcome]:
    """Project onto every Alice outcome, then correct Bob per the tables."""
    dim_bob = 1 << n_bob
    amps = state.amplitudes.reshape(1 << n_alice, dim_bob)
    outcomes = []
    for a_idx in range(1 << n_alice):
        block = amps[a_idx]
        prob = float(np.sum(np.abs(block) ** 2))
        if prob < 1e-12:
            continue
        bits = format(a_idx, f"0{n_alice}b")
        raw = StateVector(n_bob, block / math.sqrt(prob))
        correction = correction_lookup(protocol, bits)
        corrected = raw
        for bob_q, word in enumerate(correction):
            corrected = _apply_pauli_word(corrected, word, bob_q)
        outcomes.append(
            TeleportOutcome(
                alice_bits=bits,
                probability=prob,
                bob_state_raw=raw,
                bob_state_corrected=corrected,
                applied_correction=correction,
            )
        )
    total = sum(o.probability for o in outcomes)
    if abs(total - 1.0) > 1e-10:
        raise sv.InvariantViolation(f"branch probabilities sum to {total}")
    return outcomes


def _run_protocol(msg_state: StateVector, channel: hg.ChannelState, alice_gates: list[Gate], protocol: str):
    joint = _joint_state(msg_state, channel)
    final = sv.apply_circuit(joint, alice_gates)
    n_alice = msg_state.n_qubits + len(channel.alice_qubits)
    n_bob = len(channel.bob_qubits)
    return _enumerate_branches(final, n_alice, n_bob, protocol)


def _pick_branch(outcomes: list[TeleportOutcome], seed: int) -> list[TeleportOutcome]:
    # one draw against the cumulative branch probabilities
    u = float(uniforms(seed, STREAM_BRANCH, 0))
    acc = 0.0
    for o in outcomes:
        acc += o.probability
        if u < acc:
            return [o]
    return [outcomes[-1]]


def teleport_single(msg: SingleQubitMessage, mode: str = "enumerate_all", seed: int | None = None) -> list[TeleportOutcome]:
    """Run the single-qubit protocol over the 3-qubit channel.

    enumerate_all returns the four branches (outcome bits a a1 a2, a2 always
    0) in bit-string order; sample collapses to one branch chosen by the
    seeded generator.
    """
    outcomes = _run_protocol(msg.state(), hg.build_channel_3q(), alice_gates_single(), "single")
    return _finish(outcomes, mode, seed)


def teleport_two(msg: TwoQubitMessage, mode: str = "enumerate_all", seed: int | None = None) -> list[TeleportOutcome]:
    """Run the two-qubit protocol over the 4-qubit channel (16 branches)."""
    outcomes = _run_protocol(msg.state(), hg.build_channel_4q(), alice_gates_two(), "two")
    return _finish(outcomes, mode, seed)


def _finish(outcomes: list[TeleportOutcome], mode: str, seed: int | None) -> list[TeleportOutcome]:
    if mode == "enumerate_all":
        return outcomes
    if mode == "sample":
        if seed is None:
            raise ValueError("sample mode requires a seed")
        return _pick_branch(outcomes, seed)
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# stage-by-stage traces
# ---------------------------------------------------------------------------


def trace_single(msg: SingleQubitMessage) -> ProtocolTrace:
    """Joint-state snapshots after the CNOT pair, H on a, and H on a2."""
    joint = _joint_state(msg.state(), hg.build_channel_3q())
    a, a1, a2 = 0, 1, 2
    s1 = sv.apply_circuit(joint, [sv.cnot(a, a1), sv.cnot(a, a2)])
    s2 = sv.apply_gate(s1, sv.h(a))
    s3 = sv.apply_gate(s2, sv.h(a2))
    return ProtocolTrace((("after_cnots", s1), ("after_h_msg", s2), ("after_h_a2", s3)))


def trace_two(msg: TwoQubitMessage) -> ProtocolTrace:
    """Joint-state snapshots after the CNOT pair and after both Hadamards."""
    joint = _joint_state(msg.state(), hg.build_channel_4q())
    s1 = sv.apply_circuit(joint, [sv.cnot(0, 2), sv.cnot(1, 3)])
    s2 = sv.apply_circuit(s1, [sv.h(0), sv.h(1)])
    return ProtocolTrace((("after_cnots", s1), ("after_h_msg", s2)))


# ---------------------------------------------------------------------------
# deferred-measurement variant and full circuits
# ---------------------------------------------------------------------------


def deferred_gates_single(offset: int = 0) -> list[Gate]:
    """Corrections as controlled gates before measurement: CNOT(a1->b), CZ(a->b)."""
    a, a1, b = offset, offset + 1, offset + 3
    return [sv.cnot(a1, b), sv.cz(a, b)]


def deferred_gates_two(offset: int = 0) -> list[Gate]:
    q1, q2, a1, a2, b1, b2 = range(offset, offset + 6)
    return [sv.cnot(a2, b2), sv.cz(q2, b2), sv.cnot(a1, b1), sv.cz(q1, b1)]


def deferred_state_single(msg: SingleQubitMessage) -> StateVector:
    """Pre-measurement joint state with quantum-controlled corrections applied."""
    joint = _joint_state(msg.state(), hg.build_channel_3q())
    return sv.apply_circuit(joint, alice_gates_single() + deferred_gates_single())


def deferred_state_two(msg: TwoQubitMessage) -> StateVector:
    joint = _joint_state(msg.state(), hg.build_channel_4q())
    return sv.apply_circuit(joint, alice_gates_two() + deferred_gates_two())


def full_circuit_single(msg: SingleQubitMessage) -> tuple[list[Gate], int, tuple[int, ...]]:
    """(gates, n_qubits, bob_qubits) for one trajectory-executable run.

    Message prep + channel prep + Alice's steps + deferred corrections; the
    returned circuit starts from |0...0>.
    """
    gates = msg.prep_gates(0) + hg.channel_3q_gates(offset=1) + alice_gates_single() + deferred_gates_single()
    return gates, 4, (3,)


def full_circuit_two(msg: TwoQubitMessage) -> tuple[list[Gate], int, tuple[int, ...]]:
    gates = msg.prep_gates((0, 1)) + hg.channel_4q_gates(offset=2) + alice_gates_two() + deferred_gates_two()
    return gates, 6, (4, 5)


def teleported_bob_density(protocol: str, msg) -> np.ndarray:
    """Bob's post-correction marginal: the branch mixture sum_i p_i |b_i><b_i|."""
    if protocol == "single":
        outcomes = teleport_single(msg)
    elif protocol == "two":
        outcomes = teleport_two(msg)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")
    dim = outcomes[0].bob_state_corrected.dim
    rho = np.zeros((dim, dim), dtype=np.complex128)
    for o in outcomes:
        v = o.bob_state_corrected.amplitudes
        rho += o.probability * np.outer(v, v.conj())
    return rho
