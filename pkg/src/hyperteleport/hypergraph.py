"""Hypergraphs, their quantum states, and the two teleportation channels.

A hypergraph state is built by applying one multi-controlled Z per hyperedge
to |+>^n.  Every amplitude keeps magnitude 2^(-n/2); the sign of basis state
x is (-1)^(number of hyperedges whose vertices are all 1 in x).
"""

from __future__ import annotations

from dataclasses import dataclass

from . import statevec as sv
from .statevec import StateVector

MAX_VERTICES = sv.MAX_QUBITS


@dataclass(frozen=True)
class Hypergraph:
    """n_vertices plus a deduplicated set of hyperedges (vertex subsets)."""

    n_vertices: int
    hyperedges: frozenset[frozenset[int]]

    def __post_init__(self):
        if not 1 <= self.n_vertices <= MAX_VERTICES:
            raise ValueError(f"n_vertices must be in [1, {MAX_VERTICES}], got {self.n_vertices}")
        edges = frozenset(frozenset(int(v) for v in e) for e in self.hyperedges)
        for e in edges:
            if not e:
                raise ValueError("hyperedges must contain at least one vertex")
            if any(v < 0 or v >= self.n_vertices for v in e):
                raise ValueError(f"hyperedge {sorted(e)} has a vertex outside [0, {self.n_vertices})")
        object.__setattr__(self, "hyperedges", edges)

    @classmethod
    def from_edges(cls, n_vertices: int, edges) -> "Hypergraph":
        return cls(n_vertices, frozenset(frozenset(e) for e in edges))

    @classmethod
    def from_dict(cls, data: dict) -> "Hypergraph":
        """Parse the JSON form {"n": 4, "edges": [[0,1,2],[1,2,3]]}."""
        try:
            n = int(data["n"])
            edges = data["edges"]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"malformed hypergraph object: {exc}") from exc
        return cls.from_edges(n, edges)

    def to_dict(self) -> dict:
        return {"n": self.n_vertices, "edges": sorted(sorted(e) for e in self.hyperedges)}


def is_k_uniform(h: Hypergraph, k: int) -> bool:
    """True iff every hyperedge has exactly k vertices."""
    if k < 1:
        raise ValueError("k must be positive")
    return all(len(e) == k for e in h.hyperedges)


def build_hypergraph_state(h: Hypergraph) -> StateVector:
    """Apply C^|e|Z for every hyperedge e to |+>^n."""
    state = sv.plus_state(h.n_vertices)
    amps = state.amplitudes.copy()
    for edge in h.hyperedges:
        gate = _edge_gate(h.n_vertices, edge)
        sv.apply_gate_raw(amps, h.n_vertices, gate)
    return StateVector(h.n_vertices, amps)


def _edge_gate(n: int, edge: frozenset[int]) -> sv.Gate:
    verts = sorted(edge)
    target = verts[-1]
    controls = [(v, True) for v in verts[:-1]]
    if not controls:
        return sv.z(target)  # 1-edge: plain Z on the vertex
    return sv.controlled("Z", controls, target)


def sign_oracle(h: Hypergraph, basis_index: int) -> int:
    """Sign of a basis amplitude by directly counting contained hyperedges.

    Test oracle only: independent of the gate kernels.
    """
    if not 0 <= basis_index < (1 << h.n_vertices):
        raise ValueError(f"basis index {basis_index} out of range")
    n = h.n_vertices
    contained = 0
    for edge in h.hyperedges:
        if all((basis_index >> (n - 1 - v)) & 1 for v in edge):
            contained += 1
    return -1 if contained % 2 else 1


@dataclass(frozen=True)
class ChannelState:
    """A prepared entanglement channel with its Alice/Bob qubit split."""

    state: StateVector
    alice_qubits: tuple[int, ...]
    bob_qubits: tuple[int, ...]

    def __post_init__(self):
        n = self.state.n_qubits
        both = sorted(self.alice_qubits) + sorted(self.bob_qubits)
        if sorted(both) != list(range(n)):
            raise ValueError(f"alice {self.alice_qubits} + bob {self.bob_qubits} must partition 0..{n - 1}")
        self.state.check_normalized()


def channel_3q_gates(offset: int = 0) -> list[sv.Gate]:
    """Gate sequence preparing the 3-qubit channel on qubits offset..offset+2.

    H on all three; CCZ with both controls closed; CCZ with the second
    control open; H on the last qubit.  The open control is essential: it is
    what collapses the 8-term hypergraph state to the 4-term channel.
    """
    a1, a2, b = offset, offset + 1, offset + 2
    return [
        sv.h(a1),
        sv.h(a2),
        sv.h(b),
        sv.controlled("Z", [(a1, True), (a2, True)], b),
        sv.controlled("Z", [(a1, True), (a2, False)], b),
        sv.h(b),
    ]


def channel_4q_gates(offset: int = 0) -> list[sv.Gate]:
    """Gate sequence preparing the 4-qubit channel on offset..offset+3.

    Starts from the 3-uniform 4-vertex hypergraph state (edges {0,1,2} and
    {1,2,3}), then reduces it with two Hadamards, two CNOTs and two CCNOTs.
    """
    q0, q1, q2, q3 = offset, offset + 1, offset + 2, offset + 3
    return [
        sv.h(q0),
        sv.h(q1),
        sv.h(q2),
        sv.h(q3),
        sv.ccz(q0, q1, q2),
        sv.ccz(q1, q2, q3),
        sv.h(q0),
        sv.h(q3),
        sv.cnot(q1, q3),
        sv.cnot(q2, q0),
        sv.ccnot(q1, q2, q3),
        sv.ccnot(q1, q2, q0),
    ]


def build_channel_3q() -> ChannelState:
    """(|000> + |010> + |101> + |111>)/2 with Alice on [0,1], Bob on [2]."""
    state = sv.apply_circuit(sv.zero_state(3), channel_3q_gates())
    return ChannelState(state, alice_qubits=(0, 1), bob_qubits=(2,))


def build_channel_4q() -> ChannelState:
    """(|0000> + |0101> + |1010> + |1111>)/2 with Alice on [0,1], Bob on [2,3]."""
    state = sv.apply_circuit(sv.zero_state(4), channel_4q_gates())
    return ChannelState(state, alice_qubits=(0, 1), bob_qubits=(2, 3))
