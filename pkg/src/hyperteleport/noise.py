"""Stochastic Pauli + readout noise for Monte Carlo circuit trajectories.

The model is parametric, not calibrated: after every gate, with probability
``gate_error_prob`` a uniformly random non-identity Pauli lands on a
uniformly chosen qubit the gate touched, and each measured bit flips
independently with ``readout_flip_prob``.  Trajectories stay pure states,
so the whole executor reuses the statevector kernels.

Every random decision is addressed by (seed, stream, shot, counter), which
makes trajectories embarrassingly parallel: the implementation batches all
shots into one (shots, 2^n) array, but any other partition of the shot range
produces the same histogram.  With both probabilities zero the measurement
draws are exactly those of plain ``sample_shots``, so the noiseless limit
matches direct sampling bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import statevec as sv
from . import teleport as tp
from . import tomography as tm
from .rng import STREAM_NOISE, derive_seed, uniforms
from .statevec import Gate, ShotHistogram

_PAULIS = ("X", "Y", "Z")


@dataclass(frozen=True)
class NoiseModel:
    gate_error_prob: float
    readout_flip_prob: float
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.gate_error_prob <= 1.0:
            raise ValueError(f"gate_error_prob must be in [0, 1], got {self.gate_error_prob}")
        if not 0.0 <= self.readout_flip_prob <= 1.0:
            raise ValueError(f"readout_flip_prob must be in [0, 1], got {self.readout_flip_prob}")

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        return cls(
            gate_error_prob=float(data.get("gate_error", 0.0)),
            readout_flip_prob=float(data.get("readout_flip", 0.0)),
            seed=int(data.get("seed", 0)),
        )

    def to_dict(self) -> dict:
        return {"gate_error": self.gate_error_prob, "readout_flip": self.readout_flip_prob, "seed": self.seed}


def _apply_paulis_to_rows(batch: np.ndarray, n: int, rows: np.ndarray, paulis: np.ndarray, qubits: np.ndarray) -> None:
    """Apply per-row single-qubit Paulis, grouped so each group is one kernel call."""
    for p_idx in range(3):
        for q in np.unique(qubits):
            sel = rows[(paulis == p_idx) & (qubits == q)]
            if sel.size:
                sub = batch[sel]  # fancy indexing copies; write the result back
                sv.apply_gate_raw(sub, n, sv.pauli_gate(_PAULIS[p_idx], int(q)))
                batch[sel] = sub


def noisy_run(circuit: list[Gate], n: int, noise: NoiseModel, shots: int) -> ShotHistogram:
    """Monte Carlo trajectories of ``circuit`` from |0...0>, measured once each.

    Per shot: fresh statevector, every gate followed by a possible Pauli
    insertion, one Born-rule measurement of all qubits, then independent
    readout bit flips.  Deterministic for a given noise.seed.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    for g in circuit:
        if max(g.qubits) >= n:
            raise ValueError(f"gate touches qubit {max(g.qubits)} but circuit has {n} qubits")

    seed = noise.seed
    p = noise.gate_error_prob
    batch = np.zeros((shots, 1 << n), dtype=np.complex128)
    batch[:, 0] = 1.0

    shot_idx = np.arange(shots)
    for g_i, gate in enumerate(circuit):
        sv.apply_gate_raw(batch, n, gate)
        if p > 0.0:
            # three draws per (shot, gate): fire?, which Pauli, which qubit
            fire = uniforms(seed, STREAM_NOISE, shot_idx, 3 * g_i) < p
            hit = np.flatnonzero(fire)
            if hit.size:
                touched = gate.qubits
                which = np.floor(uniforms(seed, STREAM_NOISE, hit, 3 * g_i + 1) * 3).astype(np.int64)
                which = np.clip(which, 0, 2)
                pos = np.floor(uniforms(seed, STREAM_NOISE, hit, 3 * g_i + 2) * len(touched)).astype(np.int64)
                pos = np.clip(pos, 0, len(touched) - 1)
                qubits = np.asarray(touched)[pos]
                _apply_paulis_to_rows(batch, n, hit, which, qubits)

    # one Born-rule draw per shot, from that shot's own distribution;
    # the <= comparison matches searchsorted(side="right") in sample_shots
    probs = np.abs(batch) ** 2
    cum = np.cumsum(probs, axis=1)
    np.maximum(cum[:, -1], 1.0, out=cum[:, -1])
    u = uniforms(seed, sv.STREAM_MEASURE, shot_idx)
    outcomes = (cum <= u[:, None]).sum(axis=1)

    q = noise.readout_flip_prob
    if q > 0.0:
        # bit flips live on the noise stream, counters after all gate draws
        base = 3 * len(circuit)
        for qubit in range(n):
            flips = uniforms(seed, STREAM_NOISE, shot_idx, base + qubit) < q
            outcomes = np.where(flips, outcomes ^ (1 << (n - 1 - qubit)), outcomes)

    return sv.histogram_from_indices(outcomes, n, shots, seed)


def marginal_histogram(hist: ShotHistogram, positions: tuple[int, ...]) -> ShotHistogram:
    """Project histogram keys onto the given bit positions (in order)."""
    counts: dict[str, int] = {}
    for key, c in hist.counts.items():
        sub = "".join(key[i] for i in positions)
        counts[sub] = counts.get(sub, 0) + c
    return ShotHistogram(len(positions), counts, hist.shots, hist.seed)


# ---------------------------------------------------------------------------
# teleport + tomography pipeline under noise
# ---------------------------------------------------------------------------


def _pipeline_pieces(protocol: str, message):
    if protocol == "single":
        return tp.full_circuit_single(message)
    if protocol == "two":
        return tp.full_circuit_two(message)
    raise ValueError(f"unknown protocol {protocol!r}")


def noisy_teleport_runner(protocol: str, message, noise: NoiseModel):
    """Tomography runner measuring Bob's qubits after the noisy deferred circuit."""
    gates, n, bob = _pipeline_pieces(protocol, message)

    def runner(setting: tm.MeasurementSetting, shots: int, sub_seed: int) -> ShotHistogram:
        rot = setting.rotation_gates(qubit_map=bob)
        hist = noisy_run(gates + rot, n, NoiseModel(noise.gate_error_prob, noise.readout_flip_prob, sub_seed), shots)
        return marginal_histogram(hist, bob)

    return runner


def pipeline_fidelity(protocol: str, message, noise: NoiseModel, shots: int = 8192, seed: int = 0) -> float:
    """Fidelity of the tomographed noisy teleport output against the message."""
    n_bob = 1 if protocol == "single" else 2
    runner = noisy_teleport_runner(protocol, message, noise)
    rho_e = tm.tomograph_runner(n_bob, runner, shots=shots, seed=seed)
    rho_t = tm.theoretical_density(message.state())
    return tm.fidelity(rho_t, rho_e)


def fidelity_vs_noise(
    protocol: str,
    message,
    grid: list[float],
    shots: int = 8192,
    seed: int = 0,
    readout_flip: float = 0.0,
    repeats: int = 1,
) -> list[tuple[float, float]]:
    """Mean pipeline fidelity at each gate-error probability of ``grid``.

    The grid must be sorted ascending.  Each (grid point, repeat) gets its
    own derived seed, so the whole sweep is reproducible and individual
    cells could be evaluated in any order.
    """
    if list(grid) != sorted(grid):
        raise ValueError("grid must be sorted ascending")
    if repeats < 1:
        raise ValueError("repeats must be at least 1")
    table = []
    for i, p in enumerate(grid):
        vals = []
        for r in range(repeats):
            sub = derive_seed(seed, i * repeats + r, stream=3)
            vals.append(pipeline_fidelity(protocol, message, NoiseModel(p, readout_flip, sub), shots=shots, seed=sub))
        table.append((float(p), float(np.mean(vals))))
    return table
