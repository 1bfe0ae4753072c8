"""JSON schemas for states, matrices, histograms, and result envelopes.

Complex numbers are always [re, im] pairs; density matrices carry separate
"re" and "im" row-major arrays.  Serialization is deterministic (sorted
keys), so identical results produce byte-identical files.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .statevec import ShotHistogram, StateVector
from .tomography import DensityMatrix

SCHEMA_VERSION = "1"


def state_to_dict(state: StateVector) -> dict:
    amps = state.amplitudes
    table = {
        state.basis_label(i): [float(amps[i].real), float(amps[i].imag)]
        for i in np.flatnonzero(np.abs(amps) > 1e-12)
    }
    return {
        "n": state.n_qubits,
        "amplitudes": [[float(a.real), float(a.imag)] for a in amps],
        "table": table,
    }


def state_from_dict(data: dict) -> StateVector:
    amps = np.array([complex(re, im) for re, im in data["amplitudes"]])
    return StateVector(int(data["n"]), amps)


def density_to_dict(rho: DensityMatrix) -> dict:
    return {
        "n": rho.n_qubits,
        "re": [[float(v) for v in row] for row in rho.entries.real],
        "im": [[float(v) for v in row] for row in rho.entries.imag],
    }


def density_from_dict(data: dict) -> DensityMatrix:
    mat = np.array(data["re"], dtype=float) + 1j * np.array(data["im"], dtype=float)
    return DensityMatrix(int(data["n"]), mat)


def histogram_to_dict(hist: ShotHistogram) -> dict:
    return {
        "n": hist.n_qubits,
        "counts": dict(sorted(hist.counts.items())),
        "shots": hist.shots,
        "seed": hist.seed,
    }


def histogram_from_dict(data: dict) -> ShotHistogram:
    return ShotHistogram(
        n_qubits=int(data["n"]),
        counts={str(k): int(v) for k, v in data["counts"].items()},
        shots=int(data["shots"]),
        seed=int(data["seed"]),
    )


def envelope(command: str, parameters: dict, seed: int, outputs: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "parameters": parameters,
        "seed": seed,
        "outputs": outputs,
    }


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def loads(text: str) -> Any:
    return json.loads(text)
