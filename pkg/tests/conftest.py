import numpy as np
import pytest

from hyperteleport import statevec as sv

# Independent brute-force operators used as oracles; everything here is
# deliberately built from kron / explicit loops, never from the package's
# bitmask kernels.

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def kron_chain(labels: str) -> np.ndarray:
    op = PAULI[labels[0]]
    for ch in labels[1:]:
        op = np.kron(op, PAULI[ch])
    return op


def partial_trace_oracle(psi: np.ndarray, n: int, keep: list[int]) -> np.ndarray:
    """Partial trace by explicit double loop over kept/traced basis states."""
    rest = [q for q in range(n) if q not in keep]
    dk, dr = 1 << len(keep), 1 << len(rest)
    rho = np.zeros((dk, dk), dtype=complex)
    for i in range(dk):
        for j in range(dk):
            for t in range(dr):
                def full_index(kept_bits, traced_bits):
                    idx = 0
                    for pos, q in enumerate(keep):
                        idx |= ((kept_bits >> (len(keep) - 1 - pos)) & 1) << (n - 1 - q)
                    for pos, q in enumerate(rest):
                        idx |= ((traced_bits >> (len(rest) - 1 - pos)) & 1) << (n - 1 - q)
                    return idx

                rho[i, j] += psi[full_index(i, t)] * np.conj(psi[full_index(j, t)])
    return rho


def random_state(rng: np.random.Generator, n: int) -> sv.StateVector:
    v = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return sv.StateVector(n, v / np.linalg.norm(v))


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
