"""Density matrices, Stokes-parameter estimation, and Uhlmann fidelity.

Reconstruction is plain linear inversion,

    rho = 2^-n * sum_L T_L * (sigma_L1 x ... x sigma_Ln),

with the Stokes tensor T estimated per label from the joint counts of one
measurement setting (the label with I replaced by Z).  Estimating correlated
labels from joint counts, rather than multiplying single-qubit Stokes
values, is what lets reconstructed matrices carry genuine correlations;
a product of marginals cannot.

Linear inversion does not project onto positive semidefinite matrices, so
finite-shot reconstructions may have small negative eigenvalues.  They are
flagged (and clamped inside the fidelity square roots), never rejected.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import statevec as sv
from .rng import derive_seed
from .statevec import PAULI_MATRICES, ShotHistogram, StateVector

HERMITIAN_ATOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10

MAX_TOMO_QUBITS = 4


@dataclass(frozen=True)
class DensityMatrix:
    n_qubits: int
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.asarray(self.entries, dtype=np.complex128)
        dim = 1 << self.n_qubits
        if mat.shape != (dim, dim):
            raise ValueError(f"expected a {dim}x{dim} matrix, got shape {mat.shape}")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITIAN_ATOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > TRACE_ATOL or abs(np.trace(mat).imag) > TRACE_ATOL:
            raise ValueError(f"density matrix trace is {np.trace(mat)}, expected 1")
        object.__setattr__(self, "entries", mat)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def is_psd(self, atol: float = PSD_ATOL) -> bool:
        return bool(self.eigenvalues().min() >= -atol)

    def purity(self) -> float:
        return float(np.trace(self.entries @ self.entries).real)


def theoretical_density(state: StateVector) -> DensityMatrix:
    """Rank-1 projector |psi><psi|."""
    state.check_normalized()
    v = state.amplitudes
    return DensityMatrix(state.n_qubits, np.outer(v, v.conj()))


def density_from_matrix(mat, n_qubits: int | None = None) -> DensityMatrix:
    mat = np.asarray(mat, dtype=np.complex128)
    if n_qubits is None:
        n_qubits = int(round(np.log2(mat.shape[0])))
    return DensityMatrix(n_qubits, mat)


# ---------------------------------------------------------------------------
# measurement settings and Stokes tensors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MeasurementSetting:
    """Per-qubit measurement basis with its pre-measurement rotation recipe.

    X: H.  Y: adjoint phase gate then H (so the +1 eigenvector lands on |0>).
    Z: nothing.
    """

    basis: str

    def __post_init__(self):
        bad = set(self.basis) - set("XYZ")
        if bad:
            raise ValueError(f"invalid basis characters: {sorted(bad)}")

    @property
    def n_qubits(self) -> int:
        return len(self.basis)

    def rotation_gates(self, qubit_map=None) -> list[sv.Gate]:
        """Gates mapping this setting's eigenbasis onto the computational one."""
        gates = []
        for i, ch in enumerate(self.basis):
            q = i if qubit_map is None else qubit_map[i]
            if ch == "X":
                gates.append(sv.h(q))
            elif ch == "Y":
                gates.append(sv.sdg(q))
                gates.append(sv.h(q))
        return gates


def measurement_plan(n: int) -> list[MeasurementSetting]:
    """All 3^n per-qubit {X, Y, Z} combinations, in lexicographic order."""
    if not 1 <= n <= MAX_TOMO_QUBITS:
        raise ValueError(f"n must be in [1, {MAX_TOMO_QUBITS}], got {n}")
    return [MeasurementSetting("".join(c)) for c in itertools.product("XYZ", repeat=n)]


def all_pauli_labels(n: int) -> list[str]:
    return ["".join(c) for c in itertools.product("IXYZ", repeat=n)]


def canonical_setting(label: str) -> str:
    """The setting that measures ``label``: I positions are marginalized via Z."""
    return label.replace("I", "Z")


@dataclass(frozen=True)
class StokesTensor:
    """Pauli expectation values, one per length-n label over {I, X, Y, Z}."""

    n_qubits: int
    values: dict[str, float]

    def __post_init__(self):
        labels = set(all_pauli_labels(self.n_qubits))
        if set(self.values) != labels:
            missing = sorted(labels - set(self.values))[:4]
            extra = sorted(set(self.values) - labels)[:4]
            raise ValueError(f"Stokes tensor labels mismatch (missing {missing}, extra {extra})")
        identity = "I" * self.n_qubits
        if self.values[identity] != 1.0:
            raise ValueError(f"the all-identity value must be exactly 1, got {self.values[identity]}")
        for lab, val in self.values.items():
            if not -1.0 <= val <= 1.0:
                raise ValueError(f"Stokes value {lab}={val} outside [-1, 1]")

    def __getitem__(self, label: str) -> float:
        return self.values[label]

    @classmethod
    def from_dict(cls, data: dict) -> "StokesTensor":
        """Parse the JSON form {"XZ": 0.013, ...} (all 4^n labels present)."""
        values = {str(k): float(v) for k, v in data.items()}
        if not values:
            raise ValueError("empty Stokes tensor")
        n = len(next(iter(values)))
        return cls(n, values)

    def to_dict(self) -> dict:
        return dict(sorted(self.values.items()))


def _parity_weights(n: int, label: str) -> np.ndarray:
    """(-1)^(sum of outcome bits at non-I positions) for all 2^n outcomes."""
    idx = np.arange(1 << n)
    parity = np.zeros(1 << n, dtype=np.int64)
    for q, ch in enumerate(label):
        if ch != "I":
            parity ^= (idx >> (n - 1 - q)) & 1
    return 1.0 - 2.0 * parity


def stokes_from_histograms(histograms: dict[str, ShotHistogram]) -> StokesTensor:
    """Estimate the full tensor from one histogram per {X,Y,Z}^n setting."""
    if not histograms:
        raise ValueError("no histograms given")
    n = len(next(iter(histograms)))
    required = {s.basis for s in measurement_plan(n)}
    missing = required - set(histograms)
    if missing:
        raise ValueError(f"missing settings: {sorted(missing)[:6]}")
    shots = {h.shots for h in histograms.values()}
    if len(shots) != 1:
        raise ValueError(f"settings have unequal shot counts: {sorted(shots)}")

    freq = {}
    for basis in required:
        hist = histograms[basis]
        if hist.n_qubits != n:
            raise ValueError(f"histogram for {basis} has {hist.n_qubits} qubits, expected {n}")
        f = np.zeros(1 << n)
        for key, c in hist.counts.items():
            f[int(key, 2)] = c / hist.shots
        freq[basis] = f

    values = {}
    for label in all_pauli_labels(n):
        if label == "I" * n:
            values[label] = 1.0
        else:
            f = freq[canonical_setting(label)]
            values[label] = float(np.clip(np.dot(_parity_weights(n, label), f), -1.0, 1.0))
    return StokesTensor(n, values)


def stokes_exact(target: StateVector | DensityMatrix) -> StokesTensor:
    """Exact Pauli expectations of a pure state or a density matrix."""
    if isinstance(target, StateVector):
        n = target.n_qubits
        values = {lab: (1.0 if lab == "I" * n else sv.expectation_pauli(target, lab)) for lab in all_pauli_labels(n)}
        return StokesTensor(n, values)
    n = target.n_qubits
    values = {}
    for lab in all_pauli_labels(n):
        if lab == "I" * n:
            values[lab] = 1.0
        else:
            op = _pauli_tensor(lab)
            values[lab] = float(np.clip(np.trace(target.entries @ op).real, -1.0, 1.0))
    return StokesTensor(n, values)


def _pauli_tensor(label: str) -> np.ndarray:
    op = PAULI_MATRICES[label[0]]
    for ch in label[1:]:
        op = np.kron(op, PAULI_MATRICES[ch])
    return op


def reconstruct_density(t: StokesTensor, project_psd: bool = False) -> DensityMatrix:
    """Linear inversion: rho = 2^-n sum_L T_L sigma_L.

    Hermitian and trace-1 by construction for any input tensor.  With
    ``project_psd`` the eigenvalues are clamped at zero and renormalized.
    """
    n = t.n_qubits
    dim = 1 << n
    rho = np.zeros((dim, dim), dtype=np.complex128)
    for label, val in t.values.items():
        rho += val * _pauli_tensor(label)
    rho /= dim
    rho = (rho + rho.conj().T) / 2  # scrub rounding asymmetry
    if project_psd:
        vals, vecs = np.linalg.eigh(rho)
        vals = np.clip(vals, 0.0, None)
        vals /= vals.sum()
        rho = (vecs * vals) @ vecs.conj().T
    return DensityMatrix(n, rho)


# ---------------------------------------------------------------------------
# fidelity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FidelityResult:
    value: float
    clamped_weight: float  # total negative eigenvalue mass zeroed under the sqrt
    used_rank1_shortcut: bool

    @property
    def clamped(self) -> bool:
        return self.clamped_weight > 1e-12


_EV_FLOOR = 1e-13  # eigenvalues below this are eigensolver noise, not signal


def fidelity_report(rho_t: DensityMatrix, rho_e: DensityMatrix) -> FidelityResult:
    """F = Tr sqrt(sqrt(rho_t) rho_e sqrt(rho_t)), with diagnostics.

    When rho_t is rank 1 this is exactly sqrt(<psi| rho_e |psi>), which is
    both faster and numerically exact, so that path is taken when available.
    Eigenvalues below the noise floor are zeroed before square roots
    (sqrt amplifies eigensolver noise from 1e-16 to 1e-8 otherwise);
    genuinely negative eigenvalue mass is clamped and reported.
    """
    if rho_t.n_qubits != rho_e.n_qubits:
        raise ValueError(f"dimension mismatch: {rho_t.dim} vs {rho_e.dim}")
    vals_t, vecs_t = np.linalg.eigh(rho_t.entries)
    if vals_t.min() < -PSD_ATOL:
        raise ValueError(f"rho_t must be positive semidefinite (min eigenvalue {vals_t.min()})")
    if vals_t[:-1].max() < 1e-10:  # rank 1: all mass in the top eigenvector
        psi = vecs_t[:, -1]
        overlap = float(np.real(np.conj(psi) @ rho_e.entries @ psi))
        clamped = max(0.0, -overlap)
        return FidelityResult(float(np.sqrt(max(overlap, 0.0))), clamped, True)

    vals_t = np.where(vals_t < _EV_FLOOR, 0.0, vals_t)
    sqrt_t = (vecs_t * np.sqrt(vals_t)) @ vecs_t.conj().T
    inner = sqrt_t @ rho_e.entries @ sqrt_t
    inner = (inner + inner.conj().T) / 2
    ev = np.linalg.eigvalsh(inner)
    clamped = float(-ev[ev < -_EV_FLOOR].sum())
    ev = np.where(ev < _EV_FLOOR, 0.0, ev)
    return FidelityResult(float(np.sqrt(ev).sum()), clamped, False)


def fidelity(rho_t: DensityMatrix, rho_e: DensityMatrix) -> float:
    return fidelity_report(rho_t, rho_e).value


# ---------------------------------------------------------------------------
# end-to-end tomography
# ---------------------------------------------------------------------------


def _rotation_unitary(setting: MeasurementSetting) -> np.ndarray:
    u = np.eye(1, dtype=np.complex128)
    h_mat = sv.Gate("H", 0).matrix_1q()
    sdg_mat = sv.Gate("SDG", 0).matrix_1q()
    for ch in setting.basis:
        if ch == "X":
            u = np.kron(u, h_mat)
        elif ch == "Y":
            u = np.kron(u, h_mat @ sdg_mat)
        else:
            u = np.kron(u, np.eye(2))
    return u


def setting_probabilities(target: StateVector | DensityMatrix, setting: MeasurementSetting) -> np.ndarray:
    """Exact outcome distribution after this setting's basis rotation."""
    if isinstance(target, StateVector):
        rotated = sv.apply_circuit(target, setting.rotation_gates())
        return rotated.probabilities()
    u = _rotation_unitary(setting)
    return np.clip(np.real(np.diag(u @ target.entries @ u.conj().T)), 0.0, None)


def sample_setting(target: StateVector | DensityMatrix, setting: MeasurementSetting, shots: int, seed: int) -> ShotHistogram:
    probs = setting_probabilities(target, setting)
    total = probs.sum()
    if abs(total - 1.0) > 1e-9:
        raise sv.InvariantViolation(f"setting distribution sums to {total}")
    idx = sv.sample_outcome_indices(probs / total, shots, seed)
    n = int(round(np.log2(len(probs))))
    return sv.histogram_from_indices(idx, n, shots, seed)


def tomograph_state(target: StateVector | DensityMatrix, shots: int = 8192, seed: int = 0, mode: str = "exact") -> DensityMatrix:
    """Full pipeline: plan -> per-setting counts (or exact values) -> invert.

    Exact mode reproduces the true density matrix to 1e-12.  Sampled mode
    gives each setting its own sub-seed derived from the master seed, so
    settings can be collected concurrently and still merge deterministically.
    For counts produced elsewhere (e.g. noisy circuit runs) use
    :func:`tomograph_runner`.
    """
    if target.n_qubits > MAX_TOMO_QUBITS:
        raise ValueError(f"tomography supports at most {MAX_TOMO_QUBITS} qubits, got {target.n_qubits}")
    if mode == "exact":
        return reconstruct_density(stokes_exact(target))
    if mode != "sampled":
        raise ValueError(f"unknown mode {mode!r}")
    if shots <= 0:
        raise ValueError("shots must be positive")
    return tomograph_runner(
        target.n_qubits,
        lambda setting, nshots, sub: sample_setting(target, setting, nshots, sub),
        shots=shots,
        seed=seed,
    )


def tomograph_runner(n: int, runner, shots: int = 8192, seed: int = 0) -> DensityMatrix:
    """Sampled tomography where each setting's counts come from ``runner``."""
    plan = measurement_plan(n)
    histograms = {}
    for i, setting in enumerate(plan):
        hist = runner(setting, shots, derive_seed(seed, i))
        if hist.n_qubits != n:
            raise ValueError(f"runner returned a {hist.n_qubits}-qubit histogram for a {n}-qubit plan")
        histograms[setting.basis] = hist
    return reconstruct_density(stokes_from_histograms(histograms))
