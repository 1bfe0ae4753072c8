import math

import pytest

from hyperteleport import noise as nz
from hyperteleport import statevec as sv
from hyperteleport import teleport as tp
from hyperteleport import tomography as tm

PLUS_MSG = tp.SingleQubitMessage.from_u3(math.pi / 2, 0, 0)

# frozen Monte Carlo regression values (deterministic for these seeds)
REGRESSION_P005_FIDELITY = 0.8646852977022912


def test_noise_model_validation():
    with pytest.raises(ValueError):
        nz.NoiseModel(-0.1, 0.0)
    with pytest.raises(ValueError):
        nz.NoiseModel(0.0, 1.5)
    m = nz.NoiseModel.from_dict({"gate_error": 0.05, "readout_flip": 0.02, "seed": 7})
    assert m == nz.NoiseModel(0.05, 0.02, 7)
    assert nz.NoiseModel.from_dict(m.to_dict()) == m


def test_noiseless_limit_matches_direct_sampling():
    gates, n, _ = tp.full_circuit_single(PLUS_MSG)
    ideal = sv.apply_circuit(sv.zero_state(n), gates)
    for seed in (0, 99):
        h_traj = nz.noisy_run(gates, n, nz.NoiseModel(0.0, 0.0, seed), shots=8192)
        h_direct = sv.sample_shots(ideal, 8192, seed=seed)
        assert h_traj.counts == h_direct.counts


def test_noisy_run_deterministic():
    gates, n, _ = tp.full_circuit_single(PLUS_MSG)
    a = nz.noisy_run(gates, n, nz.NoiseModel(0.08, 0.01, 5), shots=2048)
    b = nz.noisy_run(gates, n, nz.NoiseModel(0.08, 0.01, 5), shots=2048)
    assert a.counts == b.counts


def test_noisy_run_validation():
    with pytest.raises(ValueError):
        nz.noisy_run([sv.h(0)], 1, nz.NoiseModel(0, 0, 0), shots=0)
    with pytest.raises(ValueError):
        nz.noisy_run([sv.h(3)], 2, nz.NoiseModel(0, 0, 0), shots=4)


def test_gate_errors_change_outcomes():
    # X then heavy noise: P(bit stays 1) = (1-p) + p/3 (Z leaves it, X/Y flip)
    hist = nz.noisy_run([sv.x(0)], 1, nz.NoiseModel(0.75, 0.0, 5), shots=8192)
    frac_one = hist.counts.get("1", 0) / 8192
    sigma = math.sqrt(0.5 * 0.5 / 8192)
    assert abs(frac_one - 0.5) <= 4 * sigma


def test_full_readout_scrambling_is_uniform_per_bit():
    gates, n, _ = tp.full_circuit_single(PLUS_MSG)
    hist = nz.noisy_run(gates, n, nz.NoiseModel(0.0, 0.5, 3), shots=8192)
    sigma = math.sqrt(0.25 / 8192)
    for qubit in range(n):
        ones = sum(c for k, c in hist.counts.items() if k[qubit] == "1")
        assert abs(ones / 8192 - 0.5) <= 4 * sigma


def test_marginal_histogram():
    h = sv.ShotHistogram(3, {"010": 3, "011": 2, "110": 5}, 10, seed=1)
    m = nz.marginal_histogram(h, (0, 1))
    assert m.counts == {"01": 5, "11": 5}
    assert m.shots == 10


def test_pipeline_fidelity_exact_at_zero_noise():
    rho_t = tm.theoretical_density(PLUS_MSG.state())
    rho_bob = tm.density_from_matrix(tp.teleported_bob_density("single", PLUS_MSG))
    assert tm.fidelity(rho_t, tm.tomograph_state(rho_bob, mode="exact")) == pytest.approx(1.0, abs=1e-10)


def test_pipeline_fidelity_sampled_at_zero_noise():
    f = nz.pipeline_fidelity("single", PLUS_MSG, nz.NoiseModel(0.0, 0.0, 5), shots=8192, seed=5)
    assert f == pytest.approx(1.0, abs=0.02)


def test_pipeline_fidelity_regression_at_p005():
    f = nz.pipeline_fidelity("single", PLUS_MSG, nz.NoiseModel(0.05, 0.0, 7), shots=8192, seed=7)
    assert f < 0.99
    assert f == pytest.approx(REGRESSION_P005_FIDELITY, abs=1e-9)


def test_fidelity_vs_noise_monotone_trend():
    table = nz.fidelity_vs_noise("single", PLUS_MSG, [0.02, 0.08, 0.18], shots=2048, seed=1)
    fids = [f for _, f in table]
    assert fids[0] > fids[1] > fids[2]


def test_fidelity_vs_noise_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        nz.fidelity_vs_noise("single", PLUS_MSG, [0.1, 0.05], shots=64, seed=0)
    with pytest.raises(ValueError):
        nz.fidelity_vs_noise("single", PLUS_MSG, [0.05, 0.1], shots=64, seed=0, repeats=0)


def test_two_qubit_pipeline_degrades():
    msg = tp.TwoQubitMessage(0.5, 0.5, 0.5, 0.5)
    clean = nz.pipeline_fidelity("two", msg, nz.NoiseModel(0.0, 0.0, 2), shots=2048, seed=2)
    noisy = nz.pipeline_fidelity("two", msg, nz.NoiseModel(0.15, 0.0, 2), shots=2048, seed=2)
    assert clean == pytest.approx(1.0, abs=0.05)
    assert noisy < clean - 0.2


def test_readout_error_alone_degrades_fidelity():
    f = nz.pipeline_fidelity("single", PLUS_MSG, nz.NoiseModel(0.0, 0.2, 9), shots=4096, seed=9)
    assert f < 0.95
