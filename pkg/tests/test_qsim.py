import numpy as np
import pytest

from vdshadow.clifford import pauli_matrix
from vdshadow.qsim import (
    GateSpec, NoiseSpec, QuantumState, TrajectoryBatch, apply_gate, apply_noise, apply_unitary,
    exact_expectation, measure_computational, outcome_probabilities, partial_trace, reset_qubits,
)

from conftest import random_unitary


def test_zero_state_and_check():
    s = QuantumState.zeros(3)
    s.check()
    assert s.num_qubits == 3 and not s.is_density
    QuantumState.zeros(2, density=True).check()


def test_bad_shapes_rejected():
    with pytest.raises(ValueError):
        QuantumState(np.ones(3))
    with pytest.raises(ValueError):
        QuantumState(np.ones((4, 2)))


def test_apply_unitary_matches_kron(rng):
    u = random_unitary(rng, 2)
    psi = QuantumState(random_unitary(rng, 8)[:, 0])
    out = apply_unitary(psi, u, [1]).data
    ref = np.kron(np.eye(2), np.kron(u, np.eye(2))) @ psi.data
    assert np.allclose(out, ref)
    # two-qubit gate on (2, 0): targets[0] is the low bit of the gate index
    v = random_unitary(rng, 4)
    out = apply_unitary(psi, v, [2, 0]).data
    full = np.zeros((8, 8), dtype=complex)
    for i in range(8):
        for j in range(8):
            if (i >> 1) & 1 == (j >> 1) & 1:
                gi = ((i >> 2) & 1) | ((i & 1) << 1)
                gj = ((j >> 2) & 1) | ((j & 1) << 1)
                full[i, j] = v[gi, gj]
    assert np.allclose(out, full @ psi.data)


def test_density_and_vector_paths_agree(rng):
    psi = QuantumState(random_unitary(rng, 8)[:, 0])
    u = random_unitary(rng, 4)
    a = apply_unitary(psi, u, [0, 2]).to_density().data
    b = apply_unitary(psi.to_density(), u, [0, 2]).data
    assert np.allclose(a, b)


def test_controlled_swap_swaps_registers():
    # ancilla 0, A = {1}, B = {2}; |1>_anc |0>_A |1>_B -> |1>_anc |1>_A |0>_B
    s = QuantumState(np.eye(8)[0b101])
    out = apply_gate(s, GateSpec("controlled_swap", targets=(1, 2), control=0)).data
    assert np.allclose(out, np.eye(8)[0b011])
    s = QuantumState(np.eye(8)[0b100])
    out = apply_gate(s, GateSpec("controlled_swap", targets=(1, 2), control=0)).data
    assert np.allclose(out, np.eye(8)[0b100])


def test_gate_spec_validation():
    with pytest.raises(ValueError):
        GateSpec("controlled_swap", targets=(1, 2, 3), control=0)
    with pytest.raises(ValueError):
        GateSpec("hadamard", targets=(0,), control=0)
    with pytest.raises(ValueError):
        GateSpec("custom_unitary", targets=(0,), matrix=np.ones((2, 2)))


def test_noise_channel_density():
    rho = QuantumState.zeros(1, density=True)
    out = apply_noise(rho, NoiseSpec(0.3, "Y", 0)).data
    assert np.allclose(out, np.diag([0.7, 0.3]))
    with pytest.raises(ValueError):
        NoiseSpec(1.5)


def test_measurement_statistics(rng):
    psi = QuantumState(np.array([np.sqrt(0.2), 0, 0, np.sqrt(0.8)]))
    counts = np.zeros(2)
    for _ in range(2000):
        b, post = measure_computational(psi, [1], rng)
        counts[b] += 1
        post.check()
    assert abs(counts[1] / 2000 - 0.8) < 0.05
    assert np.allclose(outcome_probabilities(psi, [0, 1]), [0.2, 0, 0, 0.8])


def test_reset_density_and_trajectory(rng):
    v = random_unitary(rng, 4)[:, 0]
    dens = QuantumState(np.outer(v, v.conj()))
    out = reset_qubits(dens, [1])
    out.check()
    assert np.allclose(partial_trace(out.data, [1], 2), np.diag([1, 0]))
    assert np.allclose(partial_trace(out.data, [0], 2), partial_trace(dens.data, [0], 2))
    b, post = measure_computational(QuantumState(v), [1], rng)
    r = reset_qubits(post, [1])
    r.check()
    assert np.allclose(outcome_probabilities(r, [1]), [1, 0])
    with pytest.raises(ValueError):
        reset_qubits(QuantumState(v), [1])


def test_partial_trace_of_product(rng):
    a = random_unitary(rng, 2)[:, 0]
    b = random_unitary(rng, 4)[:, 0]
    rho = np.outer(np.kron(b, a), np.kron(b, a).conj())
    assert np.allclose(partial_trace(rho, [0], 3), np.outer(a, a.conj()))
    assert np.allclose(partial_trace(rho, [1, 2], 3), np.outer(b, b.conj()))


def test_exact_expectation():
    s = QuantumState(np.array([1, 1]) / np.sqrt(2))
    assert np.isclose(exact_expectation(s, pauli_matrix("X")), 1)
    assert np.isclose(exact_expectation(s.to_density(), pauli_matrix("Z")), 0)


def test_trajectory_batch_matches_dense(rng):
    n, S = 1, 4
    u = random_unitary(rng, 2)
    tb = TrajectoryBatch(S, n)
    tb.apply_ancilla(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    tb.apply_a(u)
    tb.apply_b(u)
    tb.controlled_swap()
    dense = QuantumState.zeros(3)
    dense = apply_unitary(dense, np.array([[1, 1], [1, -1]]) / np.sqrt(2), [0])
    dense = apply_unitary(dense, u, [1])
    dense = apply_unitary(dense, u, [2])
    dense = apply_gate(dense, GateSpec("controlled_swap", targets=(1, 2), control=0))
    # psi[s, b, a, anc] is index anc + 2a + 4b
    assert np.allclose(tb.psi[0].reshape(-1), dense.data)
