import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vdshadow.clifford import (
    HADAMARD, PHASE_S, CliffordElement, PauliString, clifford_group_order, clifford_to_unitary,
    cliffords_from_choices, conjugate_pauli, deserialize_clifford, draw_clifford_choices,
    enumerate_cliffords, enumerate_single_qubit_cliffords, pauli_matrix, sample_uniform_clifford,
    serialize_clifford, single_qubit_unitaries, symplectic_group_order,
)

labels = st.integers(1, 3).flatmap(lambda n: st.text("IXYZ", min_size=n, max_size=n))


def test_pauli_matrix_little_endian():
    # letter q acts on qubit q, and qubit 0 is the least significant bit
    zi = pauli_matrix("ZI")
    assert np.allclose(np.diag(zi), [1, -1, 1, -1])
    assert np.allclose(pauli_matrix("XY"), np.kron(pauli_matrix("Y"), pauli_matrix("X")))


@given(labels, labels)
def test_pauli_product_matches_matrices(p, q):
    if len(p) != len(q):
        q = (q * 3)[: len(p)]
    a, b = PauliString.from_label(p), PauliString.from_label(q)
    assert np.allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix())


def test_group_orders():
    assert clifford_group_order(1) == 24
    assert clifford_group_order(2) == 11520
    assert symplectic_group_order(1) == 6
    assert len(enumerate_single_qubit_cliffords()) == 24
    assert single_qubit_unitaries().shape == (24, 2, 2)


def test_enumeration_two_qubits_is_the_whole_group():
    group = enumerate_cliffords(2)
    assert len(group) == 11520
    assert len({c.key() for c in group}) == 11520
    assert all(c.is_symplectic() for c in group[::97])
    # deterministic order
    assert [c.key() for c in enumerate_cliffords(2)[:50]] == [c.key() for c in group[:50]]


def test_hadamard_and_phase_act_as_expected():
    h = clifford_to_unitary(HADAMARD)
    assert np.allclose(np.abs(h), np.full((2, 2), 1 / np.sqrt(2)))
    assert conjugate_pauli(HADAMARD, PauliString.from_label("X")).label == "Z"
    assert conjugate_pauli(PHASE_S, PauliString.from_label("X")).label == "Y"


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1), labels)
def test_unitary_realizes_tableau_action(n, seed, label):
    label = (label * 3)[:n]
    c = sample_uniform_clifford(n, np.random.default_rng(seed))
    u = c.to_unitary()
    assert np.allclose(u @ u.conj().T, np.eye(1 << n), atol=1e-12)
    p = PauliString.from_label(label)
    image = conjugate_pauli(c, p)
    assert np.allclose(u @ p.to_matrix() @ u.conj().T, image.to_matrix(), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_compose_matches_unitary_product(n, s1, s2):
    a = sample_uniform_clifford(n, np.random.default_rng(s1))
    b = sample_uniform_clifford(n, np.random.default_rng(s2))
    ab = a.compose(b).to_unitary()
    ref = a.to_unitary() @ b.to_unitary()
    # equal up to a global phase
    k = np.argmax(np.abs(ref))
    phase = ab.flat[k] / ref.flat[k]
    assert abs(abs(phase) - 1) < 1e-10 and np.allclose(ab, phase * ref, atol=1e-10)


def test_serialization_round_trip(rng):
    for n in (1, 2, 3, 5):
        c = sample_uniform_clifford(n, rng)
        assert deserialize_clifford(serialize_clifford(c)) == c


def test_batch_choices_match_single_draws(rng):
    ks, bits, signs = draw_clifford_choices(rng, 3, 16)
    tabs, sg = cliffords_from_choices(ks, bits, signs)
    for t, s in zip(tabs, sg):
        assert CliffordElement(t, s).is_symplectic()


def test_rejects_non_symplectic():
    with pytest.raises(ValueError):
        CliffordElement(np.ones((2, 2), dtype=np.uint8), np.zeros(2, dtype=np.uint8))
