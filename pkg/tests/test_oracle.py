import numpy as np
import pytest

from vdshadow.clifford import pauli_matrix
from vdshadow.oracle import (
    StatePrep, cyclic_shift_permutation, effective_operator, exact_noisy_state, exact_rho_f,
    exact_trace_product, exhaustive_estimator_mean, ghz_unitary,
)
from vdshadow.qsim import NoiseSpec
from vdshadow.shadows import ANCILLA_MATRICES

from conftest import random_hermitian, random_unitary


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_ghz_state(n):
    psi = StatePrep("ghz").state(n)
    ref = np.zeros(1 << n)
    ref[0] = ref[-1] = 1 / np.sqrt(2)
    assert np.allclose(psi, ref)
    u = ghz_unitary(n)
    assert np.allclose(u @ u.conj().T, np.eye(1 << n))


def test_custom_prep_validation(rng):
    StatePrep("custom", random_unitary(rng, 4)).state(2)
    with pytest.raises(ValueError):
        StatePrep("custom", np.ones((2, 2)))
    with pytest.raises(ValueError):
        StatePrep("custom", random_unitary(rng, 4)).state(3)
    with pytest.raises(ValueError):
        StatePrep("bell")


@pytest.mark.parametrize("p", [0.0, 0.1, 0.2, 0.5])
def test_noisy_ghz_closed_forms(p):
    rho = exact_noisy_state(StatePrep("ghz"), NoiseSpec(p, "Y", 0), 3)
    zzi = pauli_matrix("ZZI")
    assert np.isclose(np.trace(zzi @ rho), 1 - 2 * p)
    for M in range(1, 6):
        assert np.isclose(exact_trace_product(rho, [np.eye(8)] * M), (1 - p) ** M + p**M)


def test_trace_product_is_literal(rng):
    rho = exact_noisy_state(StatePrep("custom", random_unitary(rng, 4)), NoiseSpec(0.3), 2)
    ops = [random_hermitian(rng, 4) for _ in range(3)]
    ref = np.trace(ops[0] @ rho @ ops[1] @ rho @ ops[2] @ rho)
    assert np.isclose(exact_trace_product(rho, ops), ref)
    with pytest.raises(ValueError):
        exact_trace_product(rho, [np.eye(2)])


def test_cyclic_shift_is_a_permutation():
    for M, n in ((2, 1), (3, 1), (2, 2)):
        S = cyclic_shift_permutation(M, n)
        assert np.allclose(S @ S.T, np.eye(len(S)))
        assert np.allclose(np.linalg.matrix_power(S, M), np.eye(len(S)))


@pytest.mark.parametrize("M", [1, 2, 3])
def test_rho_f_is_a_state_and_encodes_the_trace_product(rng, M):
    rho = exact_noisy_state(StatePrep("custom", random_unitary(rng, 2)), NoiseSpec(0.2), 1)
    rf = exact_rho_f(rho, M)
    assert np.isclose(np.trace(rf), 1)
    assert np.allclose(rf, rf.conj().T)
    assert np.linalg.eigvalsh(rf).min() > -1e-12
    ops = [random_hermitian(rng, 2) for _ in range(M)]
    full = ANCILLA_MATRICES["X+iY"]
    for o in ops:
        full = np.kron(o, full)
    assert np.isclose(np.trace(full @ rf), exact_trace_product(rho, ops))


@pytest.mark.parametrize("kind,n", [("pauli", 1), ("pauli", 2), ("clifford", 1), ("clifford", 2)])
def test_effective_operator_is_the_identity_map(rng, kind, n):
    # an unbiased shadow averages back to the observable itself
    op = random_hermitian(rng, 1 << n)
    assert np.allclose(effective_operator(kind, op, n), op, atol=1e-10)


def test_exhaustive_mean_matches_trace_product_n2(rng):
    rho = exact_noisy_state(StatePrep("ghz"), NoiseSpec(0.1), 2)
    ops = [random_hermitian(rng, 4) for _ in range(2)]
    rf = exact_rho_f(rho, 2)
    for tags in (["pauli", "clifford", "pauli"], ["pauli", "pauli", "clifford"]):
        e = exhaustive_estimator_mean(rf, 2, tags, ANCILLA_MATRICES["X+iY"], ops)
        assert abs(e - exact_trace_product(rho, ops)) < 1e-9


def test_oracle_size_guard():
    with pytest.raises(ValueError):
        exact_rho_f(np.eye(8) / 8, 5)
