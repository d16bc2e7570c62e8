"""Exact reference computations for small systems.

Nothing here samples: noisy states, the swap-test final state, literal trace
products and exhaustive expectations over every Clifford choice and outcome.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .clifford import enumerate_cliffords, single_qubit_unitaries
from .qsim import NoiseSpec, QuantumState, apply_noise

MAX_ORACLE_QUBITS = 13
MAX_ENUMERATION = 10**7


@dataclass(frozen=True)
class StatePrep:
    """``ghz`` or ``custom`` (a unitary U, state U|0...0>)."""

    kind: str = "ghz"
    unitary: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("ghz", "custom"):
            raise ValueError(f"unknown state preparation {self.kind!r}")
        if self.kind == "custom":
            u = np.asarray(self.unitary, dtype=complex)
            if u.ndim != 2 or not np.allclose(u @ u.conj().T, np.eye(len(u)), atol=1e-10):
                raise ValueError("custom preparation needs a unitary matrix")

    def unitary_for(self, n: int) -> np.ndarray:
        if self.kind == "custom":
            u = np.asarray(self.unitary, dtype=complex)
            if u.shape != (1 << n, 1 << n):
                raise ValueError(f"custom unitary is {u.shape}, expected {1 << n}-dimensional")
            return u
        return ghz_unitary(n)

    def state(self, n: int) -> np.ndarray:
        return self.unitary_for(n)[:, 0]


@lru_cache(maxsize=None)
def ghz_unitary(n: int) -> np.ndarray:
    """H on qubit 0 followed by CNOTs 0 -> q, as a dense matrix."""
    d = 1 << n
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    u = np.kron(np.eye(d >> 1), h)
    for q in range(1, n):
        cnot = np.zeros((d, d))
        for k in range(d):
            cnot[k ^ (1 << q) if k & 1 else k, k] = 1
        u = cnot @ u
    u = u.astype(complex)
    u.setflags(write=False)
    return u


def exact_noisy_state(prep: StatePrep, noise: Optional[NoiseSpec], n: int) -> np.ndarray:
    """Density matrix of ``Lambda(|psi><psi|)``."""
    if n > MAX_ORACLE_QUBITS:
        raise ValueError(f"n={n} exceeds the oracle limit")
    psi = prep.state(n)
    state = QuantumState(np.outer(psi, psi.conj()))
    if noise is not None:
        state = apply_noise(state, noise)
    return state.data


def exact_trace_product(rho: np.ndarray, ops: Sequence[np.ndarray]) -> complex:
    """``Tr(O_1 rho O_2 rho ... O_M rho)``."""
    rho = np.asarray(rho)
    acc = np.eye(len(rho), dtype=complex)
    for op in ops:
        op = np.asarray(op)
        if op.shape != rho.shape:
            raise ValueError(f"operator shape {op.shape} does not match state {rho.shape}")
        acc = acc @ op @ rho
    return complex(np.trace(acc))


def cyclic_shift_permutation(M: int, n: int) -> np.ndarray:
    """Permutation matrix on M n-qubit subsystems (subsystem 1 least significant).

    Subsystem j of the output holds subsystem j+1 of the input (M wraps to 1).
    With the subsystems listed M, M-1, ..., 1 from left to right, as in the
    tensor ordering of the Clifford product C_M (x) ... (x) C_1, this is the
    cyclic right shift |phi_1 ... phi_M> -> |phi_M phi_1 ... phi_{M-1}>.
    """
    d = 1 << n
    D = d**M
    idx = np.arange(D)
    digits = [(idx // d**j) % d for j in range(M)]
    out = np.zeros_like(idx)
    for j in range(M):
        out += digits[(j + 1) % M] * d**j
    perm = np.zeros((D, D))
    perm[out, idx] = 1.0
    return perm


def exact_rho_f(rho: np.ndarray, M: int) -> np.ndarray:
    """Swap-test final state on 1 + nM qubits, ancilla = qubit 0.

    ``rho_f = 1/2 sum_{a,b} |a><b| (x) S^a rho^{(x)M} S^{dag b}``.
    """
    d = len(rho)
    n = d.bit_length() - 1
    if n * M + 1 > MAX_ORACLE_QUBITS:
        raise ValueError("swap-test state too large for the oracle")
    big = np.array([[1.0 + 0j]])
    for _ in range(M):
        big = np.kron(rho, big)
    S = cyclic_shift_permutation(M, n)
    blocks = {(0, 0): big, (0, 1): big @ S.T, (1, 0): S @ big, (1, 1): S @ big @ S.T}
    D = big.shape[0]
    out = np.zeros((2 * D, 2 * D), dtype=complex)
    for (a, b), blk in blocks.items():
        out[a::2, b::2] = blk / 2
    return out


def _local_effective_operator(op: np.ndarray, n: int) -> np.ndarray:
    """``E_C sum_z rho_hat * Tr(op (x)_q (3 rho_hat_q - I))`` over local Cliffords, exhaustive."""
    units = single_qubit_unitaries()  # (24, 2, 2)
    d = 1 << n
    # single-qubit projectors C^dag|b><b|C for every (clifford, outcome)
    vecs = units.conj().transpose(0, 2, 1)  # columns are C^dag|b>
    projs = np.einsum("cib,cjb->cbij", vecs, vecs.conj()).reshape(48, 2, 2)
    shadows = 3 * projs - np.eye(2)
    # enumerate all 48^n local (clifford, outcome) combinations per qubit
    out = np.zeros((d, d), dtype=complex)
    total = 48**n
    if total > MAX_ENUMERATION:
        raise ValueError("local enumeration too large")
    for flat in range(total):
        p = np.array([[1.0 + 0j]])
        s = np.array([[1.0 + 0j]])
        rest = flat
        for _ in range(n):
            k = rest % 48
            rest //= 48
            p = np.kron(projs[k], p)
            s = np.kron(shadows[k], s)
        out += p * np.trace(op @ s)
    return out / 24**n


def _global_effective_operator(op: np.ndarray, n: int) -> np.ndarray:
    """``E_C sum_z rho_hat * Tr(op ((d+1) rho_hat - I))`` over the full Clifford group."""
    d = 1 << n
    group = enumerate_cliffords(n) if n <= 2 else None
    if group is None:
        raise ValueError("global enumeration is limited to n <= 2")
    tabs = np.stack([c.tableau for c in group])
    signs = np.stack([c.signs for c in group])
    units = kernels.tableau_to_unitary_batch(tabs, signs)
    vecs = units.conj().transpose(0, 2, 1).reshape(-1, d, d)  # [c, i, z] = (C^dag|z>)_i
    vals = (d + 1) * np.einsum("ciz,ij,cjz->cz", vecs.conj(), op, vecs) - np.trace(op)
    out = np.einsum("ciz,cjz,cz->ij", vecs, vecs.conj(), vals)
    return out / len(group)


@lru_cache(maxsize=256)
def _effective_cached(kind: str, n: int, key: bytes) -> np.ndarray:
    d = 1 << n
    op = np.frombuffer(key, dtype=complex).reshape(d, d)
    fn = _local_effective_operator if kind == "pauli" else _global_effective_operator
    return fn(op, n)


def effective_operator(kind: str, op: np.ndarray, n: int) -> np.ndarray:
    op = np.ascontiguousarray(op, dtype=complex)
    return _effective_cached(kind, n, op.tobytes())


def exhaustive_estimator_mean(rho_f: np.ndarray, n: int, tags: Sequence[str],
                              ancilla_op: np.ndarray, ops: Sequence[np.ndarray]) -> complex:
    """Exact mean of the single-shot estimator over all Clifford draws and outcomes.

    The Born weights come from ``rho_f``; since every draw is a product over
    subsystems, the sum factorizes into one effective operator per subsystem.
    """
    M = len(ops)
    if len(tags) != M + 1:
        raise ValueError("need one tag per subsystem including the ancilla")
    full = effective_operator("pauli", ancilla_op, 1)
    for j, op in enumerate(ops, start=1):
        full = np.kron(effective_operator(tags[j], op, n), full)
    return complex(np.trace(full @ rho_f))
