"""Small dense simulator: statevector trajectories and density matrices.

Qubit q is bit q of the basis index. Statevectors carry mid-circuit
measurement and reset for shot sampling; density matrices give exact
channel evolution for oracles.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .clifford import pauli_matrix

TOL = 1e-10
MAX_QUBITS = 16
MAX_DENSITY_QUBITS = 13

_GATES = {
    "hadamard": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "pauli_x": pauli_matrix("X"),
    "pauli_y": pauli_matrix("Y"),
    "pauli_z": pauli_matrix("Z"),
}


class QuantumState:
    """A k-qubit statevector (length 2^k) or density matrix (2^k x 2^k)."""

    def __init__(self, data, num_qubits: Optional[int] = None):
        data = np.array(data, dtype=complex)
        if data.ndim not in (1, 2):
            raise ValueError("state data must be a vector or a square matrix")
        k = int(round(np.log2(data.shape[0])))
        if data.shape[0] != 1 << k or (data.ndim == 2 and data.shape[1] != data.shape[0]):
            raise ValueError(f"bad state shape {data.shape}")
        if num_qubits is not None and num_qubits != k:
            raise ValueError(f"data holds {k} qubits, not {num_qubits}")
        if k > MAX_QUBITS or (data.ndim == 2 and k > MAX_DENSITY_QUBITS):
            raise ValueError(f"{k} qubits is over the simulator limit")
        self.data = data
        self.num_qubits = k

    @property
    def is_density(self) -> bool:
        return self.data.ndim == 2

    @classmethod
    def zeros(cls, k: int, density: bool = False) -> QuantumState:
        v = np.zeros(1 << k, dtype=complex)
        v[0] = 1.0
        return cls(np.outer(v, v) if density else v)

    def to_density(self) -> QuantumState:
        if self.is_density:
            return self
        return QuantumState(np.outer(self.data, self.data.conj()))

    def copy(self) -> QuantumState:
        return QuantumState(self.data.copy())

    def check(self, tol: float = TOL) -> None:
        if self.is_density:
            rho = self.data
            assert np.allclose(rho, rho.conj().T, atol=tol), "density matrix not Hermitian"
            assert abs(np.trace(rho) - 1) < tol, "density matrix trace != 1"
            assert np.linalg.eigvalsh(rho).min() > -tol, "density matrix not PSD"
        else:
            assert abs(np.linalg.norm(self.data) - 1) < tol, "statevector not normalized"

    def __repr__(self):
        kind = "density" if self.is_density else "statevector"
        return f"QuantumState({kind}, num_qubits={self.num_qubits})"


@dataclass(frozen=True)
class GateSpec:
    kind: str
    targets: tuple
    control: Optional[int] = None
    matrix: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if self.kind not in (*_GATES, "controlled_swap", "custom_unitary"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("gate targets must be distinct")
        if self.control is not None and self.control in self.targets:
            raise ValueError("control qubit cannot also be a target")
        if self.kind == "controlled_swap" and (len(self.targets) % 2 or self.control is None):
            raise ValueError("controlled_swap needs a control and an even number of targets")
        if self.kind == "custom_unitary":
            u = np.asarray(self.matrix, dtype=complex)
            if u.shape != (1 << len(self.targets),) * 2:
                raise ValueError("custom unitary has the wrong dimension for its targets")
            if not np.allclose(u @ u.conj().T, np.eye(u.shape[0]), atol=TOL):
                raise ValueError("custom matrix is not unitary")


@dataclass(frozen=True)
class NoiseSpec:
    """Single-Pauli stochastic channel ``(1-p) rho + p P rho P``."""

    error_rate: float
    pauli_op: str = "Y"
    target_qubit: int = 0

    def __post_init__(self):
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValueError(f"error rate must be in [0, 1], got {self.error_rate}")
        if self.pauli_op not in ("X", "Y", "Z"):
            raise ValueError(f"unsupported Pauli {self.pauli_op!r}")


def _check_qubits(state: QuantumState, qubits: Sequence[int]) -> None:
    for q in qubits:
        if not 0 <= q < state.num_qubits:
            raise IndexError(f"qubit {q} out of range for {state.num_qubits} qubits")


def _apply_left(vec_or_rows: np.ndarray, k: int, u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``u`` on ``targets`` to the leading tensor index of an array of shape (2^k, ...)."""
    t = len(targets)
    rest = vec_or_rows.shape[1:]
    psi = vec_or_rows.reshape((2,) * k + rest)
    # tensor axis for qubit q is k-1-q
    axes = [k - 1 - q for q in reversed(targets)]
    gate = u.reshape((2,) * (2 * t))
    out = np.tensordot(gate, psi, axes=(list(range(t, 2 * t)), axes))
    out = np.moveaxis(out, list(range(t)), axes)
    return out.reshape(vec_or_rows.shape)


def _full_unitary(gate: GateSpec):
    """Return (matrix, qubits) acting on an explicit qubit list."""
    if gate.kind in _GATES:
        if len(gate.targets) != 1:
            raise ValueError(f"{gate.kind} acts on exactly one qubit")
        u, qubits = _GATES[gate.kind], list(gate.targets)
    elif gate.kind == "custom_unitary":
        u, qubits = np.asarray(gate.matrix, dtype=complex), list(gate.targets)
    else:
        half = len(gate.targets) // 2
        left, right = gate.targets[:half], gate.targets[half:]
        qubits = [gate.control, *left, *right]
        dim = 1 << len(qubits)
        u = np.zeros((dim, dim), dtype=complex)
        for idx in range(dim):
            out = idx
            if idx & 1:
                for i in range(half):
                    a = (idx >> (1 + i)) & 1
                    b = (idx >> (1 + half + i)) & 1
                    out &= ~((1 << (1 + i)) | (1 << (1 + half + i)))
                    out |= (b << (1 + i)) | (a << (1 + half + i))
            u[out, idx] = 1.0
    if gate.control is not None and gate.kind != "controlled_swap":
        dim = u.shape[0]
        cu = np.eye(2 * dim, dtype=complex)
        # control is the least significant qubit of the enlarged list
        cu[1::2, 1::2] = u
        u, qubits = cu, [gate.control, *qubits]
    return u, qubits


def apply_unitary(state: QuantumState, u: np.ndarray, qubits: Sequence[int]) -> QuantumState:
    _check_qubits(state, qubits)
    k = state.num_qubits
    if state.is_density:
        rho = _apply_left(state.data, k, u, qubits)
        rho = _apply_left(rho.conj().T, k, u, qubits).conj().T
        return QuantumState(rho)
    return QuantumState(_apply_left(state.data, k, u, qubits))


def apply_gate(state: QuantumState, gate: GateSpec) -> QuantumState:
    """Apply a gate; ``controlled_swap`` swaps ``targets[:h]`` with ``targets[h:]``."""
    u, qubits = _full_unitary(gate)
    return apply_unitary(state, u, qubits)


def apply_noise(state: QuantumState, noise: NoiseSpec, rng: Optional[np.random.Generator] = None) -> QuantumState:
    """Density: exact channel. Statevector: apply the Pauli with probability p (needs rng)."""
    _check_qubits(state, [noise.target_qubit])
    p_mat = pauli_matrix(noise.pauli_op)
    if state.is_density:
        flipped = apply_unitary(state, p_mat, [noise.target_qubit]).data
        return QuantumState((1 - noise.error_rate) * state.data + noise.error_rate * flipped)
    if rng is None:
        raise ValueError("trajectory noise needs an rng")
    if rng.random() < noise.error_rate:
        return apply_unitary(state, p_mat, [noise.target_qubit])
    return state


def _marginal(probs: np.ndarray, k: int, qubits: Sequence[int]) -> np.ndarray:
    idx = np.arange(1 << k)
    sub = np.zeros_like(idx)
    for j, q in enumerate(qubits):
        sub |= ((idx >> q) & 1) << j
    return np.bincount(sub, weights=probs, minlength=1 << len(qubits)), sub


def measure_computational(state: QuantumState, qubits: Sequence[int], rng: np.random.Generator):
    """Sample Z-basis outcomes on ``qubits``; returns ``(bits, post_state)``.

    ``bits`` is an int whose bit j is the outcome of ``qubits[j]``.
    """
    if state.is_density:
        raise ValueError("measure_computational samples trajectories; use a statevector")
    _check_qubits(state, qubits)
    if len(set(qubits)) != len(qubits):
        raise ValueError("measured qubits must be distinct")
    probs = np.abs(state.data) ** 2
    marg, sub = _marginal(probs, state.num_qubits, qubits)
    outcome = int(np.searchsorted(np.cumsum(marg), rng.random() * marg.sum(), side="right"))
    outcome = min(outcome, len(marg) - 1)
    assert marg[outcome] > 0, "zero-probability measurement branch"
    post = np.where(sub == outcome, state.data, 0) / np.sqrt(marg[outcome])
    return outcome, QuantumState(post)


def outcome_probabilities(state: QuantumState, qubits: Sequence[int]) -> np.ndarray:
    probs = np.real(np.diag(state.data)) if state.is_density else np.abs(state.data) ** 2
    return _marginal(np.clip(probs, 0, None), state.num_qubits, qubits)[0]


def reset_qubits(state: QuantumState, qubits: Sequence[int]) -> QuantumState:
    """Return ``qubits`` to |0>.

    Density path: trace the qubits out and adjoin |0><0|. Trajectory path: the
    qubits must already be in a computational basis product state (freshly
    measured); anything else raises.
    """
    _check_qubits(state, qubits)
    k = state.num_qubits
    mask = 0
    for q in qubits:
        mask |= 1 << q
    idx = np.arange(1 << k)
    if state.is_density:
        rho = state.data
        rest = idx[(idx & mask) == 0]
        out = np.zeros_like(rho)
        block = np.zeros((len(rest), len(rest)), dtype=complex)
        for b in idx[(idx & ~mask) == 0]:
            block += rho[np.ix_(rest | b, rest | b)]
        out[np.ix_(rest, rest)] = block
        return QuantumState(out)
    v = state.data
    support = idx[np.abs(v) > 1e-12]
    vals = support & mask
    if not np.all(vals == vals[0]):
        raise ValueError("reset on qubits that are not in a measured basis state")
    out = np.zeros_like(v)
    out[support & ~mask] = v[support]
    return QuantumState(out)


def exact_expectation(state: QuantumState, operator: np.ndarray) -> complex:
    """``Tr(O rho)`` or ``<psi|O|psi>``."""
    op = np.asarray(operator)
    dim = 1 << state.num_qubits
    if op.shape != (dim, dim):
        raise ValueError(f"operator shape {op.shape} does not match dimension {dim}")
    if state.is_density:
        return complex(np.trace(op @ state.data))
    return complex(np.vdot(state.data, op @ state.data))


def partial_trace(rho: np.ndarray, keep: Sequence[int], k: int) -> np.ndarray:
    """Reduced density matrix on ``keep``; ``keep[0]`` becomes the least significant qubit."""
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = [letters[q] for q in range(k)]
    cols = [letters[k + q] if q in keep else letters[q] for q in range(k)]
    # tensor axis i holds qubit k-1-i
    spec_in = "".join(reversed(rows)) + "".join(reversed(cols))
    out_q = list(reversed(list(keep)))
    spec_out = "".join(rows[q] for q in out_q) + "".join(cols[q] for q in out_q)
    t = np.einsum(f"{spec_in}->{spec_out}", rho.reshape((2,) * (2 * k)))
    d = 1 << len(keep)
    return t.reshape(d, d)


class TrajectoryBatch:
    """S independent statevector trajectories on an ancilla + registers A and B.

    Layout per shot: index ``anc + 2*a + 2*dA*b`` (ancilla is qubit 0, register
    A qubits 1..n, register B qubits n+1..2n), stored as shape (S, dB, dA, 2).
    """

    def __init__(self, shots: int, n: int):
        self.n = n
        self.d = 1 << n
        self.psi = np.zeros((shots, self.d, self.d, 2), dtype=complex)
        self.psi[:, 0, 0, 0] = 1.0

    @property
    def shots(self) -> int:
        return self.psi.shape[0]

    def apply_ancilla(self, u: np.ndarray) -> None:
        """``u`` is (2,2) or per-shot (S,2,2)."""
        ut = np.swapaxes(u, -1, -2)
        self.psi = self.psi @ (ut if u.ndim == 2 else ut[:, None])

    def apply_a(self, u: np.ndarray) -> None:
        self.psi = (u if u.ndim == 2 else u[:, None]) @ self.psi

    def apply_b(self, u: np.ndarray) -> None:
        S, d = self.shots, self.d
        self.psi = (u @ self.psi.reshape(S, d, 2 * d)).reshape(S, d, d, 2)

    def apply_register_pauli(self, register: str, pauli: np.ndarray, qubit: int, mask: np.ndarray) -> None:
        """Apply a single-qubit Pauli to one register qubit on the shots where ``mask``."""
        if not mask.any():
            return
        full = np.array([[1.0 + 0j]])
        for q in range(self.n):
            full = np.kron(pauli if q == qubit else np.eye(2), full)
        sel = self.psi[mask]
        if register == "A":
            sel = np.einsum("ij,sbjc->sbic", full, sel)
        else:
            sel = np.einsum("ij,sjac->siac", full, sel)
        self.psi[mask] = sel

    def controlled_swap(self) -> None:
        self.psi[..., 1] = self.psi[..., 1].transpose(0, 2, 1).copy()

    def _measure(self, probs: np.ndarray, u: np.ndarray) -> np.ndarray:
        cdf = np.cumsum(probs, axis=1)
        out = (cdf < (u * cdf[:, -1])[:, None]).sum(axis=1)
        out = np.minimum(out, probs.shape[1] - 1)
        chosen = probs[np.arange(len(out)), out]
        assert np.all(chosen > 0), "zero-probability measurement branch"
        return out, chosen

    def measure_b_and_reset(self, u: np.ndarray) -> np.ndarray:
        """Measure B, then reset it to |0>; returns outcomes (S,)."""
        probs = np.einsum("sbac,sbac->sb", self.psi, self.psi.conj()).real
        z, pz = self._measure(probs, u)
        kept = self.psi[np.arange(self.shots), z] / np.sqrt(pz)[:, None, None]
        self.psi = np.zeros_like(self.psi)
        self.psi[:, 0] = kept
        return z

    def measure_a(self, u: np.ndarray) -> np.ndarray:
        probs = np.einsum("sbac,sbac->sa", self.psi, self.psi.conj()).real
        z, pz = self._measure(probs, u)
        kept = self.psi[np.arange(self.shots), :, z] / np.sqrt(pz)[:, None, None]
        self.psi = np.zeros_like(self.psi)
        self.psi[np.arange(self.shots), :, z] = kept
        return z

    def measure_ancilla(self, u: np.ndarray) -> np.ndarray:
        probs = np.einsum("sbac,sbac->sc", self.psi, self.psi.conj()).real
        z, _ = self._measure(probs, u)
        return z
