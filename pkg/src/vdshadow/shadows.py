"""Shot-by-shot execution of the qubit-reset swap-test circuit and shadow evaluation.

Each shot runs on 2n+1 qubits (ancilla, register A, register B) and yields
a :class:`Snapshot`: outcome bits and Clifford labels for the ancilla and
the M subsystems. Snapshot values ``Tr(O~ rho~_i)`` are computed factor by
factor, so the ``2^(nM+1)``-dimensional shadow is never formed.

Subsystem ordering: the B measurement in round j (j = M..2) is subsystem j,
register A is subsystem 1, and the ancilla is subsystem 0.
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .clifford import (
    CliffordElement,
    deserialize_clifford,
    draw_clifford_choices,
    pauli_matrix,
    serialize_clifford,
    single_qubit_unitaries,
)
from .qsim import GateSpec, NoiseSpec, QuantumState, TrajectoryBatch, apply_gate, apply_noise, apply_unitary

TAGS = ("pauli", "clifford")
ANCILLA_MATRICES = {
    "X": pauli_matrix("X"),
    "Y": pauli_matrix("Y"),
    "X+iY": pauli_matrix("X") + 1j * pauli_matrix("Y"),
    "I": np.eye(2, dtype=complex),
}
CHUNK = 4096
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


class ShadowTypeTag(tuple):
    """Per-subsystem shadow types, ancilla first (always ``pauli``)."""

    def __new__(cls, tags: Sequence[str]):
        tags = tuple(tags)
        if len(tags) < 2:
            raise ValueError("need the ancilla tag plus at least one subsystem")
        if tags[0] != "pauli":
            raise ValueError("the ancilla is always measured with a local Clifford")
        if any(t not in TAGS for t in tags):
            raise ValueError(f"tags must be in {TAGS}, got {tags}")
        return super().__new__(cls, tags)

    @classmethod
    def uniform(cls, kind: str, M: int) -> ShadowTypeTag:
        return cls(("pauli",) + (kind,) * M)

    @property
    def M(self) -> int:
        return len(self) - 1


@dataclass(frozen=True)
class Factor:
    """One observable factor; ``label`` is set when it is a Pauli string."""

    matrix: np.ndarray
    label: Optional[str] = None

    @classmethod
    def from_spec(cls, spec, n: int) -> Factor:
        if isinstance(spec, Factor):
            return spec
        if isinstance(spec, str):
            if spec == "I":
                return cls(np.eye(1 << n, dtype=complex), "I" * n)
            if spec == "zero":
                m = np.zeros((1 << n, 1 << n), dtype=complex)
                m[0, 0] = 1
                return cls(m)
            if len(spec) != n:
                raise ValueError(f"Pauli label {spec!r} does not have {n} letters")
            return cls(pauli_matrix(spec), spec)
        m = np.asarray(spec, dtype=complex)
        if m.shape != (1 << n, 1 << n):
            raise ValueError(f"factor shape {m.shape} does not match n={n}")
        return cls(m)

    @property
    def is_identity(self) -> bool:
        if self.label is not None:
            return set(self.label) <= {"I"}
        return bool(np.allclose(self.matrix, np.eye(len(self.matrix)), atol=1e-12))

    @property
    def locality(self) -> int:
        if self.label is not None:
            return sum(c != "I" for c in self.label)
        return 0 if self.is_identity else len(self.matrix).bit_length() - 1


@dataclass(frozen=True)
class FactorizedObservable:
    """``A0 (x) O_1 (x) ... (x) O_M`` with A0 in {X, Y, X+iY, I}."""

    ancilla_op: str
    factors: Tuple[Factor, ...]
    check_hermitian: bool = True

    def __post_init__(self):
        if self.ancilla_op not in ANCILLA_MATRICES:
            raise ValueError(f"ancilla operator must be one of {tuple(ANCILLA_MATRICES)}")
        if not self.factors:
            raise ValueError("need at least one factor")
        if self.check_hermitian:
            for f in self.factors:
                if not np.allclose(f.matrix, f.matrix.conj().T, atol=1e-10):
                    raise ValueError("observable factors must be Hermitian")

    @classmethod
    def build(cls, ancilla_op: str, specs: Sequence, n: int, check_hermitian: bool = True) -> FactorizedObservable:
        return cls(ancilla_op, tuple(Factor.from_spec(s, n) for s in specs), check_hermitian)

    @property
    def M(self) -> int:
        return len(self.factors)

    @property
    def ancilla_matrix(self) -> np.ndarray:
        return ANCILLA_MATRICES[self.ancilla_op]

    @property
    def localities(self) -> tuple:
        return tuple(f.locality for f in self.factors)

    @property
    def nontrivial_count(self) -> int:
        """N(O~): the ancilla plus every non-identity factor."""
        return 1 + sum(not f.is_identity for f in self.factors)


@dataclass(frozen=True)
class Snapshot:
    """One shot. ``bits[j]`` and ``labels[j]`` belong to subsystem j (0 = ancilla).

    A ``pauli`` label is a tuple of n single-qubit Clifford indices (one for
    the ancilla); a ``clifford`` label is a :class:`CliffordElement`.
    """

    shot: int
    seed: int
    tags: ShadowTypeTag
    bits: tuple
    labels: tuple

    def __post_init__(self):
        if len(self.bits) != len(self.tags) or len(self.labels) != len(self.tags):
            raise ValueError("bits and labels need one entry per subsystem")


def _shadow_vectors_local(local: np.ndarray, bits: np.ndarray) -> np.ndarray:
    """``C_q^dag |z_q>`` per qubit: (S, n, 2)."""
    table = single_qubit_unitaries()
    n = local.shape[1]
    zq = (bits[:, None] >> np.arange(n)) & 1
    rows = table[local, zq, :]  # (S, n, 2) = <z|C
    return rows.conj()


def _global_vectors(tab: np.ndarray, signs: np.ndarray, bits: np.ndarray) -> np.ndarray:
    U = kernels.tableau_to_unitary_batch(tab, signs)
    return U[np.arange(len(bits)), bits, :].conj()


@dataclass
class ShadowEnsemble:
    """N snapshots of one configuration, stored as label arrays.

    ``local[:, j]`` holds single-qubit Clifford indices (used on ``pauli``
    subsystems, and column 0 of the ancilla); ``tableaux[j]``/``signs[j]``
    hold n-qubit Cliffords for ``clifford`` subsystems. Shadow vectors are
    rebuilt from labels on first use and cached.
    """

    n: int
    tags: ShadowTypeTag
    seed: int
    shots: np.ndarray
    bits: np.ndarray
    local: np.ndarray
    tableaux: Dict[int, np.ndarray]
    signs: Dict[int, np.ndarray]
    fingerprint: str = ""
    _vectors: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if len(self.shots) < 1:
            raise ValueError("an ensemble needs at least one snapshot")
        for j, t in enumerate(self.tags):
            if j and t == "clifford" and j not in self.tableaux:
                raise ValueError(f"missing Clifford labels for subsystem {j}")

    def __len__(self) -> int:
        return len(self.shots)

    @property
    def M(self) -> int:
        return self.tags.M

    @property
    def d(self) -> int:
        return 1 << self.n

    def vectors(self, j: int) -> np.ndarray:
        """Shadow vectors of subsystem j: (N, 1, 2) for the ancilla, (N, n, 2) local, (N, d) global."""
        if j not in self._vectors:
            if j == 0:
                v = _shadow_vectors_local(self.local[:, 0, :1], self.bits[:, 0])
            elif self.tags[j] == "pauli":
                v = _shadow_vectors_local(self.local[:, j], self.bits[:, j])
            else:
                v = np.concatenate([
                    _global_vectors(self.tableaux[j][s:s + CHUNK], self.signs[j][s:s + CHUNK],
                                    self.bits[s:s + CHUNK, j])
                    for s in range(0, len(self), CHUNK)
                ])
            self._vectors[j] = v
        return self._vectors[j]

    def subset(self, idx) -> ShadowEnsemble:
        idx = np.asarray(idx)
        out = ShadowEnsemble(
            self.n, self.tags, self.seed, self.shots[idx], self.bits[idx], self.local[idx],
            {j: t[idx] for j, t in self.tableaux.items()},
            {j: s[idx] for j, s in self.signs.items()},
            self.fingerprint,
        )
        out._vectors = {j: v[idx] for j, v in self._vectors.items()}
        return out

    def snapshot(self, i: int) -> Snapshot:
        labels = [(int(self.local[i, 0, 0]),)]
        for j in range(1, self.M + 1):
            if self.tags[j] == "pauli":
                labels.append(tuple(int(k) for k in self.local[i, j]))
            else:
                labels.append(CliffordElement(self.tableaux[j][i].copy(), self.signs[j][i].copy()))
        return Snapshot(int(self.shots[i]), self.seed, self.tags,
                        tuple(int(b) for b in self.bits[i]), tuple(labels))

    def __iter__(self):
        return (self.snapshot(i) for i in range(len(self)))

    @classmethod
    def from_snapshots(cls, snaps: Sequence[Snapshot], n: int, fingerprint: str = "") -> ShadowEnsemble:
        if not snaps:
            raise ValueError("an ensemble needs at least one snapshot")
        tags = snaps[0].tags
        if any(s.tags != tags for s in snaps):
            raise ValueError("snapshots carry different shadow types")
        N, m = len(snaps), tags.M
        local = np.zeros((N, m + 1, n), dtype=np.int8)
        tabs = {j: np.zeros((N, 2 * n, 2 * n), np.uint8) for j in range(1, m + 1) if tags[j] == "clifford"}
        sgns = {j: np.zeros((N, 2 * n), np.uint8) for j in tabs}
        for i, s in enumerate(snaps):
            local[i, 0, 0] = s.labels[0][0]
            for j in range(1, m + 1):
                if tags[j] == "pauli":
                    local[i, j] = s.labels[j]
                else:
                    tabs[j][i] = s.labels[j].tableau
                    sgns[j][i] = s.labels[j].signs
        return cls(n, tags, snaps[0].seed, np.array([s.shot for s in snaps]),
                   np.array([s.bits for s in snaps], dtype=np.int64), local, tabs, sgns, fingerprint)


# ---------------------------------------------------------------- simulation


@dataclass(frozen=True)
class CircuitSpec:
    """What one shot needs: register size, order, preparation, noise, tags, seed."""

    n: int
    tags: ShadowTypeTag
    prep_unitary: np.ndarray
    noise: Optional[NoiseSpec]
    seed: int

    @property
    def M(self) -> int:
        return self.tags.M

    @classmethod
    def from_config(cls, config) -> CircuitSpec:
        return cls(config.n, ShadowTypeTag(config.tag_list()), config.prep.unitary_for(config.n),
                   config.noise, config.seed)

    def fingerprint(self) -> str:
        p = self.noise
        noise = "none" if p is None else f"{p.pauli_op}{p.target_qubit}:{p.error_rate!r}"
        u = np.round(self.prep_unitary[:, 0], 12)
        h = hashlib.sha1(u.tobytes()).hexdigest()[:8]
        return f"n={self.n};tags={','.join(self.tags)};noise={noise};prep={h};seed={self.seed}"


@dataclass
class ShotDraws:
    """Every random number one chunk of shots consumes, drawn in a fixed per-shot layout."""

    noise_u: np.ndarray  # (S, M) copy 0 is A, copy c >= 1 is the c-th B preparation
    meas_u: np.ndarray  # (S, M+1) indexed by subsystem
    local: np.ndarray  # (S, M+1, n)
    ks: np.ndarray  # (S, M, n) Clifford choices for subsystems 1..M
    bits: np.ndarray  # (S, M, n, 2n)
    signs: np.ndarray  # (S, M, 2n)


def draw_layout(n: int, M: int) -> dict:
    """Slices of the per-shot uniform vector, in draw order."""
    sizes = {"noise": M, "meas": M + 1, "local": (M + 1) * n, "ks": M * n,
             "bits": M * n * 2 * n, "signs": M * 2 * n}
    out, pos = {}, 0
    for key, size in sizes.items():
        out[key] = slice(pos, pos + size)
        pos += size
    out["total"] = pos
    return out


def draw_shots(seed: int, shots: np.ndarray, n: int, M: int) -> ShotDraws:
    """One ``default_rng([seed, shot]).random(L)`` call per shot, then discretized.

    Integers are ``floor(u * range)``; Clifford choices follow the layout of
    :func:`draw_clifford_choices` (``ks`` in ``[1, 4^(n-m) - 1]``).
    """
    lay = draw_layout(n, M)
    u = np.empty((len(shots), lay["total"]))
    for i, shot in enumerate(shots):
        u[i] = np.random.default_rng([seed, int(shot)]).random(lay["total"])
    S = len(shots)
    highs = 4 ** np.arange(n, 0, -1, dtype=np.int64) - 1
    ks = 1 + np.floor(u[:, lay["ks"]].reshape(S, M, n) * highs).astype(np.int64)
    return ShotDraws(
        u[:, lay["noise"]],
        u[:, lay["meas"]],
        np.floor(u[:, lay["local"]] * 24).astype(np.int8).reshape(S, M + 1, n),
        ks,
        (u[:, lay["bits"]] < 0.5).astype(np.uint8).reshape(S, M, n, 2 * n),
        (u[:, lay["signs"]] < 0.5).astype(np.uint8).reshape(S, M, 2 * n),
    )


def _local_unitaries(idx: np.ndarray) -> np.ndarray:
    """Per-shot ``kron(u_{n-1}, ..., u_0)`` from (S, n) single-qubit indices."""
    table = single_qubit_unitaries()
    full = table[idx[:, 0]]
    for q in range(1, idx.shape[1]):
        u = table[idx[:, q]]
        S, k = full.shape[0], full.shape[1]
        full = np.einsum("sab,scd->sacbd", u, full).reshape(S, 2 * k, 2 * k)
    return full


def _simulate_chunk(spec: CircuitSpec, shots: np.ndarray):
    n, M = spec.n, spec.M
    dr = draw_shots(spec.seed, shots, n, M)
    S = len(shots)
    tabs, sgns, units = {}, {}, {}
    for j in range(1, M + 1):
        if spec.tags[j] == "clifford":
            t = kernels.random_symplectic_batch(dr.ks[:, j - 1], dr.bits[:, j - 1])
            tabs[j], sgns[j] = t, dr.signs[:, j - 1].copy()
            units[j] = kernels.tableau_to_unitary_batch(t, sgns[j])
        else:
            units[j] = _local_unitaries(dr.local[:, j])
    U = spec.prep_unitary
    noise = spec.noise
    pmat = pauli_matrix(noise.pauli_op) if noise is not None else None

    def prepare(register: str, copy: int):
        (tb.apply_a if register == "A" else tb.apply_b)(U)
        if noise is not None and noise.error_rate > 0:
            mask = dr.noise_u[:, copy] < noise.error_rate
            tb.apply_register_pauli(register, pmat, noise.target_qubit, mask)

    tb = TrajectoryBatch(S, n)
    bits = np.zeros((S, M + 1), dtype=np.int64)
    tb.apply_ancilla(HADAMARD)
    prepare("A", 0)
    if M >= 2:
        prepare("B", 1)
        tb.controlled_swap()
    for j in range(M, 1, -1):
        tb.apply_b(units[j])
        bits[:, j] = tb.measure_b_and_reset(dr.meas_u[:, j])
        if j > 2:
            prepare("B", M - j + 2)
            tb.controlled_swap()
    tb.apply_a(units[1])
    bits[:, 1] = tb.measure_a(dr.meas_u[:, 1])
    tb.apply_ancilla(single_qubit_unitaries()[dr.local[:, 0, 0]])
    bits[:, 0] = tb.measure_ancilla(dr.meas_u[:, 0])
    return bits, dr.local, tabs, sgns


def run_ensemble(spec_or_config, N: int, start: int = 0, threads: Optional[int] = None) -> ShadowEnsemble:
    """Shots ``start .. start+N-1``; shot i draws from ``default_rng([seed, i])``."""
    spec = spec_or_config if isinstance(spec_or_config, CircuitSpec) else CircuitSpec.from_config(spec_or_config)
    if N < 1:
        raise ValueError("N must be positive")
    shots = np.arange(start, start + N)
    chunks = [shots[s:s + CHUNK] for s in range(0, N, CHUNK)]
    threads = threads or 1
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: _simulate_chunk(spec, c), chunks))
    else:
        parts = [_simulate_chunk(spec, c) for c in chunks]
    bits = np.concatenate([p[0] for p in parts])
    local = np.concatenate([p[1] for p in parts])
    tabs = {j: np.concatenate([p[2][j] for p in parts]) for j in parts[0][2]}
    sgns = {j: np.concatenate([p[3][j] for p in parts]) for j in parts[0][3]}
    return ShadowEnsemble(spec.n, spec.tags, spec.seed, shots, bits, local, tabs, sgns, spec.fingerprint())


def run_shot(spec_or_config, shot_index: int) -> Snapshot:
    """Execute one shot of the qubit-reset circuit."""
    return run_ensemble(spec_or_config, 1, start=shot_index).snapshot(0)


# ---------------------------------------------------------------- evaluation


def _local_leg_values(vecs: np.ndarray, label: str) -> np.ndarray:
    out = np.ones(len(vecs), dtype=complex)
    for q, c in enumerate(label):
        if c != "I":
            v = vecs[:, q]
            out *= 3 * np.einsum("si,ij,sj->s", v.conj(), pauli_matrix(c), v)
    return out


def _local_dense_values(vecs: np.ndarray, op: np.ndarray) -> np.ndarray:
    """``Tr(op (x)_q (3 v_q v_q^dag - I))`` with the product built explicitly."""
    N, n, _ = vecs.shape
    out = np.empty(N, dtype=complex)
    for s in range(0, N, CHUNK):
        v = vecs[s:s + CHUNK]
        legs = 3 * np.einsum("sqi,sqj->sqij", v, v.conj()) - np.eye(2)
        full = legs[:, 0]
        for q in range(1, n):
            S, k = full.shape[0], full.shape[1]
            full = np.einsum("sab,scd->sacbd", legs[:, q], full).reshape(S, 2 * k, 2 * k)
        out[s:s + CHUNK] = np.einsum("ij,sji->s", op, full)
    return out


def factor_values(ens: ShadowEnsemble, j: int, op) -> np.ndarray:
    """``Tr(op M(rho_hat^(j)_i))`` for every snapshot i, as an (N,) array."""
    if j == 0:
        op = ANCILLA_MATRICES[op] if isinstance(op, str) else np.asarray(op, dtype=complex)
        if op.shape != (2, 2):
            raise ValueError("ancilla operators are 2x2")
        v = ens.vectors(0)[:, 0]
        return 3 * np.einsum("si,ij,sj->s", v.conj(), op, v) - np.trace(op)
    f = Factor.from_spec(op, ens.n)
    if f.matrix.shape != (ens.d, ens.d):
        raise ValueError(f"operator is {f.matrix.shape}, subsystem is {ens.d}-dimensional")
    if ens.tags[j] == "clifford":
        v = ens.vectors(j)
        return (ens.d + 1) * np.einsum("si,ij,sj->s", v.conj(), f.matrix, v) - np.trace(f.matrix)
    if f.label is not None:
        return _local_leg_values(ens.vectors(j), f.label)
    return _local_dense_values(ens.vectors(j), f.matrix)


def evaluate_ensemble(ens: ShadowEnsemble, obs: FactorizedObservable) -> np.ndarray:
    """Single-shot values ``Tr(O~ rho~_i)`` for all snapshots."""
    if obs.M != ens.M:
        raise ValueError(f"observable has {obs.M} factors, ensemble order is {ens.M}")
    out = factor_values(ens, 0, obs.ancilla_matrix)
    for j, f in enumerate(obs.factors, start=1):
        if not f.is_identity:
            out = out * factor_values(ens, j, f)
    return out


def _single(s: Snapshot, n: int) -> ShadowEnsemble:
    return ShadowEnsemble.from_snapshots([s], n)


def _snapshot_n(s: Snapshot) -> int:
    for lab, t in zip(s.labels[1:], s.tags[1:]):
        return len(lab) if t == "pauli" else lab.num_qubits
    raise ValueError("snapshot has no subsystems")


def snapshot_factor_value(s: Snapshot, j: int, op) -> complex:
    return complex(factor_values(_single(s, _snapshot_n(s)), j, op)[0])


def evaluate_snapshot(s: Snapshot, obs: FactorizedObservable) -> complex:
    return complex(evaluate_ensemble(_single(s, _snapshot_n(s)), obs)[0])


def dense_snapshot_shadow(s: Snapshot) -> np.ndarray:
    """The full ``M~(C_i^dag |z_i><z_i| C_i)`` on nM+1 qubits (small cases only)."""
    n = _snapshot_n(s)
    ens = _single(s, n)
    v0 = ens.vectors(0)[0, 0]
    out = 3 * np.outer(v0, v0.conj()) - np.eye(2)
    for j in range(1, s.tags.M + 1):
        if s.tags[j] == "clifford":
            v = ens.vectors(j)[0]
            blk = (ens.d + 1) * np.outer(v, v.conj()) - np.eye(ens.d)
        else:
            blk = np.array([[1.0 + 0j]])
            for q in range(n):
                v = ens.vectors(j)[0, q]
                blk = np.kron(3 * np.outer(v, v.conj()) - np.eye(2), blk)
        out = np.kron(blk, out)
    return out


# ---------------------------------------------------------------- exact schedule


def reset_circuit_distribution(n: int, M: int, prep_unitary: np.ndarray, noise: Optional[NoiseSpec],
                               unitaries: Sequence[np.ndarray]) -> np.ndarray:
    """Exact joint outcome distribution of the qubit-reset schedule with fixed gates.

    ``unitaries[j]`` is the measurement rotation of subsystem j (j = 0 is the
    2x2 ancilla gate). Density matrices on 2n+1 qubits, branching on every
    mid-circuit outcome. The result is indexed like the nM+1 qubit register
    of the unrolled circuit: bit 0 is the ancilla, bits ``1+n(j-1) .. nj``
    hold subsystem j.
    """
    A = list(range(1, n + 1))
    B = list(range(n + 1, 2 * n + 1))
    d = 1 << n
    k = 2 * n + 1
    cswap = GateSpec("controlled_swap", targets=A + B, control=0)

    def prepare(state, reg):
        state = apply_unitary(state, prep_unitary, reg)
        if noise is not None:
            state = apply_noise(state, NoiseSpec(noise.error_rate, noise.pauli_op, reg[noise.target_qubit]))
        return state

    rho = QuantumState.zeros(k, density=True)
    rho = apply_unitary(rho, HADAMARD, [0])
    rho = prepare(rho, A)
    if M >= 2:
        rho = prepare(rho, B)
        rho = apply_gate(rho, cswap)
    idx = np.arange(1 << k)
    bval = (idx >> (n + 1)) & (d - 1)
    branches = [(rho.data, 0)]  # unnormalized state, outcome index so far
    for j in range(M, 1, -1):
        nxt = []
        for data, key in branches:
            st = apply_unitary(QuantumState(data), unitaries[j], B).data
            for b in range(d):
                keep = bval == b
                proj = np.where(np.outer(keep, keep), st, 0)
                if np.real(np.trace(proj)) < 1e-15:
                    continue
                # reset: move the B=b block to B=0
                moved = np.zeros_like(proj)
                src = idx[keep]
                dst = src & ~((d - 1) << (n + 1))
                moved[np.ix_(dst, dst)] = proj[np.ix_(src, src)]
                nk = key | (b << (1 + n * (j - 1)))
                if j > 2:
                    s = QuantumState(moved)
                    s = prepare(s, B)
                    s = apply_gate(s, cswap)
                    moved = s.data
                nxt.append((moved, nk))
        branches = nxt
    probs = np.zeros(1 << (n * M + 1))
    aval = (idx >> 1) & (d - 1)
    for data, key in branches:
        st = apply_unitary(QuantumState(data), unitaries[1], A)
        st = apply_unitary(st, unitaries[0], [0]).data
        diag = np.real(np.diag(st))
        for a in range(d):
            for z0 in range(2):
                probs[key | (a << 1) | z0] += diag[(aval == a) & ((idx & 1) == z0)].sum()
    return probs


def rho_f_distribution(rho_f: np.ndarray, n: int, M: int, unitaries: Sequence[np.ndarray]) -> np.ndarray:
    """Outcome distribution of measuring ``rho_f`` after ``C_M (x) ... (x) C_1 (x) C_0``."""
    full = np.asarray(unitaries[0])
    for j in range(1, M + 1):
        full = np.kron(unitaries[j], full)
    return np.real(np.diag(full @ rho_f @ full.conj().T)).copy()


# ---------------------------------------------------------------- snapshot log

LOG_FIELDS = ("shot", "seed", "tags", "z", "cliffords")


def snapshot_to_record(s: Snapshot, n: int) -> dict:
    """Fields in order: shot, seed, tags, z (hex per subsystem), cliffords.

    A local label is written ``p:i0,i1,...`` (single-qubit Clifford indices);
    an n-qubit Clifford uses :func:`serialize_clifford`.
    """
    clifs = []
    for lab, t in zip(s.labels, s.tags):
        clifs.append("p:" + ",".join(str(k) for k in lab) if t == "pauli" else serialize_clifford(lab))
    return {"shot": s.shot, "seed": s.seed, "tags": list(s.tags),
            "z": [format(b, "x") for b in s.bits], "cliffords": clifs}


def record_to_snapshot(rec: dict) -> Snapshot:
    if list(rec) != list(LOG_FIELDS):
        raise ValueError(f"snapshot record fields must be {LOG_FIELDS}")
    tags = ShadowTypeTag(rec["tags"])
    labels = []
    for text, t in zip(rec["cliffords"], tags):
        if t == "pauli":
            if not text.startswith("p:"):
                raise ValueError(f"expected a local label, got {text!r}")
            labels.append(tuple(int(k) for k in text[2:].split(",")))
        else:
            labels.append(deserialize_clifford(text))
    return Snapshot(int(rec["shot"]), int(rec["seed"]), tags, tuple(int(z, 16) for z in rec["z"]), tuple(labels))


def write_snapshot_log(ens: ShadowEnsemble, path) -> None:
    with open(path, "w") as fh:
        for s in ens:
            fh.write(json.dumps(snapshot_to_record(s, ens.n)) + "\n")


def read_snapshot_log(path, n: int) -> ShadowEnsemble:
    with open(path) as fh:
        snaps = [record_to_snapshot(json.loads(line)) for line in fh if line.strip()]
    return ShadowEnsemble.from_snapshots(snaps, n)


def default_threads() -> int:
    return max(1, min(8, os.cpu_count() or 1))
