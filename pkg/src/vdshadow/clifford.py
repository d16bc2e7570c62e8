"""Pauli strings and Clifford group elements in stabilizer-tableau form.

Qubit q is bit q of a basis index (little-endian). A tableau stores the images
of X_q (row ``2q``) and Z_q (row ``2q+1``) as interleaved symplectic vectors
``(x_0, z_0, x_1, z_1, ...)`` plus one sign bit per row; each image is
``(-1)**sign`` times a Hermitian Pauli string.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import kernels

MAX_QUBITS = 16
MAX_DENSE_QUBITS = 13

_PHASES = (1, 1j, -1, -1j)
_LETTERS = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_BITS = {v: k for k, v in _LETTERS.items()}


@dataclass(frozen=True)
class PauliString:
    """``phase * (sigma_0 (x) sigma_1 ...)`` with Hermitian single-qubit factors."""

    x_bits: tuple
    z_bits: tuple
    phase: complex = 1

    def __post_init__(self):
        if len(self.x_bits) != len(self.z_bits):
            raise ValueError("x and z bit-vectors differ in length")
        if self.phase not in _PHASES:
            raise ValueError(f"phase must be one of {_PHASES}, got {self.phase}")

    @property
    def num_qubits(self) -> int:
        return len(self.x_bits)

    @classmethod
    def from_label(cls, label: str, phase: complex = 1) -> PauliString:
        """``label[q]`` is the letter acting on qubit q, e.g. ``"ZZI"``."""
        xs, zs = zip(*(_BITS[c] for c in label.upper()))
        return cls(tuple(xs), tuple(zs), phase)

    @property
    def label(self) -> str:
        return "".join(_LETTERS[(x, z)] for x, z in zip(self.x_bits, self.z_bits))

    def _xz_exponent(self) -> int:
        # phase * prod sigma = i^e X^x Z^z
        return (_PHASES.index(self.phase) + sum(x & z for x, z in zip(self.x_bits, self.z_bits))) % 4

    @classmethod
    def _from_xz(cls, e: int, x, z) -> PauliString:
        e = (e - sum(a & b for a, b in zip(x, z))) % 4
        return cls(tuple(int(v) for v in x), tuple(int(v) for v in z), _PHASES[e])

    def __mul__(self, other: PauliString) -> PauliString:
        if self.num_qubits != other.num_qubits:
            raise ValueError("Pauli size mismatch")
        e = self._xz_exponent() + other._xz_exponent()
        # Z^z1 X^x2 = (-1)^{z1.x2} X^x2 Z^z1
        e += 2 * (sum(a & b for a, b in zip(self.z_bits, other.x_bits)) % 2)
        x = [a ^ b for a, b in zip(self.x_bits, other.x_bits)]
        z = [a ^ b for a, b in zip(self.z_bits, other.z_bits)]
        return PauliString._from_xz(e, x, z)

    def to_matrix(self) -> np.ndarray:
        if self.num_qubits > MAX_DENSE_QUBITS:
            raise ValueError("too many qubits for a dense matrix")
        out = np.array([[1.0 + 0j]])
        for q in range(self.num_qubits):
            out = np.kron(_pauli_matrix(_LETTERS[(self.x_bits[q], self.z_bits[q])]), out)
        return self.phase * out


@lru_cache(maxsize=None)
def _pauli_matrix(letter: str) -> np.ndarray:
    return {
        "I": np.eye(2, dtype=complex),
        "X": np.array([[0, 1], [1, 0]], dtype=complex),
        "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
        "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    }[letter]


def pauli_matrix(label: str) -> np.ndarray:
    """Dense matrix of a Pauli label, ``label[q]`` acting on qubit q."""
    return PauliString.from_label(label).to_matrix()


@dataclass(frozen=True, eq=False)
class CliffordElement:
    """An n-qubit Clifford, up to global phase, as a tableau + sign bits."""

    tableau: np.ndarray
    signs: np.ndarray
    _unitary: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        tab = np.asarray(self.tableau, dtype=np.uint8)
        signs = np.asarray(self.signs, dtype=np.uint8)
        if tab.ndim != 2 or tab.shape[0] != tab.shape[1] or tab.shape[0] % 2:
            raise ValueError("tableau must be 2n x 2n")
        if signs.shape != (tab.shape[0],):
            raise ValueError("need one sign bit per tableau row")
        tab.setflags(write=False)
        signs.setflags(write=False)
        object.__setattr__(self, "tableau", tab)
        object.__setattr__(self, "signs", signs)
        if not self.is_symplectic():
            raise ValueError("tableau is not symplectic")

    @property
    def num_qubits(self) -> int:
        return self.tableau.shape[0] // 2

    @classmethod
    def identity(cls, n: int) -> CliffordElement:
        return cls(np.eye(2 * n, dtype=np.uint8), np.zeros(2 * n, dtype=np.uint8))

    def key(self) -> bytes:
        return self.tableau.tobytes() + self.signs.tobytes()

    def __eq__(self, other):
        return isinstance(other, CliffordElement) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def image(self, row: int) -> PauliString:
        v = self.tableau[row]
        p = PauliString(tuple(int(b) for b in v[0::2]), tuple(int(b) for b in v[1::2]))
        return PauliString(p.x_bits, p.z_bits, -1 if self.signs[row] else 1)

    def is_symplectic(self) -> bool:
        n = self.num_qubits
        omega = np.kron(np.eye(n, dtype=np.int64), np.array([[0, 1], [1, 0]]))
        t = self.tableau.astype(np.int64)
        return bool(np.array_equal((t @ omega @ t.T) % 2, omega))

    def compose(self, inner: CliffordElement) -> CliffordElement:
        """The Clifford ``self * inner`` (``inner`` acts first)."""
        if inner.num_qubits != self.num_qubits:
            raise ValueError("Clifford size mismatch")
        rows, signs = [], []
        for r in range(2 * self.num_qubits):
            p = conjugate_pauli(self, inner.image(r))
            rows.append([b for pair in zip(p.x_bits, p.z_bits) for b in pair])
            signs.append(0 if p.phase == 1 else 1)
        return CliffordElement(np.array(rows, dtype=np.uint8), np.array(signs, dtype=np.uint8))

    def to_unitary(self) -> np.ndarray:
        return clifford_to_unitary(self)

    def serialize(self) -> str:
        return serialize_clifford(self)


def conjugate_pauli(c: CliffordElement, p: PauliString) -> PauliString:
    """Return ``C P C^dag`` as a signed Pauli string."""
    n = c.num_qubits
    if p.num_qubits != n:
        raise ValueError(f"Pauli on {p.num_qubits} qubits, Clifford on {n}")
    # phase * sigma = i^e X^x Z^z = i^e prod_q X_q^{x_q} prod_q Z_q^{z_q}
    out = PauliString((0,) * n, (0,) * n, _PHASES[p._xz_exponent()])
    for q in range(n):
        if p.x_bits[q]:
            out = out * c.image(2 * q)
    for q in range(n):
        if p.z_bits[q]:
            out = out * c.image(2 * q + 1)
    return out


def clifford_to_unitary(c: CliffordElement) -> np.ndarray:
    """Dense unitary; global phase fixed so column 0's first nonzero entry is real positive."""
    if c.num_qubits > MAX_DENSE_QUBITS:
        raise ValueError(f"n={c.num_qubits} exceeds dense limit {MAX_DENSE_QUBITS}")
    if not c._unitary:
        c._unitary.append(kernels.tableau_to_unitary_batch(c.tableau[None], c.signs[None])[0])
    return c._unitary[0]


def draw_clifford_choices(rng: np.random.Generator, n: int, size=()):
    """Uniform random choices consumed by :func:`cliffords_from_choices`."""
    size = tuple(np.atleast_1d(size)) if size != () else ()
    highs = 4 ** np.arange(n, 0, -1, dtype=np.int64)
    ks = rng.integers(1, highs, size=size + (n,))
    bits = rng.integers(0, 2, size=size + (n, 2 * n), dtype=np.uint8)
    signs = rng.integers(0, 2, size=size + (2 * n,), dtype=np.uint8)
    return ks, bits, signs


def cliffords_from_choices(ks, bits, signs):
    """Batch tableaux ``(uint8[S,2n,2n], uint8[S,2n])`` from drawn choices."""
    ks = np.asarray(ks).reshape(-1, np.shape(ks)[-1])
    n = ks.shape[1]
    bits = np.asarray(bits).reshape(-1, n, 2 * n)
    signs = np.asarray(signs, dtype=np.uint8).reshape(-1, 2 * n)
    return kernels.random_symplectic_batch(ks, bits), signs


def sample_uniform_clifford(n: int, rng: np.random.Generator) -> CliffordElement:
    """Uniformly random n-qubit Clifford (modulo global phase).

    A uniform symplectic matrix is built by the transvection construction of
    Koenig and Smolin, then each generator image gets an independent sign.
    """
    if not 1 <= n <= MAX_QUBITS:
        raise ValueError(f"n must be in [1, {MAX_QUBITS}], got {n}")
    tab, signs = cliffords_from_choices(*draw_clifford_choices(rng, n))
    return CliffordElement(tab[0], signs[0])


def symplectic_group_order(n: int) -> int:
    order = 2 ** (n * n)
    for j in range(1, n + 1):
        order *= 4**j - 1
    return order


def clifford_group_order(n: int) -> int:
    """Size of the Clifford group modulo phases, ``4**n * |Sp(2n, 2)|``."""
    return 4**n * symplectic_group_order(n)


def _gate(rows, signs) -> CliffordElement:
    return CliffordElement(np.array(rows, dtype=np.uint8), np.array(signs, dtype=np.uint8))


HADAMARD = _gate([[0, 1], [1, 0]], [0, 0])  # X -> Z, Z -> X
PHASE_S = _gate([[1, 1], [0, 1]], [0, 0])  # X -> Y, Z -> Z


@lru_cache(maxsize=1)
def _single_qubit_group() -> tuple:
    seen = {CliffordElement.identity(1)}
    order = [CliffordElement.identity(1)]
    frontier = list(order)
    while frontier:
        nxt = []
        for c in frontier:
            for g in (HADAMARD, PHASE_S):
                h = g.compose(c)
                if h not in seen:
                    seen.add(h)
                    order.append(h)
                    nxt.append(h)
        frontier = nxt
    return tuple(order)


def enumerate_single_qubit_cliffords() -> list:
    """All 24 single-qubit Cliffords; index 0 is the identity. Order is fixed."""
    return list(_single_qubit_group())


@lru_cache(maxsize=1)
def single_qubit_unitaries() -> np.ndarray:
    """``complex[24, 2, 2]`` table matching :func:`enumerate_single_qubit_cliffords`."""
    return np.stack([c.to_unitary() for c in _single_qubit_group()])


def enumerate_cliffords(n: int) -> list:
    """Every n-qubit Clifford modulo phase (n <= 2), by closure over H, S and CNOT."""
    return list(_enumerate_cached(n))


@lru_cache(maxsize=2)
def _enumerate_cached(n: int) -> tuple:
    if n > 2:
        raise ValueError("full enumeration is limited to n <= 2")
    gens = []
    eye = np.eye(2 * n, dtype=np.uint8)
    for q in range(n):
        for g in (HADAMARD, PHASE_S):
            tab = eye.copy()
            tab[2 * q : 2 * q + 2, 2 * q : 2 * q + 2] = g.tableau
            gens.append(CliffordElement(tab, np.zeros(2 * n, dtype=np.uint8)))
    if n == 2:
        # CNOT control 0 target 1: X0 -> X0 X1, Z1 -> Z0 Z1
        gens.append(_gate([[1, 0, 1, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 1, 0, 1]], [0] * 4))
    start = CliffordElement.identity(n)
    seen = {start}
    order = [start]
    frontier = [start]
    while frontier:
        nxt = []
        for c in frontier:
            for g in gens:
                h = g.compose(c)
                if h not in seen:
                    seen.add(h)
                    order.append(h)
                    nxt.append(h)
        frontier = nxt
    return tuple(order)


def serialize_clifford(c: CliffordElement) -> str:
    """``n:row0,row1,...:signs`` with each row and the sign vector as hex integers.

    Bit j of a row is coordinate j of the interleaved symplectic vector; bit r
    of ``signs`` is the sign of row r.
    """
    def as_int(bits):
        return sum(int(b) << j for j, b in enumerate(bits))

    rows = ",".join(format(as_int(r), "x") for r in c.tableau)
    return f"{c.num_qubits}:{rows}:{format(as_int(c.signs), 'x')}"


def deserialize_clifford(text: str) -> CliffordElement:
    n_s, rows_s, signs_s = text.strip().split(":")
    n = int(n_s)
    rows = [int(r, 16) for r in rows_s.split(",")]
    if len(rows) != 2 * n:
        raise ValueError(f"expected {2 * n} tableau rows, got {len(rows)}")
    tab = np.array([[(r >> j) & 1 for j in range(2 * n)] for r in rows], dtype=np.uint8)
    s = int(signs_s, 16)
    signs = np.array([(s >> j) & 1 for j in range(2 * n)], dtype=np.uint8)
    return CliffordElement(tab, signs)
