"""Closed-form single-shot variance bounds for the VD shadow estimator.

Each bound caps ``max(Var(Re o_i), Var(Im o_i))`` for one shot. Inputs are
plain descriptors of the factors O_1..O_M, so a bound can be evaluated for
n far beyond what the simulator handles.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class FactorDescriptor:
    locality: int
    norm: float  # operator (infinity) norm
    trace: float
    trace_sq: float  # Tr(O^2)
    traceless_norm: float  # ||O - Tr(O) I / 2^n||_inf
    identity: bool = False

    @classmethod
    def from_matrix(cls, op: np.ndarray) -> FactorDescriptor:
        op = np.asarray(op, dtype=complex)
        d = len(op)
        n = d.bit_length() - 1
        ident = np.allclose(op, np.eye(d))
        tr = np.trace(op).real
        evals = np.linalg.eigvalsh((op + op.conj().T) / 2)
        t0 = np.linalg.eigvalsh((op + op.conj().T) / 2 - tr / d * np.eye(d))
        return cls(_locality(op, n), float(np.abs(evals).max()), float(tr),
                   float(np.trace(op @ op).real), float(np.abs(t0).max()), ident)

    @classmethod
    def identity_on(cls, n: int) -> FactorDescriptor:
        d = 2**n
        return cls(0, 1.0, float(d), float(d), 0.0, True)

    @classmethod
    def projector_zero(cls, n: int) -> FactorDescriptor:
        """|0..0><0..0| on n qubits."""
        return cls(n, 1.0, 1.0, 1.0, 1.0 - 2.0**-n)

    @classmethod
    def pauli(cls, weight: int, n: int) -> FactorDescriptor:
        if weight == 0:
            return cls.identity_on(n)
        return cls(weight, 1.0, 0.0, float(2**n), 1.0)


def _locality(op: np.ndarray, n: int) -> int:
    """Number of qubits the operator acts on non-trivially."""
    t = op.reshape((2,) * (2 * n))
    count = 0
    for q in range(n):
        # axes are big-endian: qubit q is axis n-1-q (row) and 2n-1-q (column)
        r, c = n - 1 - q, 2 * n - 1 - q
        m = np.moveaxis(t, (r, c), (0, 1)).reshape(2, 2, -1)
        if not (np.allclose(m[0, 1], 0) and np.allclose(m[1, 0], 0) and np.allclose(m[0, 0], m[1, 1])):
            count += 1
    return count


@dataclass(frozen=True)
class BoundInput:
    """Factor descriptors plus, for mixed bounds, which factors are global.

    ``nontrivial`` is N(O~), the number of non-identity operators in
    ``A0 (x) O_1 (x) ... (x) O_M`` counting the ancilla operator; by default
    it is 1 + the non-identity factors.
    """

    n: int
    factors: tuple
    global_set: frozenset = field(default_factory=frozenset)
    nontrivial: Optional[int] = None

    def __post_init__(self):
        if not self.factors:
            raise ValueError("need at least one factor")
        if self.nontrivial is None:
            object.__setattr__(self, "nontrivial", 1 + sum(not f.identity for f in self.factors))
        if self.nontrivial < 1:
            raise ValueError("N(O~) must be at least 1")
        for f in self.factors:
            if f.locality > self.n or f.locality < 0:
                raise ValueError(f"locality {f.locality} outside [0, {self.n}]")
            if f.norm < 0 or f.traceless_norm < 0:
                raise ValueError("norms must be non-negative")
        if any(not 0 <= j < len(self.factors) for j in self.global_set):
            raise ValueError("global index out of range")

    @classmethod
    def from_matrices(cls, ops: Sequence[np.ndarray], global_idx: Iterable[int] = ()) -> BoundInput:
        d = len(ops[0])
        return cls(d.bit_length() - 1, tuple(FactorDescriptor.from_matrix(o) for o in ops),
                   frozenset(global_idx))

    @property
    def local_set(self) -> frozenset:
        return frozenset(range(len(self.factors))) - self.global_set


def _clifford_term(f: FactorDescriptor, n: int) -> float:
    return 3 * f.trace_sq + (2 * f.trace * f.traceless_norm + f.trace**2) / 2**n


def _mixed_global_term(f: FactorDescriptor, n: int) -> float:
    return 3 * f.trace_sq + 2 * f.trace * f.traceless_norm + f.trace**2 / 2**n


def pauli_bound(inp: BoundInput) -> float:
    """``3 * 4^(sum l_j) * max_j ||O_j||^2``."""
    l = sum(f.locality for f in inp.factors)
    return 3.0 * 4.0**l * max(f.norm for f in inp.factors) ** 2


def clifford_bound(inp: BoundInput) -> float:
    nt = [f for f in inp.factors if not f.identity]
    if inp.nontrivial <= 1 or not nt:
        return 3.0
    return 3.0 * max(_clifford_term(f, inp.n) for f in nt) ** (inp.nontrivial - 1)


def _var_local(inp: BoundInput, idx) -> float:
    fs = [inp.factors[j] for j in idx]
    if not fs:
        return 1.0
    return 4.0 ** sum(f.locality for f in fs) * max(f.norm for f in fs) ** 2


def _var_global(inp: BoundInput, idx) -> float:
    # N(O~_G) counts the ancilla operator, so the exponent is the number of global factors
    nt = [inp.factors[j] for j in idx if not inp.factors[j].identity]
    if not nt:
        return 1.0
    return max(_mixed_global_term(f, inp.n) for f in nt) ** len(nt)


def mixed_bound(inp: BoundInput) -> float:
    """``9 * Var_L * Var_G`` with Pauli shadows on the local set, Clifford on the global set."""
    return 9.0 * _var_local(inp, sorted(inp.local_set)) * _var_global(inp, sorted(inp.global_set))


def mixed_closed_form(x: int, n: int, l1: int = 1) -> float:
    """Mixed bound for ``Tr((O_1 rho)^x (O_2 rho)^x)`` as quoted for the trade-off curves.

    Uses ``Var_L = 4^(x l1)`` and ``Var_G = (3 + 2^-n)^x``; this does not follow
    from :func:`mixed_bound` applied to the same factors.
    """
    return 9.0 * 4.0 ** (x * l1) * (3.0 + 2.0**-n) ** x


def power_family(n: int, x: int, l1: int = 1) -> BoundInput:
    """``x`` copies of a unit-norm l1-local Pauli, then ``x`` copies of |0..0><0..0|."""
    local = FactorDescriptor.pauli(l1, n)
    glob = FactorDescriptor.projector_zero(n)
    return BoundInput(n, (local,) * x + (glob,) * x, frozenset(range(x, 2 * x)))


TRADEOFF_COLUMNS = ("sweep", "value", "pauli_bound", "clifford_bound", "mixed_bound", "mixed_closed_form")


def tradeoff_table(sweep: str, values: Sequence[int], n: Optional[int] = None, x: Optional[int] = None,
                   l1: int = 1) -> list:
    """Rows over ``n`` (with fixed ``x``) or over ``x`` (with fixed ``n``)."""
    if sweep not in ("n", "x"):
        raise ValueError(f"unknown sweep {sweep!r}")
    rows = []
    for v in values:
        nn, xx = (v, x or 1) if sweep == "n" else (n or 5, v)
        inp = power_family(nn, xx, l1)
        rows.append({"sweep": sweep, "value": v, "pauli_bound": pauli_bound(inp),
                     "clifford_bound": clifford_bound(inp), "mixed_bound": mixed_bound(inp),
                     "mixed_closed_form": mixed_closed_form(xx, nn, l1)})
    return rows


def table_to_csv(rows: list, columns: Sequence[str] = TRADEOFF_COLUMNS) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\r\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(r[k])) if isinstance(r[k], float) else r[k]) for k in columns})
    return buf.getvalue()
