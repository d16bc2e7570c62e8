"""Order-M estimates assembled from a independent order-M/a shadows.

Block k carries the factors O_{k,1..m} (m = M/a). For snapshot i let

    g_k(i) = Tr((X+iY) rho~^0_i) * prod_{j>=2} Tr(O_{k,j} rho~^(j)_i)
    Y_k(i) = g_k(i) * R_i,         R_i = shadow of subsystem 1 of snapshot i

so that E[Y_k] = rho O_{k,2} rho ... O_{k,m} rho. The estimator is the
U-statistic over distinct tuples

    (N-a)!/N! * sum_{i_1..i_a distinct} Tr(O_{1,1} Y_1(i_1) O_{2,1} Y_2(i_2) ... O_{a,1} Y_a(i_a))

whose mean is Tr(O_1 rho O_2 rho ... O_M rho).

The fast path expands every Clifford shadow as R = (d+1) v v^dag - I and
sums the 2^a resulting terms with chained N x N matrix products (the F
recursion). Position a is given d extra "pseudo" indices e_beta carrying the
identity part, so terms where block a does not contribute its rank-one piece
ride along in the same recursion. Index distinctness is enforced only
between consecutive rank-one positions (zero diagonals); the terms with at
most one rank-one position are replaced by exact all-distinct sums. For
a = 2 this is the full U-statistic; for a >= 3 the gap to the all-distinct
sum is measured by :func:`distinctness_gap`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .shadows import Factor, ShadowEnsemble, factor_values
from .vd import EstimateResult

BRUTE_FORCE_LIMIT = 10**7


@dataclass(frozen=True)
class BlockObservable:
    """a blocks of m = M/a factors each; the ancilla operator is always X+iY."""

    blocks: Tuple[Tuple[Factor, ...], ...]

    @classmethod
    def split(cls, ops: Sequence, a: int, n: int) -> BlockObservable:
        """Cut ``O_1..O_M`` into a consecutive blocks."""
        M = len(ops)
        if a < 1 or M % a:
            raise ValueError(f"a={a} must divide M={M}")
        m = M // a
        fs = [Factor.from_spec(o, n) for o in ops]
        return cls(tuple(tuple(fs[k * m:(k + 1) * m]) for k in range(a)))

    @property
    def a(self) -> int:
        return len(self.blocks)

    @property
    def m(self) -> int:
        return len(self.blocks[0])

    def __post_init__(self):
        if not self.blocks or len({len(b) for b in self.blocks}) != 1:
            raise ValueError("blocks must be non-empty and of equal arity")

    def lead(self, k: int) -> np.ndarray:
        return self.blocks[k][0].matrix


def _check(ens: ShadowEnsemble, blocks: BlockObservable) -> None:
    if ens.M != blocks.m:
        raise ValueError(f"ensemble order {ens.M} does not match block arity {blocks.m}")


def block_weights(ens: ShadowEnsemble, blocks: BlockObservable) -> np.ndarray:
    """``g_k(i)`` as an (a, N) array."""
    _check(ens, blocks)
    anc = factor_values(ens, 0, "X+iY")
    out = np.empty((blocks.a, len(ens)), dtype=complex)
    for k, blk in enumerate(blocks.blocks):
        g = anc.copy()
        for j, f in enumerate(blk[1:], start=2):
            if not f.is_identity:
                g = g * factor_values(ens, j, f)
        out[k] = g
    return out


def lead_shadows(ens: ShadowEnsemble) -> np.ndarray:
    """Dense shadows of subsystem 1, (N, d, d)."""
    d = ens.d
    if ens.tags[1] == "clifford":
        v = ens.vectors(1)
        return (d + 1) * np.einsum("si,sj->sij", v, v.conj()) - np.eye(d)
    u = ens.vectors(1)
    legs = 3 * np.einsum("sqi,sqj->sqij", u, u.conj()) - np.eye(2)
    full = legs[:, 0]
    for q in range(1, ens.n):
        S, k = full.shape[0], full.shape[1]
        full = np.einsum("sab,scd->sacbd", legs[:, q], full).reshape(S, 2 * k, 2 * k)
    return full


def _falling_factorial_log(N: int, a: int) -> float:
    return math.lgamma(N + 1) - math.lgamma(N - a + 1)


def _normalize(total: complex, N: int, a: int) -> complex:
    return total * math.exp(-_falling_factorial_log(N, a))


# ---------------------------------------------------------------- a = 2


def combine_two_blocks(ens: ShadowEnsemble, ops: Sequence, n: Optional[int] = None) -> EstimateResult:
    """``1/(N(N-1)) sum_{i != j} Tr(A Y_1(i) B Y_2(j))`` in O(N d^3).

    The off-diagonal sum is ``Tr(A S_1 B S_2)`` minus the diagonal, with
    ``S_k = sum_i Y_k(i)``. The error bar uses the first-order (Hoeffding)
    variance ``4 Var(psi_i) / N`` of the symmetrized projections.
    """
    blocks = BlockObservable.split(ops, 2, ens.n)
    N = len(ens)
    if N < 2:
        raise ValueError("need N >= 2")
    g = block_weights(ens, blocks)
    R = lead_shadows(ens)
    A, B = blocks.lead(0), blocks.lead(1)
    Y1 = g[0][:, None, None] * R
    Y2 = g[1][:, None, None] * R
    S1, S2 = Y1.sum(0), Y2.sum(0)
    AY1 = A @ Y1  # (N, d, d)
    BY2 = B @ Y2
    diag = np.einsum("sij,sji->s", AY1, BY2)
    total = np.trace(A @ S1 @ B @ S2) - diag.sum()
    value = total / (N * (N - 1))
    # h(i, j) = Tr(A Y1_i B Y2_j); row_i = sum_{j != i} h(i, j), col_j likewise
    row = np.einsum("sij,ji->s", AY1, B @ S2) - diag
    col = np.einsum("ij,sji->s", A @ S1, BY2) - diag
    psi = (row + col) / (2 * (N - 1))
    var = (np.var(psi.real, ddof=1) + np.var(psi.imag, ddof=1)) if N > 2 else float("nan")
    se = float(np.sqrt(4 * var / N)) if N > 2 else float("nan")
    se_re = float(np.sqrt(4 * np.var(psi.real, ddof=1) / N)) if N > 2 else float("nan")
    se_im = float(np.sqrt(4 * np.var(psi.imag, ddof=1) / N)) if N > 2 else float("nan")
    return EstimateResult(complex(value), se, N, se_re, se_im,
                          metadata={"M": 2 * ens.M, "a": 2, "estimator": "shallow"})


# ---------------------------------------------------------------- brute force


def _chain_matrices(ens: ShadowEnsemble, blocks: BlockObservable) -> np.ndarray:
    """``O_{k,1} Y_k(i)`` for all k, i: (a, N, d, d)."""
    g = block_weights(ens, blocks)
    R = lead_shadows(ens)
    return np.stack([blocks.lead(k) @ (g[k][:, None, None] * R) for k in range(blocks.a)])


def brute_force_combine(ens: ShadowEnsemble, blocks: BlockObservable, a: Optional[int] = None) -> complex:
    """Literal average over all-distinct index tuples (the reference)."""
    a = blocks.a if a is None else a
    if a != blocks.a:
        raise ValueError("a does not match the block count")
    N = len(ens)
    if N < a:
        raise ValueError(f"N={N} < a={a}")
    if N**a > BRUTE_FORCE_LIMIT:
        raise ValueError(f"N^a = {N**a} exceeds the brute-force guard")
    C = _chain_matrices(ens, blocks)
    total = 0j
    for tup in itertools.permutations(range(N), a):
        acc = C[0, tup[0]]
        for k in range(1, a):
            acc = acc @ C[k, tup[k]]
        total += np.trace(acc)
    return _normalize(total, N, a)


# ---------------------------------------------------------------- fast path


@dataclass
class CrossMatrixSet:
    """Segment matrices of the chained sum, keyed by (k, k') with 1 <= k <= k' <= a.

    ``E[(k, k')]`` links the rank-one position k-1 (cyclically a when k = 1)
    to the rank-one position k', with positions k..k'-1 contributing their
    identity part. Rows/columns at position a have N + d entries: the last
    d are the pseudo indices. Real-real diagonals are zero.
    """

    N: int
    d: int
    a: int
    E: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.E[key]


class _Segments:
    """Builds segment matrices on demand from the per-snapshot data."""

    def __init__(self, ens: ShadowEnsemble, blocks: BlockObservable):
        if ens.tags[1] != "clifford":
            raise ValueError("the matrix algorithm needs a Clifford-type lead subsystem")
        self.N, self.d, self.a = len(ens), ens.d, blocks.a
        self.g = block_weights(ens, blocks)
        self.s = -self.g.sum(axis=1)  # identity-part weight per block, free index
        self.V = ens.vectors(1).T  # (d, N), column i is v_i
        self.W = np.concatenate([self.V, np.eye(self.d)], axis=1)  # position a: + pseudo
        self.kappa_last = np.concatenate([(self.d + 1) * self.g[-1], np.full(self.d, self.s[-1])])
        self.ops = [blocks.lead(k) for k in range(self.a)]

    def _vecs(self, pos: int) -> np.ndarray:
        return self.W if pos == self.a else self.V

    def _kappa(self, pos: int) -> np.ndarray:
        return self.kappa_last if pos == self.a else (self.d + 1) * self.g[pos - 1]

    def _prod(self, lo: int, hi: int) -> np.ndarray:
        """O_lo ... O_hi (1-based block positions)."""
        out = np.eye(self.d, dtype=complex)
        for k in range(lo, hi + 1):
            out = out @ self.ops[k - 1]
        return out

    def segment(self, k: int, kp: int) -> np.ndarray:
        prev = self.a if k == 1 else k - 1
        scale = np.prod(self.s[k - 1:kp - 1])
        left = self._vecs(prev).conj().T @ self._prod(k, kp)  # (rows, d)
        right = self._vecs(kp) * (self._kappa(kp) * scale)[None, :]  # (d, cols)
        mat = left @ right
        n = min(self.N, mat.shape[0], mat.shape[1])
        mat[np.arange(n), np.arange(n)] = 0  # real-real diagonal
        return mat


def build_cross_matrices(ens: ShadowEnsemble, blocks: BlockObservable) -> CrossMatrixSet:
    _check(ens, blocks)
    seg = _Segments(ens, blocks)
    out = CrossMatrixSet(len(ens), ens.d, blocks.a)
    for k in range(1, blocks.a + 1):
        for kp in range(k, blocks.a + 1):
            out.E[(k, kp)] = seg.segment(k, kp)
    return out


def distinct_product_sum(f: np.ndarray, exclude: Optional[np.ndarray] = None):
    """``sum over distinct (i_1..i_r) of prod_k f[k, i_k]``.

    Moebius inversion over set partitions, as a DP over subsets: with
    ``P_B = sum_i prod_{k in B} f[k, i]`` the distinct sum over a set U is
    ``D(U) = sum_{B ∋ min U} (-1)^(|B|-1) (|B|-1)! P_B D(U \\ B)``.
    With ``exclude`` (an (X, r) array of f-values at excluded points, one row
    per point x) returns a length-X vector where every i_k must also differ
    from x.
    """
    r = f.shape[0]
    full = (1 << r) - 1
    P = {}
    for B in range(1, full + 1):
        ks = [k for k in range(r) if B >> k & 1]
        P[B] = np.prod(f[ks], axis=0).sum()
        if exclude is not None:
            P[B] = P[B] - np.prod(exclude[:, ks], axis=1)
    D = {0: 1.0}
    for U in range(1, full + 1):
        low = U & -U
        rest = U ^ low
        acc = 0
        sub = rest
        while True:
            B = sub | low
            size = bin(B).count("1")
            acc = acc + (-1) ** (size - 1) * math.factorial(size - 1) * P[B] * D[U ^ B]
            if sub == 0:
                break
            sub = (sub - 1) & rest
        D[U] = acc
    return D[full]


def _low_order_terms(seg: _Segments):
    """Exact (all-distinct) and free-index sums of the terms with <= 1 rank-one position.

    Returns ``(exact, free_in_recursion)``; the second is what the recursion
    itself already produced for those terms.
    """
    a, d = seg.a, seg.d
    sfree = -seg.g  # identity-part weights, (a, N)
    full = seg._prod(1, a)
    exact = np.trace(full) * distinct_product_sum(sfree)
    free = np.trace(full) * np.prod(seg.s)  # pseudo-pseudo diagonal of F^(a)
    for l in range(1, a + 1):
        # rank-one at l, identity parts elsewhere
        rot = seg._prod(l + 1, a) @ seg._prod(1, l)
        v = seg.V
        diag = np.einsum("ix,ij,jx->x", v.conj(), rot, v) * (d + 1) * seg.g[l - 1]
        others = [k for k in range(a) if k != l - 1]
        ex = distinct_product_sum(sfree[others], exclude=sfree[others].T)
        exact += np.sum(diag * ex)
        if l < a:
            free += diag.sum() * np.prod(seg.s[others])
    return exact, free


def combine_a_blocks_fast(ens: ShadowEnsemble, blocks: BlockObservable, a: Optional[int] = None) -> complex:
    """Chained-matrix evaluation of the a-block estimator, O(a^2 N^3).

    ``F^(1) = E_{1,1}``, ``F^(t) = E_{1,t} + sum_{s<t} F^(s) E_{s+1,t}`` and
    the sum over all 2^a expansion terms is ``Tr(F^(a))`` plus the exact
    correction for terms with at most one rank-one position.
    """
    a = blocks.a if a is None else a
    if a != blocks.a:
        raise ValueError("a does not match the block count")
    if a < 2:
        raise ValueError("the matrix algorithm needs a >= 2")
    _check(ens, blocks)
    N = len(ens)
    if N < a:
        raise ValueError(f"N={N} < a={a}")
    seg = _Segments(ens, blocks)
    F: List[np.ndarray] = []
    for t in range(1, a + 1):
        acc = seg.segment(1, t)
        tmp = np.empty_like(acc)
        for s in range(1, t):
            np.matmul(F[s - 1], seg.segment(s + 1, t), out=tmp)
            acc += tmp
        F.append(acc)
    total = np.trace(F[-1])
    exact, free = _low_order_terms(seg)
    return _normalize(total - free + exact, N, a)


def distinctness_gap(ens: ShadowEnsemble, blocks: BlockObservable) -> dict:
    """Fast path vs the all-distinct reference on the same data."""
    fast = combine_a_blocks_fast(ens, blocks)
    ref = brute_force_combine(ens, blocks)
    return {"fast": fast, "brute_force": ref, "abs_diff": abs(fast - ref),
            "rel_diff": abs(fast - ref) / max(abs(ref), 1e-300)}


def estimate_shallow(ens: ShadowEnsemble, ops: Sequence, a: int, groups: int = 8) -> EstimateResult:
    """Shallow estimate with an error bar.

    a = 2 uses :func:`combine_two_blocks`. For a >= 3 the value comes from the
    fast path on all N snapshots; the error bar is the spread of the same
    estimator over ``groups`` disjoint subsets, scaled by sqrt(1/groups).
    """
    if a == 2:
        return combine_two_blocks(ens, ops)
    blocks = BlockObservable.split(ops, a, ens.n)
    value = combine_a_blocks_fast(ens, blocks)
    N = len(ens)
    G = min(groups, N // a)
    se = float("nan")
    if G >= 2:
        parts = np.array_split(np.arange(N), G)
        vals = np.array([combine_a_blocks_fast(ens.subset(p), blocks) for p in parts])
        se = float(np.sqrt((np.var(vals.real, ddof=1) + np.var(vals.imag, ddof=1)) / G))
    return EstimateResult(complex(value), se, N, metadata={"M": len(ops), "a": a, "estimator": "shallow"})
