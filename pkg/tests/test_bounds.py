import csv
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vdshadow.bounds import (
    BoundInput, FactorDescriptor, TRADEOFF_COLUMNS, clifford_bound, mixed_bound, mixed_closed_form,
    pauli_bound, power_family, table_to_csv, tradeoff_table,
)
from vdshadow.clifford import pauli_matrix


def unit(l, n=3):
    return FactorDescriptor.pauli(l, n)


def test_pauli_bound_examples():
    assert pauli_bound(BoundInput(2, (unit(2, 2), unit(2, 2)))) == 768
    assert pauli_bound(BoundInput(2, (FactorDescriptor.identity_on(2),) * 3)) == 3
    assert pauli_bound(BoundInput(1, (unit(1, 1),))) == 12


def test_clifford_bound_examples():
    z = FactorDescriptor.projector_zero(3)
    assert np.isclose(clifford_bound(BoundInput(3, (z, z, z), nontrivial=3)), 3 * 3.34375**2)
    # ancilla plus two projectors is also N(O~) = 3
    assert np.isclose(clifford_bound(BoundInput(3, (z, z, FactorDescriptor.identity_on(3)))), 3 * 3.34375**2)
    assert clifford_bound(BoundInput(3, (FactorDescriptor.identity_on(3),) * 2)) == 3
    assert clifford_bound(BoundInput(3, (z,), nontrivial=1)) == 3
    # traceless with Tr(O^2) = 1
    t = FactorDescriptor(1, 1.0, 0.0, 1.0, 1.0)
    for k in (2, 3, 4):
        assert np.isclose(clifford_bound(BoundInput(3, (t,) * k, nontrivial=k)), 3 * 3 ** (k - 1))


def test_mixed_bound_examples():
    assert mixed_closed_form(1, 5) == 109.125
    only_local = BoundInput(3, (unit(2), unit(1)))
    assert mixed_bound(only_local) == 9 * 4**3
    for x in (1, 2, 3):
        var_g = 3 + 2 * (1 - 2**-5) + 2**-5
        assert np.isclose(mixed_bound(power_family(5, x)), 9 * 4**x * var_g**x)


def test_descriptors_from_matrices():
    z = np.zeros((8, 8))
    z[0, 0] = 1
    assert FactorDescriptor.from_matrix(z) == FactorDescriptor.projector_zero(3)
    d = FactorDescriptor.from_matrix(pauli_matrix("ZIY"))
    assert d.locality == 2 and d.trace == 0 and d.trace_sq == 8
    assert FactorDescriptor.from_matrix(np.eye(4)).identity


def test_input_validation():
    with pytest.raises(ValueError):
        BoundInput(2, (unit(3, 3),))
    with pytest.raises(ValueError):
        BoundInput(2, ())
    with pytest.raises(ValueError):
        BoundInput(2, (unit(1, 2),), frozenset({4}))
    with pytest.raises(ValueError):
        BoundInput(2, (unit(1, 2),), nontrivial=0)


@given(st.lists(st.integers(0, 3), min_size=1, max_size=4), st.integers(0, 3))
def test_pauli_bound_monotone_in_locality(ls, j):
    j %= len(ls)
    base = BoundInput(4, tuple(unit(l, 4) for l in ls))
    bumped = list(ls)
    bumped[j] = min(4, bumped[j] + 1)
    assert pauli_bound(BoundInput(4, tuple(unit(l, 4) for l in bumped))) >= pauli_bound(base)


@given(st.integers(1, 6), st.integers(1, 6))
def test_clifford_and_mixed_monotone_in_nontrivial_count(n, k):
    z = FactorDescriptor.projector_zero(n)
    assert clifford_bound(BoundInput(n, (z,) * (k + 1))) >= clifford_bound(BoundInput(n, (z,) * k))
    g1 = BoundInput(n, (z,) * (k + 1), frozenset(range(k + 1)))
    g0 = BoundInput(n, (z,) * k, frozenset(range(k)))
    assert mixed_bound(g1) >= mixed_bound(g0)


def test_tradeoff_tables():
    rows = tradeoff_table("n", range(2, 11), x=1)
    assert [r["value"] for r in rows] == list(range(2, 11))
    for key in ("pauli_bound", "clifford_bound"):
        vals = [r[key] for r in rows]
        assert vals == sorted(vals)
    big = rows[-1]
    assert big["mixed_bound"] <= min(big["pauli_bound"], big["clifford_bound"])
    assert big["mixed_closed_form"] <= min(big["pauli_bound"], big["clifford_bound"])
    assert len(tradeoff_table("x", [3], n=5)) == 1
    xs = tradeoff_table("x", range(1, 5), n=5)
    ratios = [xs[i + 1]["pauli_bound"] / xs[i]["pauli_bound"] for i in range(3)]
    assert np.allclose(ratios, 4.0 ** (1 + 5))
    with pytest.raises(ValueError):
        tradeoff_table("p", [1])


def test_table_csv_has_header():
    text = table_to_csv(tradeoff_table("n", [2, 3]))
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == TRADEOFF_COLUMNS and len(rows) == 3
