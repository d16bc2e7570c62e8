import json

import numpy as np
import pytest

from vdshadow.clifford import sample_uniform_clifford, single_qubit_unitaries
from vdshadow.oracle import StatePrep, exact_noisy_state, exact_rho_f, exact_trace_product, ghz_unitary
from vdshadow.qsim import NoiseSpec
from vdshadow.shadows import (
    CHUNK, LOG_FIELDS, CircuitSpec, Factor, FactorizedObservable, ShadowTypeTag, dense_snapshot_shadow,
    draw_layout, evaluate_ensemble, evaluate_snapshot, factor_values, read_snapshot_log,
    record_to_snapshot, reset_circuit_distribution, rho_f_distribution, run_ensemble, run_shot,
    snapshot_to_record, write_snapshot_log,
)

from conftest import ghz_spec, random_hermitian


def test_tag_validation():
    assert ShadowTypeTag.uniform("clifford", 3).M == 3
    with pytest.raises(ValueError):
        ShadowTypeTag(["clifford", "pauli"])
    with pytest.raises(ValueError):
        ShadowTypeTag(["pauli"])
    with pytest.raises(ValueError):
        ShadowTypeTag(["pauli", "global"])


def test_factor_specs():
    f = Factor.from_spec("ZZI", 3)
    assert f.locality == 2 and not f.is_identity
    assert Factor.from_spec("I", 2).is_identity
    assert Factor.from_spec("zero", 2).matrix[0, 0] == 1
    with pytest.raises(ValueError):
        Factor.from_spec("ZZ", 3)
    obs = FactorizedObservable.build("X+iY", ["ZZI", "I", "zero"], 3)
    assert obs.nontrivial_count == 3
    with pytest.raises(ValueError):
        FactorizedObservable.build("X+iY", [np.array([[0, 1], [0, 0]])], 1)
    with pytest.raises(ValueError):
        FactorizedObservable.build("Z", ["I"], 1)


def test_layout_sizes():
    lay = draw_layout(2, 3)
    assert lay["total"] == 3 + 4 + 8 + 6 + 3 * 2 * 4 + 3 * 4


def test_determinism_and_shot_addressing():
    spec = ghz_spec(2, ["pauli", "clifford", "pauli", "clifford"], seed=11)
    a = run_ensemble(spec, 40)
    b = run_ensemble(spec, 40, threads=4)
    assert np.array_equal(a.bits, b.bits) and np.array_equal(a.local, b.local)
    s = run_shot(spec, 17)
    assert s == a.snapshot(17)
    c = run_ensemble(spec, 10, start=30)
    assert np.array_equal(c.bits, a.bits[30:])
    other = run_ensemble(CircuitSpec(spec.n, spec.tags, spec.prep_unitary, spec.noise, 12), 40)
    assert not np.array_equal(other.bits, a.bits)


def test_chunk_boundary_and_threads():
    spec = ghz_spec(1, ["pauli", "clifford"], seed=2)
    full = run_ensemble(spec, CHUNK + 50, threads=2)
    tail = run_ensemble(spec, 100, start=CHUNK - 50)
    assert np.array_equal(full.bits[CHUNK - 50:], tail.bits)


def test_m1_has_only_ancilla_and_a_outcomes():
    ens = run_ensemble(ghz_spec(2, ["pauli", "pauli"]), 20)
    assert ens.bits.shape == (20, 2)
    assert ens.snapshot(0).tags == ("pauli", "pauli")


@pytest.mark.parametrize("tags", [["pauli", "pauli", "pauli"], ["pauli", "clifford", "clifford"],
                                  ["pauli", "clifford", "pauli"]])
def test_factorized_evaluation_matches_dense_shadow(rng, tags):
    n = 2
    ens = run_ensemble(ghz_spec(n, tags, p=0.2, seed=5), 6)
    ops = [random_hermitian(rng, 4), "ZX"]
    obs = FactorizedObservable.build("X+iY", ops, n)
    vals = evaluate_ensemble(ens, obs)
    for i, s in enumerate(ens):
        full = obs.ancilla_matrix
        for f in obs.factors:
            full = np.kron(f.matrix, full)
        ref = np.trace(full @ dense_snapshot_shadow(s))
        assert np.isclose(vals[i], ref)
        assert np.isclose(evaluate_snapshot(s, obs), ref)


def test_label_and_dense_paths_agree():
    ens = run_ensemble(ghz_spec(3, ["pauli", "pauli"], seed=3), 50)
    f = Factor.from_spec("ZYI", 3)
    assert np.allclose(factor_values(ens, 1, "ZYI"), factor_values(ens, 1, f.matrix.copy()))


def test_snapshot_log_round_trip(tmp_path):
    spec = ghz_spec(2, ["pauli", "clifford", "pauli"], seed=9)
    ens = run_ensemble(spec, 25)
    path = tmp_path / "snap.jsonl"
    write_snapshot_log(ens, path)
    first = json.loads(path.read_text().splitlines()[0])
    assert tuple(first) == LOG_FIELDS
    back = read_snapshot_log(path, 2)
    assert np.array_equal(back.bits, ens.bits)
    obs = FactorizedObservable.build("X+iY", ["ZZ", "XI"], 2)
    assert np.allclose(evaluate_ensemble(back, obs), evaluate_ensemble(ens, obs))
    rec = snapshot_to_record(ens.snapshot(3), 2)
    assert record_to_snapshot(rec) == ens.snapshot(3)
    bad = dict(rec)
    del bad["seed"]
    with pytest.raises(ValueError):
        record_to_snapshot(bad)


def test_reset_schedule_matches_unrolled_circuit(rng):
    n, M = 1, 3
    noise = NoiseSpec(0.25, "Y", 0)
    us = [single_qubit_unitaries()[5]] + [sample_uniform_clifford(n, rng).to_unitary() for _ in range(M)]
    p1 = reset_circuit_distribution(n, M, ghz_unitary(n), noise, us)
    rho = exact_noisy_state(StatePrep("ghz"), noise, n)
    p2 = rho_f_distribution(exact_rho_f(rho, M), n, M, us)
    assert np.isclose(p1.sum(), 1) and 0.5 * np.abs(p1 - p2).sum() < 1e-12


def test_purity_estimate_is_statistically_consistent():
    ens = run_ensemble(ghz_spec(3, ["pauli", "clifford", "clifford"], p=0.1, seed=1), 20000)
    vals = evaluate_ensemble(ens, FactorizedObservable.build("X+iY", ["I", "I"], 3))
    se = np.hypot(vals.real.std(), vals.imag.std()) / np.sqrt(len(vals))
    rho = exact_noisy_state(StatePrep("ghz"), NoiseSpec(0.1), 3)
    assert abs(vals.mean() - exact_trace_product(rho, [np.eye(8)] * 2)) < 5 * se
