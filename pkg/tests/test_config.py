import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from vdshadow.config import ConfigError, ExperimentConfig, factor_matrix, parse_config, parse_config_text, serialize_config

MINIMAL = "n = 1\nM = 1\nN = 10\n"


def test_minimal_defaults():
    cfg = parse_config_text(MINIMAL)
    assert (cfg.n, cfg.M, cfg.N, cfg.a, cfg.seed) == (1, 1, 10, 1, 0)
    assert cfg.tag_list() == ("pauli", "pauli")


def test_comments_blank_lines_and_sweeps():
    cfg = parse_config_text("# GHZ run\n\nn = 3  # qubits\nM = 1,2,3\nN = 100\nobservable = ZZI\n")
    assert cfg.orders == (1, 2, 3)
    with pytest.raises(ConfigError):
        cfg.M
    assert cfg.for_order(2).M == 2


@pytest.mark.parametrize("text,line", [
    ("n = 1\nM = 1\nN = 10\nfoo = 1\n", 4),
    ("n = 1\nn = 2\nM = 1\nN = 1\n", 2),
    ("n = x\nM = 1\nN = 1\n", 1),
    ("n = 1\nM 1\nN = 1\n", 2),
    ("n = 1\nM = 1\nN = 1\nsnapshot_log = maybe\n", 4),
])
def test_parse_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as exc:
        parse_config_text(text)
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


@pytest.mark.parametrize("extra,needle", [
    ("", "missing required key 'N'"),
])
def test_missing_key(extra, needle):
    with pytest.raises(ConfigError, match=needle):
        parse_config_text("n = 1\nM = 1\n" + extra)


@pytest.mark.parametrize("text", [
    "n = 1\nM = 3\nN = 10\na = 2\n",
    "n = 1\nM = 4\nN = 1\na = 2\n",
    "n = 2\nM = 1\nN = 10\nobservable = ZZZ\n",
    "n = 1\nM = 1\nN = 10\nshadow_type = mixed\n",
    "n = 1\nM = 3\nN = 10\nestimator = nonlinear_vd\n",
    "n = 1\nM = 2\nN = 10\nestimator = shallow\n",
    "n = 1\nM = 1\nN = 10\nerror_rate = 1.5\n",
    "n = 1\nM = 1\nN = 10\nstate = custom\n",
    "n = 1\nM = 2\nN = 10\nops = Z\n",
])
def test_invariant_violations(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_mixed_tags():
    cfg = parse_config_text("n = 1\nM = 2\nN = 10\nshadow_type = mixed\ntags = pauli,clifford\n")
    assert cfg.tag_list() == ("pauli", "pauli", "clifford")
    shallow = parse_config_text("n = 1\nM = 4\nN = 10\na = 2\nestimator = shallow\nshadow_type = clifford\n")
    assert shallow.tag_list() == ("pauli", "clifford", "clifford")


def test_factor_matrix():
    assert np.allclose(factor_matrix("I", 2), np.eye(4))
    assert factor_matrix("zero", 2)[0, 0] == 1 and factor_matrix("zero", 2).sum() == 1
    with pytest.raises(ConfigError):
        factor_matrix("Q", 1)


def test_custom_state_path_is_relative_to_config(tmp_path):
    np.save(tmp_path / "u.npy", np.eye(2))
    (tmp_path / "c.cfg").write_text("n = 1\nM = 1\nN = 5\nstate = custom\nstate_unitary = u.npy\n")
    cfg = parse_config(tmp_path / "c.cfg")
    assert np.allclose(cfg.prep.state(1), [1, 0])


configs = st.builds(
    lambda n, orders, N, seed, p, kind, obs, boot, log: ExperimentConfig(
        n=n, orders=tuple(orders), N=N, seed=seed, error_rate=p, shadow_type=kind,
        observable=obs[:1] * n if obs != "I" else "I", bootstrap=boot, snapshot_log=log),
    st.integers(1, 4), st.lists(st.integers(1, 6), min_size=1, max_size=4), st.integers(1, 10**6),
    st.integers(0, 2**31), st.floats(0, 1), st.sampled_from(["pauli", "clifford"]),
    st.sampled_from(["I", "Z", "X"]), st.integers(1, 5000), st.booleans(),
)


@given(configs)
def test_round_trip(cfg):
    assert parse_config_text(serialize_config(cfg)) == cfg
