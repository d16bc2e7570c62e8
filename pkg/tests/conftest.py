import numpy as np
import pytest

from vdshadow.oracle import ghz_unitary
from vdshadow.qsim import NoiseSpec
from vdshadow.shadows import CircuitSpec, ShadowTypeTag


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2


def random_unitary(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def ghz_spec(n, tags, p=0.1, seed=0, pauli="Y"):
    return CircuitSpec(n, ShadowTypeTag(tags), ghz_unitary(n), NoiseSpec(p, pauli, 0), seed)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# ---------------------------------------------------------------- acceptance summary

ACCEPTANCE = {
    1: ("unbiasedness (exhaustive mean)", 60),
    2: ("qubit-reset circuit equivalence", 60),
    3: ("linear VD reproduction, GHZ3", 600),
    4: ("nonlinear VD reproduction", 600),
    5: ("fast combiner vs brute force", 300),
    6: ("post-processing scaling", 900),
    7: ("single-shot variance bounds", 600),
    8: ("shallow variance scaling", 1200),
    9: ("Clifford sampling uniformity", 300),
}
_outcomes: dict = {}
_notes: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(k): acceptance criterion k")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when not in ("setup", "call"):
        return
    k = mark.args[0]
    ok, secs = _outcomes.get(k, (True, 0.0))
    _outcomes[k] = (ok and not rep.failed and not rep.skipped, secs + rep.duration)


@pytest.fixture
def note(request):
    mark = request.node.get_closest_marker("acceptance")
    k = mark.args[0] if mark else 0

    def add(text):
        _notes.setdefault(k, []).append(text)
    return add


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, (title, limit) in ACCEPTANCE.items():
        if k not in _outcomes:
            tr.write_line(f"[{k}] FAIL  {title}: not run")
            continue
        ok, secs = _outcomes[k]
        verdict = "PASS" if ok and secs < limit else "FAIL"
        tr.write_line(f"[{k}] {verdict}  {title} ({secs:.1f}s, limit {limit}s)")
        for line in _notes.get(k, []):
            tr.write_line(f"      {line}")
