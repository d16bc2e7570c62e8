import numpy as np
import pytest

from vdshadow import kernels
from vdshadow.clifford import draw_clifford_choices

pytestmark = pytest.mark.skipif(kernels.compiled_backend is None, reason="extension not built")


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_backends_agree(n):
    rng = np.random.default_rng(n)
    ks, bits, signs = draw_clifford_choices(rng, n, 300)
    py, cy = kernels.python_backend, kernels.compiled_backend
    t_py = py.random_symplectic_batch(ks, bits)
    t_cy = cy.random_symplectic_batch(ks, bits)
    assert np.array_equal(t_py, t_cy)
    assert np.allclose(py.tableau_to_unitary_batch(t_cy, signs), cy.tableau_to_unitary_batch(t_cy, signs))


def test_backend_name():
    assert kernels.BACKEND == "compiled"
