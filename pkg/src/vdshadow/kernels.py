"""Kernel backend selection.

The compiled extension is used when importable; ``VDSHADOW_PURE=1`` forces
the pure-Python fallback. ``BACKEND`` names the active one.
"""

import os

from . import _pykernels as python_backend

compiled_backend = None
if not os.environ.get("VDSHADOW_PURE"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "compiled" if compiled_backend is not None else "python"

random_symplectic_batch = _active.random_symplectic_batch
tableau_to_unitary_batch = _active.tableau_to_unitary_batch
