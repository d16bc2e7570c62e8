"""Error-mitigated classical shadows from a qubit-reset virtual distillation circuit."""

from .kernels import BACKEND
from .oracle import StatePrep, exact_noisy_state, exact_rho_f, exact_trace_product
from .qsim import GateSpec, NoiseSpec, QuantumState
from .shadows import FactorizedObservable, ShadowEnsemble, ShadowTypeTag, Snapshot, run_ensemble, run_shot

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FactorizedObservable",
    "GateSpec",
    "NoiseSpec",
    "QuantumState",
    "ShadowEnsemble",
    "ShadowTypeTag",
    "Snapshot",
    "StatePrep",
    "exact_noisy_state",
    "exact_rho_f",
    "exact_trace_product",
    "run_ensemble",
    "run_shot",
]
