"""Experiment configuration and its flat ``key = value`` file format.

One setting per line, ``#`` starts a comment, blank lines are ignored. Keys:

==================  =====================================================
``n``               qubits per copy (required)
``M``               order, or a comma list of orders to sweep (required)
``a``               number of shallow blocks (default 1)
``N``               shots per ensemble (required)
``seed``            master seed (default 0)
``state``           ``ghz`` or ``custom`` (default ``ghz``)
``state_unitary``   ``.npy`` path with the preparation unitary, for ``custom``
``error_rate``      probability p of the noise Pauli (default 0)
``noise_pauli``     ``X``, ``Y`` or ``Z`` (default ``Y``)
``noise_qubit``     register qubit the noise acts on (default 0)
``shadow_type``     ``pauli``, ``clifford`` or ``mixed`` (default ``pauli``)
``tags``            per-subsystem tags for ``mixed``, e.g. ``pauli,clifford``
``estimator``       ``trace_product``, ``linear_vd``, ``nonlinear_vd``, ``shallow``
``observable``      factor spec for the VD estimators (default ``I``)
``ops``             comma list of M factor specs for ``trace_product``/``shallow``
``ancilla_op``      ``X``, ``Y``, ``X+iY`` or ``I`` (default ``X+iY``)
``bootstrap``       bootstrap resamples (default 1000)
``snapshot_log``    ``true`` to write the JSON-lines snapshot log
==================  =====================================================

A factor spec is a Pauli string with one letter per qubit (letter q acts on
qubit q), ``I`` for the identity, or ``zero`` for the projector |0..0><0..0|.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .oracle import StatePrep
from .qsim import NoiseSpec

SHADOW_TYPES = ("pauli", "clifford", "mixed")
ESTIMATORS = ("trace_product", "linear_vd", "nonlinear_vd", "shallow")
ANCILLA_OPS = ("X", "Y", "X+iY", "I")


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is set for parse errors."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ExperimentConfig:
    n: int
    orders: tuple
    N: int
    a: int = 1
    seed: int = 0
    state: str = "ghz"
    state_unitary: Optional[str] = None
    error_rate: float = 0.0
    noise_pauli: str = "Y"
    noise_qubit: int = 0
    shadow_type: str = "pauli"
    tags: Optional[tuple] = None
    estimator: str = "linear_vd"
    observable: str = "I"
    ops: Optional[tuple] = None
    ancilla_op: str = "X+iY"
    bootstrap: int = 1000
    snapshot_log: bool = False
    _prep_matrix: Optional[np.ndarray] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        self.validate()

    @property
    def M(self) -> int:
        if len(self.orders) != 1:
            raise ConfigError("configuration sweeps several orders; pick one with for_order()")
        return self.orders[0]

    @property
    def order(self) -> int:
        """Order of the simulated ensemble (M / a)."""
        return self.M // self.a

    def for_order(self, M: int) -> ExperimentConfig:
        return dataclasses.replace(self, orders=(M,))

    @property
    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.error_rate, self.noise_pauli, self.noise_qubit)

    @property
    def prep(self) -> StatePrep:
        if self.state == "ghz":
            return StatePrep("ghz")
        u = self._prep_matrix
        if u is None:
            u = np.load(self.state_unitary)
        return StatePrep("custom", u)

    def tag_list(self) -> tuple:
        """Tags for the simulated ensemble, ancilla first."""
        m = self.order
        if self.shadow_type == "mixed":
            if self.tags is None or len(self.tags) != m:
                raise ConfigError(f"mixed shadows need {m} tags, got {self.tags}")
            return ("pauli",) + tuple(self.tags)
        return ("pauli",) + (self.shadow_type,) * m

    def validate(self) -> None:
        if not 1 <= self.n <= 16:
            raise ConfigError(f"n must be in [1, 16], got {self.n}")
        if not self.orders or any(m < 1 for m in self.orders):
            raise ConfigError("M must be a positive integer")
        if self.a < 1 or any(m % self.a for m in self.orders):
            raise ConfigError(f"a={self.a} must divide every M in {self.orders}")
        if self.N < max(self.a, 1):
            raise ConfigError(f"N={self.N} must be at least a={self.a}")
        if self.state not in ("ghz", "custom"):
            raise ConfigError(f"unknown state {self.state!r}")
        if self.state == "custom" and self.state_unitary is None and self._prep_matrix is None:
            raise ConfigError("state=custom needs state_unitary")
        if not 0 <= self.error_rate <= 1:
            raise ConfigError(f"error_rate must be in [0, 1], got {self.error_rate}")
        if self.noise_pauli not in ("X", "Y", "Z"):
            raise ConfigError(f"unknown noise_pauli {self.noise_pauli!r}")
        if not 0 <= self.noise_qubit < self.n:
            raise ConfigError(f"noise_qubit {self.noise_qubit} out of range")
        if self.shadow_type not in SHADOW_TYPES:
            raise ConfigError(f"unknown shadow_type {self.shadow_type!r}")
        if self.tags is not None and any(t not in ("pauli", "clifford") for t in self.tags):
            raise ConfigError(f"tags must be pauli or clifford, got {self.tags}")
        if self.shadow_type == "mixed" and self.tags is None:
            raise ConfigError("shadow_type=mixed needs tags")
        if self.estimator not in ESTIMATORS:
            raise ConfigError(f"unknown estimator {self.estimator!r}")
        if self.estimator == "nonlinear_vd" and any(m % 2 for m in self.orders):
            raise ConfigError("nonlinear_vd needs even ensemble order M (two blocks of M/2)")
        if self.estimator == "shallow" and self.a < 2:
            raise ConfigError("estimator=shallow needs a >= 2")
        if self.ancilla_op not in ANCILLA_OPS:
            raise ConfigError(f"unknown ancilla_op {self.ancilla_op!r}")
        if self.bootstrap < 1:
            raise ConfigError("bootstrap must be positive")
        for spec in (self.observable,) + tuple(self.ops or ()):
            check_factor_spec(spec, self.n)
        if self.ops is not None and any(len(self.ops) != m for m in self.orders):
            raise ConfigError(f"ops lists {len(self.ops)} factors, M is {self.orders}")


def check_factor_spec(spec: str, n: int) -> None:
    if spec in ("I", "zero"):
        return
    if len(spec) != n or any(c not in "IXYZ" for c in spec):
        raise ConfigError(f"bad factor spec {spec!r} for n={n}")


def factor_matrix(spec: str, n: int) -> np.ndarray:
    from .clifford import pauli_matrix

    check_factor_spec(spec, n)
    d = 1 << n
    if spec == "I":
        return np.eye(d, dtype=complex)
    if spec == "zero":
        out = np.zeros((d, d), dtype=complex)
        out[0, 0] = 1
        return out
    return pauli_matrix(spec)


_INT_KEYS = {"n", "a", "N", "seed", "noise_qubit", "bootstrap"}
_FLOAT_KEYS = {"error_rate"}
_STR_KEYS = {"state", "state_unitary", "noise_pauli", "shadow_type", "estimator", "observable", "ancilla_op"}
_LIST_KEYS = {"tags", "ops"}
_REQUIRED = ("n", "M", "N")


def parse_config_text(text: str) -> ExperimentConfig:
    values = {}
    lines = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected key = value, got {raw.strip()!r}", lineno)
        key, val = (s.strip() for s in line.split("=", 1))
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", lineno)
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _STR_KEYS:
                values[key] = val
            elif key in _LIST_KEYS:
                values[key] = tuple(s.strip() for s in val.split(",") if s.strip())
            elif key == "M":
                values["orders"] = tuple(int(s) for s in val.split(","))
            elif key == "snapshot_log":
                if val.lower() not in ("true", "false"):
                    raise ValueError(val)
                values[key] = val.lower() == "true"
            else:
                raise ConfigError(f"unknown key {key!r}", lineno)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {val!r}", lineno) from None
        lines["orders" if key == "M" else key] = lineno
    for key in _REQUIRED:
        if ("orders" if key == "M" else key) not in values:
            raise ConfigError(f"missing required key {key!r}")
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None


def parse_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    cfg = parse_config_text(text)
    if cfg.state_unitary is not None and not Path(cfg.state_unitary).is_absolute():
        cfg = dataclasses.replace(cfg, state_unitary=str(Path(path).parent / cfg.state_unitary))
    return cfg


def serialize_config(cfg: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config_text`; defaults are written out explicitly."""
    out = []
    for f in dataclasses.fields(cfg):
        if f.name.startswith("_"):
            continue
        val = getattr(cfg, f.name)
        if val is None:
            continue
        key = "M" if f.name == "orders" else f.name
        if isinstance(val, tuple):
            text = ",".join(str(v) for v in val)
        elif isinstance(val, bool):
            text = "true" if val else "false"
        elif isinstance(val, float):
            text = repr(val)
        else:
            text = str(val)
        out.append(f"{key} = {text}")
    return "\n".join(out) + "\n"
