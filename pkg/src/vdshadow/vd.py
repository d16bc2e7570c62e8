"""Virtual-distillation estimators built on shadow ensembles.

All estimators use the ancilla operator X+iY, so a single-shot value is an
unbiased estimate of ``Tr(O_1 rho O_2 rho ... O_M rho)`` with its real and
imaginary parts carried together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .shadows import FactorizedObservable, ShadowEnsemble, evaluate_ensemble

BOOTSTRAP_CHUNK = 16


@dataclass(frozen=True)
class EstimateResult:
    """``std_error`` combines the real and imaginary standard errors in quadrature."""

    value: complex
    std_error: float
    N: int
    se_re: float = float("nan")
    se_im: float = float("nan")
    unstable: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.std_error >= 0 and not np.isnan(self.std_error):
            raise ValueError("std_error must be non-negative")


def _sem(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / np.sqrt(len(x))) if len(x) > 1 else float("nan")


def _mean_result(vals: np.ndarray, meta: dict) -> EstimateResult:
    if len(vals) == 0:
        raise ValueError("empty ensemble")
    re, im = _sem(vals.real), _sem(vals.imag)
    return EstimateResult(complex(vals.mean()), float(np.hypot(re, im)), len(vals), re, im, metadata=meta)


def _identity_padded(ens: ShadowEnsemble, ops: Sequence) -> FactorizedObservable:
    return FactorizedObservable.build("X+iY", list(ops), ens.n)


def _describe(ens: ShadowEnsemble, **extra) -> dict:
    kinds = set(ens.tags[1:])
    kind = kinds.pop() if len(kinds) == 1 else "mixed"
    return {"M": ens.M, "a": 1, "shadow_type": kind, **extra}


def trace_product_values(ens: ShadowEnsemble, ops: Sequence) -> np.ndarray:
    if len(ops) != ens.M:
        raise ValueError(f"{len(ops)} operators for an order-{ens.M} ensemble")
    return evaluate_ensemble(ens, _identity_padded(ens, ops))


def estimate_trace_product(ens: ShadowEnsemble, ops: Sequence) -> EstimateResult:
    """Sample mean of single-shot estimates of ``Tr(O_1 rho ... O_M rho)``."""
    return _mean_result(trace_product_values(ens, ops), _describe(ens, observable=_names(ops)))


def _names(ops) -> str:
    return ",".join(o if isinstance(o, str) else "dense" for o in ops)


def bootstrap_ratio(num: np.ndarray, den: np.ndarray, resamples: int = 1000, seed: int = 0) -> np.ndarray:
    """Bootstrap replicates of ``mean(num) / mean(den)`` (paired resampling)."""
    rng = np.random.default_rng(seed)
    N = len(num)
    out = np.empty(resamples, dtype=complex)
    for s in range(0, resamples, BOOTSTRAP_CHUNK):
        k = min(BOOTSTRAP_CHUNK, resamples - s)
        idx = rng.integers(0, N, size=(k, N))
        out[s:s + k] = num[idx].mean(axis=1) / den[idx].mean(axis=1)
    return out


def _spread(reps: np.ndarray) -> float:
    return float(np.sqrt(np.var(reps.real, ddof=1) + np.var(reps.imag, ddof=1)))


def jackknife_ratio_error(num: np.ndarray, den: np.ndarray) -> float:
    """Delete-one jackknife standard error of ``mean(num) / mean(den)``."""
    N = len(num)
    r = (num.sum() - num) / (den.sum() - den)
    return float(np.sqrt((N - 1) / N * np.sum(np.abs(r - r.mean()) ** 2)))


def estimate_linear_vd(ens: ShadowEnsemble, O, M: Optional[int] = None, bootstrap: int = 1000,
                       seed: int = 0) -> EstimateResult:
    """``Tr(O rho^M) / Tr(rho^M)`` from one ensemble (shared snapshots)."""
    M = ens.M if M is None else M
    if M != ens.M:
        raise ValueError(f"ensemble order {ens.M} does not match M={M}")
    if len(ens) < 2:
        raise ValueError("need at least two snapshots")
    num = trace_product_values(ens, [O] + ["I"] * (M - 1))
    den = trace_product_values(ens, ["I"] * M)
    reps = bootstrap_ratio(num, den, bootstrap, seed)
    se_den = np.hypot(_sem(den.real), _sem(den.imag))
    unstable = bool(abs(den.mean()) < 2 * se_den)
    return EstimateResult(
        complex(num.mean() / den.mean()), _spread(reps), len(ens),
        float(np.std(reps.real, ddof=1)), float(np.std(reps.imag, ddof=1)), unstable,
        _describe(ens, observable=_names([O]), estimator="linear_vd",
                  numerator=complex(num.mean()), denominator=complex(den.mean())),
    )


def estimate_nonlinear_vd(ens: ShadowEnsemble, O1, O2, M: int, den_ens: ShadowEnsemble,
                          bootstrap: int = 1000, seed: int = 0) -> EstimateResult:
    """``Tr(O1 rho^M O2 rho^M) / Tr(rho^M)^2``.

    ``ens`` has order 2M and gives the numerator. The denominator is the
    product of two ``Tr(rho^M)`` estimates from disjoint halves of the
    order-M ensemble ``den_ens``, so the product is unbiased.
    """
    if ens.M != 2 * M:
        raise ValueError(f"numerator ensemble must have order {2 * M}, has {ens.M}")
    if den_ens.M != M:
        raise ValueError(f"denominator ensemble must have order {M}, has {den_ens.M}")
    if len(den_ens) < 4 or len(ens) < 2:
        raise ValueError("not enough snapshots")
    num = trace_product_values(ens, [O1] + ["I"] * (M - 1) + [O2] + ["I"] * (M - 1))
    den = trace_product_values(den_ens, ["I"] * M)
    h = len(den) // 2
    d1, d2 = den[:h], den[h:2 * h]
    value = num.mean() / (d1.mean() * d2.mean())
    rng = np.random.default_rng(seed)
    reps = np.empty(bootstrap, dtype=complex)
    for b in range(bootstrap):
        i = rng.integers(0, len(num), len(num))
        j = rng.integers(0, h, h)
        k = rng.integers(0, h, h)
        reps[b] = num[i].mean() / (d1[j].mean() * d2[k].mean())
    se1 = np.hypot(_sem(d1.real), _sem(d1.imag))
    se2 = np.hypot(_sem(d2.real), _sem(d2.imag))
    unstable = bool(abs(d1.mean()) < 2 * se1 or abs(d2.mean()) < 2 * se2)
    return EstimateResult(
        complex(value), _spread(reps), len(ens),
        float(np.std(reps.real, ddof=1)), float(np.std(reps.imag, ddof=1)), unstable,
        {"M": M, "a": 1, "estimator": "nonlinear_vd", "observable": _names([O1, O2]),
         "numerator": complex(num.mean()), "denominator": complex(d1.mean() * d2.mean())},
    )
