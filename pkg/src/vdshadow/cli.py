"""Command-line front end: ``run``, ``reproduce``, ``bounds``, ``bench``.

Exit codes: 0 success, 2 configuration error, 3 a ``--self-test`` check failed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import math
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import bounds as B
from .config import ConfigError, ExperimentConfig, factor_matrix, parse_config
from .oracle import MAX_ORACLE_QUBITS, exact_noisy_state, exact_rho_f, exact_trace_product
from .shadows import ANCILLA_MATRICES, FactorizedObservable, evaluate_ensemble, run_ensemble, write_snapshot_log
from .shallow import BlockObservable, combine_a_blocks_fast, estimate_shallow
from .svg import Chart
from .vd import _sem, estimate_linear_vd, estimate_nonlinear_vd

EXIT_CONFIG = 2
EXIT_SELF_TEST = 3
ORACLE_MAX_N = 3
RUN_COLUMNS = ("M", "estimator", "value_re", "value_im", "std_error", "oracle_value", "N")
FIGURES = ("fig3a", "fig3b", "fig4", "fig5", "fig6")
ERROR_RATES = (0.1, 0.2)


# ---------------------------------------------------------------- run


def _ops_for(cfg: ExperimentConfig, M: int) -> list:
    if cfg.ops is not None:
        return list(cfg.ops)
    return [cfg.observable] + ["I"] * (M - 1)


def _fmt(x: float) -> str:
    return "" if x is None or not math.isfinite(x) else repr(float(x))


def _fmt_oracle(v: Optional[complex]) -> str:
    if v is None:
        return ""
    v = complex(v)
    if abs(v.imag) < 1e-12:
        return repr(float(v.real))
    return str(v).strip("()")


def _row(M, name, value, se, oracle, N) -> dict:
    value = complex(value)
    return {"M": M, "estimator": name, "value_re": value.real, "value_im": value.imag,
            "std_error": se, "oracle_value": oracle, "N": N}


def _trace_power_row(ens, M, rho, name="trace_power") -> dict:
    vals = evaluate_ensemble(ens, FactorizedObservable.build("X+iY", ["I"] * ens.M, ens.n))
    se = float(np.hypot(_sem(vals.real), _sem(vals.imag)))
    oracle = exact_trace_product(rho, [np.eye(len(rho))] * M) if rho is not None else None
    return _row(M, name, vals.mean(), se, oracle, len(ens))


def _trace_product_oracle(cfg, rho, mats) -> Optional[complex]:
    if rho is None:
        return None
    if cfg.ancilla_op == "X+iY":
        return exact_trace_product(rho, mats)
    if cfg.n * len(mats) + 1 > MAX_ORACLE_QUBITS:
        return None
    full = ANCILLA_MATRICES[cfg.ancilla_op]
    for m in mats:
        full = np.kron(m, full)
    return complex(np.trace(full @ exact_rho_f(rho, len(mats))))


def experiment_rows(cfg: ExperimentConfig, threads: Optional[int] = None,
                    log_dir: Optional[Path] = None) -> List[dict]:
    """Estimates (and oracle values where n is small) for every order in ``cfg``."""
    rows = []
    for M in cfg.orders:
        c = cfg.for_order(M)
        rho = exact_noisy_state(c.prep, c.noise, c.n) if c.n <= ORACLE_MAX_N else None
        ens = run_ensemble(c, c.N, threads=threads)
        if log_dir is not None and c.snapshot_log:
            write_snapshot_log(ens, log_dir / f"snapshots_M{M}.jsonl")
        mats = [factor_matrix(s, c.n) for s in _ops_for(c, M)]
        if c.estimator == "trace_product":
            obs = FactorizedObservable.build(c.ancilla_op, _ops_for(c, M), c.n)
            vals = evaluate_ensemble(ens, obs)
            se = float(np.hypot(_sem(vals.real), _sem(vals.imag)))
            rows.append(_row(M, "trace_product", vals.mean(), se, _trace_product_oracle(c, rho, mats), c.N))
        elif c.estimator == "linear_vd":
            r = estimate_linear_vd(ens, c.observable, bootstrap=c.bootstrap, seed=c.seed)
            O = factor_matrix(c.observable, c.n)
            oracle = None
            if rho is not None:
                oracle = exact_trace_product(rho, [O] + [np.eye(len(rho))] * (M - 1)) / \
                    exact_trace_product(rho, [np.eye(len(rho))] * M)
            rows.append(_row(M, "linear_vd", r.value, r.std_error, oracle, c.N))
            rows.append(_trace_power_row(ens, M, rho))
        elif c.estimator == "nonlinear_vd":
            m = M // 2
            den_cfg = dataclasses.replace(c, orders=(m,), seed=c.seed + 1, estimator="trace_product")
            den_ens = run_ensemble(den_cfg, c.N, threads=threads)
            r = estimate_nonlinear_vd(ens, c.observable, c.observable, m, den_ens,
                                      bootstrap=c.bootstrap, seed=c.seed)
            oracle = None
            if rho is not None:
                O, eye = factor_matrix(c.observable, c.n), np.eye(len(rho))
                oracle = exact_trace_product(rho, [O] + [eye] * (m - 1) + [O] + [eye] * (m - 1)) / \
                    exact_trace_product(rho, [eye] * m) ** 2
            rows.append(_row(M, "nonlinear_vd", r.value, r.std_error, oracle, c.N))
            rows.append(_trace_power_row(den_ens, m, rho))
        else:
            r = estimate_shallow(ens, _ops_for(c, M), c.a)
            oracle = exact_trace_product(rho, mats) if rho is not None else None
            rows.append(_row(M, "shallow", r.value, r.std_error, oracle, c.N))
    return rows


def write_rows(path: Path, rows: Sequence[dict], columns: Sequence[str]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(columns)
        for r in rows:
            out = []
            for k in columns:
                v = r[k]
                if k == "oracle_value":
                    out.append(_fmt_oracle(v))
                elif isinstance(v, float):
                    out.append(_fmt(v))
                else:
                    out.append(str(v))
            w.writerow(out)


def check_rows(rows: Sequence[dict], k: float = 5.0) -> List[str]:
    """Rows whose estimate is further than ``k`` standard errors from the oracle."""
    bad = []
    for r in rows:
        if r["oracle_value"] is None or not math.isfinite(r["std_error"]):
            continue
        diff = abs(complex(r["value_re"], r["value_im"]) - complex(r["oracle_value"]))
        if diff > k * r["std_error"]:
            bad.append(f"M={r['M']} {r['estimator']}: |diff|={diff:.4g} > {k}*{r['std_error']:.4g}")
    return bad


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if getattr(args, "shots", None) is not None:
        kw["N"] = args.shots
    return dataclasses.replace(cfg, **kw) if kw else cfg


def cmd_run(args) -> int:
    cfg = _apply_overrides(parse_config(args.config), args)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = experiment_rows(cfg, args.threads, out)
    write_rows(out / "estimates.csv", rows, RUN_COLUMNS)
    return _self_test(args, check_rows(rows))


def _self_test(args, failures: List[str]) -> int:
    for f in failures:
        print(f"self-test failure: {f}", file=sys.stderr)
    return EXIT_SELF_TEST if args.self_test and failures else 0


# ---------------------------------------------------------------- reproduce


def _figure_config(fig: str, p: float, N: int, seed: int) -> ExperimentConfig:
    base = dict(n=3, N=N, seed=seed, error_rate=p, noise_pauli="Y", noise_qubit=0)
    if fig == "fig4":
        return ExperimentConfig(orders=tuple(range(1, 6)), shadow_type="pauli", estimator="linear_vd",
                                observable="ZZI", **base)
    if fig == "fig5":
        return ExperimentConfig(orders=(2, 4, 6), shadow_type="pauli", estimator="nonlinear_vd",
                                observable="ZZI", **base)
    return ExperimentConfig(orders=tuple(range(1, 6)), shadow_type="clifford", estimator="linear_vd",
                            observable="zero", **base)


IDEAL = {"fig4": 1.0, "fig5": 1.0, "fig6": 0.5}
REPRO_COLUMNS = ("figure", "p", "power") + RUN_COLUMNS


def _bound_chart(fig: str, rows: list) -> Chart:
    sweep = rows[0]["sweep"]
    xs = [r["value"] for r in rows]
    ch = Chart(f"Single-shot variance bounds ({'n sweep, x=1' if sweep == 'n' else 'x sweep, n=5'})",
               "n (qubits)" if sweep == "n" else "x", "variance bound", logy=True)
    for key, name in (("pauli_bound", "Pauli"), ("clifford_bound", "Clifford"),
                      ("mixed_bound", "mixed"), ("mixed_closed_form", "mixed (closed form)")):
        ch.add(name, xs, [r[key] for r in rows], style="line" if key != "mixed_closed_form" else "dashed")
    return ch


def cmd_reproduce(args) -> int:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig = args.figure
    seed = 0 if args.seed is None else args.seed
    if fig in ("fig3a", "fig3b"):
        rows = B.tradeoff_table("n", range(2, 11), x=1) if fig == "fig3a" else \
            B.tradeoff_table("x", range(1, 7), n=5)
        (out / f"{fig}.csv").write_text(B.table_to_csv(rows), newline="")
        (out / f"{fig}.svg").write_text(_bound_chart(fig, rows).render())
        return 0
    N = args.shots or 100_000
    all_rows = []
    for p in ERROR_RATES:
        cfg = _figure_config(fig, p, N, seed)
        rows = experiment_rows(cfg, args.threads)
        for r in rows:
            halve = fig == "fig5" and r["estimator"] == "nonlinear_vd"
            r.update(figure=fig, p=p, power=r["M"] // 2 if halve else r["M"])
        all_rows.extend(rows)
        est = [r for r in rows if r["estimator"] != "trace_power"]
        tp = [r for r in rows if r["estimator"] == "trace_power"]
        xs = [r["power"] for r in est]
        what = {"fig4": "<ZZI>, Pauli shadows", "fig5": "Tr(O rho O rho), Pauli shadows",
                "fig6": "<|000><000|>, Clifford shadows"}[fig]
        ch = Chart(f"GHZ3 {what}, p={p}", "M (power of rho)", "value")
        ch.add("ideal", xs, [IDEAL[fig]] * len(xs), style="dashed", color="#2ca02c")
        ch.add("estimate", xs, [r["value_re"] for r in est], err=[r["std_error"] for r in est], color="#1f77b4")
        ch.add("oracle", xs, [complex(r["oracle_value"]).real for r in est], style="line", color="#7f7f7f")
        ch.add("Tr(rho^M)", [r["power"] for r in tp], [r["value_re"] for r in tp],
               err=[r["std_error"] for r in tp], color="#e6a800")
        (out / f"{fig}_p{p}.svg").write_text(ch.render())
    write_rows(out / f"{fig}.csv", all_rows, REPRO_COLUMNS)
    return _self_test(args, check_rows(all_rows))


# ---------------------------------------------------------------- bounds


BOUND_COLUMNS = ("M", "pauli_bound", "clifford_bound", "mixed_bound")


def bound_input_for(cfg: ExperimentConfig, M: int) -> B.BoundInput:
    c = cfg.for_order(M)
    mats = [factor_matrix(s, c.n) for s in _ops_for(c, M)]
    tags = c.tags if c.shadow_type == "mixed" and c.tags and len(c.tags) == M else None
    glob = [j for j in range(M) if tags and tags[j] == "clifford"]
    return B.BoundInput.from_matrices(mats, glob)


def cmd_bounds(args) -> int:
    cfg = parse_config(args.config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for M in cfg.orders:
        inp = bound_input_for(cfg, M)
        rows.append({"M": M, "pauli_bound": B.pauli_bound(inp), "clifford_bound": B.clifford_bound(inp),
                     "mixed_bound": B.mixed_bound(inp)})
    (out / "bounds.csv").write_text(B.table_to_csv(rows, BOUND_COLUMNS), newline="")
    return 0


# ---------------------------------------------------------------- bench


def _int_list(text: str) -> list:
    try:
        vals = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma list of integers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def bench_points(N_list: Sequence[int], a_list: Sequence[int]) -> list:
    """An N sweep at the smallest a and an a sweep at the middle N (shared point once)."""
    a0 = min(a_list)
    N0 = sorted(N_list)[len(N_list) // 2]
    pts = [(N, a0) for N in N_list] + [(N0, a) for a in a_list]
    return list(dict.fromkeys(pts))


def time_postprocess(points: Sequence[tuple], n: int = 1, seed: int = 0, repeats: int = 3,
                     threads: Optional[int] = None) -> List[dict]:
    """Best-of-``repeats`` wall time of :func:`combine_a_blocks_fast` at each (N, a)."""
    N_max = max(N for N, _ in points)
    cfg = ExperimentConfig(n=n, orders=(1,), N=N_max, seed=seed, shadow_type="clifford",
                           estimator="trace_product", observable="I")
    ens_all = run_ensemble(cfg, N_max, threads=threads)
    rows = []
    for N, a in points:
        blocks = BlockObservable.split(["Z" * n] * a, a, n)
        ens = ens_all.subset(np.arange(N))
        best = math.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            combine_a_blocks_fast(ens, blocks)
            best = min(best, time.perf_counter() - t0)
        rows.append({"N": N, "a": a, "seconds": best})
    return rows


def _slope(rows: Sequence[dict], key: str) -> Optional[float]:
    if len({r[key] for r in rows}) < 2:
        return None
    x = np.log([r[key] for r in rows])
    y = np.log([r["seconds"] for r in rows])
    return float(np.polyfit(x, y, 1)[0])


def fit_exponents(rows: Sequence[dict]) -> dict:
    """Log-log slopes: N over rows at the smallest a, a over rows at the most common N."""
    out = {}
    if not rows:
        return out
    a0 = min(r["a"] for r in rows)
    sN = _slope([r for r in rows if r["a"] == a0], "N")
    Ns = [r["N"] for r in rows]
    N0 = max(set(Ns), key=lambda v: (Ns.count(v), -v))
    sa = _slope([r for r in rows if r["N"] == N0], "a")
    if sN is not None:
        out["N"] = sN
    if sa is not None:
        out["a"] = sa
    return out


def cmd_bench(args) -> int:
    n, seed = 1, 0
    if args.config:
        cfg = parse_config(args.config)
        n, seed = cfg.n, cfg.seed
    if args.seed is not None:
        seed = args.seed
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = time_postprocess(bench_points(args.N, args.a), n, seed, args.repeats, args.threads)
    with open(out / "bench.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(("N", "a", "seconds"))
        for r in rows:
            w.writerow((r["N"], r["a"], repr(r["seconds"])))
    slopes = fit_exponents(rows)
    with open(out / "bench_slopes.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(("axis", "exponent"))
        for k, v in slopes.items():
            w.writerow((k, repr(v)))
            print(f"{k}-exponent: {v:.3f}")
    return _self_test(args, scaling_failures(slopes))


def scaling_failures(slopes: dict) -> List[str]:
    failures = []
    if "N" in slopes and abs(slopes["N"] - 3.0) > 0.3:
        failures.append(f"N-exponent {slopes['N']:.3f} outside 3.0 +- 0.3")
    if "a" in slopes and slopes["a"] > 2.3:
        failures.append(f"a-exponent {slopes['a']:.3f} > 2.3")
    return failures


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the configured seed")
    common.add_argument("--threads", type=int, default=None, help="shot-generation worker threads")
    common.add_argument("--out-dir", default=".", help="directory for CSV/SVG/log output")
    common.add_argument("--self-test", action="store_true", help="exit 3 if a built-in check fails")

    p = argparse.ArgumentParser(prog="vdshadow", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", parents=[common], help="run the experiment in a config file")
    r.add_argument("config")
    r.add_argument("--shots", type=int, default=None, help="override N")
    r.set_defaults(func=cmd_run)
    f = sub.add_parser("reproduce", parents=[common], help="regenerate a figure as CSV + SVG")
    f.add_argument("figure", choices=FIGURES)
    f.add_argument("--shots", type=int, default=None, help="shots per ensemble (default 100000)")
    f.set_defaults(func=cmd_reproduce)
    b = sub.add_parser("bounds", parents=[common], help="variance bounds for a config")
    b.add_argument("config")
    b.set_defaults(func=cmd_bounds)
    k = sub.add_parser("bench", parents=[common], help="time the a-block post-processing")
    k.add_argument("config", nargs="?", default=None)
    k.add_argument("--N", type=_int_list, default=[512, 1024, 2048])
    k.add_argument("--a", type=_int_list, default=[2, 4, 8])
    k.add_argument("--repeats", type=int, default=3)
    k.set_defaults(func=cmd_bench)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
