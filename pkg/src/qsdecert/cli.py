"""Command-line surface: benchmark tables, bound sweeps, optimization, checks.

Commands
--------
kerr-table   certificates for the Kerr cavity truncation benchmark
ae-table     certificates for the atom-cavity adiabatic elimination benchmark
bound        generic certificate evaluator (builtin model, model file, or
             user-supplied per-interval rate constants)
optimize     run the approximant search and emit the minimizer as JSON
verify       run the oracle cross-check suite

All outputs are deterministic for a fixed --seed; CSV rows follow the stable
schema "k,r,s,t,z_sum,residual,mismatch,bound" (level-scaling tables append a
k_scaling column). Exit codes: 0 success, 1 numeric or verification failure,
2 usage error. QSDE_THREADS overrides the per-row worker count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .adiabatic import ae_certificate_table
from .errors import InvalidParameterError, QsdeCertError
from .models import kerr_cavity, model_from_json
from .operators import basis_state
from .semigroup import SimpleFunction
from .states import ApproxState, OptimizeSchedule, optimize
from .truncation import (
    CSV_HEADER,
    BoundConstants,
    CertificateReport,
    constants_for,
    interval_sum,
    kerr_certificate_table,
    kerr_reference_state,
    kerr_table_row,
)
from .verification import run_suite

KERR_DEFAULT_KS = "19,29,39,49,59,69,79,89,99"
AE_DEFAULT_KS = "10000,100000,1000000,10000000,100000000"


def _pool_map(fn, items):
    items = list(items)
    env = os.environ.get("QSDE_THREADS", "").strip()
    workers = int(env) if env else min(len(items), os.cpu_count() or 1)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _render_reports(reports, fmt: str, extra: dict | None = None) -> str:
    if fmt == "json":
        payload = {"rows": [r.to_json() for r in reports]}
        payload.update(extra or {})
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"
    with_scaling = any(r.k_scaling is not None for r in reports)
    header = CSV_HEADER + (",k_scaling" if with_scaling else "")
    lines = [header]
    for r in reports:
        row = r.to_row()
        cols = header.split(",")
        lines.append(",".join(_fmt(row[c]) for c in cols))
    for key, value in (extra or {}).items():
        lines.append(f"# {key}={_fmt(value) if isinstance(value, float) else value}")
    return "\n".join(lines) + "\n"


def _parse_k_list(parser, args) -> list[int]:
    if getattr(args, "k", None) is not None:
        ks = [args.k]
    else:
        try:
            ks = [int(x) for x in args.k_list.split(",") if x.strip()]
        except ValueError:
            parser.error(f"--k-list must be comma-separated integers, got {args.k_list!r}")
    if not ks or any(k < 1 for k in ks):
        parser.error("truncation/scaling levels must be integers >= 1")
    return sorted(ks)


def _kerr_search(k: int, alpha: complex, t_final: float, seed: int):
    """Cold-start joint search for the Kerr benchmark approximant."""
    model = kerr_cavity(lam=25.0, delta=50.0, chi=-50.0 / 60.0, k=k)
    f = SimpleFunction.constant([alpha], t_final)
    template = SimpleFunction(
        np.array([0.0, 0.1 * t_final, t_final]),
        np.full((2, 1), alpha, dtype=complex),
    )
    u0 = basis_state(k + 1, 0).astype(complex)
    init = ApproxState([(u0, template)], label="kerr optimized minimizer")
    schedule = OptimizeSchedule(seed=seed, u_support=3)
    return optimize(model, (u0, f), init, schedule)


def cmd_kerr_table(parser, args) -> int:
    ks = _parse_k_list(parser, args)
    extra = {}
    if args.optimize:
        result = _kerr_search(min(ks), args.alpha, args.t_final, args.seed)
        state = result.state
        extra["J"] = result.cost
    else:
        # --use-paper-psi names the default: the bundled reference minimizer.
        state = kerr_reference_state(min(ks) + 1)
    reports = kerr_certificate_table(
        ks,
        pool_map=_pool_map,
        alpha=args.alpha,
        t_final=args.t_final,
        n_intervals=args.intervals,
        r=args.r,
        s=args.s,
        state=state,
    )
    _emit(_render_reports(reports, args.format, extra), args.out)
    return 0


def cmd_ae_table(parser, args) -> int:
    ks = _parse_k_list(parser, args)
    reports, result = ae_certificate_table(
        ks,
        alpha=args.alpha,
        t_final=args.t_final,
        n_intervals=args.intervals,
        blocks=args.blocks,
        seed=args.seed,
        pool_map=_pool_map,
    )
    extra = {"J": result.cost} if result is not None else {}
    _emit(_render_reports(reports, args.format, extra), args.out)
    return 0


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidParameterError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidParameterError(f"{path} is not valid JSON: {exc}") from exc


def _load_constants(path) -> list[BoundConstants]:
    data = _load_json(path)
    if isinstance(data, dict):
        data = [data]
    try:
        return [
            BoundConstants(
                gamma=entry["gamma"],
                qL=entry["qL"],
                qa=entry["qa"],
                qe=entry["qe"],
                k=entry.get("k"),
            )
            for entry in data
        ]
    except (KeyError, TypeError) as exc:
        raise InvalidParameterError(
            f"{path}: each entry needs numeric gamma, qL, qa, qe (got {exc})"
        ) from exc


def cmd_bound(parser, args) -> int:
    if args.model == "kerr" and args.constants is None:
        if args.k is None:
            parser.error("builtin kerr evaluation needs --k")
        if args.k < 1:
            parser.error("truncation level must be >= 1")
        report = kerr_table_row(
            args.k,
            alpha=args.alpha,
            t_final=args.t_final,
            n_intervals=args.intervals,
            r=args.r,
            s=args.s,
        )
        _emit(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", args.out)
        return 0

    if args.partition is None:
        parser.error("rate-constant evaluation needs --partition")
    partition = [float(x) for x in args.partition.split(",")]
    n_intervals = len(partition) - 1
    if args.constants is not None:
        consts = _load_constants(args.constants)
        if len(consts) == 1:
            consts = consts * n_intervals
    elif args.model is not None:
        model = model_from_json(_load_json(args.model))
        try:
            alpha, beta = (complex(x) for x in args.amplitudes.split(","))
        except ValueError as exc:
            raise InvalidParameterError(
                f"--amplitudes must be two comma-separated complex numbers, "
                f"got {args.amplitudes!r}"
            ) from exc
        consts = [constants_for(model, alpha, beta)] * n_intervals
    else:
        parser.error("need --model or --constants")
    z_sum = interval_sum(consts, partition, args.r, args.s)
    report = CertificateReport(
        k=consts[0].k or 0,
        r=args.r,
        s=args.s,
        t=partition[-1],
        z_sum=z_sum,
        residual=0.0,
        mismatch=0.0,
        bound=(2.0 * z_sum) ** 0.5,
        partition=partition,
        psi_desc="rate-sum evaluation (no approximant)",
    )
    _emit(json.dumps(report.to_json(), indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_optimize(parser, args) -> int:
    if args.model == "kerr":
        result = _kerr_search(args.k or 19, args.alpha, args.t_final, args.seed)
    else:
        _, result = ae_certificate_table(
            (),
            alpha=args.alpha,
            t_final=args.t_final,
            n_intervals=args.intervals,
            blocks=args.blocks,
            seed=args.seed,
        )
    payload = {
        "cost": result.cost,
        "nfev": result.nfev,
        "search_failure": result.search_failure,
        "state": result.state.to_json(),
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def cmd_verify(parser, args) -> int:
    report = run_suite(quick=args.quick, seed=args.seed)
    _emit(json.dumps(report, indent=2, sort_keys=True) + "\n", args.out)
    return 0 if report["passed"] else 1


def _add_common(p, *, t_final, intervals):
    p.add_argument("--k", type=int, default=None, help="single level")
    p.add_argument("--r", type=int, default=2)
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--t-final", type=float, default=t_final, dest="t_final")
    p.add_argument("--intervals", type=int, default=intervals)
    p.add_argument("--alpha", type=complex, default=0.1 + 0j)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsdecert",
        description="Rigorous error certificates for truncated and "
        "adiabatically eliminated input-output quantum models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("kerr-table", help="Kerr cavity truncation benchmark")
    _add_common(p, t_final=5.0, intervals=10)
    p.add_argument("--k-list", default=KERR_DEFAULT_KS)
    p.add_argument("--optimize", action="store_true",
                   help="search for the approximant instead of the bundled one")
    p.add_argument("--use-paper-psi", action="store_true",
                   help="use the bundled reference minimizer (default)")
    p.set_defaults(func=cmd_kerr_table)

    p = sub.add_parser("ae-table", help="atom-cavity elimination benchmark")
    _add_common(p, t_final=1.0, intervals=1000)
    p.add_argument("--k-list", default=AE_DEFAULT_KS)
    p.add_argument("--blocks", type=int, default=100,
                   help="number of sequential optimization blocks")
    p.set_defaults(func=cmd_ae_table)

    p = sub.add_parser("bound", help="generic certificate evaluator")
    _add_common(p, t_final=5.0, intervals=10)
    p.add_argument("--model", default=None,
                   help="'kerr' or a path to a model JSON file")
    p.add_argument("--constants", default=None,
                   help="JSON file with per-interval rate constants")
    p.add_argument("--partition", default=None,
                   help="comma-separated breakpoints, e.g. 0,0.5,1")
    p.add_argument("--amplitudes", default="0,0",
                   help="'alpha,beta' for model-file evaluation")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("optimize", help="search for an approximant")
    _add_common(p, t_final=5.0, intervals=1000)
    p.add_argument("--model", choices=("kerr", "ae"), default="kerr")
    p.add_argument("--blocks", type=int, default=100)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("verify", help="run the oracle cross-check suite")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(parser, args)
    except QsdeCertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
