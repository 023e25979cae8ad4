"""Command-line front end: run computations, write CSV fields and manifests.

Subcommands: `iterate` (the grid iteration with optional closed-form
oracle), `achievability` (scheme rates or the infinite-message
integral), `rd` (rate-distortion modes).  Every run writes a JSON
manifest that pins the resolved parameters, so reruns reproduce the
CSVs byte for byte.  Exit codes: 0 success, 1 domain/filesystem error,
2 bad flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import FunctionSpec, ProductPmfGrid, RateField
from .iteration import IterationConfig, iterate, sum_rate_field
from .oracles import ClosedForm, rho_star_field
from . import achievability as ach
from . import distortion as rd


class UsageError(Exception):
    """Bad flag values or missing inputs: exit code 2."""


def _grid_size(token: str) -> int:
    n = int(token)
    if n < 2:
        raise argparse.ArgumentTypeError(f"grid size must be >= 2, got {n}")
    return n


def _positive_int(token: str) -> int:
    n = int(token)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {n}")
    return n


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_field_csv(path: Path, header: tuple[str, ...], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_field_csv(path: Path) -> tuple[tuple[str, ...], np.ndarray]:
    with open(path) as fh:
        header = tuple(fh.readline().strip().split(","))
        data = [[float(tok) for tok in line.strip().split(",")] for line in fh if line.strip()]
    return header, np.array(data)


def field_rows(field: RateField):
    ax = field.grid.axis
    for i, p in enumerate(ax):
        for j, q in enumerate(ax):
            yield (p, q, field.values[i, j])


def write_manifest(path: Path, subcommand: str, params: dict, outputs: list[str],
                   seed: int, wall_time: float, argv: list[str]) -> None:
    manifest = {
        "argv": argv,
        "outputs": sorted(outputs),
        "params": params,
        "seed": seed,
        "subcommand": subcommand,
        "version": __version__,
        "wall_time_s": wall_time,
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _resolve_function(spec: str) -> FunctionSpec:
    if spec == "and-both":
        return FunctionSpec.and_both()
    if spec == "and-at-b":
        return FunctionSpec.and_at_b()
    if spec.startswith("custom:"):
        return FunctionSpec.from_string(spec.split(":", 1)[1])
    raise ValueError(f"unknown function spec {spec!r}")


def _thread_count(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("SUMRATE_THREADS")
    return max(1, int(env)) if env else 1


def _cmd_iterate(args, argv) -> int:
    started = time.perf_counter()
    f = _resolve_function(args.function)
    cfg = IterationConfig(
        grid_size=args.n,
        max_messages=args.t_max,
        tolerance=args.tol,
        track_history=args.history,
        start_terminal=args.start,
    )
    oracle = None
    if args.oracle:
        which = ClosedForm.AND_BOTH if f.name == "and-both" else ClosedForm.AND_AT_B
        if f.name not in ("and-both", "and-at-b"):
            raise ValueError("--oracle is only available for the AND examples")
        oracle = rho_star_field(ProductPmfGrid(args.n), which)
    result = iterate(f, cfg, oracle=oracle, max_workers=_thread_count(args))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []

    def dump(field: RateField, name: str) -> None:
        write_field_csv(out / name, ("p", "q", "value"), field_rows(field))
        outputs.append(name)

    dump(result.final, "rho_final.csv")
    dump(sum_rate_field(result.final), "sum_rate_final.csv")
    if result.history is not None:
        for step, fld in enumerate(result.history):
            dump(fld, f"rho_step{step:03d}.csv")
    with open(out / "trace.csv", "w") as fh:
        fh.write("t,terminal,sup_change,max_oracle_gap,seconds\n")
        for step, terminal, change, gap, secs in result.trace.rows():
            fh.write(f"{step},{terminal},{_fmt(change)},{_fmt(gap)},{_fmt(secs)}\n")
    outputs.append("trace.csv")
    write_manifest(
        out / "manifest.json",
        "iterate",
        {
            "function": args.function,
            "n": args.n,
            "t_max": args.t_max,
            "tol": args.tol,
            "start": args.start,
            "oracle": bool(args.oracle),
            "history": bool(args.history),
            "threads": _thread_count(args),
        },
        outputs,
        seed=args.seed,
        wall_time=time.perf_counter() - started,
        argv=argv,
    )
    print(f"iterate: {len(result.trace.records)} steps, converged={result.trace.converged}")
    return 0


def _resolve_curve(args) -> ach.RateAllocationCurve:
    if args.curve == "gamma1":
        return ach.gamma1(args.p, args.q)
    if args.curve == "gamma2":
        return ach.gamma2(args.p, args.q)
    if args.curve.startswith("file:"):
        path = Path(args.curve.split(":", 1)[1])
        verts = [tuple(map(float, line.split(","))) for line in path.read_text().splitlines() if line.strip()]
        return ach.RateAllocationCurve(tuple(verts), p=args.p, q=args.q)
    raise ValueError(f"unknown curve {args.curve!r}")


def _cmd_achievability(args, argv) -> int:
    started = time.perf_counter()
    curve = _resolve_curve(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []
    if args.messages == "integral":
        value = ach.integral_sum_rate(curve, args.p, args.q)
        print(_fmt(value))
        with open(out / "integral.csv", "w") as fh:
            fh.write("total\n")
            fh.write(_fmt(value) + "\n")
        outputs.append("integral.csv")
    else:
        t = int(args.messages)
        if t < 2 or t % 2 != 0:
            raise ValueError("--messages must be an even count >= 2, or 'integral'")
        partition = ach.Partition.uniform(t // 2)
        rates, total = ach.scheme_sum_rate(curve, args.p, args.q, partition)
        print(_fmt(total))
        with open(out / "rates.csv", "w") as fh:
            fh.write("message,rate\n")
            for k, r in enumerate(rates, start=1):
                fh.write(f"{k},{_fmt(r)}\n")
            fh.write(f"total,{_fmt(total)}\n")
        outputs.append("rates.csv")
        if args.check_p2:
            report = ach.monte_carlo_p2_check(
                args.p, args.q, curve, partition, samples=args.samples, seed=args.seed
            )
            with open(out / "p2_check.csv", "w") as fh:
                fh.write("samples,p2_error_rate,p1_violations\n")
                fh.write(f"{report.samples},{_fmt(report.p2_error_rate)},{report.p1_violations}\n")
            outputs.append("p2_check.csv")
            print(f"p2 error rate: {report.p2_error_rate}, p1 violations: {report.p1_violations}")
    write_manifest(
        out / "manifest.json",
        "achievability",
        {
            "p": args.p,
            "q": args.q,
            "curve": args.curve,
            "messages": args.messages,
            "samples": args.samples,
            "check_p2": bool(args.check_p2),
        },
        outputs,
        seed=args.seed,
        wall_time=time.perf_counter() - started,
        argv=argv,
    )
    return 0


def _load_model(args) -> rd.DistortionModel:
    if args.model is None:
        return rd.DistortionModel.hamming_on_source()
    path = Path(args.model)
    if not path.exists():
        raise UsageError(f"model file {path} not found")
    table = np.array(json.loads(path.read_text()), dtype=float)
    return rd.DistortionModel(d_b=table)


def _cmd_rd(args, argv) -> int:
    started = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []

    if args.mode == "hamming-zero":
        f = _resolve_function(args.function)
        model = rd.DistortionModel.hamming_on_function(f)
        domain = rd.RDDomain(
            family=rd.PRODUCT_ROW, n_param=args.n, n_dist=args.nd, d_cap=model.d_max
        )
        cfg = IterationConfig(
            grid_size=args.n, max_messages=args.t_max, tolerance=args.tol, track_history=True
        )
        result = rd.rd_iterate(domain, model, cfg, max_workers=_thread_count(args))
        ax = domain.param_axis
        for step, fld in enumerate(result.history):
            name = f"rho_step{step:03d}_at_d0.csv"
            rows = (
                (ax[i], ax[j], fld[i, j, 0])
                for i in range(args.n)
                for j in range(args.n)
            )
            write_field_csv(out / name, ("p", "q", "value"), rows)
            outputs.append(name)
    else:
        model = _load_model(args)
        if args.mode == "single-terminal":
            channel = ((1.0, 0.0), (1.0, 0.0))  # Y constant: no side information
        elif args.mode == "wyner-ziv":
            if args.channel is None:
                raise ValueError("--channel is required for wyner-ziv mode")
            a, b = (float(tok) for tok in args.channel.split(","))
            channel = ((1.0 - a, a), (b, 1.0 - b))
        else:
            raise ValueError(f"unknown mode {args.mode!r}")
        domain = rd.RDDomain(
            family=rd.FIXED_CONDITIONAL,
            n_param=args.n,
            n_dist=args.nd,
            d_cap=model.d_max,
            channel=channel,
        )
        rates = rd.wyner_ziv_rate(domain, model, args.p)
        write_field_csv(
            out / "rate_vs_d.csv", ("D", "rate"), zip(domain.dist_axis, rates)
        )
        outputs.append("rate_vs_d.csv")
        cfg = IterationConfig(grid_size=args.n, max_messages=1, tolerance=1e-15)
        field = rd.rd_iterate(domain, model, cfg).final
        rows = (
            (domain.param_axis[i], domain.dist_axis[k], field[i, k])
            for i in range(args.n)
            for k in range(args.nd)
        )
        write_field_csv(out / "rho1_field.csv", ("param", "D", "value"), rows)
        outputs.append("rho1_field.csv")
    write_manifest(
        out / "manifest.json",
        "rd",
        {
            "mode": args.mode,
            "p": args.p,
            "n": args.n,
            "nd": args.nd,
            "t_max": args.t_max,
            "tol": args.tol,
            "function": args.function,
            "channel": args.channel,
            "model": args.model,
        },
        outputs,
        seed=args.seed,
        wall_time=time.perf_counter() - started,
        argv=argv,
    )
    print(f"rd {args.mode}: wrote {len(outputs)} files")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sumrate",
        description="Minimum sum-rate surfaces for interactive function computation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_it = sub.add_parser("iterate", help="run the alternating envelope iteration")
    p_it.add_argument("--function", default="and-at-b",
                      help="and-both | and-at-b | custom:<8 truth-table chars>")
    p_it.add_argument("--n", type=_grid_size, required=True, help="grid points per axis (N >= 2)")
    p_it.add_argument("--t-max", type=_positive_int, default=50)
    p_it.add_argument("--tol", type=float, default=1e-6)
    p_it.add_argument("--start", choices=("A", "B"), default="A")
    p_it.add_argument("--oracle", action="store_true",
                      help="track the gap to the closed-form surface")
    p_it.add_argument("--history", action="store_true", help="write every step's field")
    p_it.add_argument("--out", default="out")
    p_it.add_argument("--seed", type=int, default=0)
    p_it.add_argument("--threads", type=int, default=None)
    p_it.set_defaults(func=_cmd_iterate)

    p_ach = sub.add_parser("achievability", help="rate-allocation-curve scheme rates")
    p_ach.add_argument("--p", type=float, required=True)
    p_ach.add_argument("--q", type=float, required=True)
    p_ach.add_argument("--curve", default="gamma1", help="gamma1 | gamma2 | file:<path>")
    p_ach.add_argument("--messages", default="integral",
                       help="even message count, or 'integral' for the limit")
    p_ach.add_argument("--check-p2", action="store_true",
                       help="Monte Carlo audit of the zero-error property")
    p_ach.add_argument("--samples", type=int, default=100000)
    p_ach.add_argument("--out", default="out")
    p_ach.add_argument("--seed", type=int, default=0)
    p_ach.add_argument("--threads", type=int, default=None)
    p_ach.set_defaults(func=_cmd_achievability)

    p_rd = sub.add_parser("rd", help="rate-distortion modes")
    p_rd.add_argument("--mode", choices=("wyner-ziv", "single-terminal", "hamming-zero"),
                      required=True)
    p_rd.add_argument("--p", type=float, default=0.5, help="target X marginal")
    p_rd.add_argument("--n", type=_grid_size, default=201, help="pmf parameter grid points")
    p_rd.add_argument("--nd", type=_positive_int, default=101, help="distortion grid points")
    p_rd.add_argument("--t-max", type=int, default=8)
    p_rd.add_argument("--tol", type=float, default=1e-9)
    p_rd.add_argument("--function", default="and-at-b", help="for hamming-zero mode")
    p_rd.add_argument("--channel", default=None,
                      help="wyner-ziv conditional as 'a,b': P(Y=1|X=0), P(Y=0|X=1)")
    p_rd.add_argument("--model", default=None,
                      help="JSON file with the (2,2,K) distortion table; default Hamming on X")
    p_rd.add_argument("--out", default="out")
    p_rd.add_argument("--seed", type=int, default=0)
    p_rd.add_argument("--threads", type=int, default=None)
    p_rd.set_defaults(func=_cmd_rd)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses code 2 for usage errors
        return int(exc.code or 0)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, AssertionError, FileNotFoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
