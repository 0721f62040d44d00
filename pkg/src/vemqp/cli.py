"""Command line interface: ``vemqp <command> ...``.

Exit status is 0 on success, 1 when an in-run check fails and 2 on usage or
input errors.
"""
from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from . import bench
from .baselines import BaselineConfig, fista_solve, fw_solve, pg_solve
from .core import GeneralizedSimplex
from .dopt import dopt_objective, generate_design_data
from .errors import VemqpError
from .gen import QpInstanceSpec, gen_projection_instance, gen_qp_instance
from .instance_io import (
    load_projection_instance,
    load_qp_instance,
    save_projection_instance,
    save_qp_instance,
)
from .proj import SsnConfig, project_with_trace
from .proj_newton import PnConfig, pn_solve
from .vem import VemConfig, initial_point, vem_solve


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _write_rows(rows, columns, path, fmt="csv"):
    text = bench.format_csv(rows, columns) if fmt == "csv" else bench.format_markdown(rows, columns)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_gen_qp(args):
    inst = gen_qp_instance(QpInstanceSpec(args.n, args.cond, args.ratio, args.seed))
    save_qp_instance(args.out, inst.problem, inst.xbar, inst.metadata())
    return 0


def cmd_gen_proj(args):
    fs, x0 = gen_projection_instance(args.n, args.seed)
    save_projection_instance(args.out, fs, x0, {"generator": "proj", "n": args.n, "seed": args.seed})
    return 0


def cmd_solve_proj(args):
    fs, x0, _ = load_projection_instance(args.instance)
    cfg = SsnConfig(grad_tol=args.grad_tol, max_iter=args.max_iter)
    t0 = time.perf_counter()
    x, _, trace = project_with_trace(x0, fs, cfg)
    elapsed = time.perf_counter() - t0
    violation = abs(float(x.sum()) - fs.b)
    row = {
        "size": fs.n,
        "seed": "",
        "violation": violation,
        "time": elapsed,
        "iterations": trace.iterations,
        "safeguard": trace.used_safeguard,
    }
    _write_rows([row], bench.PROJ_COLUMNS, args.report)
    return 0 if violation <= args.grad_tol * max(1.0, abs(fs.b)) else 1


def cmd_solve_qp(args):
    problem, xbar, meta = load_qp_instance(args.instance)
    x0 = initial_point(problem, None)
    if args.solver == "vem":
        cfg = VemConfig(tol=args.tol, termination=args.term, max_iter=args.max_iter)
        rep = vem_solve(problem, x0, cfg)
    else:
        lipschitz = meta.get("lipschitz")
        if args.solver == "fw":
            cfg = BaselineConfig(tol=args.tol, max_iter=args.max_iter)
            rep = fw_solve(problem, x0, cfg)
        else:
            cfg = BaselineConfig(tol=args.tol, max_iter=args.max_iter, lipschitz=lipschitz)
            rep = (pg_solve if args.solver == "pg" else fista_solve)(problem, x0, cfg)
    relerr = (
        float(np.linalg.norm(rep.x - xbar) / (1.0 + np.linalg.norm(xbar)))
        if xbar is not None
        else float("nan")
    )
    row = {
        "solver": args.solver,
        "n": problem.n,
        "relerr": relerr,
        "kkt_residual": rep.kkt_residual,
        "objective": rep.objective,
        "time": rep.wall_time,
        "iterations": rep.iterations,
        "termination": rep.termination.value,
    }
    _write_rows([row], list(row), args.report)
    return 0 if problem.feasible_set.contains(rep.x) else 1


def cmd_dopt(args):
    prob = generate_design_data(args.n, args.p, args.seed)
    fs = GeneralizedSimplex.standard(args.n)
    cfg = PnConfig(qp_solver=args.qp_solver, lambda_stop=args.lambda_stop)
    rep = pn_solve(dopt_objective(prob), np.full(args.n, 1.0 / args.n), fs, cfg)
    row = {
        "n": args.n,
        "p": args.p,
        "qp_solver": args.qp_solver,
        "ttime": rep.wall_time,
        "qptime": rep.info["qp_time"],
        "lambda": rep.info["lambda"],
        "iterations": rep.iterations,
        "objective": rep.objective,
    }
    _write_rows([row], bench.DOPT_COLUMNS, args.report)
    return 0 if rep.info["lambda"] <= args.lambda_stop else 1


def _finish(result):
    for msg in result.failures:
        print(f"check failed: {msg}", file=sys.stderr)
    return 0 if result.ok else 1


def cmd_bench_proj(args):
    return _finish(bench.run_projection_table(_floats(args.sizes), args.seed, args.out, args.format))


def cmd_bench_qp(args):
    res = bench.run_qp_table(
        args.n,
        _floats(args.conds),
        _floats(args.ratios),
        [s for s in args.solvers.split(",") if s],
        args.seed,
        args.out,
        args.format,
        fw_max_iter=args.fw_max_iter,
    )
    return _finish(res)


def cmd_bench_dopt(args):
    res = bench.run_dopt_table(
        [int(v) for v in _floats(args.ns)], args.seed, args.out, args.format,
        lambda_stop=args.lambda_stop,
    )
    return _finish(res)


def build_parser():
    parser = argparse.ArgumentParser(prog="vemqp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-qp", help="generate a QP instance with a planted optimum")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--cond", type=float, default=1e2)
    p.add_argument("--ratio", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_qp)

    p = sub.add_parser("gen-proj", help="generate a projection instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_proj)

    p = sub.add_parser("solve-proj", help="project an instance's x0 with semismooth Newton")
    p.add_argument("--instance", required=True)
    p.add_argument("--grad-tol", type=float, default=1e-12)
    p.add_argument("--max-iter", type=int, default=50)
    p.add_argument("--report", default="-")
    p.set_defaults(func=cmd_solve_proj)

    p = sub.add_parser("solve-qp", help="solve a QP instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--solver", choices=bench.SOLVERS, default="vem")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--term", choices=("gap", "kkt"), default="gap")
    p.add_argument("--max-iter", type=int, default=1_000_000)
    p.add_argument("--report", default="-")
    p.set_defaults(func=cmd_solve_qp)

    p = sub.add_parser("dopt", help="D-optimal design by projected Newton")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--p", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--qp-solver", choices=("vem", "fw"), default="vem")
    p.add_argument("--lambda-stop", type=float, default=1e-3)
    p.add_argument("--report", default="-")
    p.set_defaults(func=cmd_dopt)

    p = sub.add_parser("bench-proj", help="projection accuracy table")
    p.add_argument("--sizes", default="100000")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--out", default=sys.stdout)
    p.set_defaults(func=cmd_bench_proj)

    p = sub.add_parser("bench-qp", help="QP grid over cond x ratio")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--conds", default="1e2,1e4,1e6,1e8")
    p.add_argument("--ratios", default="0.2,0.4,0.6,0.8")
    p.add_argument("--solvers", default=",".join(bench.SOLVERS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fw-max-iter", type=int, default=10_000)
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--out", default=sys.stdout)
    p.set_defaults(func=cmd_bench_qp)

    p = sub.add_parser("bench-dopt", help="D-optimal design table (p = n/10)")
    p.add_argument("--ns", default="1000")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lambda-stop", type=float, default=1e-3)
    p.add_argument("--format", choices=("csv", "md"), default="csv")
    p.add_argument("--out", default=sys.stdout)
    p.set_defaults(func=cmd_bench_dopt)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (VemqpError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
