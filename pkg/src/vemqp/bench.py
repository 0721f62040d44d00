"""Benchmark tables: projection accuracy, QP grids and D-optimal design.

Each ``run_*`` function returns a list of row dicts, optionally writes them
to ``out`` as CSV or markdown, and records failed in-run checks in the
returned :class:`BenchResult`.
"""
from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

import numpy as np

from .baselines import BaselineConfig, fista_solve, fw_solve, pg_solve
from .core import GeneralizedSimplex
from .dopt import dopt_objective, generate_design_data
from .gen import QpInstanceSpec, gen_projection_instance, gen_qp_instance
from .proj import SsnConfig, project_with_trace
from .proj_newton import PnConfig, pn_solve
from .vem import VemConfig, initial_point, vem_solve, warm_up

SOLVERS = ("vem", "pg", "fista", "fw")
PROJ_COLUMNS = ["size", "seed", "violation", "time", "iterations", "safeguard"]
QP_COLUMNS = ["ratio", "cond", "solver", "relerr", "time", "iterations", "termination"]
DOPT_COLUMNS = ["n", "p", "qp_solver", "ttime", "qptime", "lambda", "iterations", "objective"]

VEM_RELERR_MAX = 1e-8
PROJ_VIOLATION_MAX = 1e-12


@dataclass
class BenchResult:
    rows: list
    columns: list
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.failures


def format_csv(rows, columns):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: _fmt_csv(row[k]) for k in columns})
    return buf.getvalue()


def _fmt_csv(v):
    if isinstance(v, float):
        return repr(v)
    return v


def parse_csv(text):
    """Inverse of :func:`format_csv`; numeric-looking fields become int or float."""
    rows = []
    for raw in csv.DictReader(io.StringIO(text)):
        rows.append({k: _parse_field(v) for k, v in raw.items()})
    return rows


def _parse_field(v):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    if v in ("True", "False"):
        return v == "True"
    return v


def _fmt_md(v):
    if isinstance(v, float):
        return f"{v:.2e}"
    return str(v)


def format_markdown(rows, columns):
    lines = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
    for row in rows:
        lines.append("| " + " | ".join(_fmt_md(row[c]) for c in columns) + " |")
    return "\n".join(lines) + "\n"


def format_qp_grid_markdown(rows):
    """Rows = ratio; column groups = cond x solver; each ratio has a relerr line
    followed by a time line."""
    conds = sorted({r["cond"] for r in rows})
    solvers = [s for s in SOLVERS if any(r["solver"] == s for r in rows)]
    cell = {(r["ratio"], r["cond"], r["solver"]): r for r in rows}
    heads = [f"{s} cond={c:.0e}" for c in conds for s in solvers]
    lines = ["| ratio | row | " + " | ".join(heads) + " |", "|" + "---|" * (len(heads) + 2)]
    for ratio in sorted({r["ratio"] for r in rows}):
        for key in ("relerr", "time"):
            vals = [
                _fmt_md(cell[(ratio, c, s)][key]) if (ratio, c, s) in cell else ""
                for c in conds
                for s in solvers
            ]
            lines.append(f"| {ratio} | {key} | " + " | ".join(vals) + " |")
    return "\n".join(lines) + "\n"


def _emit(result, out, fmt, grid=False):
    if out is None:
        return
    if fmt == "csv":
        text = format_csv(result.rows, result.columns)
    elif fmt == "md":
        text = format_qp_grid_markdown(result.rows) if grid else format_markdown(result.rows, result.columns)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if hasattr(out, "write"):
        out.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _check_common(result):
    for row in result.rows:
        for key, value in row.items():
            if isinstance(value, float) and not np.isfinite(value):
                result.failures.append(f"non-finite {key} in {row}")
            if key in ("time", "ttime", "qptime") and value < 0:
                result.failures.append(f"negative {key} in {row}")


def run_projection_table(sizes, seed=0, out=None, fmt="csv", grad_tol=1e-12):
    """One row per size: |e^T x - b|, wall time and SSN iterations."""
    rows = []
    result = BenchResult(rows, PROJ_COLUMNS)
    cfg = SsnConfig(grad_tol=grad_tol)
    for size in sizes:
        n = int(size)
        fs, x0 = gen_projection_instance(n, seed)
        t0 = time.perf_counter()
        x, _, trace = project_with_trace(x0, fs, cfg)
        elapsed = time.perf_counter() - t0
        violation = abs(float(x.sum()) - fs.b)
        rows.append(
            {
                "size": n,
                "seed": seed,
                "violation": violation,
                "time": elapsed,
                "iterations": trace.iterations,
                "safeguard": trace.used_safeguard,
            }
        )
        if violation > PROJ_VIOLATION_MAX * max(1.0, abs(fs.b)):
            result.failures.append(f"projection violation {violation:.2e} at n={n}")
    _check_common(result)
    _emit(result, out, fmt)
    return result


def solve_with(solver, inst, x0, fw_max_iter=10_000, time_limit=None):
    problem = inst.problem
    if solver == "vem":
        return vem_solve(problem, x0, VemConfig(time_limit=time_limit))
    if solver in ("pg", "fista"):
        cfg = BaselineConfig(lipschitz=inst.lipschitz, time_limit=time_limit)
        return (pg_solve if solver == "pg" else fista_solve)(problem, x0, cfg)
    if solver == "fw":
        cfg = BaselineConfig(tol=1e-3, max_iter=fw_max_iter, time_limit=time_limit)
        return fw_solve(problem, x0, cfg)
    raise ValueError(f"unknown solver {solver!r}")


def run_qp_table(n, conds, ratios, solvers=SOLVERS, seed=0, out=None, fmt="csv",
                 fw_max_iter=10_000, time_limit=None):
    """Grid over cond x ratio; one row per (ratio, cond, solver)."""
    rows = []
    result = BenchResult(rows, QP_COLUMNS)
    warm_up()
    for ratio in ratios:
        for cond in conds:
            inst = gen_qp_instance(QpInstanceSpec(int(n), float(cond), float(ratio), seed))
            x0 = initial_point(inst.problem, None)
            for solver in solvers:
                rep = solve_with(solver, inst, x0, fw_max_iter, time_limit)
                relerr = inst.relerr(rep.x)
                rows.append(
                    {
                        "ratio": float(ratio),
                        "cond": float(cond),
                        "solver": solver,
                        "relerr": relerr,
                        "time": rep.wall_time,
                        "iterations": rep.iterations,
                        "termination": rep.termination.value,
                    }
                )
                if solver == "vem" and relerr > VEM_RELERR_MAX:
                    result.failures.append(f"vem relerr {relerr:.2e} at cond={cond}, ratio={ratio}")
    _check_common(result)
    _emit(result, out, fmt, grid=True)
    return result


def run_dopt_table(ns, seed=0, out=None, fmt="csv", qp_solvers=("vem", "fw"),
                   lambda_stop=1e-3, p_ratio=0.1):
    """Projected Newton on D-optimal design with p = n * p_ratio."""
    rows = []
    result = BenchResult(rows, DOPT_COLUMNS)
    warm_up()
    for n in ns:
        n = int(n)
        p = max(1, int(round(n * p_ratio)))
        prob = generate_design_data(n, p, seed)
        fs = GeneralizedSimplex.standard(n)
        x0 = np.full(n, 1.0 / n)
        for qp_solver in qp_solvers:
            rep = pn_solve(dopt_objective(prob), x0, fs, PnConfig(qp_solver=qp_solver, lambda_stop=lambda_stop))
            row = {
                "n": n,
                "p": p,
                "qp_solver": qp_solver,
                "ttime": rep.wall_time,
                "qptime": rep.info["qp_time"],
                "lambda": rep.info["lambda"],
                "iterations": rep.iterations,
                "objective": rep.objective,
            }
            rows.append(row)
            if row["lambda"] > lambda_stop:
                result.failures.append(f"terminal lambda {row['lambda']:.2e} at n={n} ({qp_solver})")
            if row["qptime"] > row["ttime"]:
                result.failures.append(f"qptime exceeds ttime at n={n} ({qp_solver})")
    _check_common(result)
    _emit(result, out, fmt)
    return result
