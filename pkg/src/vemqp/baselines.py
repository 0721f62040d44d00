"""First-order baselines: projected gradient, FISTA and Frank-Wolfe.

PG and FISTA use the fixed step 1/L and stop on either the successive-iterate
distance or the relative natural-map residual dropping below ``tol``. They run
in economical mode: no objective values are computed inside the loop.
"""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass

import numpy as np

from .core import SolveReport, Termination, kkt_residual
from .lp_oracle import lp_minimize
from .proj import DEFAULT_SSN, project_with_trace

POWER_ITERATIONS = 20
POWER_SAFETY = 1.01


@dataclass
class BaselineConfig:
    tol: float = 1e-12
    max_iter: int = 100_000
    time_limit: float | None = None
    lipschitz: float | None = None
    residual_check_period: int = 10
    proj_config: object = None

    def __post_init__(self):
        if self.lipschitz is not None and not self.lipschitz > 0:
            raise ValueError("lipschitz must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


def estimate_lipschitz(Q, iterations=POWER_ITERATIONS, safety=POWER_SAFETY, seed=0):
    """Largest eigenvalue of Q by power iteration, inflated by ``safety``."""
    v = np.random.default_rng(seed).standard_normal(Q.n)
    v /= np.linalg.norm(v)
    for _ in range(iterations):
        w = Q.matvec(v)
        norm = float(np.linalg.norm(w))
        if norm == 0.0:
            raise ValueError("Q is zero")
        v = w / norm
    return safety * float(v @ Q.matvec(v))


def _lipschitz(problem, cfg):
    return cfg.lipschitz if cfg.lipschitz is not None else estimate_lipschitz(problem.Q)


def _start(problem, x0):
    fs = problem.feasible_set
    fs.require_assumption()
    x = np.array(x0, dtype=np.float64, copy=True)
    if not fs.contains(x):
        raise ValueError("x0 must be feasible")
    return x


class _Projector:
    """Warm-started projection: each call starts SSN from the previous dual root."""

    def __init__(self, fs, cfg):
        self.fs = fs
        self.cfg = cfg or DEFAULT_SSN
        self.y = self.cfg.y0

    def __call__(self, point):
        cfg = dataclasses.replace(self.cfg, y0=self.y, warm_start=False)
        x, self.y, _ = project_with_trace(point, self.fs, cfg)
        return x


def _report(problem, x, k, termination, t0, cfg, **info):
    return SolveReport(
        x=x,
        objective=problem.objective(x),
        iterations=k,
        termination=termination,
        kkt_residual=kkt_residual(problem, x, cfg.proj_config),
        wall_time=time.perf_counter() - t0,
        info=info,
    )


def _natural_residual(x, g, proj):
    return float(np.linalg.norm(x - proj(x - g)) / (1.0 + np.linalg.norm(x)))


def pg_solve(problem, x0, cfg=None):
    """Projected gradient x+ = Proj_F(x - (Qx + c) / L)."""
    cfg = cfg or BaselineConfig()
    t0 = time.perf_counter()
    x = _start(problem, x0)
    L = _lipschitz(problem, cfg)
    proj = _Projector(problem.feasible_set, cfg.proj_config)
    Q, c = problem.Q, problem.c
    termination = Termination.MAX_ITERATIONS
    k = 0
    while k < cfg.max_iter:
        if cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit:
            termination = Termination.TIME_LIMIT
            break
        g = Q.matvec(x) + c
        x_new = proj(x - g / L)
        step = float(np.linalg.norm(x_new - x))
        x = x_new
        k += 1
        if step <= cfg.tol:
            termination = Termination.RESIDUAL_CONVERGED
            break
        if k % cfg.residual_check_period == 0:
            if _natural_residual(x, Q.matvec(x) + c, proj) <= cfg.tol:
                termination = Termination.RESIDUAL_CONVERGED
                break
    return _report(problem, x, k, termination, t0, cfg, lipschitz=L)


def fista_solve(problem, x0, cfg=None):
    """Accelerated projected gradient with the standard t_k momentum sequence."""
    cfg = cfg or BaselineConfig()
    t0 = time.perf_counter()
    x = _start(problem, x0)
    L = _lipschitz(problem, cfg)
    proj = _Projector(problem.feasible_set, cfg.proj_config)
    Q, c = problem.Q, problem.c
    z = x.copy()
    t = 1.0
    termination = Termination.MAX_ITERATIONS
    k = 0
    while k < cfg.max_iter:
        if cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit:
            termination = Termination.TIME_LIMIT
            break
        x_new = proj(z - (Q.matvec(z) + c) / L)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        z = x_new + ((t - 1.0) / t_new) * (x_new - x)
        step = float(np.linalg.norm(x_new - x))
        x, t = x_new, t_new
        k += 1
        if step <= cfg.tol:
            termination = Termination.RESIDUAL_CONVERGED
            break
        if k % cfg.residual_check_period == 0:
            if _natural_residual(x, Q.matvec(x) + c, proj) <= cfg.tol:
                termination = Termination.RESIDUAL_CONVERGED
                break
    return _report(problem, x, k, termination, t0, cfg, lipschitz=L)


def fw_solve(problem, x0, cfg=None):
    """Frank-Wolfe with step 1/(k+2).

    Stops when ||x^{k+1} - x^k|| <= cfg.tol (use 1e-3 to mirror the usual
    benchmark setting). ``info["gaps"]`` holds the duality gap g^T(x - v)
    at every iteration.
    """
    cfg = cfg or BaselineConfig(tol=1e-3, max_iter=10_000)
    t0 = time.perf_counter()
    fs = problem.feasible_set
    x = _start(problem, x0)
    Q, c = problem.Q, problem.c
    gaps = []
    termination = Termination.MAX_ITERATIONS
    k = 0
    while k < cfg.max_iter:
        if cfg.time_limit is not None and time.perf_counter() - t0 > cfg.time_limit:
            termination = Termination.TIME_LIMIT
            break
        g = Q.matvec(x) + c
        v, gv = lp_minimize(g, fs)
        gaps.append(float(g @ x - gv))
        d = v - x
        alpha = 1.0 / (k + 2)
        x = x + alpha * d
        k += 1
        if alpha * float(np.linalg.norm(d)) <= cfg.tol:
            termination = Termination.RESIDUAL_CONVERGED
            break
    return _report(problem, x, k, termination, t0, cfg, gaps=np.array(gaps))
