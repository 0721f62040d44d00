"""Vertex exchange method for strongly convex QPs over the generalized simplex.

Each iteration moves mass from the coordinate with the largest gradient among
those above their lower bound (s) to the one with the smallest gradient among
those below their upper bound (t), with the exact line-search step clipped to
the box. Only columns s and t of Q are touched per iteration; the gradient is
maintained incrementally and recomputed from scratch periodically.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels as K
from .core import QpProblem, SolveReport, Termination, kkt_residual
from .errors import DegenerateError, NonPositiveCurvatureError
from .proj import proj_generalized_simplex

BOUNDARY_TOL = 1e-14
_GAP_CHUNK = 20_000


@dataclass
class VemConfig:
    """Stopping and bookkeeping options for :func:`vem_solve`.

    termination:
        ``"gap"``  -- (g_s - g_t) / max(1, ||Q||_F) <= tol
        ``"kkt"``  -- kkt_residual(problem, x) <= tol
        ``"user"`` -- user_error(x, g) <= tol, where g = Qx + c
    The kkt and user criteria are evaluated every ``check_period`` iterations.
    """

    tol: float = 1e-12
    max_iter: int = 1_000_000
    termination: str = "gap"
    user_error: Callable | None = None
    gradient_refresh_period: int = 100_000
    time_limit: float | None = None
    check_period: int = 50
    engine: str = "auto"
    record_trace: bool = False
    trace_period: int = 1000
    proj_config: object = None

    def __post_init__(self):
        if self.tol < 0:
            raise ValueError("tol must be nonnegative")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.termination not in ("gap", "kkt", "user"):
            raise ValueError(f"unknown termination {self.termination!r}")
        if self.termination == "user" and self.user_error is None:
            raise ValueError("termination='user' needs user_error")
        if self.engine not in ("auto", "numba", "numpy"):
            raise ValueError(f"unknown engine {self.engine!r}")


@dataclass
class VemState:
    x: np.ndarray
    g: np.ndarray
    k: int = 0
    last_gap: float = np.nan


@dataclass
class VemTrace:
    """Per-iteration objective changes plus periodic exact checkpoints."""

    q0: float = np.nan
    q_incremental: float = np.nan
    dq: list = field(default_factory=list)
    checkpoints: list = field(default_factory=list)
    gradient_drift: list = field(default_factory=list)

    @property
    def dq_all(self):
        return np.concatenate(self.dq) if self.dq else np.zeros(0)

    def objective_sequence(self):
        """q(x^0), q(x^1), ... rebuilt from the exact per-step changes."""
        return self.q0 + np.concatenate([[0.0], np.cumsum(self.dq_all)])


@dataclass(frozen=True)
class AutoProject:
    """Start VEM from the projection of ``point`` onto the feasible set."""

    point: np.ndarray


def select_exchange_pair(state, fs, boundary_tol=BOUNDARY_TOL):
    """Indices (s, t): s maximizes g over {x_i > l_i}, t minimizes g over
    {x_i < u_i}. Ties go to the smallest index."""
    x, g = state.x, state.g
    can_leave = x > fs.lower + boundary_tol
    can_enter = x < fs.upper - boundary_tol
    if not can_leave.any() or not can_enter.any():
        raise DegenerateError("empty exchange candidate set")
    s = int(np.argmax(np.where(can_leave, g, -np.inf)))
    t = int(np.argmin(np.where(can_enter, g, np.inf)))
    return s, t


def _curvature(col_s, col_t, s, t):
    return float(col_s[s] + col_t[t] - col_s[t] - col_t[s])


def optimal_step(problem, state, s, t):
    """Exact minimizer of q(x + eta (e_t - e_s)) over 0 <= eta <= eta_max.

    Returns (eta, eta_max).
    """
    Q = problem.Q
    col_s, col_t = Q.column(s), Q.column(t)
    curv = _curvature(col_s, col_t, s, t)
    if curv <= 0.0:
        raise NonPositiveCurvatureError(
            f"Q_ss + Q_tt - 2 Q_st = {curv} <= 0 at (s, t) = ({s}, {t})", s, t, curv
        )
    fs = problem.feasible_set
    eta_max = float(min(state.x[s] - fs.lower[s], fs.upper[t] - state.x[t]))
    eta = min(eta_max, float(state.g[s] - state.g[t]) / curv)
    return eta, eta_max


def _numpy_steps(Q, x, g, lower, upper, max_steps, gap_stop, btol, dq_out):
    """Reference engine with the same contract as ``_kernels.vem_steps``.

    Reads Q only through ``Q.column``.
    """
    record = dq_out.shape[0] > 0
    gap, s, t = np.nan, -1, -1
    for k in range(max_steps):
        can_leave = x > lower + btol
        can_enter = x < upper - btol
        if not can_leave.any() or not can_enter.any():
            return k, K.DEGENERATE, gap, s, t
        s = int(np.argmax(np.where(can_leave, g, -np.inf)))
        t = int(np.argmin(np.where(can_enter, g, np.inf)))
        gap = float(g[s] - g[t])
        if gap <= gap_stop:
            return k, K.CONVERGED, gap, s, t
        col_s, col_t = Q.column(s), Q.column(t)
        curv = _curvature(col_s, col_t, s, t)
        if curv <= 0.0:
            return k, K.NONPOSITIVE, gap, s, t
        room_s = x[s] - lower[s]
        room_t = upper[t] - x[t]
        eta_max = min(room_s, room_t)
        eta = gap / curv
        xs_old, xt_old = x[s], x[t]
        if eta >= eta_max:
            eta = eta_max
            x[s] = lower[s] if room_s == eta_max else xs_old - eta
            x[t] = upper[t] if room_t == eta_max else xt_old + eta
        else:
            x[s] = xs_old - eta
            x[t] = xt_old + eta
        ds, dt = x[s] - xs_old, x[t] - xt_old
        if ds == 0.0 and dt == 0.0:
            return k, K.STALLED, gap, s, t
        if record:
            dq_out[k] = (
                g[s] * ds
                + g[t] * dt
                + 0.5 * (col_s[s] * ds * ds + 2.0 * col_s[t] * ds * dt + col_t[t] * dt * dt)
            )
        g += dt * col_t + ds * col_s
    return max_steps, K.RUNNING, gap, s, t


def _pick_engine(engine, Q):
    if engine == "numpy" or not hasattr(Q, "array"):
        return "numpy"
    return "numba"


def initial_point(problem, x0, proj_config=None):
    fs = problem.feasible_set
    if x0 is None:
        x0 = AutoProject(np.zeros(problem.n))
    if isinstance(x0, AutoProject):
        return proj_generalized_simplex(x0.point, fs, proj_config)
    x = np.array(x0, dtype=np.float64, copy=True)
    if not fs.contains(x):
        raise ValueError("x0 is not feasible; wrap it in AutoProject to project it first")
    return np.minimum(np.maximum(x, fs.lower), fs.upper)


def vem_solve(problem: QpProblem, x0=None, cfg: VemConfig | None = None, Q=None):
    """Solve min 0.5 x^T Q x + c^T x over the generalized simplex.

    ``x0`` may be a feasible vector, an :class:`AutoProject` wrapper, or None
    (projection of the origin). ``Q`` optionally overrides the matrix object
    used for column reads (any object with ``column``, ``matvec`` and
    ``frobenius_norm``); it forces the numpy engine unless it exposes
    ``array``.
    """
    cfg = cfg or VemConfig()
    t_start = time.perf_counter()
    fs = problem.feasible_set
    fs.require_assumption()
    Qm = problem.Q if Q is None else Q
    engine = _pick_engine(cfg.engine, Qm)
    lower, upper, c = fs.lower, fs.upper, problem.c

    x = initial_point(problem, x0, cfg.proj_config)
    g = Qm.matvec(x) + c
    qnorm = max(1.0, Qm.frobenius_norm())
    gap_stop = cfg.tol * qnorm if cfg.termination == "gap" else 0.0

    if engine == "numba":
        Qa = Qm.array
        step_fn = lambda *a: K.vem_steps(Qa, *a)  # noqa: E731
    else:
        step_fn = lambda *a: _numpy_steps(Qm, *a)  # noqa: E731

    trace = VemTrace() if cfg.record_trace else None
    if trace is not None:
        trace.q0 = trace.q_incremental = float(0.5 * x @ (g - c) + c @ x)
    empty = np.zeros(0)

    def criterion_met():
        if cfg.termination == "kkt":
            return kkt_residual(problem, x, cfg.proj_config) <= cfg.tol
        if cfg.termination == "user":
            return cfg.user_error(x, g) <= cfg.tol
        return False

    def refresh():
        nonlocal g
        exact = Qm.matvec(x) + c
        if trace is not None:
            drift = float(np.max(np.abs(g - exact)) / (1.0 + np.max(np.abs(g))))
            trace.gradient_drift.append((k, drift))
        g = exact

    def checkpoint():
        eq, bound = fs.violation(x)
        trace.checkpoints.append(
            {
                "k": k,
                "objective": problem.objective(x),
                "objective_incremental": trace.q_incremental,
                "eq_violation": eq,
                "bound_violation": bound,
            }
        )

    k = 0
    since_refresh = 0
    last_gap = np.nan
    refreshes = 0
    termination = None
    stalled_at = -1
    if trace is not None:
        checkpoint()

    while termination is None:
        if k >= cfg.max_iter:
            termination = Termination.MAX_ITERATIONS
            break
        if cfg.time_limit is not None and time.perf_counter() - t_start > cfg.time_limit:
            termination = Termination.TIME_LIMIT
            break
        chunk = min(cfg.max_iter - k, cfg.gradient_refresh_period - since_refresh)
        chunk = min(chunk, _GAP_CHUNK if cfg.termination == "gap" else cfg.check_period)
        if trace is not None:
            chunk = min(chunk, cfg.trace_period)
        dq_buf = np.zeros(chunk) if trace is not None else empty
        steps, status, gap, s, t = step_fn(x, g, lower, upper, chunk, gap_stop, BOUNDARY_TOL, dq_buf)
        k += steps
        since_refresh += steps
        if steps:
            last_gap = gap
        if trace is not None:
            trace.dq.append(dq_buf[:steps].copy())
            trace.q_incremental += float(dq_buf[:steps].sum())
            checkpoint()

        if status == K.DEGENERATE:
            raise DegenerateError(f"empty exchange candidate set at iteration {k}")
        if status == K.NONPOSITIVE:
            col_s, col_t = Qm.column(s), Qm.column(t)
            curv = _curvature(col_s, col_t, s, t)
            raise NonPositiveCurvatureError(
                f"Q_ss + Q_tt - 2 Q_st = {curv} <= 0 at (s, t) = ({s}, {t})", s, t, curv
            )
        if since_refresh >= cfg.gradient_refresh_period:
            refresh()
            refreshes += 1
            since_refresh = 0

        if status == K.CONVERGED:
            last_gap = gap
            # Confirm against a freshly computed gradient so drift cannot fake convergence.
            if since_refresh:
                refresh()
                refreshes += 1
                since_refresh = 0
                st = VemState(x, g)
                s, t = select_exchange_pair(st, fs)
                last_gap = float(g[s] - g[t])
                if last_gap > gap_stop:
                    continue
            if cfg.termination == "gap":
                termination = Termination.GAP_CONVERGED
            elif criterion_met():
                termination = (
                    Termination.RESIDUAL_CONVERGED
                    if cfg.termination == "kkt"
                    else Termination.USER_ERROR_CONVERGED
                )
            else:
                # Exact optimality (gap <= 0) trumps a criterion that rounding prevents.
                termination = Termination.GAP_CONVERGED
        elif status == K.STALLED:
            if cfg.termination != "gap" and criterion_met():
                termination = (
                    Termination.RESIDUAL_CONVERGED
                    if cfg.termination == "kkt"
                    else Termination.USER_ERROR_CONVERGED
                )
            elif stalled_at == k:
                termination = Termination.STALLED
            else:
                stalled_at = k
                refresh()
                refreshes += 1
                since_refresh = 0
        elif cfg.termination != "gap" and criterion_met():
            termination = (
                Termination.RESIDUAL_CONVERGED
                if cfg.termination == "kkt"
                else Termination.USER_ERROR_CONVERGED
            )

    if trace is not None and (not trace.checkpoints or trace.checkpoints[-1]["k"] != k):
        checkpoint()
    wall = time.perf_counter() - t_start
    return SolveReport(
        x=x,
        objective=problem.objective(x),
        iterations=k,
        termination=termination,
        kkt_residual=kkt_residual(problem, x, cfg.proj_config),
        wall_time=wall,
        info={
            "gap": last_gap,
            "gap_scaled": last_gap / qnorm,
            "qnorm": qnorm,
            "engine": engine,
            "refreshes": refreshes,
            "g": g,
            "trace": trace,
        },
    )


def warm_up():
    """Compile (or load from cache) the VEM kernel so timings exclude it."""
    Q = np.eye(2)
    x = np.array([1.0, 0.0])
    g = x.copy()
    K.vem_steps(Q, x, g, np.zeros(2), np.ones(2), 10, 0.0, BOUNDARY_TOL, np.zeros(10))
