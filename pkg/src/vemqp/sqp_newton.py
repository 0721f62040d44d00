"""Inexact SQP Newton method for SC1 objectives over the generalized simplex.

Each outer step builds the regularized model

    q_k(x) = 0.5 (x - x^k)^T (V_k + eps_k I) (x - x^k) + grad f(x^k)^T (x - x^k)

and solves it approximately with VEM, stopping the inner solve as soon as
q_k <= 0 and the model's natural residual is at most rho_k ||G(x^k)||.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import DenseSymmetricMatrix, QpProblem, SolveReport, Termination
from .errors import InnerSolverStall, LineSearchFail, NonPositiveCurvatureError
from .proj import DEFAULT_SSN, proj_generalized_simplex
from .vem import AutoProject, VemConfig, vem_solve

MAX_BACKTRACKS = 60
MAX_EPS_INFLATIONS = 20
# Inner criteria are floored at this many ulps of (1 + ||x^k||); rho_k ||G||
# shrinks like ||G||^2 and falls below double precision near the solution.
# The residual bound is further floored at the projection's own accuracy.
INNER_FLOOR_ULPS = 1e3


@dataclass(frozen=True)
class Sc1Objective:
    """Objective with semismooth gradient.

    ``hessian_element(x)`` returns one element of the B-subdifferential of the
    gradient at x, as an array or DenseSymmetricMatrix.
    """

    value: Callable
    gradient: Callable
    hessian_element: Callable


@dataclass(frozen=True)
class SqpConfig:
    mu: float = 0.25
    gamma: float = 0.5
    rho: float = 0.5
    delta: float = 0.5
    tau1: float = 0.5
    tau2: float = 0.5
    outer_tol: float = 1e-8
    max_outer: int = 200
    inner_max_iter: int = 1_000_000
    inner_check_period: int = 50
    proj_config: object = None

    def __post_init__(self):
        if not 0.0 < self.mu < 0.5:
            raise ValueError("mu must lie in (0, 1/2)")
        for name in ("gamma", "rho", "delta", "tau1", "tau2"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.outer_tol < 0 or self.max_outer < 0:
            raise ValueError("outer_tol and max_outer must be nonnegative")


@dataclass
class SqpHistory:
    g_norm: list = field(default_factory=list)
    f_pre: list = field(default_factory=list)
    eps: list = field(default_factory=list)
    full_step: list = field(default_factory=list)
    step_size: list = field(default_factory=list)
    inner_iterations: list = field(default_factory=list)
    inner_model_value: list = field(default_factory=list)


def natural_map(objective, x, fs, proj_config=None):
    """G(x) = x - Proj_F(x - grad f(x))."""
    x = np.asarray(x, dtype=np.float64)
    return x - proj_generalized_simplex(x - objective.gradient(x), fs, proj_config)


def _model_matrix(V, eps):
    H = np.array(V.array if isinstance(V, DenseSymmetricMatrix) else V, dtype=np.float64)
    H[np.diag_indices_from(H)] += eps
    return DenseSymmetricMatrix(H)


def _solve_model(H, grad, xk, start, fs, rho_k, g_norm, cfg):
    """Approximately minimize q_k with VEM; returns (x, q_k(x), vem report)."""
    c = grad - H.matvec(xk)
    qp = QpProblem(H, c, fs)
    floor = INNER_FLOOR_ULPS * np.finfo(float).eps * (1.0 + float(np.linalg.norm(xk)))
    proj_floor = (cfg.proj_config or DEFAULT_SSN).grad_tol * max(1.0, abs(fs.b))
    bound = max(rho_k * g_norm, floor, proj_floor)

    def model_value(x, g):
        d = x - xk
        return 0.5 * float(d @ (g + grad))

    def model_residual(x, g):
        return float(np.linalg.norm(x - proj_generalized_simplex(x - g, fs, cfg.proj_config)))

    def user_error(x, g):
        # Zero exactly when both inner acceptance criteria hold.
        return max(model_value(x, g) - floor * g_norm, model_residual(x, g) - bound, 0.0)

    vcfg = VemConfig(
        tol=0.0,
        max_iter=cfg.inner_max_iter,
        termination="user",
        user_error=user_error,
        check_period=cfg.inner_check_period,
        proj_config=cfg.proj_config,
    )
    rep = vem_solve(qp, start, vcfg)
    g = rep.info["g"]
    if rep.termination is Termination.USER_ERROR_CONVERGED:
        return rep.x, model_value(rep.x, g), rep
    if rep.termination is Termination.GAP_CONVERGED:
        # Exact model optimum; the criteria hold mathematically, rounding aside.
        return rep.x, model_value(rep.x, g), rep
    raise InnerSolverStall(
        f"inner VEM stopped with {rep.termination.value} after {rep.iterations} iterations"
    )


def sqp_solve(objective, x0_tilde, fs, cfg=None):
    """Inexact SQP Newton method.

    ``x0_tilde`` need not be feasible; the first iterate is its projection.
    ``report.iterations`` counts outer iterations (model solves).
    """
    cfg = cfg or SqpConfig()
    t0 = time.perf_counter()
    fs.require_assumption()
    x_tilde = np.asarray(x0_tilde, dtype=np.float64)
    x = proj_generalized_simplex(x_tilde, fs, cfg.proj_config)
    start = AutoProject(x_tilde)
    G = natural_map(objective, x, fs, cfg.proj_config)
    g_norm = float(np.linalg.norm(G))
    f_pre = g_norm
    hist = SqpHistory()
    hist.g_norm.append(g_norm)
    hist.f_pre.append(f_pre)
    termination = Termination.MAX_ITERATIONS
    inner_total = 0
    k = 0
    while True:
        if g_norm <= cfg.outer_tol:
            termination = Termination.RESIDUAL_CONVERGED
            break
        if k >= cfg.max_outer:
            break
        eps = cfg.tau1 * min(cfg.tau2, g_norm)
        rho_k = min(cfg.rho, g_norm)
        grad = objective.gradient(x)
        V = objective.hessian_element(x)
        for _ in range(MAX_EPS_INFLATIONS + 1):
            try:
                H = _model_matrix(V, eps)
                x_new, q_val, rep = _solve_model(H, grad, x, start, fs, rho_k, g_norm, cfg)
                break
            except NonPositiveCurvatureError:
                eps *= 10.0
        else:
            raise InnerSolverStall("model stayed non-convex after regularization inflation")
        inner_total += rep.iterations
        hist.eps.append(eps)
        hist.inner_iterations.append(rep.iterations)
        hist.inner_model_value.append(q_val)
        start = x_new

        G_new = natural_map(objective, x_new, fs, cfg.proj_config)
        g_new = float(np.linalg.norm(G_new))
        if g_new <= cfg.gamma * f_pre:
            x, g_norm, f_pre = x_new, g_new, g_new
            hist.full_step.append(True)
            hist.step_size.append(1.0)
        else:
            dx = x_new - x
            f0 = objective.value(x)
            slope = float(grad @ dx)
            alpha = 1.0
            for _ in range(MAX_BACKTRACKS + 1):
                trial = objective.value(x + alpha * dx)
                if np.isfinite(trial) and trial <= f0 + cfg.mu * alpha * slope:
                    break
                alpha *= cfg.delta
            else:
                raise LineSearchFail(f"no Armijo step after {MAX_BACKTRACKS} backtracks")
            x = x + alpha * dx
            g_norm = float(np.linalg.norm(natural_map(objective, x, fs, cfg.proj_config)))
            if g_norm <= cfg.gamma * f_pre:
                f_pre = g_norm
            hist.full_step.append(False)
            hist.step_size.append(alpha)
        hist.g_norm.append(g_norm)
        hist.f_pre.append(f_pre)
        k += 1

    return SolveReport(
        x=x,
        objective=float(objective.value(x)),
        iterations=k,
        termination=termination,
        kkt_residual=g_norm / (1.0 + float(np.linalg.norm(x))),
        wall_time=time.perf_counter() - t0,
        info={"g_norm": g_norm, "inner_iterations": inner_total, "history": hist},
    )


def quadratic_objective(Q, c):
    """0.5 x^T Q x + c^T x as an SC1 objective (constant Hessian)."""
    Q = DenseSymmetricMatrix(Q) if not isinstance(Q, DenseSymmetricMatrix) else Q
    c = np.asarray(c, dtype=np.float64)
    return Sc1Objective(
        value=lambda x: float(0.5 * x @ Q.matvec(x) + c @ x),
        gradient=lambda x: Q.matvec(x) + c,
        hessian_element=lambda x: Q,
    )


def distance_objective(target):
    """0.5 ||x - target||^2."""
    t = np.asarray(target, dtype=np.float64)
    eye = DenseSymmetricMatrix(np.eye(t.size))
    return Sc1Objective(
        value=lambda x: float(0.5 * np.sum((x - t) ** 2)),
        gradient=lambda x: np.asarray(x, dtype=np.float64) - t,
        hessian_element=lambda x: eye,
    )


def shifted_log_barrier(shift=0.1):
    """-sum log(x_i + shift); +inf outside its domain."""

    def value(x):
        z = np.asarray(x) + shift
        return float(-np.sum(np.log(z))) if np.all(z > 0) else np.inf

    return Sc1Objective(
        value=value,
        gradient=lambda x: -1.0 / (np.asarray(x) + shift),
        hessian_element=lambda x: np.diag(1.0 / (np.asarray(x) + shift) ** 2),
    )


def huber_objective(A, y, kappa=1.0):
    """sum_i huber(a_i^T x - y_i): gradient is piecewise linear, hence SC1 but not C2.

    The Hessian element takes the quadratic branch on the closed set |r_i| <= kappa.
    """
    A = np.asarray(A, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)

    def value(x):
        r = A @ x - y
        a = np.abs(r)
        return float(np.sum(np.where(a <= kappa, 0.5 * r * r, kappa * (a - 0.5 * kappa))))

    def gradient(x):
        return A.T @ np.clip(A @ x - y, -kappa, kappa)

    def hessian_element(x):
        w = (np.abs(A @ x - y) <= kappa).astype(np.float64)
        return (A.T * w) @ A

    return Sc1Objective(value, gradient, hessian_element)
