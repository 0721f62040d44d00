"""Inexact projected Newton method for self-concordant objectives.

Every outer step minimizes the second-order model

    q_k(x) = 0.5 (x - x^k)^T H_k (x - x^k) + grad f(x^k)^T (x - x^k)

over F until the linear-minimization certificate
max_{z in F} grad q_k(x~)^T (x~ - z) <= xi_k holds (checked exactly by the
continuous knapsack oracle), then takes either the full step or an explicitly
damped step depending on the local norm of the Newton direction.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .core import DenseSymmetricMatrix, QpProblem, SolveReport, Termination
from .errors import DomainError, DomainViolation, InnerSolverStall, NegativeQuadraticForm
from .lp_oracle import lp_minimize
from .proj import proj_generalized_simplex
from .vem import VemConfig, vem_solve


def _h_den(tau):
    return (1.0 - 2.0 * tau) * (1.0 - tau) ** 2 - tau * tau


def _h_num(tau):
    return tau * (1.0 - 2.0 * tau + 2.0 * tau * tau)


def _h_den_root():
    # The denominator falls from 1 at 0 to -1/4 at 1/2; bisect for its root.
    lo, hi = 0.0, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _h_den(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo


H_DOMAIN_END = _h_den_root()


def h_func(tau):
    """tau (1 - 2 tau + 2 tau^2) / ((1 - 2 tau)(1 - tau)^2 - tau^2), for tau >= 0."""
    tau = float(tau)
    den = _h_den(tau)
    if tau < 0 or den <= 0:
        raise DomainError(f"h is undefined at tau={tau}")
    return _h_num(tau) / den


def _h_prime(tau):
    num, den = _h_num(tau), _h_den(tau)
    dnum = 1.0 - 4.0 * tau + 6.0 * tau * tau
    dden = -2.0 * (1.0 - tau) ** 2 - 2.0 * (1.0 - 2.0 * tau) * (1.0 - tau) - 2.0 * tau
    return (dnum * den - num * dden) / (den * den)


@lru_cache(maxsize=64)
def h_inverse(v, tol=1e-14):
    """tau >= 0 with |h(tau) - v| <= tol (Newton steps kept inside a bisection bracket)."""
    v = float(v)
    if v < 0:
        raise DomainError("h_inverse needs v >= 0")
    if v == 0:
        return 0.0
    lo, hi = 0.0, H_DOMAIN_END
    tau = min(v, 0.5 * hi)
    for _ in range(500):
        r = h_func(tau) - v
        if abs(r) <= tol:
            return tau
        if r > 0:
            hi = tau
        else:
            lo = tau
        step = tau - r / _h_prime(tau)
        tau = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    return tau


def omega(tau):
    """tau - log(1 + tau)."""
    tau = float(tau)
    if tau <= -1:
        raise DomainError("omega needs tau > -1")
    return tau - math.log1p(tau)


def local_norm(H, d):
    """sqrt(d^T H d); small negative rounding is clamped to zero."""
    d = np.asarray(d, dtype=np.float64)
    q = H.quad_form(d) if hasattr(H, "quad_form") else float(d @ np.asarray(H) @ d)
    if q < 0:
        hnorm = H.frobenius_norm() if hasattr(H, "frobenius_norm") else np.linalg.norm(H)
        if q < -1e-10 * float(d @ d) * hnorm:
            raise NegativeQuadraticForm(f"d^T H d = {q}")
        return 0.0
    return math.sqrt(q)


@dataclass(frozen=True)
class SelfConcordantObjective:
    """``derivatives(x)``, if given, returns (value, gradient, hessian) at once."""

    value: Callable
    gradient: Callable
    hessian: Callable
    in_domain: Callable
    derivatives: Callable | None = None

    def all_at(self, x):
        if self.derivatives is not None:
            return self.derivatives(x)
        return self.value(x), self.gradient(x), self.hessian(x)


@dataclass(frozen=True)
class PnConfig:
    beta: float = 0.04
    sigma: float = 0.5
    C: float = 25.0
    C1: float = 0.25
    delta: float = 0.9
    lambda_stop: float = 1e-3
    max_outer: int = 500
    qp_solver: str = "vem"
    inner_max_iter: int = 1_000_000
    inner_check_period: int = 50

    def __post_init__(self):
        b, s, C = self.beta, self.sigma, self.C
        if not 0.0 < b < 0.05:
            raise ValueError("beta must lie in (0, 1/20)")
        if not 0.0 < s < 1.0:
            raise ValueError("sigma must lie in (0, 1)")
        if not C > 1.0:
            raise ValueError("C must exceed 1")
        if not 0.0 < self.C1 < 0.5:
            raise ValueError("C1 must lie in (0, 1/2)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if 1.0 / (C * (1.0 - b)) + b / ((1.0 - 2.0 * b) * (1.0 - b) ** 2) > s:
            raise ValueError("1/(C(1-beta)) + beta/((1-2beta)(1-beta)^2) <= sigma violated")
        if 1.0 / C + 1.0 / (1.0 - 2.0 * b) > 2.0:
            raise ValueError("1/C + 1/(1-2beta) <= 2 violated")
        if self.qp_solver not in ("vem", "fw"):
            raise ValueError(f"unknown qp_solver {self.qp_solver!r}")
        if self.lambda_stop <= 0:
            raise ValueError("lambda_stop must be positive")

    @property
    def h_inv_beta(self):
        return h_inverse(self.beta)

    @property
    def xi0(self):
        return min(self.beta / self.C, self.C1 * self.h_inv_beta)


@dataclass
class PnHistory:
    lam: list = field(default_factory=list)
    xi: list = field(default_factory=list)
    gamma: list = field(default_factory=list)
    full_step: list = field(default_factory=list)
    step_size: list = field(default_factory=list)
    certificate: list = field(default_factory=list)
    inner_iterations: list = field(default_factory=list)
    objective: list = field(default_factory=list)


def lp_certificate(g, x, fs):
    """max_{z in F} g^T (x - z)."""
    _, vmin = lp_minimize(g, fs)
    return float(g @ x) - vmin


def _vem_inner(H, c, start, xi, fs, cfg):
    qp = QpProblem(H, c, fs)

    def user_error(x, g):
        return max(lp_certificate(g, x, fs) - xi, 0.0)

    vcfg = VemConfig(
        tol=0.0,
        max_iter=cfg.inner_max_iter,
        termination="user",
        user_error=user_error,
        check_period=cfg.inner_check_period,
    )
    rep = vem_solve(qp, start, vcfg)
    if rep.termination not in (Termination.USER_ERROR_CONVERGED, Termination.GAP_CONVERGED):
        raise InnerSolverStall(
            f"inner VEM stopped with {rep.termination.value} after {rep.iterations} iterations"
        )
    return rep.x, rep.info["g"], rep.iterations


def _simplex_radius(fs):
    """r = b - sum(l) if F = {l + w : w >= 0, sum(w) = r} (upper bounds never bind), else None."""
    r = fs.b - float(fs.lower.sum())
    return r if np.all(fs.upper - fs.lower >= r) else None


def _fw_inner(H, c, start, xi, fs, cfg):
    """Frank-Wolfe with exact line search on the quadratic model.

    On simplex-type sets (vertices l + r e_j) away steps are used, which keeps
    the method linearly convergent; elsewhere it is the plain method. Stops on
    the Frank-Wolfe gap, which is exactly the certificate.
    """
    r = _simplex_radius(fs)
    if r is not None:
        return _away_fw(H, c, start, xi, fs, r, cfg)
    Ha = H.array
    lower = fs.lower
    H_lower = Ha @ lower
    x = np.array(start, dtype=np.float64)
    Hx = Ha @ x
    for k in range(cfg.inner_max_iter):
        g = Hx + c
        v, gv = lp_minimize(g, fs)
        gap = float(g @ x) - gv
        if gap <= xi:
            return x, g, k
        # H v from H l plus the few columns where the vertex leaves l.
        moved = np.flatnonzero(v != lower)
        Hv = H_lower + Ha[:, moved] @ (v[moved] - lower[moved])
        d = v - x
        Hd = Hv - Hx
        curv = float(d @ Hd)
        alpha = 1.0 if curv <= 0 else min(1.0, gap / curv)
        x = x + alpha * d
        Hx = Hx + alpha * Hd
    raise InnerSolverStall(f"inner FW did not reach certificate {xi} in {cfg.inner_max_iter} iterations")


def _away_fw(H, c, start, xi, fs, r, cfg):
    Ha = H.array
    lower = fs.lower
    w = np.maximum(np.array(start, dtype=np.float64) - lower, 0.0)
    H_lower = Ha @ lower
    Hw = Ha @ w
    for k in range(cfg.inner_max_iter):
        g = H_lower + Hw + c
        gw = float(g @ w)
        s = int(np.argmin(g))
        fw_gap = gw - r * float(g[s])
        if fw_gap <= xi:
            return lower + w, g, k
        a = int(np.argmax(np.where(w > 0, g, -np.inf)))
        away_gap = r * float(g[a]) - gw
        if fw_gap >= away_gap:
            d = -w
            d[s] += r
            Hd = r * Ha[:, s] - Hw
            slope, step_max = -fw_gap, 1.0
        else:
            d = w.copy()
            d[a] -= r
            Hd = Hw - r * Ha[:, a]
            frac = w[a] / r
            slope = -away_gap
            step_max = frac / (1.0 - frac) if frac < 1.0 else np.inf
        curv = float(d @ Hd)
        step = step_max if curv <= 0 else min(step_max, -slope / curv)
        w = w + step * d
        Hw = Hw + step * Hd
        if fw_gap < away_gap and step == step_max:
            w[a] = 0.0  # drop step: the away vertex leaves the support exactly
        np.maximum(w, 0.0, out=w)
    raise InnerSolverStall(f"inner FW did not reach certificate {xi} in {cfg.inner_max_iter} iterations")


def pn_solve(objective, x0, fs, cfg=None):
    """Inexact projected Newton method; stops once lambda^k <= cfg.lambda_stop.

    ``info["qp_time"]`` is the wall time spent inside the QP subsolver.
    """
    cfg = cfg or PnConfig()
    t0 = time.perf_counter()
    fs.require_assumption()
    x = np.array(x0, dtype=np.float64, copy=True)
    if not fs.contains(x):
        raise ValueError("x0 must lie in the feasible set")
    if not objective.in_domain(x):
        raise DomainViolation("x0 is outside the objective's domain")
    inner = _vem_inner if cfg.qp_solver == "vem" else _fw_inner

    h_inv = cfg.h_inv_beta
    lam_prev = cfg.beta / cfg.sigma
    xi = cfg.xi0
    x_tilde = x.copy()
    hist = PnHistory()
    qp_time = 0.0
    qp_iters = 0
    k = 0
    termination = Termination.MAX_ITERATIONS
    while k < cfg.max_outer:
        f, grad, H = objective.all_at(x)
        hist.objective.append(f)
        c = grad - H.matvec(x)
        tq = time.perf_counter()
        x_tilde, g_model, it = inner(H, c, x_tilde, xi, fs, cfg)
        qp_time += time.perf_counter() - tq
        qp_iters += it
        hist.inner_iterations.append(it)
        hist.certificate.append(lp_certificate(g_model, x_tilde, fs))

        dx = x_tilde - x
        gamma = local_norm(H, dx)
        hist.gamma.append(gamma)
        hist.xi.append(xi)
        if gamma + xi <= h_inv or lam_prev <= cfg.beta:
            lam = cfg.sigma * lam_prev
            xi_next = cfg.sigma * xi
            x_next = x_tilde.copy()
            hist.full_step.append(True)
            hist.step_size.append(1.0)
        else:
            lam, xi_next = lam_prev, xi
            den = gamma**3 + gamma**2 - xi * xi * gamma
            assert gamma > xi and den > 0, "damped step needs gamma > xi"
            t = cfg.delta * (gamma**2 - xi**2) / den
            x_next = x + t * dx
            hist.full_step.append(False)
            hist.step_size.append(t)
        if not objective.in_domain(x_next):
            raise DomainViolation(f"iterate left the domain at outer iteration {k}")
        x, lam_prev, xi = x_next, lam, xi_next
        hist.lam.append(lam)
        k += 1
        if lam <= cfg.lambda_stop:
            termination = Termination.RESIDUAL_CONVERGED
            break

    grad = objective.gradient(x)
    natural = x - proj_generalized_simplex(x - grad, fs)
    return SolveReport(
        x=x,
        objective=float(objective.value(x)),
        iterations=k,
        termination=termination,
        kkt_residual=float(np.linalg.norm(natural) / (1.0 + np.linalg.norm(x))),
        wall_time=time.perf_counter() - t0,
        info={
            "lambda": hist.lam[-1] if hist.lam else lam_prev,
            "qp_time": qp_time,
            "qp_iterations": qp_iters,
            "qp_solver": cfg.qp_solver,
            "history": hist,
        },
    )


def neg_log_objective():
    """-sum log x_i, defined for x > 0."""

    def value(x):
        x = np.asarray(x)
        if np.any(x <= 0):
            raise DomainError("log barrier needs x > 0")
        return float(-np.sum(np.log(x)))

    return SelfConcordantObjective(
        value=value,
        gradient=lambda x: -1.0 / np.asarray(x),
        hessian=lambda x: DenseSymmetricMatrix(np.diag(1.0 / np.asarray(x) ** 2)),
        in_domain=lambda x: bool(np.all(np.asarray(x) > 0)),
    )
