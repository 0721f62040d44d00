"""Euclidean projection onto a box and onto the generalized simplex.

Projection onto F reduces to a scalar root-finding problem in the dual
variable y of the equality constraint:

    Proj_F(xbar) = clip(y* + xbar, lower, upper),   phi'(y*) = 0,
    phi'(y) = sum(clip(y + xbar, lower, upper)) - b.

phi'(y) is piecewise linear and nondecreasing, and is solved with a
regularized semismooth Newton method plus Armijo backtracking on phi. A
bisection safeguard takes over if Newton stalls.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError

MAX_BACKTRACKS = 60
MAX_BISECTION = 2000


@dataclass(frozen=True)
class SsnConfig:
    """Parameters for :func:`ssn_solve`.

    The stopping rule is |phi'(y)| <= grad_tol * max(1, |b|).
    """

    grad_tol: float = 1e-12
    max_iter: int = 50
    delta: float = 0.5
    mu: float = 0.25
    tau1: float = 0.5
    tau2: float = 0.5
    y0: float = 0.0
    warm_start: bool = False

    def __post_init__(self):
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 0.0 < self.mu < 0.5:
            raise ValueError("mu must lie in (0, 1/2)")
        if not (0.0 < self.tau1 < 1.0 and 0.0 < self.tau2 < 1.0):
            raise ValueError("tau1, tau2 must lie in (0, 1)")
        if self.grad_tol < 0 or self.max_iter < 0:
            raise ValueError("grad_tol and max_iter must be nonnegative")


@dataclass
class SsnTrace:
    iterations: int = 0
    y_history: list = field(default_factory=list)
    final_phi_prime: float = np.nan
    used_safeguard: bool = False
    backtracks: int = 0


DEFAULT_SSN = SsnConfig()


def proj_box(point, lower, upper):
    """Elementwise clamp of ``point`` into [lower, upper]."""
    point = np.asarray(point, dtype=np.float64)
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if point.shape != lower.shape or point.shape != upper.shape:
        raise ValueError(
            f"dimension mismatch: point {point.shape}, bounds {lower.shape}/{upper.shape}"
        )
    return np.minimum(np.maximum(point, lower), upper)


def _shifted(y, xbar, fs):
    w = xbar + y
    return w, np.minimum(np.maximum(w, fs.lower), fs.upper)


def phi_value(y, xbar, fs):
    """Dual objective 0.5||P(w)||^2 - b y + l^T min(z,0) + u^T max(z,0),
    with w = y e + xbar, P the box projection and z = w - P(w)."""
    w, p = _shifted(y, np.asarray(xbar, dtype=np.float64), fs)
    z = w - p
    support = fs.lower @ np.minimum(z, 0.0) + fs.upper @ np.maximum(z, 0.0)
    return float(0.5 * p @ p - fs.b * y + support)


def phi_prime(y, xbar, fs):
    """sum(clip(y + xbar, lower, upper)) - b."""
    _, p = _shifted(y, np.asarray(xbar, dtype=np.float64), fs)
    return float(p.sum() - fs.b)


def generalized_hessian_scalar(y, xbar, fs):
    """Count of coordinates with lower_i <= y + xbar_i <= upper_i (closed)."""
    w = np.asarray(xbar, dtype=np.float64) + y
    return int(np.count_nonzero((fs.lower <= w) & (w <= fs.upper)))


def _curvature_part(w, h, lower, upper):
    """sum_i of integral_{w_i}^{w_i+h} (clip(s) - clip(w_i)) ds, always >= 0.

    phi(y + h) - phi(y) = h phi'(y) + this, computed without forming the
    large, nearly cancelling values of phi itself.
    """
    if h < 0:
        w, h, lower, upper = -w, -h, -upper, -lower
    rising = w < upper
    s1 = np.maximum(w, lower)
    s2 = np.minimum(w + h, upper)
    ramp = np.maximum(s2 - s1, 0.0)
    flat = np.maximum(w + h - np.maximum(upper, s1), 0.0)
    terms = np.where(rising, 0.5 * ramp * ramp + (upper - s1) * flat, 0.0)
    return float(terms.sum())


def _bracket(xbar, fs, tol):
    """Find lo < hi with phi'(lo) < 0 < phi'(hi) by doubling from 0."""
    g0 = phi_prime(0.0, xbar, fs)
    if abs(g0) <= tol:
        return 0.0, 0.0
    sign = 1.0 if g0 < 0 else -1.0
    near, far = 0.0, sign
    for _ in range(1100):
        gf = phi_prime(far, xbar, fs)
        if sign * gf >= 0 or not np.isfinite(far):
            break
        near, far = far, 2.0 * far
    else:  # pragma: no cover
        raise InfeasibleError("could not bracket the dual root")
    return (near, far) if sign > 0 else (far, near)


def _bisect(xbar, fs, tol):
    lo, hi = _bracket(xbar, fs, tol)
    if lo == hi:
        return lo
    best, best_val = lo, abs(phi_prime(lo, xbar, fs))
    for _ in range(MAX_BISECTION):
        mid = 0.5 * (lo + hi)
        gm = phi_prime(mid, xbar, fs)
        if abs(gm) < best_val:
            best, best_val = mid, abs(gm)
        if abs(gm) <= tol or mid in (lo, hi):
            break
        if gm < 0:
            lo = mid
        else:
            hi = mid
    return best


def ssn_solve(xbar, fs, cfg=None):
    """Solve phi'(y) = 0 by regularized semismooth Newton.

    Returns ``(y_star, trace)``. Falls back to bracketed bisection when the
    line search exceeds 60 backtracks or ``max_iter`` is reached.
    """
    cfg = cfg or DEFAULT_SSN
    fs.require_assumption()
    xbar = np.asarray(xbar, dtype=np.float64)
    if xbar.shape != (fs.n,):
        raise ValueError("xbar has wrong dimension")
    lower, upper = fs.lower, fs.upper
    tol = cfg.grad_tol * max(1.0, abs(fs.b))

    y = float(cfg.y0)
    if cfg.warm_start:
        y = (fs.b - float(proj_box(xbar, lower, upper).sum())) / fs.n
    trace = SsnTrace()
    trace.y_history.append(y)

    converged = False
    for k in range(cfg.max_iter + 1):
        w = xbar + y
        p = np.minimum(np.maximum(w, lower), upper)
        grad = float(p.sum() - fs.b)
        trace.final_phi_prime = grad
        if abs(grad) <= tol:
            converged = True
            break
        if k == cfg.max_iter:
            break
        v = float(np.count_nonzero((lower <= w) & (w <= upper)))
        eps = cfg.tau1 * min(cfg.tau2, abs(grad))
        dy = -grad / (v + eps)
        # Armijo on phi: phi(y + a dy) - phi(y) <= mu a phi'(y) dy, written
        # as curvature <= (mu - 1) a phi'(y) dy since the linear part cancels.
        alpha = 1.0
        for m in range(MAX_BACKTRACKS + 1):
            h = alpha * dy
            if _curvature_part(w, h, lower, upper) <= (cfg.mu - 1.0) * grad * h:
                break
            alpha *= cfg.delta
        else:
            trace.backtracks += MAX_BACKTRACKS
            break
        trace.backtracks += m
        y_new = y + alpha * dy
        trace.iterations = k + 1
        if y_new == y:
            break
        y = y_new
        trace.y_history.append(y)

    if not converged:
        y = _bisect(xbar, fs, tol)
        trace.used_safeguard = True
        trace.y_history.append(y)
        trace.final_phi_prime = phi_prime(y, xbar, fs)
    return y, trace


def proj_generalized_simplex(xbar, fs, cfg=None):
    """Euclidean projection of ``xbar`` onto the generalized simplex ``fs``."""
    y, _ = ssn_solve(xbar, fs, cfg)
    return proj_box(np.asarray(xbar, dtype=np.float64) + y, fs.lower, fs.upper)


def project_with_trace(xbar, fs, cfg=None):
    y, trace = ssn_solve(xbar, fs, cfg)
    return proj_box(np.asarray(xbar, dtype=np.float64) + y, fs.lower, fs.upper), y, trace
