"""D-optimal experimental design: f(x) = -log det(A Diag(x) A^T).

With M = A Diag(x) A^T = L L^T and W = L^{-1} A, the matrix
B = A^T M^{-1} A equals W^T W, so

    f(x) = -2 sum(log diag L),  grad f = -diag(B),  hess f = B o B.

Coordinates with x_i <= SPARSE_TOL do not contribute to M.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cholesky, solve_triangular

from .core import DenseSymmetricMatrix
from .errors import DomainError
from .proj_newton import SelfConcordantObjective

SPARSE_TOL = 1e-12


@dataclass(frozen=True)
class DesignProblem:
    """Design matrix A (p x n); column i is experiment a_i."""

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=np.float64)
        if A.ndim != 2:
            raise ValueError("A must be a matrix")
        p, n = A.shape
        if not p < n:
            raise ValueError(f"need p < n, got p={p}, n={n}")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)
        try:
            _factor(self, np.full(n, 1.0 / n))
        except DomainError as exc:
            raise ValueError("A must have full row rank") from exc

    @property
    def p(self):
        return self.A.shape[0]

    @property
    def n(self):
        return self.A.shape[1]


def _factor(problem, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (problem.n,):
        raise ValueError("x has wrong dimension")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("x must be nonnegative and finite")
    A = problem.A
    keep = x > SPARSE_TOL
    As = A[:, keep]
    M = (As * x[keep]) @ As.T
    try:
        L = cholesky(M, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise DomainError("A Diag(x) A^T is not positive definite") from exc
    d = np.diag(L)
    if np.any(d <= 0) or not np.all(np.isfinite(d)):
        raise DomainError("A Diag(x) A^T is not positive definite")
    return L


def _whitened(problem, L):
    return solve_triangular(L, problem.A, lower=True, check_finite=False)


def dopt_value(problem, x):
    L = _factor(problem, x)
    return float(-2.0 * np.sum(np.log(np.diag(L))))


def dopt_gradient(problem, x):
    """g_i = -a_i^T M(x)^{-1} a_i."""
    W = _whitened(problem, _factor(problem, x))
    return -np.einsum("ij,ij->j", W, W)


def dopt_hessian(problem, x):
    """B o B with B = A^T M(x)^{-1} A."""
    W = _whitened(problem, _factor(problem, x))
    B = W.T @ W
    return DenseSymmetricMatrix(B * B)


def dopt_derivatives(problem, x):
    """(value, gradient, Hessian) from a single factorization."""
    L = _factor(problem, x)
    W = _whitened(problem, L)
    B = W.T @ W
    value = float(-2.0 * np.sum(np.log(np.diag(L))))
    return value, -np.diag(B).copy(), DenseSymmetricMatrix(B * B)


def generate_design_data(n, p, seed=0):
    """A with i.i.d. standard normal entries (columns a_i ~ N(0, I_p))."""
    if not p < n:
        raise ValueError("need p < n")
    rng = np.random.default_rng(seed)
    return DesignProblem(rng.standard_normal((p, n)))


def in_domain(problem, x):
    try:
        _factor(problem, x)
    except DomainError:
        return False
    return True


def dopt_objective(problem):
    """Self-concordant objective wrapper for :func:`proj_newton.pn_solve`."""
    return SelfConcordantObjective(
        value=lambda x: dopt_value(problem, x),
        gradient=lambda x: dopt_gradient(problem, x),
        hessian=lambda x: dopt_hessian(problem, x),
        in_domain=lambda x: in_domain(problem, x),
        derivatives=lambda x: dopt_derivatives(problem, x),
    )
