"""Feasible-set and problem types, active sets, preprocessing and KKT residuals.

The feasible set throughout the package is the generalized simplex

    F = {x : sum(x) = b, lower <= x <= upper}.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleError

# Equality feasibility is relative, bound feasibility absolute.
EQ_FEAS_TOL = 1e-10
BOUND_FEAS_TOL = 1e-14
# Coordinates whose box is narrower than this are fixed by `preprocess`.
FIXED_GAP_TOL = 1e-14


def _as_vector(v, name):
    arr = np.array(v, dtype=np.float64, copy=True).reshape(-1)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class GeneralizedSimplex:
    """The set {x : e^T x = b, lower <= x <= upper}.

    Construction only checks shapes, finiteness and lower <= upper; the
    strict interior condition (e^T l < b < e^T u, l < u) is tested by
    :meth:`satisfies_assumption` and enforced by :meth:`require_assumption`.
    """

    b: float
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = _as_vector(self.lower, "lower")
        upper = _as_vector(self.upper, "upper")
        if lower.shape != upper.shape:
            raise ValueError("lower and upper must have the same length")
        if lower.size == 0:
            raise ValueError("dimension must be positive")
        if np.any(lower > upper):
            raise InfeasibleError("lower > upper for some coordinate")
        b = float(self.b)
        if not np.isfinite(b):
            raise ValueError("b must be finite")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "b", b)

    @classmethod
    def standard(cls, n):
        """The unit simplex {x >= 0, sum(x) = 1}."""
        return cls(1.0, np.zeros(n), np.ones(n))

    @property
    def n(self):
        return self.lower.size

    def is_nonempty(self):
        return float(self.lower.sum()) <= self.b <= float(self.upper.sum())

    def satisfies_assumption(self):
        return bool(
            np.all(self.lower < self.upper)
            and float(self.lower.sum()) < self.b < float(self.upper.sum())
        )

    def require_assumption(self):
        if not self.satisfies_assumption():
            raise InfeasibleError(
                "feasible set must satisfy sum(lower) < b < sum(upper) and lower < upper"
            )

    def contains(self, x, eq_tol=EQ_FEAS_TOL, bound_tol=BOUND_FEAS_TOL):
        x = np.asarray(x, dtype=np.float64)
        return bool(
            x.shape == (self.n,)
            and abs(x.sum() - self.b) <= eq_tol * max(1.0, abs(self.b))
            and np.all(x >= self.lower - bound_tol)
            and np.all(x <= self.upper + bound_tol)
        )

    def violation(self, x):
        """Return (|e^T x - b|, max bound violation)."""
        x = np.asarray(x, dtype=np.float64)
        eq = abs(float(x.sum()) - self.b)
        bound = max(
            0.0,
            float(np.max(self.lower - x)),
            float(np.max(x - self.upper)),
        )
        return eq, bound


class DenseSymmetricMatrix:
    """Row-major float64 symmetric matrix; ``column(j)`` is a view of row j.

    Slightly asymmetric input is symmetrized as (A + A^T)/2, which is
    exactly symmetric in floating point. Input with relative asymmetry above
    ``sym_tol`` is rejected.
    """

    __slots__ = ("_a",)

    def __init__(self, entries, n=None, sym_tol=1e-10):
        a = np.array(entries, dtype=np.float64, copy=True)
        if a.ndim == 1:
            if n is None:
                n = int(round(np.sqrt(a.size)))
            if a.size != n * n:
                raise ValueError("entries must have length n*n")
            a = a.reshape(n, n)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("matrix must be square")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        if not np.array_equal(a, a.T):
            scale = max(1.0, float(np.max(np.abs(a))))
            if float(np.max(np.abs(a - a.T))) > sym_tol * scale:
                raise ValueError("matrix is not symmetric")
            a = 0.5 * (a + a.T)
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        self._a = a

    @property
    def n(self):
        return self._a.shape[0]

    @property
    def array(self):
        """Read-only (n, n) view."""
        return self._a

    @property
    def entries(self):
        """Row-major flat view of length n*n."""
        return self._a.reshape(-1)

    def column(self, j):
        return self._a[j]

    def entry(self, i, j):
        return float(self._a[i, j])

    def diagonal(self):
        return np.diagonal(self._a)

    def matvec(self, x):
        return self._a @ x

    def frobenius_norm(self):
        return float(np.linalg.norm(self._a))

    def quad_form(self, d):
        d = np.asarray(d, dtype=np.float64)
        return float(d @ (self._a @ d))

    def is_positive_definite(self):
        try:
            np.linalg.cholesky(self._a)
        except np.linalg.LinAlgError:
            return False
        return True

    def __repr__(self):
        return f"DenseSymmetricMatrix(n={self.n})"


def as_symmetric(Q):
    return Q if isinstance(Q, DenseSymmetricMatrix) else DenseSymmetricMatrix(Q)


@dataclass(frozen=True)
class QpProblem:
    """min 0.5 x^T Q x + c^T x over a generalized simplex.

    Q is assumed positive definite; use ``Q.is_positive_definite()`` to check.
    """

    Q: DenseSymmetricMatrix
    c: np.ndarray
    feasible_set: GeneralizedSimplex

    def __post_init__(self):
        object.__setattr__(self, "Q", as_symmetric(self.Q))
        object.__setattr__(self, "c", _as_vector(self.c, "c"))
        if not (self.Q.n == self.c.size == self.feasible_set.n):
            raise ValueError("dimension mismatch between Q, c and feasible set")

    @property
    def n(self):
        return self.c.size

    def objective(self, x):
        x = np.asarray(x, dtype=np.float64)
        return float(0.5 * x @ self.Q.matvec(x) + self.c @ x)

    def gradient(self, x):
        return self.Q.matvec(np.asarray(x, dtype=np.float64)) + self.c


class Termination(enum.Enum):
    GAP_CONVERGED = "gap_converged"
    RESIDUAL_CONVERGED = "residual_converged"
    USER_ERROR_CONVERGED = "user_error_converged"
    MAX_ITERATIONS = "max_iterations"
    TIME_LIMIT = "time_limit"
    # Iterate stopped moving in floating point before the tolerance was met.
    STALLED = "stalled"

    @property
    def converged(self):
        return self in (
            Termination.GAP_CONVERGED,
            Termination.RESIDUAL_CONVERGED,
            Termination.USER_ERROR_CONVERGED,
        )


@dataclass
class SolveReport:
    x: np.ndarray
    objective: float
    iterations: int
    termination: Termination
    kkt_residual: float
    wall_time: float
    info: dict = field(default_factory=dict)

    def is_feasible(self, feasible_set):
        return feasible_set.contains(self.x)


@dataclass(frozen=True)
class KktCertificate:
    """Primal x, equality multiplier y and bound multipliers z with
    Qx + c = y e + z (z >= 0 at lower bounds, z <= 0 at upper bounds)."""

    x: np.ndarray
    y: float
    z: np.ndarray

    def sign_violation(self, feasible_set, tol=0.0):
        """Largest violation of the bound-multiplier sign pattern."""
        j_low, j_up = active_sets(self.x, feasible_set, tol)
        z = np.asarray(self.z)
        free = ~(j_low | j_up)
        viol = 0.0
        if np.any(j_low & ~j_up):
            viol = max(viol, float(np.max(-z[j_low & ~j_up], initial=0.0)))
        if np.any(j_up & ~j_low):
            viol = max(viol, float(np.max(z[j_up & ~j_low], initial=0.0)))
        if np.any(free):
            viol = max(viol, float(np.max(np.abs(z[free]))))
        return viol

    def stationarity_residual(self, problem):
        r = problem.gradient(self.x) - self.y - self.z
        return float(np.max(np.abs(r)))


def active_sets(x, feasible_set, tol=0.0):
    """Boolean masks (J_lower, J_upper) of coordinates at their bounds.

    Membership is tolerance based: x_i <= l_i + tol and x_i >= u_i - tol.
    """
    x = np.asarray(x, dtype=np.float64)
    j_low = x <= feasible_set.lower + tol
    j_up = x >= feasible_set.upper - tol
    return j_low, j_up


def kkt_residual(problem, x, proj_config=None):
    """||x - Proj_F(x - Qx - c)|| / (1 + ||x||)."""
    from .proj import proj_generalized_simplex

    x = np.asarray(x, dtype=np.float64)
    step = x - problem.gradient(x)
    p = proj_generalized_simplex(step, problem.feasible_set, proj_config)
    return float(np.linalg.norm(x - p) / (1.0 + np.linalg.norm(x)))


@dataclass(frozen=True)
class Preprocessed:
    """Result of :func:`preprocess`.

    Exactly one of ``reduced`` / ``singleton`` is set. ``free`` indexes the
    original coordinates kept in ``reduced``; ``fixed_values`` holds the
    values of the dropped coordinates (NaN on free ones).
    """

    original: GeneralizedSimplex
    reduced: GeneralizedSimplex | None
    free: np.ndarray
    fixed_values: np.ndarray
    singleton: np.ndarray | None = None

    @property
    def is_singleton(self):
        return self.singleton is not None

    def expand(self, x_reduced=None):
        """Lift a reduced-space point back to the original coordinates."""
        if self.singleton is not None:
            return self.singleton.copy()
        x = self.fixed_values.copy()
        x[self.free] = x_reduced
        return x


def preprocess(feasible_set, gap_tol=FIXED_GAP_TOL):
    """Drop fixed coordinates and detect singleton sets.

    Raises InfeasibleError when sum(lower) > b or sum(upper) < b.
    """
    lo, up, b = feasible_set.lower, feasible_set.upper, feasible_set.b
    eq_tol = EQ_FEAS_TOL * max(1.0, abs(b))
    slo, sup = float(lo.sum()), float(up.sum())
    if slo > b + eq_tol or sup < b - eq_tol:
        raise InfeasibleError(f"b={b} outside [{slo}, {sup}]")
    n = feasible_set.n
    if abs(slo - b) <= eq_tol:
        return Preprocessed(feasible_set, None, np.arange(0), lo.copy(), lo.copy())
    if abs(sup - b) <= eq_tol:
        return Preprocessed(feasible_set, None, np.arange(0), up.copy(), up.copy())

    fixed = (up - lo) <= gap_tol
    fixed_values = np.full(n, np.nan)
    fixed_values[fixed] = lo[fixed]
    free = np.flatnonzero(~fixed)
    b_red = b - float(lo[fixed].sum())
    reduced = GeneralizedSimplex(b_red, lo[free], up[free])
    if not reduced.satisfies_assumption():
        # Only reachable when every remaining coordinate is pinned by b.
        x = fixed_values.copy()
        x[free] = lo[free] if abs(b_red - reduced.lower.sum()) <= eq_tol else up[free]
        return Preprocessed(feasible_set, None, free, fixed_values, x)
    return Preprocessed(feasible_set, reduced, free, fixed_values)


@dataclass(frozen=True)
class Rescaling:
    """Change of variables x' = a * x mapping {a^T x = b} to {e^T x' = b}."""

    a: np.ndarray

    def to_scaled(self, x):
        return self.a * np.asarray(x, dtype=np.float64)

    def to_original(self, x_scaled):
        return np.asarray(x_scaled, dtype=np.float64) / self.a


def rescale_weighted_constraint(a, b, lower, upper, Q=None, c=None):
    """Rewrite {a^T x = b, l <= x <= u} (all a_i != 0) as a generalized simplex.

    Returns (feasible_set, rescaling) or, when Q and c are given,
    (QpProblem, rescaling) with Q' = D^-1 Q D^-1 and c' = D^-1 c, D = Diag(a).
    """
    a = np.asarray(a, dtype=np.float64)
    if np.any(a == 0):
        raise ValueError("all constraint weights must be nonzero")
    lo = a * np.asarray(lower, dtype=np.float64)
    hi = a * np.asarray(upper, dtype=np.float64)
    fs = GeneralizedSimplex(b, np.minimum(lo, hi), np.maximum(lo, hi))
    scaling = Rescaling(a)
    if Q is None:
        return fs, scaling
    inv = 1.0 / a
    Qa = np.asarray(Q.array if isinstance(Q, DenseSymmetricMatrix) else Q, dtype=np.float64)
    Qs = inv[:, None] * Qa * inv[None, :]
    return QpProblem(DenseSymmetricMatrix(Qs), inv * np.asarray(c, dtype=np.float64), fs), scaling
