"""Independent reference solvers used as test oracles.

None of these import the package's solvers; they only share plain arrays.
"""
import itertools

import numpy as np


def project_breakpoints(xbar, lower, upper, b):
    """Exact projection onto {sum x = b, l <= x <= u} by scanning the sorted
    breakpoints of the piecewise linear map y -> sum(clip(xbar + y)) - b."""
    xbar, lower, upper = (np.asarray(a, dtype=float) for a in (xbar, lower, upper))

    def slope_sum(y):
        return float(np.clip(xbar + y, lower, upper).sum()) - b

    knots = np.unique(np.concatenate([lower - xbar, upper - xbar]))
    vals = np.array([slope_sum(y) for y in knots])
    j = int(np.searchsorted(vals, 0.0, side="left"))
    if j < len(knots) and vals[j] == 0.0:
        y = knots[j]
    else:
        # Linear between knots j-1 and j.
        y0, y1 = knots[j - 1], knots[j]
        v0, v1 = vals[j - 1], vals[j]
        y = y0 + (0.0 - v0) * (y1 - y0) / (v1 - v0)
    return np.clip(xbar + y, lower, upper), y


def project_bisection(xbar, lower, upper, b, iters=200):
    """Projection by plain bisection on the dual variable."""
    xbar, lower, upper = (np.asarray(a, dtype=float) for a in (xbar, lower, upper))
    lo = float(np.min(lower - xbar)) - 1.0
    hi = float(np.max(upper - xbar)) + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.clip(xbar + mid, lower, upper).sum() < b:
            lo = mid
        else:
            hi = mid
    y = 0.5 * (lo + hi)
    return np.clip(xbar + y, lower, upper), y


def _pattern_guess(Q, c, lower, upper, b, steps=200, tol=1e-9):
    """Bound pattern (0 lower, 1 free, 2 upper) after a few projected gradient
    steps. Only orders the search; correctness never depends on it."""
    L = float(np.linalg.eigvalsh(Q)[-1])
    x, _ = project_bisection(np.zeros_like(c), lower, upper, b, iters=60)
    for _ in range(steps):
        x, _ = project_bisection(x - (Q @ x + c) / L, lower, upper, b, iters=60)
    return np.where(x <= lower + tol, 0, np.where(x >= upper - tol, 2, 1))


def _patterns_by_distance(guess):
    """Every pattern in {0,1,2}^n, ordered by Hamming distance from ``guess``."""
    n = guess.size
    for d in range(n + 1):
        for idx in itertools.combinations(range(n), d):
            alts = [[v for v in (0, 1, 2) if v != guess[i]] for i in idx]
            for choice in itertools.product(*alts):
                pattern = guess.copy()
                pattern[list(idx)] = choice
                yield pattern


def _kkt_for_pattern(Q, c, lower, upper, b, pattern, tol):
    free = pattern == 1
    if not free.any():
        return None
    x = np.where(pattern == 0, lower, upper).astype(float)
    F = np.flatnonzero(free)
    B = np.flatnonzero(~free)
    m = F.size
    K = np.zeros((m + 1, m + 1))
    K[:m, :m] = Q[np.ix_(F, F)]
    K[:m, m] = -1.0
    K[m, :m] = 1.0
    rhs = np.empty(m + 1)
    rhs[:m] = -c[F] - Q[np.ix_(F, B)] @ x[B]
    rhs[m] = b - x[B].sum()
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        return None
    x[F] = sol[:m]
    y = sol[m]
    if np.any(x[F] < lower[F] - tol) or np.any(x[F] > upper[F] + tol):
        return None
    z = Q @ x + c - y
    if np.any(z[pattern == 0] < -tol) or np.any(z[pattern == 2] > tol):
        return None
    return x


def qp_active_set_enumeration(Q, c, lower, upper, b, tol=1e-9):
    """Minimize 0.5 x'Qx + c'x over the generalized simplex by trying every
    assignment of each coordinate to {lower, free, upper}.

    For strictly convex Q the KKT point is unique, so the first assignment
    whose equality-constrained solution is feasible with correctly signed
    multipliers is the answer. Assignments are visited nearest-first from a
    rough guess of the pattern; the search is exhaustive.
    """
    Q, c, lower, upper = (np.asarray(a, dtype=float) for a in (Q, c, lower, upper))
    for pattern in _patterns_by_distance(_pattern_guess(Q, c, lower, upper, b)):
        x = _kkt_for_pattern(Q, c, lower, upper, b, pattern, tol)
        if x is not None:
            return x
    raise RuntimeError("no KKT point found")


def lp_vertex_enumeration(g, lower, upper, b):
    """min g'x over the generalized simplex by listing its vertices: all
    coordinates at a bound except at most one, which absorbs the budget."""
    g, lower, upper = (np.asarray(a, dtype=float) for a in (g, lower, upper))
    n = g.size
    best, best_x = np.inf, None
    for j in range(n):
        others = [i for i in range(n) if i != j]
        for bits in itertools.product((0, 1), repeat=n - 1):
            x = np.empty(n)
            for i, bit in zip(others, bits):
                x[i] = upper[i] if bit else lower[i]
            x[j] = b - x[others].sum()
            if lower[j] - 1e-12 <= x[j] <= upper[j] + 1e-12:
                val = float(g @ x)
                if val < best:
                    best, best_x = val, x
    return best_x, best


def golden_section(f, a, b, tol=1e-13, max_iter=500):
    """Minimizer of a unimodal scalar function on [a, b]."""
    r = (np.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = b - r * (b - a), a + r * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - r * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + r * (b - a)
            f2 = f(x2)
    return 0.5 * (a + b)


def central_difference_gradient(f, x, h=1e-6):
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def central_difference_jacobian(grad, x, h=1e-6):
    n = x.size
    J = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        J[:, i] = (grad(x + e) - grad(x - e)) / (2 * h)
    return J
