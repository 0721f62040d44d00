"""Exact linear minimization over the generalized simplex (continuous knapsack)."""
import numpy as np


def lp_minimize(gradient, fs):
    """Minimize gradient^T x over F by greedy fill.

    Start from x = lower and spend the budget b - sum(lower) on coordinates in
    ascending gradient order (stable, so ties go to the smaller index), each up
    to its upper bound. Returns (vertex, value).
    """
    fs.require_assumption()
    g = np.asarray(gradient, dtype=np.float64)
    if g.shape != (fs.n,):
        raise ValueError("gradient has wrong dimension")
    x = fs.lower.copy()
    budget = fs.b - float(fs.lower.sum())
    width = fs.upper - fs.lower
    order = np.argsort(g, kind="stable")
    filled = np.cumsum(width[order])
    # First position where the cumulative capacity covers the budget.
    j = int(np.searchsorted(filled, budget, side="left"))
    j = min(j, fs.n - 1)
    full = order[:j]
    x[full] = fs.upper[full]
    used = float(filled[j - 1]) if j > 0 else 0.0
    x[order[j]] = min(fs.upper[order[j]], fs.lower[order[j]] + (budget - used))
    return x, float(g @ x)


def lp_maximize(gradient, fs):
    """Maximize gradient^T x over F. Returns (vertex, value)."""
    x, value = lp_minimize(-np.asarray(gradient, dtype=np.float64), fs)
    return x, -value


def fw_gap(gradient, x, fs):
    """max over v in F of gradient^T (x - v), the Frank-Wolfe duality gap."""
    _, vmin = lp_minimize(gradient, fs)
    return float(np.asarray(gradient) @ np.asarray(x) - vmin)
