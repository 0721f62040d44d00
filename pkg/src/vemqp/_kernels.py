"""Compiled inner loops."""
import numpy as np
from numba import njit

RUNNING = 0
CONVERGED = 1
DEGENERATE = 2
NONPOSITIVE = 3
STALLED = 4


@njit(cache=True)
def vem_steps(Q, x, g, lower, upper, max_steps, gap_stop, btol, dq_out):
    """Run up to ``max_steps`` vertex exchanges in place on (x, g).

    Returns (steps_taken, status, gap, s, t). When ``dq_out`` is nonempty the
    exact objective change of step k is written to dq_out[k].
    """
    n = x.shape[0]
    record = dq_out.shape[0] > 0
    gap = np.nan
    s = -1
    t = -1
    for k in range(max_steps):
        s = -1
        t = -1
        gs = -np.inf
        gt = np.inf
        for i in range(n):
            gi = g[i]
            xi = x[i]
            if xi > lower[i] + btol and gi > gs:
                gs = gi
                s = i
            if xi < upper[i] - btol and gi < gt:
                gt = gi
                t = i
        if s < 0 or t < 0:
            return k, DEGENERATE, gap, s, t
        gap = gs - gt
        if gap <= gap_stop:
            return k, CONVERGED, gap, s, t
        curv = Q[s, s] + Q[t, t] - 2.0 * Q[s, t]
        if curv <= 0.0:
            return k, NONPOSITIVE, gap, s, t
        room_s = x[s] - lower[s]
        room_t = upper[t] - x[t]
        eta_max = min(room_s, room_t)
        eta = gap / curv
        xs_old = x[s]
        xt_old = x[t]
        if eta >= eta_max:
            eta = eta_max
            x[s] = lower[s] if room_s == eta_max else xs_old - eta
            x[t] = upper[t] if room_t == eta_max else xt_old + eta
        else:
            x[s] = xs_old - eta
            x[t] = xt_old + eta
        ds = x[s] - xs_old
        dt = x[t] - xt_old
        if ds == 0.0 and dt == 0.0:
            return k, STALLED, gap, s, t
        if record:
            dq_out[k] = (
                g[s] * ds
                + g[t] * dt
                + 0.5 * (Q[s, s] * ds * ds + 2.0 * Q[s, t] * ds * dt + Q[t, t] * dt * dt)
            )
        for i in range(n):
            g[i] += dt * Q[t, i] + ds * Q[s, i]
    return max_steps, RUNNING, gap, s, t
