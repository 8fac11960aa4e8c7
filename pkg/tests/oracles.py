"""Independent reference solutions used by the tests."""

from __future__ import annotations

import itertools
import math

import numpy as np


def enumerate_qp(H, g, nonneg, fixed=(), fixed_values=()):
    """Global minimiser of a strictly convex bound-constrained QP by brute force.

    Every subset of the bounded variables is pinned at zero, the remaining
    equality-constrained problem is solved directly, and the best feasible
    candidate wins. Exponential in ``len(nonneg)``; for tiny problems only.
    """
    H = np.asarray(H, float)
    g = np.asarray(g, float)
    n = len(g)
    fixed = np.asarray(fixed, int)
    fv = np.asarray(fixed_values, float)
    nonneg = [i for i in nonneg if i not in set(fixed.tolist())]
    best_x, best_f = None, math.inf
    for r in range(len(nonneg) + 1):
        for zero in itertools.combinations(nonneg, r):
            x = np.zeros(n)
            x[fixed] = fv
            pinned = np.zeros(n, bool)
            pinned[fixed] = True
            pinned[list(zero)] = True
            free = np.flatnonzero(~pinned)
            if free.size:
                rhs = -(g[free] + H[np.ix_(free, pinned)] @ x[pinned])
                x[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
            if any(x[i] < -1e-12 for i in nonneg):
                continue
            f = 0.5 * x @ H @ x + g @ x
            if f < best_f:
                best_x, best_f = x, f
    return best_x, best_f


def slip_minimiser(j, pi_prev, zeta, kT, kH, sigma):
    """argmin_pi  zeta kT/2 (j - pi)^2 + kH/2 pi^2 + sigma |pi - pi_prev|  (scalar)."""
    a = zeta * kT + kH
    force = zeta * kT * (j - pi_prev) - kH * pi_prev
    if abs(force) <= sigma:
        return pi_prev
    return (zeta * kT * j - math.copysign(sigma, force)) / a


def series_debond_time(jc, k_bulk, k_spring, velocity):
    """Time at which a bar of axial stiffness k_bulk in series with a spring opens the spring by jc."""
    return jc * (k_bulk + k_spring) / (k_bulk * velocity)
