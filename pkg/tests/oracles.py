"""Independent reference implementations used only by the tests.

They are deliberately naive: full enumeration, textbook dynamic
programming, and the joint-value formula written out pair by pair.
"""
import itertools
import math

import numpy as np


def subset_objective(p, q, subset):
    idx = sorted(subset)
    total = 0.0
    for i in idx:
        total += p[i]
    for a, i in enumerate(idx):
        for j in idx[a + 1:]:
            if q[i][j]:
                total -= q[i][j]
    return total


def brute_force_qkp(p, q, sizes, budget):
    """Best objective over every feasible subset."""
    n = len(p)
    best = 0.0
    for r in range(1, n + 1):
        for subset in itertools.combinations(range(n), r):
            if sum(sizes[i] for i in subset) <= budget:
                best = max(best, subset_objective(p, q, subset))
    return best


def knapsack_dp(values, sizes, budget):
    """Classic 0/1 knapsack table over integer capacities."""
    best = [0.0] * (budget + 1)
    for v, s in zip(values, sizes):
        for cap in range(budget, s - 1, -1):
            cand = best[cap - s] + v
            if cand > best[cap]:
                best[cap] = cand
    return best[budget]


def joint_value(values, members, w):
    members = sorted(set(members))
    total = sum(values[i] for i in members)
    for i, j in itertools.combinations(members, 2):
        total -= w[i][j] * min(values[i], values[j])
    return total


def exp_gain(dt, tau):
    return 1.0 if math.isinf(dt) else 1.0 - math.exp(-dt / tau)


def logistic_gain(d, sigma, center, k):
    return 1.0 if math.isinf(d) else 1.0 / (1.0 + math.exp(-k * (d - center * sigma) / sigma))


def hold_qoe(trajectory, deliveries, jnd):
    """QoE by replaying deliveries tick by tick.

    ``deliveries`` holds (visible_tick, sensor, sample) in delivery order.
    """
    ticks, n = trajectory.shape
    est = trajectory[0].copy()
    pending = sorted(enumerate(deliveries), key=lambda x: (x[1][0], x[0]))
    k = 0
    hits = 0
    for t in range(ticks):
        while k < len(pending) and pending[k][1][0] <= t:
            _, (_, s, v) = pending[k]
            est[s] = v
            k += 1
        hits += int(np.sum(np.abs(trajectory[t] - est) < jnd))
    return hits / (ticks * n)
