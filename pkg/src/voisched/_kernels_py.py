"""Pure-Python versions of the hot kernels.

Every function here has a compiled twin in ``_kernels.pyx`` with the same
signature and bit-identical results. The package imports the compiled one
when it is available (see ``voisched.kernels``).
"""
from __future__ import annotations

import math

import numpy as np

TIE_EPS = 1e-12

FIFO, VOI_ONLY, CROSS_SENSOR, EST = 0, 1, 2, 3


def _tol(ref):
    return TIE_EPS * max(1.0, abs(ref))


def qkp_objective(p, q, chosen):
    """Objective of ``chosen`` summed in canonical (ascending index) order."""
    idx = sorted(chosen)
    total = 0.0
    for i in idx:
        total += p[i]
    for a in range(len(idx)):
        i = idx[a]
        for b in range(a + 1, len(idx)):
            qij = q[i, idx[b]]
            if qij:
                total -= qij
    return total


def _better(val, size, members, best_val, best_size, best_members):
    tol = _tol(best_val)
    if val > best_val + tol:
        return True
    if val < best_val - tol:
        return False
    if size != best_size:
        return size < best_size
    return sorted(members) < sorted(best_members)


def qkp_exact(p, q, sizes, budget):
    """Depth-first branch and bound. Returns (chosen, objective)."""
    n = len(p)
    order = sorted(range(n), key=lambda i: (-p[i] / sizes[i], i))
    contrib = [0.0] * n
    members = []
    best = {"val": 0.0, "size": 0, "members": []}

    def bound(pos, val, room):
        cands = []
        for k in range(pos, n):
            i = order[k]
            m = p[i] - contrib[i]
            if m > 0:
                cands.append((m / sizes[i], m, sizes[i]))
        cands.sort(reverse=True)
        extra = 0.0
        for _, m, s in cands:
            if s <= room:
                extra += m
                room -= s
            else:
                extra += m * room / s
                break
        return val + extra

    def visit(pos, val, used):
        if val >= best["val"] - 1e-9 * max(1.0, abs(best["val"])):
            exact = qkp_objective(p, q, members)
            if _better(exact, used, members, best["val"], best["size"], best["members"]):
                best["val"], best["size"], best["members"] = exact, used, list(members)
        if pos == n:
            return
        if bound(pos, val, budget - used) < best["val"] - _tol(best["val"]):
            return
        i = order[pos]
        m = p[i] - contrib[i]
        if m > 0 and used + sizes[i] <= budget:
            members.append(i)
            for j in range(n):
                contrib[j] += q[j, i]
            visit(pos + 1, val + m, used + sizes[i])
            for j in range(n):
                contrib[j] -= q[j, i]
            members.pop()
        visit(pos + 1, val, used)

    visit(0, 0.0, 0)
    return sorted(best["members"]), best["val"]


def qkp_greedy(p, q, sizes, budget):
    n = len(p)
    contrib = [0.0] * n
    taken = [False] * n
    room = budget
    chosen = []
    while True:
        pick = -1
        pick_d = 0.0
        for i in range(n):
            if taken[i] or sizes[i] > room:
                continue
            m = p[i] - contrib[i]
            if m <= 0:
                continue
            d = m / sizes[i]
            if pick < 0 or d > pick_d:
                pick, pick_d = i, d
        if pick < 0:
            break
        taken[pick] = True
        chosen.append(pick)
        room -= sizes[pick]
        for j in range(n):
            contrib[j] += q[j, pick]
    return sorted(chosen)


def qkp_local_search(p, q, sizes, budget, chosen, max_iters):
    n = len(p)
    inside = [False] * n
    contrib = [0.0] * n
    used = 0
    for i in chosen:
        inside[i] = True
        used += sizes[i]
        for j in range(n):
            contrib[j] += q[j, i]
    for _ in range(max_iters):
        best_delta = TIE_EPS
        move = None
        for i in range(n):
            if not inside[i] and used + sizes[i] <= budget:
                delta = p[i] - contrib[i]
                if delta > best_delta:
                    best_delta, move = delta, (-1, i)
        for i in range(n):
            if inside[i]:
                delta = contrib[i] - p[i]
                if delta > best_delta:
                    best_delta, move = delta, (i, -1)
        for i in range(n):
            if not inside[i]:
                continue
            loss = p[i] - contrib[i]
            for k in range(n):
                if inside[k] or used - sizes[i] + sizes[k] > budget:
                    continue
                delta = p[k] - contrib[k] + q[i, k] - loss
                if delta > best_delta:
                    best_delta, move = delta, (i, k)
        if move is None:
            break
        out, into = move
        if out >= 0:
            inside[out] = False
            used -= sizes[out]
            for j in range(n):
                contrib[j] -= q[j, out]
        if into >= 0:
            inside[into] = True
            used += sizes[into]
            for j in range(n):
                contrib[j] += q[j, into]
    return [i for i in range(n) if inside[i]]


def reflect_unit(y):
    while y < 0.0 or y > 1.0:
        if y < 0.0:
            y = -y
        else:
            y = 2.0 - y
    return y


def reflected_walk(x0, z, sigma):
    """Trajectory of shape (len(z) + 1, n): row 0 is ``x0``."""
    steps, n = z.shape
    out = np.empty((steps + 1, n))
    out[0] = x0
    x = [float(v) for v in x0]
    for k in range(steps):
        row = z[k]
        for i in range(n):
            x[i] = reflect_unit(x[i] + sigma * row[i])
        out[k + 1] = x
    return out


def _logistic(zv):
    if zv >= 0:
        return 1.0 / (1.0 + math.exp(-zv))
    e = math.exp(zv)
    return e / (1.0 + e)


def scalar_tick_run(
    traj,
    kind,
    capacity_bps,
    tick_s,
    sample_bits,
    intrinsic,
    gain_sigma,
    center_sigmas,
    sharpness,
    exact_threshold,
    max_iters,
):
    """Run one scheduler over a scalar-sensor trajectory with a fluid link.

    Specialised for equal-size samples, no cross-sensor correlation, a
    one-period admission horizon and an oracle capacity estimate. The queue
    drains within each tick (up to rounding) because the budget never
    exceeds one tick of capacity. ``capacity_bps = inf`` gives the
    zero-delay reference run.

    Returns (sensor, gen_tick, time, sample) arrays of deliveries.
    """
    ticks, n = traj.shape
    infinite = math.isinf(capacity_bps)
    if infinite:
        budget = n * sample_bits
    else:
        budget = int(math.floor(capacity_bps * tick_s * 1.0 + 1e-9))
    cap = budget // sample_bits
    sizes = [sample_bits] * n
    zeros = np.zeros((n, n))
    last = [math.nan] * n
    seen = [False] * n
    out_s, out_k, out_t, out_v = [], [], [], []
    p = [0.0] * n
    link_free = 0.0
    for k in range(ticks):
        now = k * tick_s
        rot = k % n
        row = traj[k]
        if cap <= 0:
            continue
        if kind == FIFO:
            plan = [(pos + rot) % n for pos in range(min(cap, n))]
        else:
            for pos in range(n):
                sid = (pos + rot) % n
                if kind == EST and seen[sid]:
                    d = abs(row[sid] - last[sid])
                    g = _logistic(sharpness * (d - center_sigmas * gain_sigma) / gain_sigma)
                    p[pos] = intrinsic[sid] * g
                else:
                    p[pos] = intrinsic[sid] * 1.0
            if n <= exact_threshold:
                chosen, _ = qkp_exact(p, zeros, sizes, budget)
            else:
                chosen = qkp_local_search(
                    p, zeros, sizes, budget, qkp_greedy(p, zeros, sizes, budget), max_iters
                )
            chosen.sort(key=lambda pos: (-(p[pos] / sizes[pos]), pos))
            plan = [(pos + rot) % n for pos in chosen]
        # a sample may finish a hair past the tick boundary
        t = max(now, link_free)
        for sid in plan:
            if not infinite:
                t = t + sample_bits / capacity_bps
            seen[sid] = True
            last[sid] = row[sid]
            out_s.append(sid)
            out_k.append(k)
            out_t.append(t)
            out_v.append(row[sid])
        link_free = t
    return (
        np.array(out_s, dtype=np.int64),
        np.array(out_k, dtype=np.int64),
        np.array(out_t, dtype=float),
        np.array(out_v, dtype=float),
    )
