# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Mirrors ``_kernels_py`` operation for operation."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fabs, floor, isinf
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double TIE_EPS = 1e-12

FIFO, VOI_ONLY, CROSS_SENSOR, EST = 0, 1, 2, 3


cdef inline double _tol(double ref) nogil:
    cdef double a = fabs(ref)
    return TIE_EPS * (a if a > 1.0 else 1.0)


cdef double _objective(const double[::1] p, const double[:, ::1] q, int* members, int count) nogil:
    # members must be sorted ascending
    cdef double total = 0.0
    cdef int a, b, i
    cdef double qij
    for a in range(count):
        total += p[members[a]]
    for a in range(count):
        i = members[a]
        for b in range(a + 1, count):
            qij = q[i, members[b]]
            if qij != 0.0:
                total -= qij
    return total


def qkp_objective(p, q, chosen):
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    idx = sorted(chosen)
    cdef int count = len(idx)
    cdef int* buf = <int*>malloc((count + 1) * sizeof(int))
    cdef int a
    for a in range(count):
        buf[a] = idx[a]
    cdef double out = _objective(pv, qv, buf, count)
    free(buf)
    return out


cdef inline void _sorted_copy(int* src, int count, int* dst) nogil:
    cdef int a, b, key
    for a in range(count):
        dst[a] = src[a]
    for a in range(1, count):
        key = dst[a]
        b = a - 1
        while b >= 0 and dst[b] > key:
            dst[b + 1] = dst[b]
            b -= 1
        dst[b + 1] = key


cdef struct BnB:
    int n
    long long budget
    int* order
    double* contrib
    int* members
    int count
    double best_val
    long long best_size
    int* best_members
    int best_count
    int* scratch
    double* cand_d
    double* cand_m
    long long* cand_s


cdef bint _better(BnB* st, double val, long long size) nogil:
    cdef double tol = _tol(st.best_val)
    cdef int a, m
    if val > st.best_val + tol:
        return True
    if val < st.best_val - tol:
        return False
    if size != st.best_size:
        return size < st.best_size
    _sorted_copy(st.members, st.count, st.scratch)
    m = st.count if st.count < st.best_count else st.best_count
    for a in range(m):
        if st.scratch[a] != st.best_members[a]:
            return st.scratch[a] < st.best_members[a]
    return st.count < st.best_count


cdef double _bound(BnB* st, const double[::1] p, const long long[::1] sizes, int pos, double val,
                   long long room) nogil:
    cdef int k, i, c = 0, a, b
    cdef double m, extra = 0.0, td, tm
    cdef long long ts
    for k in range(pos, st.n):
        i = st.order[k]
        m = p[i] - st.contrib[i]
        if m > 0:
            st.cand_d[c] = m / sizes[i]
            st.cand_m[c] = m
            st.cand_s[c] = sizes[i]
            c += 1
    # descending by (d, m, s), same as sorting tuples in reverse
    for a in range(1, c):
        td = st.cand_d[a]
        tm = st.cand_m[a]
        ts = st.cand_s[a]
        b = a - 1
        while b >= 0 and (st.cand_d[b] < td or (st.cand_d[b] == td and (
                st.cand_m[b] < tm or (st.cand_m[b] == tm and st.cand_s[b] < ts)))):
            st.cand_d[b + 1] = st.cand_d[b]
            st.cand_m[b + 1] = st.cand_m[b]
            st.cand_s[b + 1] = st.cand_s[b]
            b -= 1
        st.cand_d[b + 1] = td
        st.cand_m[b + 1] = tm
        st.cand_s[b + 1] = ts
    for a in range(c):
        if st.cand_s[a] <= room:
            extra += st.cand_m[a]
            room -= st.cand_s[a]
        else:
            extra += st.cand_m[a] * room / st.cand_s[a]
            break
    return val + extra


cdef void _visit(BnB* st, const double[::1] p, const double[:, ::1] q, const long long[::1] sizes,
                 int pos, double val, long long used) nogil:
    cdef double exact, m, slack
    cdef int i, j, a
    slack = fabs(st.best_val)
    slack = 1e-9 * (slack if slack > 1.0 else 1.0)
    if val >= st.best_val - slack:
        _sorted_copy(st.members, st.count, st.scratch)
        exact = _objective(p, q, st.scratch, st.count)
        if _better(st, exact, used):
            st.best_val = exact
            st.best_size = used
            _sorted_copy(st.members, st.count, st.best_members)
            st.best_count = st.count
    if pos == st.n:
        return
    if _bound(st, p, sizes, pos, val, st.budget - used) < st.best_val - _tol(st.best_val):
        return
    i = st.order[pos]
    m = p[i] - st.contrib[i]
    if m > 0 and used + sizes[i] <= st.budget:
        st.members[st.count] = i
        st.count += 1
        for j in range(st.n):
            st.contrib[j] += q[j, i]
        _visit(st, p, q, sizes, pos + 1, val + m, used + sizes[i])
        for j in range(st.n):
            st.contrib[j] -= q[j, i]
        st.count -= 1
    _visit(st, p, q, sizes, pos + 1, val, used)


cdef tuple _exact_core(const double[::1] p, const double[:, ::1] q, const long long[::1] sizes, long long budget):
    cdef int n = p.shape[0]
    cdef BnB st
    cdef int a
    order = sorted(range(n), key=lambda i: (-p[i] / sizes[i], i))
    st.n = n
    st.budget = budget
    st.order = <int*>malloc((n + 1) * sizeof(int))
    st.contrib = <double*>malloc((n + 1) * sizeof(double))
    st.members = <int*>malloc((n + 1) * sizeof(int))
    st.best_members = <int*>malloc((n + 1) * sizeof(int))
    st.scratch = <int*>malloc((n + 1) * sizeof(int))
    st.cand_d = <double*>malloc((n + 1) * sizeof(double))
    st.cand_m = <double*>malloc((n + 1) * sizeof(double))
    st.cand_s = <long long*>malloc((n + 1) * sizeof(long long))
    try:
        for a in range(n):
            st.order[a] = order[a]
            st.contrib[a] = 0.0
        st.count = 0
        st.best_val = 0.0
        st.best_size = 0
        st.best_count = 0
        with nogil:
            _visit(&st, p, q, sizes, 0, 0.0, 0)
        chosen = [st.best_members[a] for a in range(st.best_count)]
        return chosen, st.best_val
    finally:
        free(st.order)
        free(st.contrib)
        free(st.members)
        free(st.best_members)
        free(st.scratch)
        free(st.cand_d)
        free(st.cand_m)
        free(st.cand_s)


def qkp_exact(p, q, sizes, budget):
    """Depth-first branch and bound. Returns (chosen, objective)."""
    return _exact_core(
        np.ascontiguousarray(p, dtype=np.float64),
        np.ascontiguousarray(q, dtype=np.float64),
        np.ascontiguousarray(sizes, dtype=np.int64),
        budget,
    )


cdef int _greedy(const double[::1] p, const double[:, ::1] q, const long long[::1] sizes, long long budget,
                 int* out, double* contrib, char* taken) nogil:
    cdef int n = p.shape[0]
    cdef int i, j, pick, count = 0
    cdef double m, d, pick_d
    cdef long long room = budget
    for i in range(n):
        contrib[i] = 0.0
        taken[i] = 0
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
                pick = i
                pick_d = d
        if pick < 0:
            break
        taken[pick] = 1
        out[count] = pick
        count += 1
        room -= sizes[pick]
        for j in range(n):
            contrib[j] += q[j, pick]
    return count


def qkp_greedy(p, q, sizes, budget):
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef const long long[::1] sv = np.ascontiguousarray(sizes, dtype=np.int64)
    cdef int n = pv.shape[0]
    cdef int* out = <int*>malloc((n + 1) * sizeof(int))
    cdef double* contrib = <double*>malloc((n + 1) * sizeof(double))
    cdef char* taken = <char*>malloc((n + 1) * sizeof(char))
    cdef int count
    try:
        count = _greedy(pv, qv, sv, budget, out, contrib, taken)
        return sorted([out[a] for a in range(count)])
    finally:
        free(out)
        free(contrib)
        free(taken)


cdef void _local_search(const double[::1] p, const double[:, ::1] q, const long long[::1] sizes,
                        long long budget, char* inside, double* contrib,
                        int max_iters) nogil:
    cdef int n = p.shape[0]
    cdef int i, j, k, it, out_i, into
    cdef long long used = 0
    cdef double best_delta, delta, loss
    for i in range(n):
        contrib[i] = 0.0
    for i in range(n):
        if inside[i]:
            used += sizes[i]
            for j in range(n):
                contrib[j] += q[j, i]
    for it in range(max_iters):
        best_delta = TIE_EPS
        out_i = -1
        into = -1
        for i in range(n):
            if not inside[i] and used + sizes[i] <= budget:
                delta = p[i] - contrib[i]
                if delta > best_delta:
                    best_delta = delta
                    out_i = -1
                    into = i
        for i in range(n):
            if inside[i]:
                delta = contrib[i] - p[i]
                if delta > best_delta:
                    best_delta = delta
                    out_i = i
                    into = -1
        for i in range(n):
            if not inside[i]:
                continue
            loss = p[i] - contrib[i]
            for k in range(n):
                if inside[k] or used - sizes[i] + sizes[k] > budget:
                    continue
                delta = p[k] - contrib[k] + q[i, k] - loss
                if delta > best_delta:
                    best_delta = delta
                    out_i = i
                    into = k
        if out_i < 0 and into < 0:
            break
        if out_i >= 0:
            inside[out_i] = 0
            used -= sizes[out_i]
            for j in range(n):
                contrib[j] -= q[j, out_i]
        if into >= 0:
            inside[into] = 1
            used += sizes[into]
            for j in range(n):
                contrib[j] += q[j, into]


def qkp_local_search(p, q, sizes, budget, chosen, max_iters):
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef const double[:, ::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef const long long[::1] sv = np.ascontiguousarray(sizes, dtype=np.int64)
    cdef int n = pv.shape[0]
    cdef char* inside = <char*>malloc((n + 1) * sizeof(char))
    cdef double* contrib = <double*>malloc((n + 1) * sizeof(double))
    cdef int i
    try:
        for i in range(n):
            inside[i] = 0
        for i in chosen:
            inside[i] = 1
        _local_search(pv, qv, sv, budget, inside, contrib, max_iters)
        return [i for i in range(n) if inside[i]]
    finally:
        free(inside)
        free(contrib)


cdef inline double reflect_unit_c(double y) nogil:
    while y < 0.0 or y > 1.0:
        if y < 0.0:
            y = -y
        else:
            y = 2.0 - y
    return y


def reflect_unit(double y):
    return reflect_unit_c(y)


def reflected_walk(x0, z, double sigma):
    """Trajectory of shape (len(z) + 1, n): row 0 is ``x0``."""
    cdef const double[:, ::1] zv = np.ascontiguousarray(z, dtype=np.float64)
    cdef Py_ssize_t steps = zv.shape[0], n = zv.shape[1], k, i
    out = np.empty((steps + 1, n))
    cdef double[:, ::1] ov = out
    cdef const double[::1] x0v = np.ascontiguousarray(x0, dtype=np.float64)
    for i in range(n):
        ov[0, i] = x0v[i]
    with nogil:
        for k in range(steps):
            for i in range(n):
                ov[k + 1, i] = reflect_unit_c(ov[k, i] + sigma * zv[k, i])
    return out


cdef inline double _logistic(double zv) nogil:
    cdef double e
    if zv >= 0:
        return 1.0 / (1.0 + exp(-zv))
    e = exp(zv)
    return e / (1.0 + e)


def scalar_tick_run(traj, int kind, double capacity_bps, double tick_s, long long sample_bits,
                    intrinsic, double gain_sigma, double center_sigmas, double sharpness,
                    int exact_threshold, int max_iters):
    """Run one scheduler over a scalar-sensor trajectory with a fluid link.

    See the pure-Python twin for the contract.
    """
    cdef const double[:, ::1] tv = np.ascontiguousarray(traj, dtype=np.float64)
    cdef const double[::1] iv = np.ascontiguousarray(intrinsic, dtype=np.float64)
    cdef Py_ssize_t ticks = tv.shape[0]
    cdef int n = tv.shape[1]
    cdef bint infinite = isinf(capacity_bps)
    cdef long long budget
    if infinite:
        budget = n * sample_bits
    else:
        budget = <long long>floor(capacity_bps * tick_s * 1.0 + 1e-9)
    cdef long long cap = budget // sample_bits
    cdef Py_ssize_t max_out = ticks * (cap if cap < n else n)
    if max_out < 0:
        max_out = 0
    out_s_arr = np.empty(max_out, dtype=np.int64)
    out_k_arr = np.empty(max_out, dtype=np.int64)
    out_t_arr = np.empty(max_out, dtype=np.float64)
    out_v_arr = np.empty(max_out, dtype=np.float64)
    cdef long long[::1] out_s = out_s_arr
    cdef long long[::1] out_k = out_k_arr
    cdef double[::1] out_t = out_t_arr
    cdef double[::1] out_v = out_v_arr

    p_arr = np.zeros(n)
    q_arr = np.zeros((n, n))
    s_arr = np.full(n, sample_bits, dtype=np.int64)
    cdef double[::1] p = p_arr
    cdef double[:, ::1] q = q_arr
    cdef long long[::1] sizes = s_arr
    cdef double* last = <double*>malloc(n * sizeof(double))
    cdef char* seen = <char*>malloc(n * sizeof(char))
    cdef int* picked = <int*>malloc((n + 1) * sizeof(int))
    cdef double* contrib = <double*>malloc((n + 1) * sizeof(double))
    cdef char* taken = <char*>malloc((n + 1) * sizeof(char))
    cdef Py_ssize_t k, w = 0
    cdef int pos, sid, rot, count, a, b, key
    cdef double now, t, d, g, da, db, link_free
    try:
        for pos in range(n):
            seen[pos] = 0
            last[pos] = 0.0
        link_free = 0.0
        for k in range(ticks):
            if cap <= 0:
                break
            now = k * tick_s
            rot = k % n
            if kind == 0:
                count = <int>(cap if cap < n else n)
                for pos in range(count):
                    picked[pos] = (pos + rot) % n
            else:
                for pos in range(n):
                    sid = (pos + rot) % n
                    if kind == 3 and seen[sid]:
                        d = fabs(tv[k, sid] - last[sid])
                        g = _logistic(sharpness * (d - center_sigmas * gain_sigma) / gain_sigma)
                        p[pos] = iv[sid] * g
                    else:
                        p[pos] = iv[sid] * 1.0
                if n <= exact_threshold:
                    chosen, _ = qkp_exact(p_arr, q_arr, s_arr, budget)
                    count = len(chosen)
                    for a in range(count):
                        picked[a] = chosen[a]
                else:
                    _greedy(p, q, sizes, budget, picked, contrib, taken)
                    _local_search(p, q, sizes, budget, taken, contrib, max_iters)
                    count = 0
                    for pos in range(n):
                        if taken[pos]:
                            picked[count] = pos
                            count += 1
                # order by descending density, ties by position
                for a in range(1, count):
                    key = picked[a]
                    da = p[key] / sizes[key]
                    b = a - 1
                    while b >= 0:
                        db = p[picked[b]] / sizes[picked[b]]
                        if db < da or (db == da and picked[b] > key):
                            picked[b + 1] = picked[b]
                            b -= 1
                        else:
                            break
                    picked[b + 1] = key
                for a in range(count):
                    picked[a] = (picked[a] + rot) % n
            # a sample may finish a hair past the tick boundary
            t = now if now > link_free else link_free
            for a in range(count):
                sid = picked[a]
                if not infinite:
                    t = t + sample_bits / capacity_bps
                seen[sid] = 1
                last[sid] = tv[k, sid]
                out_s[w] = sid
                out_k[w] = k
                out_t[w] = t
                out_v[w] = tv[k, sid]
                w += 1
            link_free = t
    finally:
        free(last)
        free(seen)
        free(picked)
        free(contrib)
        free(taken)
    return out_s_arr[:w].copy(), out_k_arr[:w].copy(), out_t_arr[:w].copy(), out_v_arr[:w].copy()
