# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
# distutils: language = c++
"""Compiled hot kernels: Earley recognition and context-set similarity.

Mirrors ``_purekernels`` exactly; inputs are flat int buffers.
"""
from libcpp.vector cimport vector
from libcpp.unordered_set cimport unordered_set
from array import array

ctypedef long long i64


cdef struct State:
    int rule
    int dot
    int origin


def pack_ints(values):
    return array("i", values)


def pack_bytes(values):
    return array("B", values)


def pack_contexts(rows, int k):
    flat = array("i")
    for row in rows:
        flat.extend(row)
    return flat


cdef inline i64 _key(int rule, int dot, int origin, int n1, int max_rhs):
    return (<i64>rule * (max_rhs + 1) + dot) * n1 + origin


def earley_recognize(const int[::1] rule_lhs, const int[::1] rule_off, const int[::1] items,
                     const int[::1] nt_off, const int[::1] nt_rules, int start,
                     const unsigned char[::1] sets, int n_alpha, const int[::1] text):
    cdef int n = text.shape[0]
    if n == 0:
        return False
    cdef int n_nt = nt_off.shape[0] - 1
    cdef int n_rules = rule_lhs.shape[0]
    cdef int n1 = n + 1
    cdef int max_rhs = 0
    cdef int r, i, j, k, dot, origin, pos, item, lhs, c, w
    for r in range(n_rules):
        if rule_off[r + 1] - rule_off[r] > max_rhs:
            max_rhs = rule_off[r + 1] - rule_off[r]

    cdef vector[vector[State]] chart = vector[vector[State]](n1)
    cdef vector[unordered_set[i64]] seen = vector[unordered_set[i64]](n1)
    # waiters[i * n_nt + nt] -> states in chart[i] whose next item is nt
    cdef vector[vector[State]] waiters = vector[vector[State]](<size_t>n1 * n_nt)
    cdef vector[char] predicted = vector[char](n_nt)
    cdef State st, nxt
    cdef i64 key

    for k in range(nt_off[start], nt_off[start + 1]):
        st.rule = nt_rules[k]
        st.dot = 0
        st.origin = 0
        chart[0].push_back(st)
        seen[0].insert(_key(st.rule, 0, 0, n1, max_rhs))

    for i in range(n1):
        for k in range(n_nt):
            predicted[k] = 0
        c = text[i] if i < n else -1
        j = 0
        while j < <int>chart[i].size():
            st = chart[i][j]
            j += 1
            r = st.rule
            dot = st.dot
            origin = st.origin
            pos = rule_off[r] + dot
            if pos == rule_off[r + 1]:
                lhs = rule_lhs[r]
                if i == n and origin == 0 and lhs == start:
                    return True
                w = origin * n_nt + lhs
                for k in range(<int>waiters[w].size()):
                    nxt = waiters[w][k]
                    nxt.dot += 1
                    key = _key(nxt.rule, nxt.dot, nxt.origin, n1, max_rhs)
                    if seen[i].find(key) == seen[i].end():
                        seen[i].insert(key)
                        chart[i].push_back(nxt)
                continue
            item = items[pos]
            if item >= 0:
                waiters[i * n_nt + item].push_back(st)
                if not predicted[item]:
                    predicted[item] = 1
                    for k in range(nt_off[item], nt_off[item + 1]):
                        nxt.rule = nt_rules[k]
                        nxt.dot = 0
                        nxt.origin = i
                        key = _key(nxt.rule, 0, i, n1, max_rhs)
                        if seen[i].find(key) == seen[i].end():
                            seen[i].insert(key)
                            chart[i].push_back(nxt)
            elif c >= 0 and sets[(-item - 1) * n_alpha + c]:
                nxt.rule = r
                nxt.dot = dot + 1
                nxt.origin = origin
                key = _key(r, dot + 1, origin, n1, max_rhs)
                if seen[i + 1].find(key) == seen[i + 1].end():
                    seen[i + 1].insert(key)
                    chart[i + 1].push_back(nxt)
    return False


cdef inline long _tuple_sim(const int[::1] ctx, int a, int b, int k) nogil:
    cdef int i
    cdef long s = 0
    cdef bint equal = True
    for i in range(k):
        if ctx[a + i] == ctx[b + i]:
            s += 1 << (k - 1 - i)
        else:
            equal = False
    if equal:
        return 1 << k
    return s


cdef long _set_sim(const int[::1] ctx, int k, int a_lo, int a_hi, int b_lo, int b_hi) nogil:
    cdef long best = 0
    cdef long top = 1 << (k + 1)
    cdef long s
    cdef int x, y, w = 2 * k
    for x in range(a_lo, a_hi):
        for y in range(b_lo, b_hi):
            s = _tuple_sim(ctx, x * w, y * w, k) + _tuple_sim(ctx, x * w + k, y * w + k, k)
            if s > best:
                best = s
                if best == top:
                    return best
    return best


def set_sim(const int[::1] ctx, int k, int a_lo, int a_hi, int b_lo, int b_hi):
    return _set_sim(ctx, k, a_lo, a_hi, b_lo, b_hi)


def best_sims(const int[::1] ctx, const int[::1] offsets, const int[::1] queries,
              const int[::1] pool, int k):
    cdef int nq = queries.shape[0]
    cdef int np_ = pool.shape[0]
    cdef int i, j, q, p
    cdef long best, s
    out = [0] * nq
    for i in range(nq):
        q = queries[i]
        best = 0
        with nogil:
            for j in range(np_):
                p = pool[j]
                s = _set_sim(ctx, k, offsets[q], offsets[q + 1], offsets[p], offsets[p + 1])
                if s > best:
                    best = s
        out[i] = best
    return out


def pair_sims(const int[::1] ctx, const int[::1] offsets, const int[::1] a,
              const int[::1] b, int k):
    cdef int n = a.shape[0]
    cdef int i, x, y
    out = [0] * n
    for i in range(n):
        x = a[i]
        y = b[i]
        out[i] = _set_sim(ctx, k, offsets[x], offsets[x + 1], offsets[y], offsets[y + 1])
    return out
