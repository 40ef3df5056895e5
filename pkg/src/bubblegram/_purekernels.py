"""Pure-Python implementations of the hot kernels.

Same signatures as the compiled ``_ckernels`` module; used when the extension
is not built or when ``BUBBLEGRAM_PURE=1``.
"""
from __future__ import annotations


def pack_ints(values):
    return list(values)


def pack_bytes(values):
    return bytes(values)


def pack_contexts(rows, k):
    return [tuple(r) for r in rows]


def earley_recognize(rule_lhs, rule_off, items, nt_off, nt_rules, start, sets, n_alpha, text):
    """Earley recognition over an integer-encoded grammar without epsilon rules.

    Items >= 0 are nonterminal ids; item ``-s-1`` is the terminal character set
    ``s``, whose membership row is ``sets[s*n_alpha:(s+1)*n_alpha]``.
    """
    n = len(text)
    if n == 0:
        return False
    chart: list[list[tuple[int, int, int]]] = [[] for _ in range(n + 1)]
    seen: list[set] = [set() for _ in range(n + 1)]
    waiters: list[dict[int, list[tuple[int, int, int]]]] = [{} for _ in range(n + 1)]

    for k in range(nt_off[start], nt_off[start + 1]):
        st = (nt_rules[k], 0, 0)
        chart[0].append(st)
        seen[0].add(st)

    for i in range(n + 1):
        states = chart[i]
        seen_i = seen[i]
        wait_i = waiters[i]
        c = text[i] if i < n else -1
        j = 0
        while j < len(states):
            st = states[j]
            j += 1
            r, dot, origin = st
            pos = rule_off[r] + dot
            if pos == rule_off[r + 1]:
                lhs = rule_lhs[r]
                if i == n and origin == 0 and lhs == start:
                    return True
                for r2, d2, o2 in waiters[origin].get(lhs, ()):
                    nxt = (r2, d2 + 1, o2)
                    if nxt not in seen_i:
                        seen_i.add(nxt)
                        states.append(nxt)
                continue
            item = items[pos]
            if item >= 0:
                waiting = wait_i.get(item)
                if waiting is None:
                    wait_i[item] = [st]
                    for k in range(nt_off[item], nt_off[item + 1]):
                        pred = (nt_rules[k], 0, i)
                        if pred not in seen_i:
                            seen_i.add(pred)
                            states.append(pred)
                else:
                    waiting.append(st)
            elif c >= 0 and sets[(-item - 1) * n_alpha + c]:
                nxt = (r, dot + 1, origin)
                if nxt not in seen[i + 1]:
                    seen[i + 1].add(nxt)
                    chart[i + 1].append(nxt)
    return False


def _tuple_sim(a, b, k):
    # scaled by 2**(k+1): equal tuples -> 2**k, else sum of 2**(k-1-i) over matches
    if a == b:
        return 1 << k
    s = 0
    for i in range(k):
        if a[i] == b[i]:
            s += 1 << (k - 1 - i)
    return s


def set_sim(ctx, k, a_lo, a_hi, b_lo, b_hi):
    """Max scaled context similarity between context rows [a_lo,a_hi) and [b_lo,b_hi)."""
    best = 0
    top = 1 << (k + 1)
    for x in range(a_lo, a_hi):
        cx = ctx[x]
        lx, rx = cx[:k], cx[k:]
        for y in range(b_lo, b_hi):
            cy = ctx[y]
            s = _tuple_sim(lx, cy[:k], k) + _tuple_sim(rx, cy[k:], k)
            if s > best:
                best = s
                if best == top:
                    return best
    return best


def best_sims(ctx, offsets, queries, pool, k):
    """For each query set, the max set similarity against any set in ``pool``."""
    out = []
    for q in queries:
        best = 0
        for p in pool:
            s = set_sim(ctx, k, offsets[q], offsets[q + 1], offsets[p], offsets[p + 1])
            if s > best:
                best = s
        out.append(best)
    return out


def pair_sims(ctx, offsets, a, b, k):
    return [
        set_sim(ctx, k, offsets[x], offsets[x + 1], offsets[y], offsets[y + 1])
        for x, y in zip(a, b)
    ]
