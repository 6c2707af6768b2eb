"""Brute-force reference for copower normal forms.

Terms are plain tuples, independent of the library: ``("leaf", b, x)`` or
``(sym, child, ...)``.  :func:`normal_forms` follows every rewrite at every
position, so it sees every rewrite order.
"""

import hashlib
import itertools


def all_terms(symbols, leaves, max_depth):
    """Every term of depth <= max_depth; ``symbols`` is a list of (name, arity)."""
    level = [("leaf", b, x) for b, x in leaves]
    for _ in range(max_depth):
        bigger = [("leaf", b, x) for b, x in leaves]
        for sym, n in symbols:
            for kids in itertools.product(level, repeat=n):
                bigger.append((sym,) + kids)
        level = bigger
    return level


def _successors(t, ops):
    if t[0] == "leaf":
        return
    kids = t[1:]
    if all(k[0] == "leaf" for k in kids) and len({k[1] for k in kids}) == 1:
        yield ("leaf", kids[0][1], ops[t[0]](tuple(k[2] for k in kids)))
    for i, k in enumerate(kids):
        for s in _successors(k, ops):
            yield t[: i + 1] + (s,) + t[i + 2 :]


def normal_forms(t, ops, memo):
    """Set of normal forms reachable from ``t`` by any sequence of rewrites."""
    r = memo.get(t)
    if r is None:
        nxt = list(_successors(t, ops))
        if not nxt:
            r = frozenset([t])
        else:
            r = frozenset().union(*(normal_forms(s, ops, memo) for s in nxt))
        memo[t] = r
    return r


def digest(pairs):
    h = hashlib.sha256()
    for a, b in sorted(pairs, key=repr):
        h.update(repr((a, b)).encode())
    return h.hexdigest()[:16]
