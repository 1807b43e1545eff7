"""Bottleneck distance between persistence diagrams.

Cost of a partial matching: matched points pay max(|b - b'|, |d - d'|),
unmatched points pay (d - b) / 2. With infinite deaths, inf - inf counts as 0
and finite - inf as inf, so essential points can only be matched to essential
points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

INF = math.inf


class MatchingError(ValueError):
    pass


def _points(D):
    pts = getattr(D, "points", D)
    return [(float(b), float(d)) for b, d in pts]


def _gap(x, y):
    if math.isinf(x) and math.isinf(y):
        return 0.0
    return abs(x - y)


def pair_cost(p, q) -> float:
    return max(_gap(p[0], q[0]), _gap(p[1], q[1]))


def unmatched_cost(p) -> float:
    return (p[1] - p[0]) / 2


@dataclass(frozen=True)
class PartialMatching:
    """Bijection between some points of one diagram and some of another."""
    matched: frozenset

    def __post_init__(self):
        pairs = frozenset((int(a), int(b)) for a, b in self.matched)
        left = [a for a, _ in pairs]
        right = [b for _, b in pairs]
        if len(set(left)) != len(left) or len(set(right)) != len(right):
            raise MatchingError("an index is matched twice")
        object.__setattr__(self, "matched", pairs)


def matching_cost(D, D2, m) -> float:
    A, B = _points(D), _points(D2)
    if not isinstance(m, PartialMatching):
        m = PartialMatching(frozenset(m))
    cost = 0.0
    for a, b in m.matched:
        if not (0 <= a < len(A) and 0 <= b < len(B)):
            raise MatchingError(f"matched pair ({a}, {b}) out of range")
        cost = max(cost, pair_cost(A[a], B[b]))
    ma = {a for a, _ in m.matched}
    mb = {b for _, b in m.matched}
    for i, p in enumerate(A):
        if i not in ma:
            cost = max(cost, unmatched_cost(p))
    for j, q in enumerate(B):
        if j not in mb:
            cost = max(cost, unmatched_cost(q))
    return cost


def bottleneck_bruteforce(D, D2, size_cap: int = 6) -> float:
    """Minimum matching cost over every partial matching (tiny diagrams only)."""
    A, B = _points(D), _points(D2)
    if len(A) > size_cap or len(B) > size_cap:
        raise MatchingError(f"brute force limited to {size_cap} points per diagram, got {len(A)} and {len(B)}")
    ua = [unmatched_cost(p) for p in A]
    ub = [unmatched_cost(q) for q in B]
    pc = [[pair_cost(p, q) for q in B] for p in A]
    best = INF
    used = [False] * len(B)

    def go(i, acc):
        nonlocal best
        if acc >= best and best < INF:
            return
        if i == len(A):
            rest = max((ub[j] for j in range(len(B)) if not used[j]), default=0.0)
            best = min(best, max(acc, rest))
            return
        go(i + 1, max(acc, ua[i]))
        for j in range(len(B)):
            if not used[j]:
                used[j] = True
                go(i + 1, max(acc, pc[i][j]))
                used[j] = False

    go(0, 0.0)
    return best


def _feasible(pc, ua, ub, c) -> bool:
    """Perfect matching at threshold c on points plus diagonal copies.

    Left side: A then one diagonal copy per B point. Right side: B then one
    diagonal copy per A point.
    """
    na, nb = len(ua), len(ub)
    size = na + nb
    rows, cols = [], []
    ii, jj = np.nonzero(pc <= c)
    rows.extend(ii.tolist())
    cols.extend(jj.tolist())
    for i in np.flatnonzero(ua <= c).tolist():
        rows.append(i)
        cols.append(nb + i)
    for j in np.flatnonzero(ub <= c).tolist():
        rows.append(na + j)
        cols.append(j)
    if na and nb:
        dj, di = np.meshgrid(np.arange(nb), np.arange(na), indexing="ij")
        rows.extend((na + dj).ravel().tolist())
        cols.extend((nb + di).ravel().tolist())
    if size == 0:
        return True
    g = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(size, size))
    match = maximum_bipartite_matching(g, perm_type="column")
    return bool(np.all(match >= 0))


def bottleneck(D, D2) -> float:
    """Exact bottleneck distance by binary search over candidate costs."""
    A, B = _points(D), _points(D2)
    if sum(math.isinf(d) for _, d in A) != sum(math.isinf(d) for _, d in B):
        return INF
    ua = np.array([unmatched_cost(p) for p in A])
    ub = np.array([unmatched_cost(q) for q in B])
    pc = np.array([[pair_cost(p, q) for q in B] for p in A]).reshape(len(A), len(B))
    cand = np.concatenate([[0.0], ua, ub, pc.ravel()])
    cand = np.unique(cand[np.isfinite(cand)])
    lo, hi = 0, len(cand) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(pc, ua, ub, cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])
