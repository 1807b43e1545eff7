"""Filtered simplicial complexes and their builders.

A :class:`Filtration` keeps one array of simplices per dimension (rows are
strictly increasing vertex indices) plus one value per simplex. Inside a
dimension the rows are in filtration order; the global order is recovered by
sorting on (value, dimension, position), which places faces before cofaces
whenever face values do not exceed coface values.
"""
from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .metric import FiniteMetricSpace

DEFAULT_BUDGET = 10_000_000


class FiltrationError(ValueError):
    pass


class SimplexBudgetError(FiltrationError):
    pass


@lru_cache(maxsize=32)
def _binomials(n, k):
    """Table b[v, j] = C(v, j) for v <= n, j <= k, as int64 (read-only)."""
    b = np.zeros((n + 1, k + 1), dtype=np.int64)
    b[:, 0] = 1
    for v in range(1, n + 1):
        b[v, 1:] = b[v - 1, 1:] + b[v - 1, :-1]
    b.setflags(write=False)
    return b


def simplex_keys(rows: np.ndarray, n_vertices: int) -> np.ndarray:
    """Combinatorial-number-system key of each row: sum_i C(v_i, i + 1)."""
    rows = np.asarray(rows)
    if rows.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    width = rows.shape[1]
    b = _binomials(max(n_vertices, 1), max(width, 3))
    key = np.zeros(rows.shape[0], dtype=np.int64)
    for i in range(width):
        key += b[rows[:, i], i + 1]
    return key


def _index_dtype(n):
    return np.int16 if n < 2**15 else np.int32


class Filtration:
    def __init__(self, simplices: Sequence[np.ndarray], values: Sequence[np.ndarray],
                 n_vertices: int | None = None, vertex_labels=None, check: bool = True):
        if len(simplices) != len(values):
            raise FiltrationError("one value array per dimension is required")
        self.simplices = []
        self.values = []
        for k, (s, v) in enumerate(zip(simplices, values)):
            s = np.asarray(s).reshape(-1, k + 1)
            v = np.asarray(v, dtype=np.float64).reshape(-1)
            if s.shape[0] != v.shape[0]:
                raise FiltrationError(f"dimension {k}: {s.shape[0]} simplices but {v.shape[0]} values")
            self.simplices.append(s)
            self.values.append(v)
        if n_vertices is None:
            n_vertices = int(max((int(s.max()) + 1 for s in self.simplices if s.size), default=0))
        self.n_vertices = n_vertices
        self.vertex_labels = tuple(vertex_labels) if vertex_labels is not None else None
        self._keys = {}
        if check:
            self.check()

    # -- basic access --------------------------------------------------------
    @property
    def max_dim(self) -> int:
        return len(self.simplices) - 1

    def count(self, k: int) -> int:
        return self.simplices[k].shape[0] if 0 <= k <= self.max_dim else 0

    def __len__(self):
        return sum(s.shape[0] for s in self.simplices)

    def keys(self, k: int) -> np.ndarray:
        if k not in self._keys:
            self._keys[k] = simplex_keys(self.simplices[k], self.n_vertices)
        return self._keys[k]

    def _sorted_keys(self, k):
        if ("sorted", k) not in self._keys:
            keys = self.keys(k)
            order = np.argsort(keys, kind="stable")
            self._keys[("sorted", k)] = (order, keys[order])
        return self._keys[("sorted", k)]

    def positions(self, k: int, rows: np.ndarray) -> np.ndarray:
        """Within-dimension positions of the given k-simplices; -1 where absent."""
        order, sk = self._sorted_keys(k)
        q = simplex_keys(rows, self.n_vertices)
        pos = np.searchsorted(sk, q)
        pos_c = np.minimum(pos, max(len(sk) - 1, 0))
        found = (pos < len(sk)) & (sk[pos_c] == q) if len(sk) else np.zeros(len(q), dtype=bool)
        out = np.full(len(q), -1, dtype=np.int64)
        out[found] = order[pos_c[found]]
        return out

    def face_positions(self, k: int) -> np.ndarray:
        """(m_k, k+1) positions in dimension k-1 of the faces of each k-simplex.

        Column i is the face without vertex i; -1 marks a missing face.
        """
        rows = self.simplices[k]
        if rows.shape[0] == 0:
            return np.zeros((0, k + 1), dtype=np.int64)
        b = _binomials(max(self.n_vertices, 1), max(k + 1, 3))
        # dropping vertex j keeps C(v_i, i + 1) for i < j and shifts to C(v_i, i) for i > j
        lower = np.stack([b[rows[:, i], i + 1] for i in range(k + 1)], axis=1)
        upper = np.stack([b[rows[:, i], i] for i in range(k + 1)], axis=1)
        before = np.cumsum(lower, axis=1) - lower
        after = upper[:, ::-1].cumsum(axis=1)[:, ::-1] - upper
        qkeys = before + after
        order, sk = self._sorted_keys(k - 1)
        pos = np.searchsorted(sk, qkeys)
        pos_c = np.minimum(pos, max(len(sk) - 1, 0))
        found = (pos < len(sk)) & (sk[pos_c] == qkeys) if len(sk) else np.zeros(qkeys.shape, dtype=bool)
        return np.where(found, order[pos_c] if len(sk) else -1, -1)

    def global_order(self):
        """(dims, positions) of every simplex in the compatible total order."""
        dims = np.concatenate([np.full(s.shape[0], k) for k, s in enumerate(self.simplices)]) \
            if self.simplices else np.zeros(0, dtype=int)
        pos = np.concatenate([np.arange(s.shape[0]) for s in self.simplices]) \
            if self.simplices else np.zeros(0, dtype=int)
        vals = np.concatenate(self.values) if self.values else np.zeros(0)
        perm = np.lexsort((pos, dims, vals))
        return dims[perm], pos[perm]

    def ordered(self):
        """List of (simplex tuple, value) in the compatible total order."""
        dims, pos = self.global_order()
        return [(tuple(int(x) for x in self.simplices[d][p]), float(self.values[d][p]))
                for d, p in zip(dims.tolist(), pos.tolist())]

    def __iter__(self):
        return iter(self.ordered())

    def value_of(self, simplex) -> float:
        s = np.asarray([sorted(simplex)])
        k = s.shape[1] - 1
        if k > self.max_dim:
            raise KeyError(simplex)
        p = self.positions(k, s)[0]
        if p < 0:
            raise KeyError(simplex)
        return float(self.values[k][p])

    def sublevel(self, delta: float, max_dim: int | None = None):
        """Simplices with value <= delta (a static complex), as sorted tuples."""
        top = self.max_dim if max_dim is None else min(max_dim, self.max_dim)
        out = []
        for k in range(top + 1):
            mask = self.values[k] <= delta
            out.extend(tuple(int(x) for x in row) for row in self.simplices[k][mask])
        return out

    def all_values(self) -> np.ndarray:
        return np.unique(np.concatenate(self.values)) if self.values else np.zeros(0)

    # -- construction helpers -------------------------------------------------
    @classmethod
    def from_simplices(cls, items: Iterable, n_vertices: int | None = None, vertex_labels=None):
        """Build from (simplex, value) pairs listed in a compatible order.

        Raises FiltrationError when a simplex precedes one of its faces, when
        values decrease along the list, or when a face is missing.
        """
        items = [(tuple(sorted(int(x) for x in s)), float(v)) for s, v in items]
        check_compatible_order(items)
        top = max((len(s) - 1 for s, _ in items), default=-1)
        rows = [[] for _ in range(top + 1)]
        vals = [[] for _ in range(top + 1)]
        for s, v in items:
            rows[len(s) - 1].append(s)
            vals[len(s) - 1].append(v)
        simplices = [np.asarray(r, dtype=np.int64).reshape(-1, k + 1) for k, r in enumerate(rows)]
        return cls(simplices, vals, n_vertices=n_vertices, vertex_labels=vertex_labels)

    def check(self):
        """Validate rows, within-dimension order and face values."""
        for k, (s, v) in enumerate(zip(self.simplices, self.values)):
            if s.shape[0] == 0:
                continue
            if np.any(np.diff(v) < 0):
                raise FiltrationError(f"dimension {k}: values are not non-decreasing")
            if np.any(np.isnan(v)):
                raise FiltrationError(f"dimension {k}: NaN filtration value")
            if k > 0 and np.any(np.diff(s, axis=1) <= 0):
                raise FiltrationError(f"dimension {k}: simplex vertices must be strictly increasing")
            if s.min() < 0 or s.max() >= self.n_vertices:
                raise FiltrationError(f"dimension {k}: vertex index out of range")
            if len(np.unique(self.keys(k))) != s.shape[0]:
                raise FiltrationError(f"dimension {k}: duplicate simplex")
            if k == 0:
                continue
            for drop in range(k + 1):
                faces = np.delete(s, drop, axis=1)
                pos = self.positions(k - 1, faces)
                if np.any(pos < 0):
                    bad = s[np.argmax(pos < 0)]
                    raise FiltrationError(f"face of {tuple(int(x) for x in bad)} is missing")
                fv = self.values[k - 1][pos]
                if np.any(fv > v):
                    bad = s[np.argmax(fv > v)]
                    raise FiltrationError(f"face of {tuple(int(x) for x in bad)} has a larger value")
        return self

    def reordered(self, perms: Sequence[np.ndarray], check: bool = True) -> "Filtration":
        """Same simplices with each dimension permuted by ``perms[k]``."""
        return Filtration([s[p] for s, p in zip(self.simplices, perms)],
                          [v[p] for v, p in zip(self.values, perms)],
                          self.n_vertices, self.vertex_labels, check=check)

    def __repr__(self):
        counts = ", ".join(str(s.shape[0]) for s in self.simplices)
        return f"Filtration(max_dim={self.max_dim}, counts=[{counts}])"


def check_compatible_order(items):
    """Raise unless values never decrease and every face appears before its cofaces."""
    seen = set()
    last = -math.inf
    for pos, (s, v) in enumerate(items):
        if v < last:
            raise FiltrationError(f"position {pos}: value {v} after larger value {last}")
        last = v
        if len(s) != len(set(s)):
            raise FiltrationError(f"position {pos}: repeated vertex in {s}")
        if s in seen:
            raise FiltrationError(f"position {pos}: duplicate simplex {s}")
        if len(s) > 1:
            for face in combinations(s, len(s) - 1):
                if face not in seen:
                    raise FiltrationError(f"position {pos}: {s} comes before its face {face}")
        seen.add(s)


def _canonical(rows_lex, vals):
    """Stable sort by value of rows already in lex order: (value, lex) order."""
    order = np.argsort(vals, kind="stable")
    return rows_lex[order], vals[order]


def _count_simplices(n, max_dim):
    return sum(math.comb(n, k + 1) for k in range(max_dim + 1))


def _guard(n, max_dim, budget):
    if max_dim < 0:
        raise FiltrationError(f"max_dim must be >= 0, got {max_dim}")
    total = _count_simplices(n, max_dim)
    if total > budget:
        raise SimplexBudgetError(
            f"{total} simplices up to dimension {max_dim} on {n} points exceed the budget "
            f"of {budget}; use a smaller max dimension")


def _extend_lex(rows, n):
    """All (k+1)-subsets extending each lex-sorted k-subset by a larger vertex.

    Returns (parent index per new row, new vertex per new row); the result is
    again in lex order.
    """
    last = rows[:, -1].astype(np.int64)
    reps = n - 1 - last
    parent = np.repeat(np.arange(rows.shape[0]), reps)
    starts = np.repeat(last + 1 - np.concatenate(([0], np.cumsum(reps)[:-1])), reps)
    new = np.arange(parent.shape[0]) + starts
    return parent, new


def vr_filtration(space: FiniteMetricSpace, max_dim: int, budget: int = DEFAULT_BUDGET) -> Filtration:
    """Vietoris-Rips filtration: every simplex up to ``max_dim`` valued by its diameter."""
    n = space.n
    _guard(n, max_dim, budget)
    d = space.dist
    it = _index_dtype(n)
    lex = np.arange(n, dtype=it).reshape(-1, 1)
    lex_vals = np.zeros(n)
    simplices, values = [], []
    for k in range(max_dim + 1):
        if k > 0:
            parent, new = _extend_lex(lex, n)
            prev = lex[parent]
            vals = lex_vals[parent]
            for i in range(k):
                vals = np.maximum(vals, d[prev[:, i], new])
            lex = np.hstack([prev, new.astype(it).reshape(-1, 1)])
            lex_vals = vals
        s, v = _canonical(lex, lex_vals)
        simplices.append(s)
        values.append(v)
        if lex.shape[0] == 0:
            break
    while len(simplices) < max_dim + 1:
        simplices.append(np.zeros((0, len(simplices) + 1), dtype=it))
        values.append(np.zeros(0))
    return Filtration(simplices, values, n, space.labels, check=False)


def _full_simplex_rows(n, max_dim):
    it = _index_dtype(n)
    lex = np.arange(n, dtype=it).reshape(-1, 1)
    out = [lex]
    for k in range(1, max_dim + 1):
        if lex.shape[0] == 0:
            lex = np.zeros((0, k + 1), dtype=it)
        else:
            parent, new = _extend_lex(lex, n)
            lex = np.hstack([lex[parent], new.astype(it).reshape(-1, 1)])
        out.append(lex)
    return out


def _chunks(m, width, target=1 << 23):
    step = max(1, target // max(1, width))
    for a in range(0, m, step):
        yield a, min(m, a + step)


def cech_filtration(space: FiniteMetricSpace, max_dim: int, budget: int = DEFAULT_BUDGET) -> Filtration:
    """Intrinsic Cech filtration: f(s) = min over x in X of max over p in s of d(x, p)."""
    n = space.n
    _guard(n, max_dim, budget)
    d = space.dist
    simplices, values = [], []
    for rows in _full_simplex_rows(n, max_dim):
        vals = np.empty(rows.shape[0])
        for a, b in _chunks(rows.shape[0], n * rows.shape[1]):
            # (chunk, n): radius needed around each candidate centre
            radius = d[:, rows[a:b]].max(axis=2).T
            vals[a:b] = radius.min(axis=1)
        s, v = _canonical(rows, vals)
        simplices.append(s)
        values.append(v)
    return Filtration(simplices, values, n, space.labels, check=False)


def maxmin_landmarks(space: FiniteMetricSpace, count: int, seed: int = 0, start: int | None = None):
    """Greedy max-min landmark selection.

    The first landmark is ``start`` if given, otherwise drawn uniformly with
    ``seed``. Each next landmark maximises the distance to those already
    chosen; ties go to the smallest index.
    """
    n = space.n
    if not 1 <= count <= n:
        raise FiltrationError(f"landmark count must be in [1, {n}], got {count}")
    if start is None:
        start = int(np.random.default_rng(seed).integers(n))
    elif not 0 <= start < n:
        raise FiltrationError(f"start point {start} out of range")
    chosen = [start]
    near = space.dist[start].copy()
    taken = np.zeros(n, dtype=bool)
    taken[start] = True
    while len(chosen) < count:
        cand = np.where(taken, -np.inf, near)
        nxt = int(np.argmax(cand))
        chosen.append(nxt)
        taken[nxt] = True
        near = np.minimum(near, space.dist[nxt])
    return chosen


def witness_entry_values(space: FiniteMetricSpace, landmarks: Sequence[int], rows: np.ndarray) -> np.ndarray:
    """Smallest eps with an eps-witness for each landmark tuple (faces ignored).

    A point x witnesses {l_0..l_k} at eps_x = max(0, max_i d(x, l_i) - m_x),
    m_x being the (k+1)-th smallest distance from x to the landmark set.
    ``rows`` index into ``landmarks``.
    """
    dl = space.dist[:, np.asarray(landmarks)]
    k = rows.shape[1] - 1
    m_x = np.sort(dl, axis=1)[:, k]
    out = np.empty(rows.shape[0])
    for a, b in _chunks(rows.shape[0], dl.shape[0] * rows.shape[1]):
        far = dl[:, rows[a:b]].max(axis=2)            # (N, chunk)
        out[a:b] = np.maximum(far - m_x[:, None], 0.0).min(axis=0)
    return out


def witness_filtration(space: FiniteMetricSpace, landmarks: Sequence[int], max_dim: int,
                       budget: int = DEFAULT_BUDGET) -> Filtration:
    """Weak witness filtration on the landmark set.

    Vertex i of the result is ``landmarks[i]``. A simplex enters at the
    smallest eps for which it and all of its faces have an eps-witness.
    """
    landmarks = [int(x) for x in landmarks]
    if len(set(landmarks)) != len(landmarks):
        raise FiltrationError("duplicate landmarks")
    if not landmarks:
        raise FiltrationError("at least one landmark is required")
    if any(not 0 <= x < space.n for x in landmarks):
        raise FiltrationError("landmark index out of range")
    nl = len(landmarks)
    _guard(nl, max_dim, budget)
    labels = [space.labels[x] for x in landmarks]
    lex_rows = _full_simplex_rows(nl, max_dim)
    simplices, values = [], []
    prev = None
    for k, rows in enumerate(lex_rows):
        vals = witness_entry_values(space, landmarks, rows) if rows.shape[0] else np.zeros(0)
        if k > 0 and rows.shape[0]:
            for drop in range(k + 1):
                pos = prev.positions(k - 1, np.delete(rows, drop, axis=1))
                vals = np.maximum(vals, prev.values[k - 1][pos])
        s, v = _canonical(rows, vals)
        simplices.append(s)
        values.append(v)
        prev = Filtration(simplices, values, nl, check=False)
    return Filtration(simplices, values, nl, labels, check=False)


# --- co-firing ------------------------------------------------------------------

def check_spike_trains(trains):
    out = []
    for i, t in enumerate(trains):
        a = np.asarray(t, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(a)):
            raise FiltrationError(f"spike train {i} has non-finite times")
        if np.any(np.diff(a) <= 0):
            raise FiltrationError(f"spike train {i} is not strictly increasing")
        out.append(a)
    return out


def cofiring_time(trains, cells, epsilon: float, m: int) -> float:
    """Earliest t at which every cell fired >= m times within [t - eps, t + eps].

    The earliest such t always puts some spike s at the right edge of the
    window, so candidates are t = s - eps; the window is evaluated as
    [s - 2 eps, s] to keep the anchoring spike inside. Returns inf if the
    condition never holds.
    """
    anchors = np.unique(np.concatenate([trains[c] for c in cells]))
    if anchors.size == 0:
        return math.inf
    lo = anchors - 2 * epsilon
    ok = np.ones(anchors.shape[0], dtype=bool)
    for c in cells:
        s = trains[c]
        cnt = np.searchsorted(s, anchors, side="right") - np.searchsorted(s, lo, side="left")
        ok &= cnt >= m
    hit = np.flatnonzero(ok)
    if hit.size == 0:
        return math.inf
    return float(anchors[hit[0]] - epsilon)


def cofiring_filtration(trains, epsilon: float, m: int, max_dim: int) -> Filtration:
    """Filtration on cells: a set of cells enters once all of them co-fire.

    Sets that never co-fire are left out; the face condition holds because the
    condition for a set implies it for every subset.
    """
    if not epsilon > 0:
        raise FiltrationError(f"epsilon must be positive, got {epsilon}")
    if int(m) != m or m < 1:
        raise FiltrationError(f"m must be a positive integer, got {m}")
    if max_dim < 0:
        raise FiltrationError(f"max_dim must be >= 0, got {max_dim}")
    trains = check_spike_trains(trains)
    ncell = len(trains)
    level = {}
    for c in range(ncell):
        t = cofiring_time(trains, (c,), epsilon, m)
        if math.isfinite(t):
            level[(c,)] = t
    found = [level]
    for k in range(1, max_dim + 1):
        nxt = {}
        for s in sorted(found[-1]):
            for v in range(s[-1] + 1, ncell):
                cand = s + (v,)
                if all(f in found[-1] for f in combinations(cand, k)):
                    t = cofiring_time(trains, cand, epsilon, m)
                    if math.isfinite(t):
                        nxt[cand] = t
        if not nxt:
            break
        found.append(nxt)
    simplices, values = [], []
    for k, lvl in enumerate(found):
        items = sorted(lvl.items(), key=lambda kv: (kv[1], kv[0]))
        simplices.append(np.asarray([s for s, _ in items], dtype=np.int64).reshape(-1, k + 1))
        values.append(np.asarray([v for _, v in items]))
    while len(simplices) < max_dim + 1:
        simplices.append(np.zeros((0, len(simplices) + 1), dtype=np.int64))
        values.append(np.zeros(0))
    return Filtration(simplices, values, ncell, check=False)


def skeleton(filtration: Filtration, n: int) -> Filtration:
    """Restriction to simplices of dimension <= n, order preserved."""
    if n < 0:
        raise FiltrationError(f"skeleton dimension must be >= 0, got {n}")
    top = min(n, filtration.max_dim)
    return Filtration(filtration.simplices[:top + 1], filtration.values[:top + 1],
                      filtration.n_vertices, filtration.vertex_labels, check=False)


def closure(simplices: Iterable) -> list:
    """All non-empty faces of the given simplices, as sorted tuples."""
    out = set()
    for s in simplices:
        s = tuple(sorted(s))
        for r in range(1, len(s) + 1):
            out.update(combinations(s, r))
    return sorted(out, key=lambda s: (len(s), s))
