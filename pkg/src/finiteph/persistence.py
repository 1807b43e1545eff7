"""Boundary-matrix reduction, index diagrams over the spectrum and VR diagrams.

Two routes compute the same simplexwise pairing:

* :func:`reduce` is the textbook left-to-right column reduction on the full
  boundary matrix (bit-columns, XOR). It is exact and slow.
* :func:`persistence_pairs` works dimension by dimension on the coboundary
  matrix with clearing, which avoids reducing the many columns of the top
  dimension. This is what the VR pipeline uses.

Both give the unique pairing of the filtration's total order; the test suite
checks that they agree.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cluster import subdominant_ultrametric
from .complex import (DEFAULT_BUDGET, Filtration, FiltrationError, check_compatible_order,
                      vr_filtration)
from .metric import FiniteMetricSpace, Spectrum, spectrum as spectrum_of

INF = math.inf


# --- literal reduction -------------------------------------------------------------

@dataclass(frozen=True)
class ReducedBoundaryMatrix:
    """Reduced matrix R with its simplices in filtration order.

    ``columns[j]`` is an int bitset over row indices; ``low[j]`` is the
    index of its lowest one (largest row index) or None for a zero column.
    """
    simplices: tuple
    values: tuple
    columns: tuple
    low: tuple

    def __len__(self):
        return len(self.simplices)

    def to_dense(self):
        n = len(self.simplices)
        return [[(c >> r) & 1 for c in self.columns] for r in range(n)]

    def pairs(self):
        """(birth index, death index) for every non-zero column."""
        return [(lo, j) for j, lo in enumerate(self.low) if lo is not None]

    def essentials(self):
        """Indices of zero columns whose row is nobody's low."""
        used = {lo for lo in self.low if lo is not None}
        return [j for j, lo in enumerate(self.low) if lo is None and j not in used]

    def simplex_pairs(self):
        """Pairs and essentials as (dim, birth simplex, death simplex or None)."""
        out = [(len(self.simplices[i]) - 1, self.simplices[i], self.simplices[j]) for i, j in self.pairs()]
        out += [(len(self.simplices[i]) - 1, self.simplices[i], None) for i in self.essentials()]
        return sorted(out, key=lambda t: (t[0], t[1], t[2] or ()))


def reduce(filtration) -> ReducedBoundaryMatrix:
    """Left-to-right Z2 reduction of the filtration's boundary matrix.

    ``filtration`` is a :class:`Filtration` (taken in its canonical order) or
    a list of (simplex, value) pairs in the order to use; the order must put
    faces before cofaces and never decrease in value.
    """
    if isinstance(filtration, Filtration):
        items = filtration.ordered()
    else:
        items = [(tuple(sorted(int(x) for x in s)), float(v)) for s, v in filtration]
        check_compatible_order(items)
    index = {s: i for i, (s, _) in enumerate(items)}
    columns = []
    low = []
    owner = {}  # low row -> column index holding it
    for j, (s, _) in enumerate(items):
        c = 0
        if len(s) > 1:
            for drop in range(len(s)):
                c |= 1 << index[s[:drop] + s[drop + 1:]]
        while c:
            lo = c.bit_length() - 1
            k = owner.get(lo)
            if k is None:
                owner[lo] = j
                break
            c ^= columns[k]
        columns.append(c)
        low.append(c.bit_length() - 1 if c else None)
    return ReducedBoundaryMatrix(tuple(s for s, _ in items), tuple(v for _, v in items),
                                 tuple(columns), tuple(low))


# --- coboundary reduction with clearing -----------------------------------------------

_SMALL = 256


def _coboundary_small(filt: Filtration, k: int, m: int):
    # dict lookups beat the vectorized path on tiny complexes
    pos = {tuple(r): i for i, r in enumerate(filt.simplices[k].tolist())}
    cof = [[] for _ in range(m)]
    for j, row in enumerate(filt.simplices[k + 1].tolist()):
        for drop in range(len(row)):
            f = pos.get(tuple(row[:drop] + row[drop + 1:]))
            if f is None:
                raise FiltrationError(f"a face of a {k + 1}-simplex is missing")
            cof[f].append(j)
    indptr = [0]
    data = []
    for c in cof:
        data.extend(c)
        indptr.append(len(data))
    return np.asarray(indptr, dtype=np.int64), np.asarray(data, dtype=np.int64)


def _coboundary(filt: Filtration, k: int):
    """CSR coboundary of the k-simplices: cofaces sorted by position."""
    m = filt.count(k)
    rows = filt.simplices[k + 1] if k + 1 <= filt.max_dim else None
    if rows is None or rows.shape[0] == 0 or m == 0:
        return np.zeros(m + 1, dtype=np.int64), np.zeros(0, dtype=np.int64)
    if rows.shape[0] <= _SMALL:
        return _coboundary_small(filt, k, m)
    width = k + 2
    face = filt.face_positions(k + 1)
    if np.any(face < 0):
        raise FiltrationError(f"a face of a {k + 1}-simplex is missing")
    flat = face.ravel()
    order = np.argsort(flat, kind="stable")
    data = order // width
    indptr = np.zeros(m + 1, dtype=np.int64)
    np.cumsum(np.bincount(flat, minlength=m), out=indptr[1:])
    return indptr, data


def persistence_pairs(filt: Filtration, max_k: int):
    """Simplexwise pairing per dimension 0..max_k.

    Returns a list whose k-th entry is (birth positions, death positions)
    within dimensions k and k+1; death position -1 marks an essential class.
    Zero-persistence pairs are included.
    """
    out = []
    cleared = np.zeros(0, dtype=np.int64)
    for k in range(max_k + 1):
        m = filt.count(k)
        if m == 0:
            out.append((np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)))
            cleared = np.zeros(0, dtype=np.int64)
            continue
        indptr, data = _coboundary(filt, k)
        skip = np.zeros(m, dtype=bool)
        skip[cleared] = True
        has = indptr[1:] > indptr[:-1]
        first = np.full(m, -1, dtype=np.int64)
        first[has] = data[indptr[:-1][has]]
        first_l = first.tolist()
        skip_l = skip.tolist()
        ptr = indptr.tolist()
        pivot_of = {}
        reduced = {}
        births, deaths = [], []
        for j in range(m - 1, -1, -1):
            if skip_l[j]:
                continue
            p = first_l[j]
            if p < 0:
                births.append(j)
                deaths.append(-1)
                continue
            if p not in pivot_of:
                pivot_of[p] = j
                births.append(j)
                deaths.append(p)
                continue
            col = set(data[ptr[j]:ptr[j + 1]].tolist())
            while True:
                other = pivot_of[p]
                oc = reduced.get(other)
                if oc is None:
                    oc = data[ptr[other]:ptr[other + 1]].tolist()
                col.symmetric_difference_update(oc)
                if not col:
                    births.append(j)
                    deaths.append(-1)
                    break
                p = min(col)
                if p not in pivot_of:
                    pivot_of[p] = j
                    reduced[j] = col
                    births.append(j)
                    deaths.append(p)
                    break
        b = np.asarray(births, dtype=np.int64)
        d = np.asarray(deaths, dtype=np.int64)
        out.append((b, d))
        cleared = d[d >= 0]
    return out


# --- diagrams ----------------------------------------------------------------------

def _sorted_points(points):
    return tuple(sorted(points, key=lambda p: (p[0], p[1])))


@dataclass(frozen=True)
class IndexDiagram:
    """Multiset of 1-based (birth index, last-alive index) pairs over a spectrum of length n."""
    dim: int
    n: int
    pairs: tuple

    def __post_init__(self):
        pairs = _sorted_points((int(b), int(d)) for b, d in self.pairs)
        for b, d in pairs:
            if not 1 <= b <= d <= self.n:
                raise ValueError(f"index pair ({b}, {d}) outside 1 <= b <= d <= {self.n}")
        object.__setattr__(self, "pairs", pairs)

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True)
class PersistenceDiagram:
    """Multiset of (birth, death) points; death may be ``inf``."""
    dim: int
    points: tuple

    def __post_init__(self):
        pts = _sorted_points((float(b), float(d)) for b, d in self.points)
        for b, d in pts:
            if math.isnan(b) or math.isnan(d) or b > d or math.isinf(b):
                raise ValueError(f"invalid diagram point ({b}, {d})")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def finite(self):
        return [p for p in self.points if math.isfinite(p[1])]

    def essential(self):
        return [p for p in self.points if math.isinf(p[1])]

    def alive_at(self, delta: float) -> int:
        return sum(1 for b, d in self.points if b <= delta < d)


def _check_max_k(max_k):
    if max_k < 0:
        raise ValueError(f"homology dimension must be >= 0, got {max_k}")


def filtration_diagrams(filtration: Filtration, max_k: int) -> list:
    """Real-valued diagrams straight from the pairing (the geometric reading).

    A pair (s, t) with f(s) < f(t) gives (f(s), f(t)); an unpaired s gives
    (f(s), inf). Dimensions above the filtration's top simplex dimension have
    no classes.
    """
    _check_max_k(max_k)
    out = []
    pairs = persistence_pairs(filtration, min(max_k, filtration.max_dim))
    for k in range(max_k + 1):
        if k >= len(pairs):
            out.append(PersistenceDiagram(k, ()))
            continue
        b, d = pairs[k]
        vb = filtration.values[k][b]
        vd = np.full(len(b), INF)
        fin = d >= 0
        if fin.any():
            vd[fin] = filtration.values[k + 1][d[fin]]
        keep = vb < vd
        out.append(PersistenceDiagram(k, tuple(zip(vb[keep].tolist(), vd[keep].tolist()))))
    return out


def _pairs_from_reduction(filtration: Filtration, k: int):
    """(birth value, death value or inf) list for dimension k via :func:`reduce`."""
    r = reduce(filtration)
    out = []
    for i, j in r.pairs():
        if len(r.simplices[i]) - 1 == k:
            out.append((r.values[i], r.values[j]))
    for i in r.essentials():
        if len(r.simplices[i]) - 1 == k:
            out.append((r.values[i], INF))
    return out


def index_diagram(filtration: Filtration, spec: Spectrum, k: int, method: str = "cohomology") -> IndexDiagram:
    """Index-level diagram of the k-th persistence vector space sampled on ``spec``.

    ``method`` selects the pairing route: "cohomology" (default) or "reduce"
    (textbook reduction of the full boundary matrix).
    """
    _check_max_k(k)
    n = len(spec)
    if method == "reduce":
        raw = _pairs_from_reduction(filtration, k)
    elif method == "cohomology":
        raw = []
        if k <= filtration.max_dim:
            b, d = persistence_pairs(filtration, k)[k]
            vb = filtration.values[k][b].tolist()
            vd = [filtration.values[k + 1][x] if x >= 0 else INF for x in d.tolist()]
            raw = list(zip(vb, vd))
    else:
        raise ValueError(f"unknown method {method!r}")
    if not raw:
        return IndexDiagram(k, n, ())
    births = spec.indices([b for b, _ in raw])
    pairs = []
    for (b, d), ib in zip(raw, births.tolist()):
        if math.isinf(d):
            pairs.append((ib, n))
        elif b < d:
            pairs.append((ib, spec.index(d) - 1))
    return IndexDiagram(k, n, tuple(pairs))


def translate_index_diagram(D: IndexDiagram, A: Spectrum, mode: str = "geometric") -> PersistenceDiagram:
    """Real-valued diagram from index pairs.

    geometric: (i, n) -> (a_i, inf); (i, j), j < n -> (a_i, a_{j+1}).
    paper-literal: (1, n) -> (a_1, inf); (j, j) -> (a_j, a_{j+1}); any other
    (i, j) with i < j -> (a_i, a_j). The atom (n, n) with n > 1 has no image
    in this mode and raises ValueError.
    """
    n = len(A)
    if D.n != n:
        raise ValueError(f"index diagram built over {D.n} values, spectrum has {n}")
    pts = []
    for i, j in D.pairs:
        if not 1 <= i <= j <= n:
            raise ValueError(f"index pair ({i}, {j}) outside [1, {n}]")
        if mode == "geometric":
            pts.append((A.alpha(i), INF) if j == n else (A.alpha(i), A.alpha(j + 1)))
        elif mode == "paper-literal":
            if (i, j) == (1, n):
                pts.append((A.alpha(1), INF))
            elif i == j:
                if j == n:
                    raise ValueError(f"atom ({n}, {n}) has no image: spectrum value {n + 1} is undefined")
                pts.append((A.alpha(j), A.alpha(j + 1)))
            else:
                pts.append((A.alpha(i), A.alpha(j)))
        else:
            raise ValueError(f"unknown translation mode {mode!r}")
    return PersistenceDiagram(D.dim, tuple(pts))


def diagrams_over_spectrum(filtration: Filtration, spec: Spectrum, max_k: int,
                           mode: str = "geometric", method: str = "cohomology") -> list:
    """Sample then translate, per dimension; filtration values must lie in ``spec``."""
    _check_max_k(max_k)
    out = []
    if method == "cohomology":
        pairs = persistence_pairs(filtration, min(max_k, filtration.max_dim))
    n = len(spec)
    for k in range(max_k + 1):
        if method == "reduce":
            D = index_diagram(filtration, spec, k, method="reduce")
        elif k >= len(pairs):
            D = IndexDiagram(k, n, ())
        else:
            b, d = pairs[k]
            ib = spec.indices(filtration.values[k][b]) if len(b) else np.zeros(0, dtype=np.int64)
            fin = d >= 0
            jd = np.full(len(b), n, dtype=np.int64)
            if fin.any():
                jd[fin] = spec.indices(filtration.values[k + 1][d[fin]]) - 1
            keep = ~fin | (jd >= ib)
            D = IndexDiagram(k, n, tuple(zip(ib[keep].tolist(), jd[keep].tolist())))
        out.append(translate_index_diagram(D, spec, mode))
    return out


def vr_diagram(space: FiniteMetricSpace, max_k: int, mode: str = "geometric",
               method: str = "cohomology", budget: int = DEFAULT_BUDGET) -> list:
    """Vietoris-Rips persistence diagrams for dimensions 0..max_k."""
    _check_max_k(max_k)
    filt = vr_filtration(space, max_k + 1, budget=budget)
    return diagrams_over_spectrum(filt, spectrum_of(space), max_k, mode=mode, method=method)


def zero_dim_diagram_fast(space: FiniteMetricSpace) -> PersistenceDiagram:
    """Dimension-0 diagram from the subdominant ultrametric, no reduction.

    Point i (in the given order, i >= 1) dies at min over earlier k of
    u(x_k, x_i). Deaths equal to 0 (coincident points) are dropped.
    """
    u = subdominant_ultrametric(space)
    n = space.n
    pts = [(0.0, INF)]
    for i in range(1, n):
        death = float(u[:i, i].min())
        if death > 0:
            pts.append((0.0, death))
    return PersistenceDiagram(0, tuple(pts))


def betti_curve(space: FiniteMetricSpace, k: int, delta: float, diagram: PersistenceDiagram | None = None) -> int:
    """Number of dimension-k classes alive at ``delta`` (birth <= delta < death)."""
    if diagram is None:
        diagram = vr_diagram(space, k)[k]
    return diagram.alive_at(delta)
