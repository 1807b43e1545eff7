"""Static simplicial homology over Z2.

Columns are Python ints used as bitsets: bit r set means row r is a face.
This is the slow, obviously-correct path used to check persistence.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from ._unionfind import UnionFind
from .complex import Filtration


def _simplices_by_dim(complex_):
    """Sorted simplices grouped by dimension, in canonical order."""
    if isinstance(complex_, Filtration):
        groups = {}
        for s, _ in complex_.ordered():
            groups.setdefault(len(s) - 1, []).append(s)
        return groups
    groups = {}
    for s in complex_:
        s = tuple(sorted(int(x) for x in s))
        groups.setdefault(len(s) - 1, []).append(s)
    for k in groups:
        groups[k] = sorted(set(groups[k]))
    return groups


@dataclass(frozen=True)
class BoundaryMatrixZ2:
    n_rows: int
    columns: tuple  # one int bitset per column

    @property
    def n_cols(self):
        return len(self.columns)

    def to_dense(self):
        return [[(c >> r) & 1 for c in self.columns] for r in range(self.n_rows)]

    def rank(self) -> int:
        return rank_z2(self.columns)

    def compose(self, other: "BoundaryMatrixZ2") -> "BoundaryMatrixZ2":
        """self @ other over Z2 (other's rows index self's columns)."""
        if other.n_rows != self.n_cols:
            raise ValueError(f"cannot compose {self.n_rows}x{self.n_cols} with {other.n_rows}x{other.n_cols}")
        out = []
        for c in other.columns:
            acc = 0
            j = 0
            while c:
                if c & 1:
                    acc ^= self.columns[j]
                c >>= 1
                j += 1
            out.append(acc)
        return BoundaryMatrixZ2(self.n_rows, tuple(out))

    def is_zero(self) -> bool:
        return not any(self.columns)


def boundary_matrix(complex_, n: int) -> BoundaryMatrixZ2:
    """Matrix of the boundary map from n-chains to (n-1)-chains.

    For n = 0 the map goes to the zero space, so the result has no rows.
    """
    if n < 0:
        raise ValueError(f"dimension must be >= 0, got {n}")
    groups = _simplices_by_dim(complex_)
    cols = groups.get(n, [])
    if n == 0:
        return BoundaryMatrixZ2(0, tuple(0 for _ in cols))
    rows = groups.get(n - 1, [])
    where = {s: i for i, s in enumerate(rows)}
    out = []
    for s in cols:
        c = 0
        for face in combinations(s, n):
            if face not in where:
                raise ValueError(f"face {face} of {s} is missing from the complex")
            c |= 1 << where[face]
        out.append(c)
    return BoundaryMatrixZ2(len(rows), tuple(out))


def rank_z2(columns) -> int:
    """Rank of a set of bit-columns by Gaussian elimination."""
    pivots = {}  # leading bit -> reduced column
    rank = 0
    for c in columns:
        while c:
            top = c.bit_length() - 1
            if top in pivots:
                c ^= pivots[top]
            else:
                pivots[top] = c
                rank += 1
                break
    return rank


def betti_numbers(complex_, up_to: int) -> list:
    groups = _simplices_by_dim(complex_)
    ranks = {}

    def rk(n):
        if n not in ranks:
            ranks[n] = 0 if n == 0 or not groups.get(n) else boundary_matrix(complex_, n).rank()
        return ranks[n]

    return [len(groups.get(n, [])) - rk(n) - rk(n + 1) for n in range(up_to + 1)]


def connected_components(complex_) -> int:
    groups = _simplices_by_dim(complex_)
    verts = groups.get(0, [])
    where = {s[0]: i for i, s in enumerate(verts)}
    uf = UnionFind(len(verts))
    for a, b in groups.get(1, []):
        uf.union(where[a], where[b])
    return uf.count
