"""Single-linkage clustering, dendrograms and the subdominant ultrametric."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._unionfind import UnionFind
from .metric import FiniteMetricSpace, PointMap


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class Partition:
    """Blocks of a partition of {0, ..., n-1}, stored in canonical order."""
    n: int
    blocks: tuple

    def __post_init__(self):
        blocks = [tuple(sorted(int(x) for x in b)) for b in self.blocks]
        if any(not b for b in blocks):
            raise PartitionError("empty block")
        seen = [x for b in blocks for x in b]
        if sorted(seen) != list(range(self.n)):
            raise PartitionError(f"blocks do not partition range({self.n})")
        object.__setattr__(self, "blocks", tuple(sorted(blocks)))

    @classmethod
    def singletons(cls, n):
        return cls(n, tuple((i,) for i in range(n)))

    @classmethod
    def whole(cls, n):
        return cls(n, (tuple(range(n)),))

    def block_of(self):
        out = [0] * self.n
        for bi, b in enumerate(self.blocks):
            for x in b:
                out[x] = bi
        return out

    def __len__(self):
        return len(self.blocks)


def vr_clustering(space: FiniteMetricSpace, delta: float) -> Partition:
    """Connected components of the graph joining points at distance <= delta."""
    if delta < 0:
        raise PartitionError(f"scale must be non-negative, got {delta}")
    n = space.n
    uf = UnionFind(n)
    ii, jj = np.nonzero(np.triu(space.dist <= delta, k=1))
    for i, j in zip(ii.tolist(), jj.tolist()):
        uf.union(i, j)
    return Partition(n, tuple(uf.groups()))


def is_refinement(P: Partition, Q: Partition) -> bool:
    """True iff every block of P lies inside a block of Q."""
    if P.n != Q.n:
        raise PartitionError(f"partitions of different sets ({P.n} vs {Q.n})")
    owner = Q.block_of()
    return all(len({owner[x] for x in b}) == 1 for b in P.blocks)


def pullback_partition(phi: PointMap, Q: Partition) -> Partition:
    if phi.target_size != Q.n:
        raise PartitionError(f"map target size {phi.target_size} does not match partition size {Q.n}")
    owner = Q.block_of()
    pre = {}
    for x, y in enumerate(phi.image):
        pre.setdefault(owner[y], []).append(x)
    return Partition(phi.source_size, tuple(pre.values()))


# --- minimum spanning tree ----------------------------------------------------

def minimum_spanning_tree(dist: np.ndarray):
    """Dense Prim. Returns (order, parent, weight) in insertion order.

    ``order[0]`` is vertex 0; for t >= 1, ``order[t]`` joined the tree through
    the edge to ``parent[t]`` of length ``weight[t]``. Ties pick the smallest
    vertex index.
    """
    n = dist.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    link = np.zeros(n, dtype=np.intp)
    order, parent, weight = [0], [-1], [0.0]
    in_tree[0] = True
    best[:] = dist[0]
    link[:] = 0
    for _ in range(n - 1):
        cand = np.where(in_tree, np.inf, best)
        v = int(np.argmin(cand))
        order.append(v)
        parent.append(int(link[v]))
        weight.append(float(best[v]))
        in_tree[v] = True
        closer = dist[v] < best
        best[closer] = dist[v][closer]
        link[closer] = v
    return order, parent, weight


def subdominant_ultrametric(space: FiniteMetricSpace) -> np.ndarray:
    """u(x, x') = largest edge on the MST path between x and x'.

    Filled in Prim insertion order: a vertex v attached to p by an edge of
    length w sees every earlier vertex q at max(u(p, q), w).
    """
    n = space.n
    u = np.zeros((n, n))
    order, parent, weight = minimum_spanning_tree(space.dist)
    placed = [order[0]]
    for t in range(1, n):
        v, p, w = order[t], parent[t], weight[t]
        prev = np.asarray(placed)
        row = np.maximum(u[p, prev], w)
        u[v, prev] = row
        u[prev, v] = row
        placed.append(v)
    return u


def is_ultrametric(u: np.ndarray) -> bool:
    """Exact check of symmetry, zero diagonal and the strong triangle inequality."""
    u = np.asarray(u)
    if not np.array_equal(u, u.T) or np.any(np.diag(u) != 0) or np.any(u < 0):
        return False
    n = u.shape[0]
    for j in range(n):
        if np.any(u > np.maximum(u[:, j][:, None], u[j, :][None, :])):
            return False
    return True


# --- dendrograms ----------------------------------------------------------------

@dataclass(frozen=True)
class Dendrogram:
    """Single-linkage merge events.

    Leaves have ids 0..n-1; the block created by merge i gets id n + i.
    ``merges`` holds (scale, id_a, id_b) with id_a < id_b, in non-decreasing
    scale order.
    """
    n: int
    merges: tuple
    labels: tuple = None

    def partition_at(self, t: float) -> Partition:
        uf = UnionFind(self.n)
        members = {i: i for i in range(self.n)}  # block id -> some leaf
        for k, (scale, a, b) in enumerate(self.merges):
            if scale > t:
                break
            uf.union(members[a], members[b])
            members[self.n + k] = members[a]
        return Partition(self.n, tuple(uf.groups()))

    def members(self):
        """Leaf set of every block id."""
        out = {i: (i,) for i in range(self.n)}
        for k, (_, a, b) in enumerate(self.merges):
            out[self.n + k] = tuple(sorted(out[a] + out[b]))
        return out

    def merge_scales(self):
        return [m[0] for m in self.merges]

    def cophenetic(self) -> np.ndarray:
        """Scale at which each pair of leaves first shares a block."""
        c = np.zeros((self.n, self.n))
        mem = self.members()
        for k, (scale, a, b) in enumerate(self.merges):
            ia, ib = np.asarray(mem[a]), np.asarray(mem[b])
            c[np.ix_(ia, ib)] = scale
            c[np.ix_(ib, ia)] = scale
        return c


def single_linkage_dendrogram(space: FiniteMetricSpace) -> Dendrogram:
    """Merge events read off the minimum spanning tree.

    Equal-weight merges are listed by (weight, smallest leaf of either block,
    smallest leaf of the other block); the partition at every scale does not
    depend on this choice.
    """
    n = space.n
    order, parent, weight = minimum_spanning_tree(space.dist)
    edges = sorted((weight[t], min(order[t], parent[t]), max(order[t], parent[t])) for t in range(1, n))
    uf = UnionFind(n)
    block_id = list(range(n))   # root -> current block id
    low_leaf = list(range(n))   # root -> smallest leaf in block
    merges = []
    i = 0
    while i < len(edges):
        j = i
        while j < len(edges) and edges[j][0] == edges[i][0]:
            j += 1
        group = [e[1:] for e in edges[i:j]]
        while group:
            def rank(e):
                la, lb = low_leaf[uf.find(e[0])], low_leaf[uf.find(e[1])]
                return (min(la, lb), max(la, lb))
            e = min(group, key=rank)
            group.remove(e)
            ra, rb = uf.find(e[0]), uf.find(e[1])
            ida, idb = sorted((block_id[ra], block_id[rb]))
            lo = min(low_leaf[ra], low_leaf[rb])
            uf.union(ra, rb)
            root = uf.find(ra)
            block_id[root] = n + len(merges)
            low_leaf[root] = lo
            merges.append((edges[i][0], ida, idb))
        i = j
    return Dendrogram(n, tuple(merges), space.labels)
