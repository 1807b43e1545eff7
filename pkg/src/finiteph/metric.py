"""Finite metric spaces, validation, spectra and map distortions.

Distances are stored as float64 and never recomputed after construction, so
spectrum membership and deduplication use exact equality.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

_CDIST_METRIC = {"l1": "cityblock", "l2": "euclidean", "linf": "chebyshev"}


class MetricError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    dist: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        d = np.array(self.dist, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise MetricError(f"distance matrix must be square, got shape {d.shape}")
        if d.shape[0] == 0:
            raise MetricError("metric space must have at least one point")
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        labels = self.labels
        if labels is None:
            labels = tuple(str(i) for i in range(d.shape[0]))
        else:
            labels = tuple(str(x) for x in labels)
            if len(labels) != d.shape[0]:
                raise MetricError(f"{len(labels)} labels for {d.shape[0]} points")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def __len__(self):
        return self.n

    def diameter(self) -> float:
        return float(self.dist.max())

    def permuted(self, perm: Sequence[int]) -> "FiniteMetricSpace":
        """The same space with points listed in the order ``perm``."""
        p = np.asarray(perm)
        return FiniteMetricSpace(self.dist[np.ix_(p, p)], [self.labels[i] for i in p])

    def __repr__(self):
        return f"FiniteMetricSpace(n={self.n}, diameter={self.diameter():g})"


def from_point_cloud(points, metric_kind: str = "l2", labels=None) -> FiniteMetricSpace:
    if metric_kind not in _CDIST_METRIC:
        raise MetricError(f"unknown metric {metric_kind!r}; expected one of l1, l2, linf")
    rows = list(points)
    if not rows:
        raise MetricError("empty point cloud")
    dims = {len(r) for r in rows}
    if len(dims) != 1:
        raise MetricError(f"points have mixed dimensions {sorted(dims)}")
    x = np.asarray(rows, dtype=np.float64)
    if x.shape[1] == 0:
        raise MetricError("points must have at least one coordinate")
    d = cdist(x, x, metric=_CDIST_METRIC[metric_kind])
    np.fill_diagonal(d, 0.0)
    d = np.maximum(d, d.T)  # guard against asymmetric rounding in cdist
    return FiniteMetricSpace(d, labels)


# --- validation -------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str  # nonsquare | nonfinite | negative | diagonal | asymmetry | zero_distance | triangle
    indices: tuple
    detail: str

    def __str__(self):
        return f"{self.kind} at {self.indices}: {self.detail}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self):
        return {v.kind for v in self.violations}

    def lines(self):
        out = [f"violation: {v}" for v in self.violations]
        out += [f"warning: {v}" for v in self.warnings]
        return out


def _triangle_violations(d, tol, limit):
    n = d.shape[0]
    found = []
    for j in range(n):
        via = d[:, j][:, None] + d[j, :][None, :]
        bad = np.argwhere(d > via + tol)
        for i, k in bad:
            if i < k and i != j and k != j:
                found.append((int(i), int(j), int(k)))
                if len(found) >= limit:
                    return found
    return found


def validate(space, strict: bool = True, allow_pseudometric: bool = False,
             max_reports: int = 20) -> ValidationReport:
    """Check metric axioms and report every violated one.

    ``space`` may be a FiniteMetricSpace or a raw matrix. With
    ``allow_pseudometric`` zero off-diagonal entries are accepted and triangle
    failures are downgraded to warnings.
    """
    d = space.dist if isinstance(space, FiniteMetricSpace) else np.asarray(space, dtype=np.float64)
    rep = ValidationReport()
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        rep.violations.append(Violation("nonsquare", tuple(d.shape), "matrix is not square"))
        return rep
    n = d.shape[0]

    def add(kind, idx, detail, warn=False):
        target = rep.warnings if warn else rep.violations
        if sum(v.kind == kind for v in target) < max_reports:
            target.append(Violation(kind, idx, detail))

    for i, j in np.argwhere(~np.isfinite(d)):
        add("nonfinite", (int(i), int(j)), f"entry is {float(d[i, j])!r}")
    for i in range(n):
        if d[i, i] != 0:
            add("diagonal", (i, i), f"d[{i}][{i}] = {float(d[i, i])!r}")
    for i, j in np.argwhere(d < 0):
        add("negative", (int(i), int(j)), f"d[{i}][{j}] = {float(d[i, j])!r}")
    for i, j in np.argwhere(d != d.T):
        if i < j:
            add("asymmetry", (int(i), int(j)), f"d[{i}][{j}] = {float(d[i, j])!r} but d[{j}][{i}] = {float(d[j, i])!r}")
    if not strict or not rep.ok:
        return rep
    for i, j in np.argwhere(d == 0):
        if i < j and not allow_pseudometric:
            add("zero_distance", (int(i), int(j)), "distinct points at distance 0")
    tol = 1e-12 * max(1.0, float(d.max()))
    for i, j, k in _triangle_violations(d, tol, max_reports):
        add("triangle", (i, j, k),
            f"d[{i}][{k}] = {float(d[i, k])!r} > d[{i}][{j}] + d[{j}][{k}] = {float(d[i, j] + d[j, k])!r}",
            warn=allow_pseudometric)
    return rep


# --- spectrum ---------------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    """Sorted distinct pairwise distances 0 = a_1 < ... < a_n.

    Indices handed out by :meth:`index` are 1-based, matching the index
    diagrams built on top of it.
    """
    values: tuple

    def __len__(self):
        return len(self.values)

    def alpha(self, i: int) -> float:
        if not 1 <= i <= len(self.values):
            raise IndexError(f"spectrum index {i} outside [1, {len(self.values)}]")
        return self.values[i - 1]

    def index(self, value: float) -> int:
        return int(self.indices(np.array([value]))[0])

    def indices(self, values) -> np.ndarray:
        arr = np.asarray(self.values)
        v = np.asarray(values, dtype=np.float64)
        pos = np.searchsorted(arr, v)
        ok = (pos < len(arr)) & (arr[np.minimum(pos, len(arr) - 1)] == v)
        if not np.all(ok):
            bad = v[~ok][0]
            raise KeyError(f"value {bad!r} is not in the spectrum")
        return pos + 1


def spectrum(space: FiniteMetricSpace) -> Spectrum:
    vals = np.unique(space.dist)
    return Spectrum(tuple(float(v) for v in vals))


# --- maps, distortion and Gromov-Hausdorff ------------------------------------

@dataclass(frozen=True)
class PointMap:
    image: tuple
    target_size: int

    def __post_init__(self):
        img = tuple(int(i) for i in self.image)
        for i in img:
            if not 0 <= i < self.target_size:
                raise MetricError(f"image index {i} outside target of size {self.target_size}")
        object.__setattr__(self, "image", img)

    @property
    def source_size(self) -> int:
        return len(self.image)

    @classmethod
    def identity(cls, n):
        return cls(tuple(range(n)), n)

    @classmethod
    def constant(cls, n, target, target_size):
        return cls((target,) * n, target_size)


def _check_map(f, X, Y):
    if f.source_size != X.n or f.target_size != Y.n:
        raise MetricError(f"map {f.source_size}->{f.target_size} does not fit spaces of sizes {X.n}, {Y.n}")


def distortion(f: PointMap, X: FiniteMetricSpace, Y: FiniteMetricSpace) -> float:
    _check_map(f, X, Y)
    img = np.asarray(f.image)
    return float(np.abs(X.dist - Y.dist[np.ix_(img, img)]).max())


def codistortion(f: PointMap, g: PointMap, X: FiniteMetricSpace, Y: FiniteMetricSpace) -> float:
    _check_map(f, X, Y)
    _check_map(g, Y, X)
    fi, gi = np.asarray(f.image), np.asarray(g.image)
    # rows x, columns y
    lhs = X.dist[:, gi]
    rhs = Y.dist[:, fi].T
    return float(np.abs(lhs - rhs).max())


def _all_maps(nsrc, ntgt):
    return np.array(list(itertools.product(range(ntgt), repeat=nsrc)), dtype=np.intp).reshape(-1, nsrc)


def _map_distortions(maps, dsrc, dtgt):
    img = dtgt[maps[:, :, None], maps[:, None, :]]
    return np.abs(img - dsrc[None]).max(axis=(1, 2))


def gh_bruteforce(X: FiniteMetricSpace, Y: FiniteMetricSpace, size_cap: int = 6,
                  chunk: int = 1 << 22) -> float:
    """Exact Gromov-Hausdorff distance by enumerating every pair of maps.

    Half the smallest max(dis(phi), dis(psi), C(phi, psi)) over all
    phi: X -> Y, psi: Y -> X. Pairs that cannot beat the running best are
    skipped, which does not change the result.
    """
    if X.n > size_cap or Y.n > size_cap:
        raise MetricError(f"gh_bruteforce limited to {size_cap} points per space, got {X.n} and {Y.n}")
    dx, dy = X.dist, Y.dist
    nx, ny = X.n, Y.n
    phis = _all_maps(nx, ny)
    psis = _all_maps(ny, nx)
    dis_phi = _map_distortions(phis, dx, dy)
    dis_psi = _map_distortions(psis, dy, dx)
    phis, dis_phi = phis[np.argsort(dis_phi, kind="stable")], np.sort(dis_phi, kind="stable")
    order = np.argsort(dis_psi, kind="stable")
    psis, dis_psi = psis[order], dis_psi[order]

    # g[p, y, x2] = max_x |dX(x, x2) - dY(y, phi_p(x))|, so C(phi_p, psi) = max_y g[p, y, psi(y)]
    best = np.inf
    step = max(1, chunk // max(1, len(psis) * ny))
    yidx = np.arange(ny)
    for start in range(0, len(phis), step):
        if dis_phi[start] >= best:
            break
        block = phis[start:start + step]
        dblock = dis_phi[start:start + step]
        cand = np.searchsorted(dis_psi, best, side="left") if np.isfinite(best) else len(psis)
        if cand == 0:
            break
        ps, dps = psis[:cand], dis_psi[:cand]
        a = dy[yidx[None, :, None], block[:, None, :]]          # (B, y, x) = dY(y, phi(x))
        g = np.abs(dx[None, None, :, :] - a[:, :, :, None]).max(axis=2)  # (B, y, x2)
        c = g[:, yidx[None, :], ps].max(axis=2)                   # (B, P)
        total = np.maximum(np.maximum(dblock[:, None], dps[None, :]), c)
        best = min(best, float(total.min()))
    return best / 2
