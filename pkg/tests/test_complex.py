import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finiteph.complex import (Filtration, FiltrationError, SimplexBudgetError, cech_filtration,
                              closure, cofiring_filtration, cofiring_time, maxmin_landmarks, skeleton,
                              vr_filtration, witness_filtration)
from finiteph.metric import FiniteMetricSpace, PointMap

from _support import (cech_value_oracle, cofiring_value_oracle, random_filtration, random_space,
                      square, two_point, vr_value_oracle, witness_value_oracle)

# complex L: vertices 2, 3, 5, 7 with the filled triangle [3, 5, 7]
L = closure([(2,), (3, 5, 7)])


def _check_compatible(filt):
    order = filt.ordered()
    pos = {s: i for i, (s, _) in enumerate(order)}
    val = dict(order)
    for s, v in order:
        assert list(s) == sorted(set(s))
        for f in itertools.combinations(s, len(s) - 1):
            if f:
                assert pos[f] < pos[s] and val[f] <= v
    vals = [v for _, v in order]
    assert vals == sorted(vals)


def test_vr_square():
    F = vr_filtration(square(), 3)
    assert len(F) == 15
    assert sorted(F.sublevel(1)) == sorted([(0,), (1,), (2,), (3,), (0, 1), (1, 2), (2, 3), (0, 3)])
    assert len(F.sublevel(2)) == 15
    _check_compatible(F)


def test_vr_small():
    F = vr_filtration(two_point(), 3)
    assert F.ordered() == [((0,), 0.0), ((1,), 0.0), ((0, 1), 1.0)]
    assert vr_filtration(FiniteMetricSpace([[0]]), 2).ordered() == [((0,), 0.0)]


def test_canonical_order_breaks_ties_lexicographically():
    F = vr_filtration(square(), 1)
    assert [s for s, _ in F.ordered()] == [(0,), (1,), (2,), (3,), (0, 1), (0, 3), (1, 2), (2, 3),
                                           (0, 2), (1, 3)]


def test_budget_guard():
    X = random_space(np.random.default_rng(0), 30, "l2")
    with pytest.raises(SimplexBudgetError, match="smaller max dimension"):
        vr_filtration(X, 4, budget=10_000)
    with pytest.raises(FiltrationError):
        vr_filtration(X, -1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 8), st.integers(0, 3), st.integers(0, 2**31 - 1))
def test_vr_values_match_diameter(n, max_dim, seed):
    X = random_space(np.random.default_rng(seed), n)
    F = vr_filtration(X, max_dim)
    _check_compatible(F)
    items = F.ordered()
    assert len(items) == sum(math.comb(n, k + 1) for k in range(max_dim + 1))
    for s, v in items:
        assert v == vr_value_oracle(X.dist, s)
    F.check()


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_vr_nesting(n, seed):
    X = random_space(np.random.default_rng(seed), n)
    F = vr_filtration(X, 2)
    vals = np.unique(X.dist)
    for a, b in zip(vals, vals[1:]):
        assert set(F.sublevel(a)) <= set(F.sublevel(b))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 7), st.integers(1, 7), st.integers(0, 2**31 - 1))
def test_vr_functorial(nx, ny, seed):
    rng = np.random.default_rng(seed)
    Y = random_space(rng, ny)
    img = rng.integers(0, ny, nx)
    X = FiniteMetricSpace(Y.dist[np.ix_(img, img)] + 0.5 * (1 - np.eye(nx)))
    FX, FY = vr_filtration(X, 2), vr_filtration(Y, 2)
    for delta in np.unique(X.dist):
        target = set(FY.sublevel(delta))
        for s in FX.sublevel(delta):
            assert tuple(sorted(set(int(img[v]) for v in s))) in target


def test_cech_small():
    F = cech_filtration(two_point(), 1)
    assert F.ordered() == [((0,), 0.0), ((1,), 0.0), ((0, 1), 1.0)]


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_cech_values_and_interleaving(n, seed):
    X = random_space(np.random.default_rng(seed), n)
    C, V = cech_filtration(X, 3), vr_filtration(X, 3)
    _check_compatible(C)
    for s, v in C.ordered():
        assert v == cech_value_oracle(X.dist, s)
        r = V.value_of(s)
        assert v <= r <= 2 * v


def test_maxmin_examples():
    line = FiniteMetricSpace(np.abs(np.subtract.outer([0.0, 1.0, 10.0], [0.0, 1.0, 10.0])))
    assert maxmin_landmarks(line, 2, start=0) == [0, 2]
    X = random_space(np.random.default_rng(1), 9)
    assert sorted(maxmin_landmarks(X, 9, seed=5)) == list(range(9))
    first = int(np.random.default_rng(7).integers(9))
    assert maxmin_landmarks(X, 1, seed=7) == [first]
    assert maxmin_landmarks(X, 4, seed=7) == maxmin_landmarks(X, 4, seed=7)
    with pytest.raises(FiltrationError):
        maxmin_landmarks(X, 0)
    with pytest.raises(FiltrationError):
        maxmin_landmarks(X, 10)


def test_maxmin_tie_smallest_index():
    # from point 0, points 1 and 2 are both at distance 2
    d = np.array([[0, 2, 2], [2, 0, 3], [2, 3, 0]], dtype=float)
    assert maxmin_landmarks(FiniteMetricSpace(d), 2, start=0) == [0, 1]


def test_witness_all_landmarks_vertices_at_zero():
    X = random_space(np.random.default_rng(2), 7)
    F = witness_filtration(X, list(range(7)), 1)
    assert np.all(F.values[0] == 0)


def test_witness_errors_and_labels():
    X = random_space(np.random.default_rng(2), 7)
    with pytest.raises(FiltrationError):
        witness_filtration(X, [1, 1, 2], 1)
    F = witness_filtration(X, [4, 1], 1)
    assert F.vertex_labels == (X.labels[4], X.labels[1])


@settings(max_examples=30, deadline=None)
@given(st.integers(4, 10), st.integers(1, 4), st.integers(0, 2**31 - 1))
def test_witness_matches_breakpoint_oracle(n, nl, seed):
    rng = np.random.default_rng(seed)
    # integer distances keep the witness inequality exact in floating point
    X = random_space(rng, n, rng.choice(["grid-l1", "grid-linf"]))
    marks = maxmin_landmarks(X, nl, seed=seed)
    F = witness_filtration(X, marks, 2)
    _check_compatible(F)
    for s, v in F.ordered():
        assert v == witness_value_oracle(X.dist, marks, s)


@settings(max_examples=20, deadline=None)
@given(st.integers(5, 9), st.integers(0, 2**31 - 1))
def test_witness_relabel_nonlandmarks(n, seed):
    rng = np.random.default_rng(seed)
    X = random_space(rng, n)
    marks = [0, 1, 2]
    perm = np.concatenate([[0, 1, 2], 3 + rng.permutation(n - 3)])
    Y = X.permuted(perm)
    a, b = witness_filtration(X, marks, 2), witness_filtration(Y, marks, 2)
    assert a.ordered() == b.ordered()


def test_cofiring_examples():
    F = cofiring_filtration([[1.0]], 0.5, 1, 1)
    assert F.ordered() == [((0,), 0.5)]
    F = cofiring_filtration([[0.0, 0.25], [10.0, 10.25]], 0.5, 1, 1)
    assert [s for s, _ in F.ordered()] == [(0,), (1,)]
    assert len(cofiring_filtration([[1.0, 2.0], [3.0]], 0.5, 3, 2)) == 0


def test_cofiring_errors():
    with pytest.raises(FiltrationError):
        cofiring_filtration([[1.0]], 0.0, 1, 1)
    with pytest.raises(FiltrationError):
        cofiring_filtration([[1.0]], 0.5, 0, 1)
    with pytest.raises(FiltrationError):
        cofiring_filtration([[2.0, 1.0]], 0.5, 1, 1)


def _dyadic_trains(rng, ncell):
    return [sorted(set((rng.integers(0, 64, size=rng.integers(0, 7)) / 8.0).tolist())) for _ in range(ncell)]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 5), st.integers(1, 3), st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_cofiring_matches_exact_oracle(ncell, m, eps8, seed):
    rng = np.random.default_rng(seed)
    trains = _dyadic_trains(rng, ncell)
    eps = eps8 / 8.0
    F = cofiring_filtration(trains, eps, m, 2)
    present = dict(F.ordered())
    arrays = [np.asarray(t) for t in trains]
    for k in range(1, 4):
        for s in itertools.combinations(range(ncell), k):
            want = cofiring_value_oracle(trains, s, eps, m)
            assert cofiring_time(arrays, s, eps, m) == want
            if math.isfinite(want):
                assert present[s] == want
            else:
                assert s not in present
    F.check()


def test_skeleton():
    F = vr_filtration(square(), 3)
    S0 = skeleton(F, 0)
    assert S0.ordered() == [((i,), 0.0) for i in range(4)]
    assert skeleton(F, 3).ordered() == F.ordered()
    SL = skeleton(Filtration.from_simplices([(s, 0.0) for s in L]), 1)
    assert {s for s, _ in SL.ordered()} == {(2,), (3,), (5,), (7,), (3, 5), (3, 7), (5, 7)}


def test_from_simplices_rejects_bad_orders():
    with pytest.raises(FiltrationError):
        Filtration.from_simplices([((0,), 0), ((0, 1), 1), ((1,), 0)])
    with pytest.raises(FiltrationError):
        Filtration.from_simplices([((0,), 0), ((1,), 2), ((0, 1), 1)])
    with pytest.raises(FiltrationError):
        Filtration.from_simplices([((0,), 0), ((0, 1), 1)])


def test_filtration_check_rejects_bad_face_values():
    with pytest.raises(FiltrationError):
        Filtration([np.array([[0], [1]]), np.array([[0, 1]])], [np.array([0.0, 2.0]), np.array([1.0])])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 6), st.integers(0, 3), st.integers(0, 2**31 - 1))
def test_random_filtrations_are_compatible(n, max_dim, seed):
    F = random_filtration(np.random.default_rng(seed), n, max_dim)
    _check_compatible(F)
    assert Filtration.from_simplices(F.ordered()).ordered() == F.ordered()
