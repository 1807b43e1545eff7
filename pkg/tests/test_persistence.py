import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finiteph.complex import (Filtration, FiltrationError, cofiring_filtration, maxmin_landmarks,
                              vr_filtration, witness_filtration)
from finiteph import persistence
from finiteph.homology import betti_numbers
from finiteph.metric import FiniteMetricSpace, Spectrum, from_point_cloud, spectrum
from finiteph.persistence import (IndexDiagram, PersistenceDiagram, betti_curve, diagrams_over_spectrum,
                                  filtration_diagrams, index_diagram, persistence_pairs, reduce,
                                  translate_index_diagram, vr_diagram, zero_dim_diagram_fast)

from _support import (as_multiset, random_compatible_order, random_filtration, random_space, shuffle_ties,
                      square, three_point, two_point)

INF = math.inf
THREE_POINT_ORDER = [((0,), 0.0), ((1,), 0.0), ((2,), 0.0), ((0, 1), 1.0), ((0, 2), 2.0), ((1, 2), 2.0)]


def test_reduce_reproduces_printed_matrix():
    R = reduce(THREE_POINT_ORDER)
    assert R.to_dense() == [
        [0, 0, 0, 1, 1, 0],
        [0, 0, 0, 1, 0, 0],
        [0, 0, 0, 0, 1, 0],
        [0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0, 0],
    ]
    assert R.low == (None, None, None, 1, 2, None)


def test_reduce_vertices_only():
    R = reduce([((0,), 0.0), ((1,), 0.0)])
    assert R.columns == (0, 0) and R.essentials() == [0, 1]


def test_reduce_rejects_face_after_coface():
    with pytest.raises(FiltrationError):
        reduce([((0,), 0.0), ((0, 1), 1.0), ((1,), 1.0)])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_reduce_unique_lows_and_idempotent(n, seed):
    F = random_filtration(np.random.default_rng(seed), n, 3)
    R = reduce(F)
    lows = [lo for lo in R.low if lo is not None]
    assert len(lows) == len(set(lows))
    again = reduce(F)
    assert again.low == R.low


def _engine_simplex_pairs(F, max_k):
    out = []
    for k, (b, d) in enumerate(persistence_pairs(F, max_k)):
        for i, j in zip(b.tolist(), d.tolist()):
            s = tuple(int(x) for x in F.simplices[k][i])
            t = tuple(int(x) for x in F.simplices[k + 1][j]) if j >= 0 else None
            out.append((k, s, t))
    return sorted(out, key=lambda t: (t[0], t[1], t[2] or ()))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 7), st.integers(1, 3), st.integers(0, 2**31 - 1))
def test_engine_matches_textbook_reduction(n, top, seed):
    F = random_filtration(np.random.default_rng(seed), n, top)
    literal = [p for p in reduce(F).simplex_pairs() if p[0] < top]
    assert _engine_simplex_pairs(F, top - 1) == literal


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 9), st.integers(0, 2**31 - 1))
def test_engine_matches_reduction_on_vr(n, seed):
    X = random_space(np.random.default_rng(seed), n)
    assert vr_diagram(X, 2) == vr_diagram(X, 2, method="reduce")


def test_index_diagrams_examples():
    X = two_point()
    assert index_diagram(vr_filtration(X, 1), spectrum(X), 0).pairs == ((1, 1), (1, 2))
    F = vr_filtration(square(), 2)
    A = spectrum(square())
    assert index_diagram(F, A, 0).pairs == ((1, 1), (1, 1), (1, 1), (1, 3))
    assert index_diagram(F, A, 1).pairs == ((2, 2),)
    P = FiniteMetricSpace([[0.0]])
    D = index_diagram(vr_filtration(P, 1), spectrum(P), 0)
    assert D.pairs == ((1, 1),) and D.n == 1
    assert index_diagram(F, A, 1, method="reduce") == index_diagram(F, A, 1)


def test_index_diagram_requires_spectrum_values():
    F = vr_filtration(square(), 1)
    with pytest.raises(KeyError):
        index_diagram(F, Spectrum((0.0, 2.0)), 0)


@pytest.mark.parametrize("n", [3, 4, 7])
def test_translate_literal_mode_worked_example(n):
    A = Spectrum(tuple(float(x) for x in np.cumsum(np.arange(n)) * 0.5))
    D = IndexDiagram(0, n, ((1, 1), (1, 2), (1, n), (2, 3)))
    out = translate_index_diagram(D, A, "paper-literal")
    a1, a2, a3 = A.alpha(1), A.alpha(2), A.alpha(3)
    assert as_multiset(out) == sorted([(a1, a2), (a1, a2), (a1, INF), (a2, a3)])


def test_translate_modes_differ_on_long_intervals():
    A = Spectrum((0.0, 1.0, 2.0, 3.0))
    D = IndexDiagram(1, 4, ((2, 3), (4, 4)))
    assert translate_index_diagram(D, A).points == ((1.0, 3.0), (3.0, INF))
    with pytest.raises(ValueError):
        translate_index_diagram(D, A, "paper-literal")
    assert translate_index_diagram(IndexDiagram(1, 4, ((2, 3),)), A, "paper-literal").points == ((1.0, 2.0),)


def test_translate_geometric_square():
    F = vr_filtration(square(), 2)
    A = spectrum(square())
    assert translate_index_diagram(index_diagram(F, A, 0), A).points == ((0, 1), (0, 1), (0, 1), (0, INF))
    assert translate_index_diagram(index_diagram(F, A, 1), A).points == ((1, 2),)


def test_translate_rejects_mismatched_spectrum():
    with pytest.raises(ValueError):
        translate_index_diagram(IndexDiagram(0, 3, ((1, 3),)), Spectrum((0.0, 1.0)))


def test_vr_diagram_examples():
    d = vr_diagram(two_point(), 2)
    assert d[0].points == ((0, 1), (0, INF)) and not d[1].points and not d[2].points
    d = vr_diagram(square(), 2)
    assert d[0].points == ((0, 1), (0, 1), (0, 1), (0, INF))
    assert d[1].points == ((1, 2),) and not d[2].points
    assert vr_diagram(three_point(), 0)[0].points == ((0, 1), (0, 2), (0, INF))
    assert vr_diagram(FiniteMetricSpace([[0.0]]), 1)[0].points == ((0, INF),)


def test_hexagon_has_one_loop_certified_by_ranks():
    ang = np.arange(6) * np.pi / 3
    X = from_point_cloud(np.stack([np.cos(ang), np.sin(ang)], axis=1))
    dgm1 = vr_diagram(X, 1)[1]
    assert len(dgm1) == 1
    birth, death = dgm1.points[0]
    side = X.dist[0, 1]
    assert birth == max(X.dist[i, (i + 1) % 6] for i in range(6))
    assert abs(birth - 1) < 1e-12 and abs(side - 1) < 1e-12
    F = vr_filtration(X, 2)
    for delta in spectrum(X).values:
        assert betti_numbers(F.sublevel(delta), 1)[1] == (1 if birth <= delta < death else 0)


def test_zero_dim_fast_examples():
    assert zero_dim_diagram_fast(three_point()).points == ((0, 1), (0, 2), (0, INF))
    assert zero_dim_diagram_fast(two_point()).points == ((0, 1), (0, INF))


def test_betti_curve_examples():
    assert betti_curve(square(), 1, 1.5) == 1
    assert betti_curve(square(), 0, 0) == 4
    X = random_space(np.random.default_rng(4), 9)
    assert betti_curve(X, 0, X.diameter()) == 1


def test_diagram_validation():
    with pytest.raises(ValueError):
        PersistenceDiagram(0, ((2.0, 1.0),))
    with pytest.raises(ValueError):
        IndexDiagram(0, 3, ((2, 1),))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**31 - 1))
def test_zero_dim_properties(n, seed):
    X = random_space(np.random.default_rng(seed), n)
    d0 = vr_diagram(X, 0)[0]
    assert len(d0) == n and all(b == 0 for b, _ in d0.points)
    assert d0 == zero_dim_diagram_fast(X)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**31 - 1))
def test_tie_shuffles_do_not_change_diagrams(n, seed):
    rng = np.random.default_rng(seed)
    X = random_space(rng, n, rng.choice(["grid-l1", "grid-linf"]))
    F = vr_filtration(X, 3)
    A = spectrum(X)
    base = diagrams_over_spectrum(F, A, 2)
    for _ in range(3):
        assert diagrams_over_spectrum(shuffle_ties(F, rng), A, 2) == base


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**31 - 1))
def test_interleaved_compatible_orders_do_not_change_diagrams(n, seed):
    rng = np.random.default_rng(seed)
    X = random_space(rng, n, "grid-l1")
    F = vr_filtration(X, 3)
    base = [sorted((d, b, e) for d, b, e in _real_pairs(reduce(F)))]
    for _ in range(3):
        order = random_compatible_order(F.ordered(), rng)
        assert [sorted(_real_pairs(reduce(order)))] == base


def _real_pairs(R):
    out = [(len(R.simplices[i]) - 1, R.values[i], R.values[j]) for i, j in R.pairs() if R.values[i] < R.values[j]]
    out += [(len(R.simplices[i]) - 1, R.values[i], INF) for i in R.essentials()]
    return out


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 9), st.integers(0, 2**31 - 1))
def test_relabeling_does_not_change_diagrams(n, seed):
    rng = np.random.default_rng(seed)
    X = random_space(rng, n)
    assert vr_diagram(X.permuted(rng.permutation(n)), 2) == vr_diagram(X, 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31 - 1))
def test_pipeline_equals_direct_pairs(n, seed):
    X = random_space(np.random.default_rng(seed), n)
    F = vr_filtration(X, 3)
    assert vr_diagram(X, 2) == filtration_diagrams(F, 2)
    A = spectrum(X)
    for k in range(3):
        assert translate_index_diagram(index_diagram(F, A, k), A) == vr_diagram(X, 2)[k]


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**31 - 1))
def test_betti_curve_matches_rank_oracle(n, seed):
    X = random_space(np.random.default_rng(seed), n)
    F = vr_filtration(X, 3)
    dgms = vr_diagram(X, 2)
    for delta in spectrum(X).values:
        static = betti_numbers(F.sublevel(delta), 2)
        for k in range(3):
            assert betti_curve(X, k, delta, diagram=dgms[k]) == static[k]


def test_witness_and_cofiring_diagrams_run_through_both_routes():
    rng = np.random.default_rng(8)
    X = random_space(rng, 12, "grid-l1")
    W = witness_filtration(X, maxmin_landmarks(X, 5, seed=1), 2)
    A = Spectrum(tuple(W.all_values().tolist()))
    assert diagrams_over_spectrum(W, A, 1) == filtration_diagrams(W, 1)
    assert diagrams_over_spectrum(W, A, 1, method="reduce") == filtration_diagrams(W, 1)
    C = cofiring_filtration([[0.0, 1.0, 2.0], [0.5, 1.5], [3.0, 9.0], [1.0, 8.5]], 0.5, 1, 2)
    A = Spectrum(tuple(C.all_values().tolist()))
    assert diagrams_over_spectrum(C, A, 1) == filtration_diagrams(C, 1)


def test_essential_higher_classes_in_general_filtrations():
    # a hollow triangle never filled: one essential 1-dimensional class
    F = Filtration.from_simplices([((0,), 0), ((1,), 0), ((2,), 0), ((0, 1), 1), ((1, 2), 1), ((0, 2), 2)])
    d = filtration_diagrams(F, 1)
    assert d[1].points == ((2.0, INF),)
    assert d[0].points == ((0, 1), (0, 1), (0, INF))


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 7), st.integers(0, 2**31 - 1))
def test_small_and_vectorized_coboundary_agree(n, seed):
    rng = np.random.default_rng(seed)
    F = vr_filtration(random_space(rng, n), 3)
    for k in range(F.max_dim):
        small = persistence._coboundary(F, k)
        saved = persistence._SMALL
        persistence._SMALL = -1
        try:
            big = persistence._coboundary(F, k)
        finally:
            persistence._SMALL = saved
        assert all(np.array_equal(a, b) for a, b in zip(small, big))
