import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from gpmfs.errors import ArgumentError, InvariantError
from gpmfs.selection import (complete_sets, global_size, personalized_features, rank_global,
                             select_features)


def test_rank_global_hand_sort():
    W = np.array([[3.0], [1.0], [2.0]])
    assert rank_global(W, 2 / 3) == [0, 2]


def test_rank_global_ties_by_index():
    assert rank_global(np.ones((4, 2)), 0.5) == [0, 1]


def test_rank_global_full():
    W = np.array([[1.0], [5.0], [3.0], [0.0]])
    assert rank_global(W, 1.0) == [1, 2, 0, 3]


@pytest.mark.parametrize("F,frac,size", [(72, 0.2, 14), (10, 0.05, 1), (10, 0.25, 3),
                                         (4, 0.125, 1), (3, 0.5, 2), (1, 0.01, 1)])
def test_global_size(F, frac, size):
    assert global_size(F, frac) == size


def test_q_one_empties_everything():
    rng = np.random.default_rng(0)
    W = rng.normal(size=(20, 4))
    assert all(pf == [] for pf in personalized_features(W, rank_global(W, 0.2), 1.0))


def test_personalized_hand_example():
    W = np.array([[1.0, 1.0], [2.0, 0.0], [0.1, 0.1]])
    # GF = {0}, ||w_0|| = sqrt 2, threshold sqrt2/sqrt2 = 1
    assert personalized_features(W, [0], 0.5) == [[1], []]


def test_q_zero_needs_one_win():
    W = np.array([[4.0, 0.0], [0.0, 1.0], [1.1, 0.0]])
    # thresholds: 4/sqrt2 ~ 2.83 and 1/sqrt2 ~ 0.71; feature 2 beats the second only
    assert personalized_features(W, [0, 1], 0.0) == [[2], []]
    assert personalized_features(W, [0, 1], 0.5) == [[], []]


def test_empty_global():
    with pytest.raises(ArgumentError):
        personalized_features(np.ones((2, 2)), [], 0.5)


def test_complete_sets():
    assert complete_sets([0, 2], [[1]]) == [[0, 2, 1]]
    assert complete_sets([3, 1], [[], []]) == [[3, 1], [3, 1]]
    assert complete_sets([0], [[5, 2]]) == [[0, 2, 5]]
    with pytest.raises(InvariantError):
        complete_sets([0, 2], [[2]])


def test_select_features_fields():
    W = np.array([[3.0, 0.0], [0.1, 2.5], [1.0, 1.0], [0.0, 0.0]])
    sel = select_features(W, 0.25, 0.5)
    assert sel.global_ == (0,)
    assert sel.personalized == ((), (1,))
    assert sel.complete == ((0,), (0, 1))
    assert sel.q_used == 0.5 and sel.global_fraction_used == 0.25
    np.testing.assert_allclose(sel.row_norms, np.linalg.norm(W, axis=1))
    assert sel.mean_personalized() == 0.5
    assert sel.personalized_proportion() == 0.125


weights = st.tuples(st.integers(1, 12), st.integers(1, 5), st.integers(0, 2**32 - 1))


@settings(max_examples=150, deadline=None)
@given(weights, st.floats(0.01, 1.0), st.floats(0, 1), st.floats(0, 1))
def test_selection_properties(shape, frac, q1, q2, ):
    F, L, seed = shape
    rng = np.random.default_rng(seed)
    W = rng.normal(size=(F, L)) * (rng.uniform(size=(F, 1)) < 0.7)
    lo, hi = sorted((q1, q2))
    a, b = select_features(W, frac, lo), select_features(W, frac, hi)
    gf = set(a.global_)
    norms = np.linalg.norm(W, axis=1)
    assert len(a.global_) == global_size(F, frac)
    assert min(norms[list(gf)]) >= max([norms[j] for j in range(F) if j not in gf], default=-1)
    for i in range(L):
        assert set(b.personalized[i]) <= set(a.personalized[i])
        assert not gf & set(a.personalized[i])
        assert len(a.personalized[i]) <= F - len(gf)
        assert list(a.personalized[i]) == oracles.personalized(W.tolist(), list(a.global_), lo)[i]
    scaled = select_features(W * float(10 ** rng.uniform(-3, 3)), frac, lo)
    assert scaled.same_sets(a)
