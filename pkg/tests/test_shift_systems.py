import itertools
import math

import numpy as np
import pytest

from mdimlab.errors import DomainError, ResourceError
from mdimlab.metric_core import covering_number
from mdimlab.shift_systems import (GOLDEN_MEAN, Alphabet, build_full_shift, build_rotation, build_sft,
                                   count_admissible_words, cylinder_cover, enumerate_words, product_distance)
from oracles import brute_cover_number


def brute_words(adj, length, periodic):
    k = len(adj)
    out = []
    for w in itertools.product(range(k), repeat=length):
        if all(adj[a][b] for a, b in zip(w, w[1:])) and (not periodic or adj[w[-1]][w[0]]):
            out.append(w)
    return out


def test_alphabet_properties():
    a = Alphabet.uniform(5)
    assert a.gap == pytest.approx(0.25)
    assert a.diam == 1.0
    assert a.cover_count(0.25) == 3
    assert a.cover_count(0.0) == 5
    assert a.packing_count(0.3) == 3
    assert np.allclose(a.spans(), [0, 0.25, 0.5, 0.75, 1.0])
    assert Alphabet.uniform(1).gap == math.inf
    with pytest.raises(DomainError):
        Alphabet((0.5, 0.2))
    with pytest.raises(DomainError):
        Alphabet((0.0, 1.5))


def test_product_distance_weights_centre_coordinate():
    # window W=1: weights 1/2, 1, 1/2, 1/4
    assert product_distance([0, 0, 0, 0], [1, 1, 1, 1], 1) == pytest.approx(2.25)
    assert product_distance([0, 1, 0, 0], [0, 0, 0, 0], 1) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        product_distance([0, 1], [0, 1, 1], 0)


@pytest.mark.parametrize("length", [1, 2, 3, 4, 6])
def test_admissible_word_counts_match_enumeration(length):
    adj = GOLDEN_MEAN.tolist()
    for periodic in (False, True):
        brute = brute_words(adj, length, periodic)
        assert count_admissible_words(adj, length, periodic) == len(brute)
    assert [tuple(w) for w in enumerate_words(adj, length)] == sorted(brute_words(adj, length, True))


def test_golden_mean_length_three_counts():
    # Lucas numbers count periodic words, Fibonacci numbers count paths
    assert count_admissible_words(GOLDEN_MEAN, 3, periodic=True) == 4
    assert count_admissible_words(GOLDEN_MEAN, 3) == 5


def test_small_full_shift_distances():
    sys = build_full_shift(2, 0, 2)
    d = sys.matrix()
    assert sys.n_points == 4
    assert sorted(np.unique(np.round(d, 12))) == [0.0, 0.5, 1.0, 1.5]
    # distance equals the explicit weighted sum for every pair
    for i, j in itertools.product(range(4), repeat=2):
        assert d[i, j] == pytest.approx(product_distance(sys.words[i], sys.words[j], 0))


def test_wrapped_shift_is_a_permutation_and_bowen_weights():
    sys = build_full_shift(2, 1, 2)
    assert np.array_equal(np.sort(sys.dynamics), np.arange(sys.n_points))
    w = sys.weights(2)
    assert np.allclose(w[0], [0.5, 1, 0.5, 0.25])
    assert np.allclose(w[1], [0.25, 0.5, 1, 0.5])
    d2 = sys.matrix(2)
    i, j = sys.index_of([0, 0, 0, 0]), sys.index_of([0, 0, 1, 0])
    assert d2[i, j] == pytest.approx(1.0)
    assert sys.matrix(1)[i, j] == pytest.approx(0.5)


def test_tail_bound_and_diameter():
    sys = build_full_shift(3, 2, 2)
    assert sys.tail_bound == pytest.approx(0.5)
    assert sys.diameter(1) == pytest.approx(sys.weights(1)[0].sum())


def test_structured_bracket_brackets_the_exact_count():
    sys = build_full_shift(2, 1, 2)
    for eps in (0.3, 0.6, 1.1):
        for n in (1, 2):
            exact = brute_cover_number(sys.matrix(n), eps)
            br = sys.structured_cover_bracket(eps, n)
            assert br.lower <= exact <= br.upper
            assert covering_number(sys, eps, n).value == exact


def test_lazy_full_shift_has_bracket_but_no_words():
    sys = build_full_shift(2, 8, 4, lazy=True)
    assert sys.n_points == 2 ** 20
    br = sys.structured_cover_bracket(0.3, 2)
    assert 1 <= br.lower <= br.upper
    with pytest.raises(ResourceError):
        sys.index_of([0] * 20)


def test_word_budget():
    with pytest.raises(ResourceError):
        build_full_shift(2, 5, 4, budget=1000)


def test_cylinder_cover_labels_time_zero_symbol():
    sys = build_full_shift(3, 1, 1)
    cover = cylinder_cover(sys)
    assert len(cover.sets) == 3
    with pytest.raises(DomainError):
        cylinder_cover(sys, coords=(5,))


def test_sft_rejects_empty_and_rotation_rejects_non_coprime():
    with pytest.raises(DomainError):
        build_sft([[0, 1], [0, 0]])
    with pytest.raises(DomainError):
        build_rotation(2, 8)
    sys = build_sft(GOLDEN_MEAN, W=1, n_max=2)
    assert sys.n_points == count_admissible_words(GOLDEN_MEAN, 4, periodic=True) == 7
