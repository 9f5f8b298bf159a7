import itertools
import math

import numpy as np
import pytest

from mdimlab.errors import DomainError, ResourceError
from mdimlab.measures import (Bernoulli, BlockDistribution, Empirical, Markov, Mixture, block_distribution,
                              ergodic_components, make_rng, parry_measure, point_mass, sample_orbit)
from mdimlab.shift_systems import GOLDEN_MEAN

PHI = (1 + math.sqrt(5)) / 2


def brute_markov_blocks(P, pi, n):
    """Word masses by explicit products over all ``k^n`` words."""
    k = len(pi)
    out = {}
    for w in itertools.product(range(k), repeat=n):
        p = pi[w[0]]
        for a, b in zip(w, w[1:]):
            p *= P[a][b]
        if p > 0:
            out[w] = p
    return out


def test_bernoulli_blocks_are_products():
    mu = Bernoulli((0.2, 0.8))
    d = block_distribution(mu, 3).as_dict()
    assert d[(0, 1, 1)] == pytest.approx(0.2 * 0.64)
    assert len(d) == 8
    assert mu.closed_form_entropy() == pytest.approx(-(0.2 * math.log(0.2) + 0.8 * math.log(0.8)))


@pytest.mark.parametrize("n", [1, 2, 4])
def test_markov_blocks_match_brute_products(n):
    P = [[0.1, 0.9], [0.6, 0.4]]
    mu = Markov(P)
    want = brute_markov_blocks(P, mu.pi, n)
    got = mu.block_distribution(n).as_dict()
    assert got.keys() == want.keys()
    assert all(got[w] == pytest.approx(want[w]) for w in want)
    # stationarity gives consistent marginals on both sides
    if n > 1:
        b = mu.block_distribution(n)
        for drop in ("last", "first"):
            m = b.marginal(drop).as_dict()
            ref = mu.block_distribution(n - 1).as_dict()
            assert all(m[w] == pytest.approx(ref[w]) for w in ref)


def test_parry_measure_of_golden_mean():
    mu = parry_measure(GOLDEN_MEAN)
    assert mu.closed_form_entropy() == pytest.approx(math.log(PHI))
    assert mu.pi[0] == pytest.approx(PHI ** 2 / (1 + PHI ** 2))
    assert mu.P[1, 1] == 0.0
    assert (1, 1) not in mu.block_distribution(2).as_dict()


def test_markov_validation():
    with pytest.raises(DomainError):
        Markov([[0.5, 0.6], [0.5, 0.5]])
    with pytest.raises(DomainError):
        Markov([[1.0, 0.0], [0.0, 1.0]])
    mu = Markov([[1.0, 0.0], [0.0, 1.0]], (0.3, 0.7))
    assert not mu.ergodic


def test_ergodic_decomposition_of_reducible_chain_and_mixture():
    mu = Markov([[1.0, 0.0], [0.0, 1.0]], (0.3, 0.7))
    comps = ergodic_components(mu)
    assert [w for w, _ in comps] == pytest.approx([0.3, 0.7])
    assert all(c.ergodic for _, c in comps)
    mix = Mixture(((0.5, Bernoulli((0.5, 0.5))), (0.5, point_mass(2, 1))))
    assert not mix.ergodic
    assert [w for w, _ in ergodic_components(mix)] == pytest.approx([0.5, 0.5])
    d = mix.block_distribution(2).as_dict()
    assert d[(1, 1)] == pytest.approx(0.5 * 0.25 + 0.5)


def test_mixture_validation():
    with pytest.raises(DomainError):
        Mixture(((0.4, Bernoulli((0.5, 0.5))), (0.4, Bernoulli((0.5, 0.5)))))
    with pytest.raises(DomainError):
        Mixture(((0.5, Bernoulli((0.5, 0.5))), (0.5, Bernoulli((1 / 3,) * 3))))


def test_empirical_is_cyclic_and_not_invariant_by_default():
    mu = Empirical((0, 1, 1))
    assert mu.block_distribution(2).as_dict() == pytest.approx({(0, 1): 1 / 3, (1, 0): 1 / 3, (1, 1): 1 / 3})
    assert not mu.invariant
    assert Empirical((0, 1), approximate=True).invariant


def test_block_distribution_budget_and_mass_check():
    with pytest.raises(ResourceError):
        Bernoulli((0.5, 0.5)).block_distribution(12, budget=1000)
    with pytest.raises(DomainError):
        BlockDistribution(1, np.array([[0], [1]]), np.array([0.5, 0.6]))


def test_coarse_graining_merges_cells():
    b = Bernoulli((0.25, 0.25, 0.5)).block_distribution(1).coarse([0, 0, 1])
    assert b.as_dict() == pytest.approx({(0,): 0.5, (1,): 0.5})
    assert b.entropy() == pytest.approx(math.log(2))


def test_sampling_is_deterministic_and_respects_support():
    mu = parry_measure(GOLDEN_MEAN)
    a = sample_orbit(mu, 500, seed=3)
    assert np.array_equal(a, sample_orbit(mu, 500, seed=3))
    assert not np.array_equal(a, sample_orbit(mu, 500, seed=3, stream=1))
    assert not np.any((a[:-1] == 1) & (a[1:] == 1))
    # symbol frequency close to the stationary mass
    assert abs(np.mean(a == 0) - mu.pi[0]) < 0.08
    r1, r2 = make_rng(1, 0), make_rng(1, 0)
    assert r1.random() == r2.random()


def test_point_mass():
    mu = point_mass(3, 2)
    assert mu.block_distribution(4).as_dict() == {(2, 2, 2, 2): 1.0}
    assert mu.closed_form_entropy() == 0.0
