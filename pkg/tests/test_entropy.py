import itertools
import math

import numpy as np
import pytest

from mdimlab.errors import DomainError
from mdimlab.entropy import (Partition, admissible, candidate_family, dynamical_entropy, grid_partition,
                             inf_entropy_small_partitions, info_dim_rate, mrid_estimate, mrid_vs_idr_check,
                             partition_entropy, shift_scale, voronoi_partition)
from mdimlab.measures import Bernoulli, Markov, Mixture, parry_measure, point_mass
from mdimlab.report import fit_dimension
from mdimlab.shift_systems import GOLDEN_MEAN, Alphabet
from oracles import binary_entropy

PHI = (1 + math.sqrt(5)) / 2


def brute_coarse_block_entropy(P, pi, labels, n):
    """``H(P^n)`` by summing Markov word masses over all ``k^n`` words into coarse words."""
    k = len(pi)
    acc = {}
    for w in itertools.product(range(k), repeat=n):
        p = pi[w[0]]
        for a, b in zip(w, w[1:]):
            p *= P[a][b]
        key = tuple(labels[s] for s in w)
        acc[key] = acc.get(key, 0.0) + p
    m = np.array([v for v in acc.values() if v > 0])
    return float(-(m * np.log(m)).sum())


def test_partition_entropy_basic():
    assert partition_entropy([0.5, 0.5]) == pytest.approx(math.log(2))
    assert partition_entropy([1.0, 0.0]) == 0.0
    P = Partition.from_labels([0, 0, 1], Alphabet.uniform(3))
    assert partition_entropy([0.25, 0.25, 0.5], P) == pytest.approx(math.log(2))
    with pytest.raises(DomainError):
        partition_entropy([0.5, 0.6])


def test_partition_canonical_labels_and_refinement():
    a = Alphabet.uniform(4)
    p = Partition.from_labels([3, 3, 1, 1], a)
    assert p.cells == (0, 0, 1, 1)
    assert p.diameter == pytest.approx(1 / 3)
    assert Partition.points(4).refines(p)
    assert not p.refines(Partition.points(4))


def test_grid_partition_cells():
    a = Alphabet.uniform(5)  # 0, .25, .5, .75, 1
    assert grid_partition(2, a).cells == (0, 0, 1, 1, 1)
    assert grid_partition(4, a).cells == (0, 1, 2, 3, 3)
    assert grid_partition(1, a).n_cells == 1
    assert voronoi_partition(a, 0.25).n_cells == 3


def test_shift_scale():
    assert shift_scale(0) == 1.0
    assert shift_scale(1) == 2.0
    assert shift_scale(30) == pytest.approx(3.0)


@pytest.mark.parametrize("p", [0.5, 0.2, 0.05])
def test_bernoulli_entropy_closed_form(p):
    est = dynamical_entropy(Bernoulli((p, 1 - p)))
    assert est.chosen == pytest.approx(binary_entropy(p), abs=1e-12)
    assert est.closed_form_error < 1e-12


def test_parry_entropy_is_log_golden_ratio():
    est = dynamical_entropy(parry_measure(GOLDEN_MEAN))
    assert est.chosen == pytest.approx(math.log(PHI), abs=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_lumped_markov_block_entropies_match_brute_force(n):
    P = [[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.3, 0.3, 0.4]]
    mu = Markov(P)
    labels = [0, 0, 1]
    part = Partition.from_labels(labels, Alphabet.uniform(3))
    est = dynamical_entropy(mu, part, n_max=n)
    assert est.block_entropies[-1][1] == pytest.approx(brute_coarse_block_entropy(P, mu.pi, labels, n))


def test_conditional_estimate_is_nonincreasing_in_n():
    mu = Markov([[0.2, 0.5, 0.3], [0.6, 0.1, 0.3], [0.3, 0.3, 0.4]])
    part = Partition.from_labels([0, 0, 1], Alphabet.uniform(3))
    vals = [dynamical_entropy(mu, part, n_max=n).chosen for n in range(2, 8)]
    assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


def test_mixture_entropy_is_average_rate():
    mix = Mixture(((0.5, Bernoulli((0.5, 0.5))), (0.5, point_mass(2, 0))))
    est = dynamical_entropy(mix, n_max=10)
    # H_n/n -> 0.5 log 2; the conditional increment converges at rate 1/n
    assert est.chosen == pytest.approx(0.5 * math.log(2), abs=0.01)


def test_candidate_family_starts_with_point_partition():
    fam = candidate_family(Alphabet.uniform(3))
    assert fam[0].label == "point" and fam[0].is_points
    assert len({p.cells for p in fam}) == len(fam)
    with pytest.raises(DomainError):
        candidate_family(Alphabet.uniform(3), "hexagons")


def test_admissibility_strict_and_loose():
    p = Partition.from_labels([0, 0, 1], Alphabet.uniform(3))
    assert admissible(p, 0.5) and not admissible(p, 0.5, strict=True)


def test_inf_entropy_over_small_partitions():
    mu = Bernoulli((0.25, 0.25, 0.25, 0.25))
    # at eps < 1/3 only the point partition is admissible
    r = inf_entropy_small_partitions(mu, 0.2)
    assert r.certified_minimal and r.value == pytest.approx(math.log(4))
    # at eps = 1/3 adjacent pairs merge: best is two cells of mass 1/2
    r = inf_entropy_small_partitions(mu, 1 / 3)
    assert not r.certified_minimal
    assert r.value == pytest.approx(math.log(2))
    # whole alphabet in one cell at eps = 1
    assert inf_entropy_small_partitions(mu, 1.0).value == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DomainError):
        inf_entropy_small_partitions(mu, 0.0)


def test_mrid_and_info_dim_rate_for_finite_alphabet_are_near_zero():
    mu = Bernoulli((0.5, 0.5))
    est = mrid_estimate(mu, [0.5, 0.25, 0.125])
    assert est.slope == pytest.approx(0.0, abs=1e-12)
    idr = info_dim_rate(mu, [2, 4, 8, 16])
    assert idr.table[0]["entropy"] == pytest.approx(math.log(2))
    assert idr.d_upper == pytest.approx(math.log(2) / math.log(8))
    with pytest.raises(DomainError):
        info_dim_rate(mu, [4, 2])


def test_small_partition_infimum_sits_below_grid_entropy_at_matched_scales():
    a = Alphabet.uniform(8)
    rep = mrid_vs_idr_check(Bernoulli(tuple([1 / 8] * 8), a), [2, 4, 8])
    assert rep.verdict == "holds"
    # cells of the 2-grid hold 4 equiprobable symbols each
    assert rep.rows[0]["grid_entropy"] == pytest.approx(math.log(2))
    assert all(r["inf_entropy"] <= r["grid_entropy"] + 1e-12 for r in rep.rows)
    mix = Mixture([(0.5, Bernoulli((0.5, 0.5))), (0.5, Bernoulli((0.9, 0.1)))])
    assert mrid_vs_idr_check(mix, [2, 4]).verdict == "evidence-only"


def test_fit_dimension_recovers_slope():
    eps = [0.5, 0.25, 0.125]
    est = fit_dimension("x", eps, [2 * math.log(1 / e) + 1 for e in eps])
    assert est.slope == pytest.approx(2.0)
    assert est.intercept == pytest.approx(1.0)
    assert est.residual < 1e-12
    with pytest.raises(ValueError):
        fit_dimension("x", [0.1, 0.5], [1, 2])
