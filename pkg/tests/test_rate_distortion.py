import math

import numpy as np
import pytest

from mdimlab.errors import DomainError, ResourceError
from mdimlab.measures import Bernoulli, Mixture, point_mass
from mdimlab.rate_distortion import (RDSolver, blahut_arimoto, decomposition_inequality_check, distortion_rate,
                                     ergodic_dominance_experiment, inverse_consistency_check, make_problem,
                                     mutual_information, rd_curve, rd_dimension, rd_limit_estimate, rd_value)
from oracles import binary_entropy, grid_rate_distortion


def test_mutual_information_of_independent_and_copy():
    assert mutual_information(np.outer([0.3, 0.7], [0.5, 0.5])) == pytest.approx(0.0, abs=1e-15)
    assert mutual_information(np.diag([0.5, 0.5])) == pytest.approx(math.log(2))


@pytest.mark.parametrize("q,D", [(0.5, 0.1), (0.5, 0.25), (0.3, 0.1), (0.3, 0.2)])
def test_binary_hamming_closed_form(q, D):
    # on the alphabet {0, 1} the L^1 cost is Hamming distortion: R(D) = h(q) - h(D)
    v = rd_value(Bernoulli((q, 1 - q)), 1, 1.0, D)
    want = binary_entropy(q) - binary_entropy(D)
    assert v.lower - 1e-9 <= want <= v.upper + 1e-9
    assert v.value == pytest.approx(want, abs=1e-4)


def test_block_rate_of_iid_source_single_letterizes():
    mu = Bernoulli((0.5, 0.5))
    v = rd_value(mu, 3, 1.0, 0.1, reproduction="all")
    assert v.value == pytest.approx(math.log(2) - binary_entropy(0.1), abs=1e-4)


@pytest.mark.parametrize("D", [0.05, 0.15, 0.3])
def test_three_letter_source_against_grid_oracle(D):
    mu = Bernoulli((0.2, 0.5, 0.3))
    prob = make_problem(mu, 1, 2.0)
    want = grid_rate_distortion(mu.probs, prob.cost, D, steps=50)
    v = rd_value(mu, 1, 2.0, math.sqrt(D))
    assert v.value == pytest.approx(want, abs=2e-3)


def test_blahut_arimoto_point_is_on_the_oracle_curve():
    mu = Bernoulli((0.4, 0.6))
    prob = make_problem(mu, 1, 1.0)
    res = blahut_arimoto(prob, 3.0)
    assert res.converged
    assert res.R == pytest.approx(grid_rate_distortion(mu.probs, prob.cost, res.D, steps=400), abs=1e-4)


def test_zero_rate_and_full_rate_edges():
    mu = Bernoulli((0.3, 0.7))
    assert rd_value(mu, 1, 1.0, 1.0).value == 0.0
    assert rd_value(mu, 1, 1.0, 0.31).value == 0.0  # d_max = 0.3
    assert distortion_rate(mu, 1, 1.0, 0.0).value == pytest.approx(0.3)
    assert distortion_rate(mu, 1, 1.0, 1.0).value == 0.0


def test_distortion_rate_inverts_rate_distortion():
    mu = Bernoulli((0.5, 0.5))
    solver = RDSolver(make_problem(mu, 1, 1.0))
    d = distortion_rate(mu, 1, 1.0, 0.2, solver=solver)
    r = rd_value(mu, 1, 1.0, d.value, solver=solver)
    assert r.value == pytest.approx(0.2, abs=1e-6)
    rep = inverse_consistency_check(mu, 1, 1.0, [0.1, 0.2, 0.4])
    assert rep.verdict == "holds"


def test_curve_is_decreasing_and_convex():
    pts = rd_curve(Bernoulli((0.2, 0.5, 0.3)), 1, 2.0).points
    D = np.array([p.D for p in pts])
    R = np.array([p.R for p in pts])
    assert np.all(np.diff(R) <= 1e-9)
    s = np.diff(R) / np.maximum(np.diff(D), 1e-300)
    keep = np.diff(D) > 1e-9
    assert np.all(np.diff(s[keep]) >= -1e-6)


def test_limit_estimate_is_running_minimum():
    best, table = rd_limit_estimate(Bernoulli((0.5, 0.5)), 1.0, 0.1, [1, 2])
    assert best == min(r["R"] for r in table)
    assert table[-1]["running_min"] == best


def test_mixture_checks():
    mix = Mixture(((0.5, Bernoulli((0.5, 0.5))), (0.5, point_mass(2, 0))))
    rep = ergodic_dominance_experiment(mix, 1.0, [0.1, 0.2])
    assert rep.verdict == "holds"
    assert all(r["dominating"] == 0 for r in rep.rows)
    dec = decomposition_inequality_check(mix, 2, 1.0, [0.1, 0.3])
    assert all(r["offset_ok"] for r in dec.rows)


def test_rd_dimension_saturates_for_finite_alphabet():
    est = rd_dimension(Bernoulli((0.5, 0.5)), 2.0, (0.25, 0.125, 0.0625))
    assert est.values[-1] == pytest.approx(math.log(2) - binary_entropy(0.0625 ** 2), abs=1e-3)
    assert any("saturation" in n for n in est.notes)


def test_domain_and_resource_errors():
    with pytest.raises(DomainError):
        make_problem(Bernoulli((0.5, 0.5)), 1, 0.5)
    with pytest.raises(ResourceError):
        make_problem(Bernoulli((0.5, 0.5)), 13, 1.0, reproduction="all")
    with pytest.raises(DomainError):
        rd_value(Bernoulli((0.5, 0.5)), 1, 1.0, 0.0)
