import math

import numpy as np
import pytest

from mdimlab.errors import DomainError, ResourceError
from mdimlab.local_entropy import (ball_bound_check, ball_measure_bracket, ball_measures, ball_mode,
                                   bowen_ball_measure, brin_katok_estimate, decay_series, default_fit_range,
                                   epsilon0_proxy, local_entropy_bound_check, sample_centers)
from mdimlab.measures import Bernoulli, Markov, Mixture, parry_measure, point_mass, sample_orbit
from mdimlab.shift_systems import GOLDEN_MEAN, build_full_shift, build_sft
from oracles import brute_ball_measure

PHI = (1 + math.sqrt(5)) / 2
BERN = Bernoulli((0.5, 0.5))


def test_frozen_ball_measures_for_window_two():
    # derived with the brute-force oracle, then frozen
    sys = build_full_shift(2, 2, 3, lazy=True)
    center = sample_orbit(BERN, 7, 1)
    vals, mode = ball_measures(BERN, sys, center, 3, 0.3)
    assert mode == "enumerated"
    assert vals.tolist() == pytest.approx([0.09375, 0.0625, 0.03125], abs=1e-15)


@pytest.mark.parametrize("W,eps", [(1, 0.3), (1, 0.7), (2, 0.3), (2, 0.55), (1, 1.2)])
@pytest.mark.parametrize("mu", [Bernoulli((0.3, 0.7)), Markov([[0.2, 0.8], [0.6, 0.4]]), parry_measure(GOLDEN_MEAN)])
def test_transfer_recursion_matches_brute_force(W, eps, mu):
    n = 3
    sys = build_full_shift(2, W, n, lazy=True)
    P = mu.P if isinstance(mu, Markov) else np.tile(mu.probs, (2, 1))
    pi = mu.pi if isinstance(mu, Markov) else np.asarray(mu.probs)
    for seed in range(3):
        center = sample_orbit(mu, n + 2 * W, seed)
        vals, _ = ball_measures(mu, sys, center, n, eps)
        for k in range(1, n + 1):
            assert vals[k - 1] == pytest.approx(
                brute_ball_measure(P, pi, sys.alphabet.values, center, W, k, eps), abs=1e-14)


def test_three_symbol_alphabet_against_brute_force():
    mu = Bernoulli((0.2, 0.5, 0.3))
    sys = build_full_shift(3, 1, 3, lazy=True)
    center = sample_orbit(mu, 5, 4)
    vals, _ = ball_measures(mu, sys, center, 3, 0.6)
    P = np.tile(mu.probs, (3, 1))
    for k in (1, 2, 3):
        assert vals[k - 1] == pytest.approx(brute_ball_measure(P, mu.probs, sys.alphabet.values, center, 1, k, 0.6))


def test_exact_cylinder_mode_gives_cylinder_masses():
    sys = build_full_shift(2, 0, 6, lazy=True)
    assert ball_mode(sys, 0.4) == "exact_cylinder"
    center = sample_orbit(BERN, 6, 0)
    vals, mode = ball_measures(BERN, sys, center, 6, 0.4)
    assert mode == "exact_cylinder"
    assert vals.tolist() == pytest.approx([2.0 ** -n for n in range(1, 7)], rel=1e-15)
    m, _ = bowen_ball_measure(BERN, sys, center, 4, 0.4)
    assert m == pytest.approx(1 / 16)


def test_cylinder_bracket_contains_exact_value():
    mu = parry_measure(GOLDEN_MEAN)
    sys = build_sft(GOLDEN_MEAN, W=2, n_max=4, lazy=True)
    center = sample_orbit(mu, 8, 2)
    vals, _ = ball_measures(mu, sys, center, 4, 0.9)
    lo, hi = ball_measure_bracket(mu, sys, center, 4, 0.9)
    assert np.all(lo <= np.log(vals) + 1e-12) and np.all(np.log(vals) <= hi + 1e-12)
    with pytest.raises(DomainError):
        ball_measure_bracket(mu, sys, center, 4, 1.5)


def test_state_budget_falls_back_to_bracket():
    sys = build_full_shift(2, 11, 12, lazy=True)
    center = sample_orbit(BERN, 12 + 22, 0)
    with pytest.raises(ResourceError):
        ball_measures(BERN, sys, center, 12, 0.5)
    s = decay_series(BERN, sys, center, 0.5, range(1, 13))
    assert s.mode == "bracketed"
    assert all(lo <= hi + 1e-12 for lo, hi in zip(s.log_lower, s.log_upper))
    assert s.hbk_estimate == pytest.approx(math.log(2))


def test_ball_measure_is_nonincreasing_and_domain_checks():
    sys = build_full_shift(2, 2, 5, lazy=True)
    center = sample_orbit(BERN, 9, 5)
    vals, _ = ball_measures(BERN, sys, center, 5, 0.5)
    assert np.all(np.diff(vals) <= 1e-15)
    with pytest.raises(DomainError):
        ball_measures(BERN, sys, center, 6, 0.5)
    with pytest.raises(DomainError):
        ball_measures(BERN, sys, center[:4], 5, 0.5)
    with pytest.raises(DomainError):
        ball_measures(Mixture(((0.5, BERN), (0.5, point_mass(2, 0)))), sys, center, 5, 0.5)


def test_brin_katok_bernoulli_half_is_exact():
    sys = build_full_shift(2, 0, 10, lazy=True)
    est = brin_katok_estimate(BERN, sys, 0.4, centers=8)
    assert abs(est.hbk - math.log(2)) <= 1e-9
    assert est.spread <= 1e-9
    assert all(s.mode == "exact_cylinder" for s in est.series)


def test_brin_katok_parry_frozen_value():
    mu = parry_measure(GOLDEN_MEAN)
    sys = build_sft(GOLDEN_MEAN, W=5, n_max=12, lazy=True)
    est = brin_katok_estimate(mu, sys, 0.4, centers=64, seed=0)
    assert abs(est.hbk - math.log(PHI)) / math.log(PHI) < 0.02
    assert est.spread > 0


def test_brin_katok_refuses_non_ergodic_and_few_centers():
    sys = build_full_shift(2, 0, 4, lazy=True)
    mix = Mixture(((0.5, BERN), (0.5, Bernoulli((0.95, 0.05)))))
    with pytest.raises(DomainError):
        brin_katok_estimate(mix, sys, 0.4)
    with pytest.raises(DomainError):
        brin_katok_estimate(BERN, sys, 0.4, centers=2)


def test_default_fit_range_and_centers():
    sys = build_full_shift(2, 5, 12, lazy=True)
    assert default_fit_range(sys) == range(4, 13)
    c = sample_centers(BERN, sys, 12, 3, seed=7)
    assert [len(x) for x in c] == [22, 22, 22]
    assert not np.array_equal(c[0], c[1])


def test_local_entropy_bound_holds_on_bernoulli():
    sys = build_full_shift(2, 0, 8, lazy=True)
    rep = local_entropy_bound_check(BERN, sys, 0.4, centers=8)
    assert rep.verdict == "holds"
    assert rep.rows[0]["inf_entropy"] == pytest.approx(math.log(2))


def test_epsilon0_proxy_values():
    # S = log 2 at every grid scale, so the ratio drops to 1/4 only at eps = 1/16
    sys = build_full_shift(2, 0, 12, lazy=True)
    assert epsilon0_proxy(sys, 0.0, 2.0) == 0.5
    assert epsilon0_proxy(sys, 0.0, 0.5) == 0.0625


def test_ball_bound_verdicts():
    sys = build_full_shift(2, 0, 8)
    rep = ball_bound_check(BERN, sys, 0.4, 2.0, 0.0, range(1, 9), centers=5)
    assert rep.verdict == "evidence-only"
    assert rep.tolerances["inside_eps0_proxy"]
    assert all(r["ok"] for r in rep.rows)
    # below the proxy scale the check is reported as outside its regime
    rep = ball_bound_check(BERN, sys, 0.4, 0.5, 0.0, range(1, 9), centers=5)
    assert not rep.tolerances["inside_eps0_proxy"]
    assert rep.verdict == "evidence-only"
    assert any("not expected" in n for n in rep.notes)
