import math

import numpy as np
import pytest

from mdimlab.errors import DomainError, ResourceError
from mdimlab.metric_core import (Cover, CoverCount, FiniteMetricSystem, bowen_distance, cover_diameter,
                                 cover_join_count, covering_number, epsilon_net, growth_rate, lebesgue_cover,
                                 lebesgue_number, min_set_cover, sandwich_check, tame_growth_diagnostic)
from mdimlab.shift_systems import build_full_shift, build_rotation, cylinder_cover
from oracles import brute_cover_number, random_metric


def path_metric(p):
    x = np.arange(p, dtype=float)
    return np.abs(x[:, None] - x[None, :])


def test_metric_checks_reject_bad_input():
    with pytest.raises(DomainError):
        FiniteMetricSystem(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(DomainError):
        FiniteMetricSystem(np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], float))
    with pytest.raises(DomainError):
        FiniteMetricSystem(path_metric(3), dynamics=np.array([0, 0, 1]))


def test_bowen_distance_on_rotation_is_static():
    sys = build_rotation(1, 8)
    for n in (1, 3, 5):
        assert bowen_distance(sys, 0, 3, n) == pytest.approx(3 / 8)
    assert sys.diameter(4) == pytest.approx(0.5)


def test_bowen_matrix_is_max_over_orbit():
    d = path_metric(4)
    sys = FiniteMetricSystem(d, dynamics=np.array([1, 2, 3, 0]))
    m2 = sys.matrix(2)
    perm = sys.orbit_maps(2)[1]
    assert np.array_equal(m2, np.maximum(d, d[np.ix_(perm, perm)]))


@pytest.mark.parametrize("p,eps,expected", [(5, 1.0, 3), (5, 2.0, 2), (6, 0.5, 6), (6, 5.0, 1)])
def test_covering_number_on_a_path(p, eps, expected):
    # a diameter-eps set of integers holds floor(eps)+1 consecutive points
    c = covering_number(FiniteMetricSystem(path_metric(p)), eps)
    assert c.exact and c.value == expected == brute_cover_number(path_metric(p), eps)


def test_covering_number_rotation_cli_value():
    # 8 circle points, arcs of length <= 0.2 hold 2 neighbours -> 4 sets
    assert covering_number(build_rotation(1, 8), 0.2).value == 4
    assert covering_number(build_rotation(1, 8), 0.5).value == 1


def test_balls_versus_sets():
    sys = FiniteMetricSystem(path_metric(7))
    assert covering_number(sys, 1.0, balls=True).value == 3
    assert covering_number(sys, 1.0).value == 4


def test_min_set_cover_on_a_four_cycle():
    masks = [0b0011, 0b0110, 0b1100, 0b1001]
    lo, hi, exact = min_set_cover(masks, 0b1111)
    assert (lo, hi, exact) == (2, 2, True)


def test_cover_count_merge_and_logs():
    a = CoverCount(3, 10, "bracket")
    b = CoverCount(5, 8, "bracket")
    m = a.merge(b)
    assert (m.lower, m.upper) == (5, 8)
    assert m.log_lower == pytest.approx(math.log(5))
    assert not m.exact
    # a bracket reports its certified upper end as the value
    assert m.value == 8


def test_epsilon_net_and_lebesgue_cover():
    sys = FiniteMetricSystem(random_metric(np.random.default_rng(4), 10))
    for eps in (0.3, 0.6):
        net = epsilon_net(sys, eps / 4)
        d = sys.matrix()
        assert np.all(d[:, net].min(axis=1) < eps / 4)
        cover = lebesgue_cover(sys, eps)
        assert cover_diameter(sys, cover) <= eps + 1e-12
        assert lebesgue_number(sys, cover) >= eps / 4 - 1e-12


def test_lebesgue_number_of_partition_of_path():
    sys = FiniteMetricSystem(path_metric(4))
    cover = Cover.from_labels([0, 0, 1, 1])
    # points 1 and 2 sit at distance 1 from the other cell
    assert lebesgue_number(sys, cover) == pytest.approx(1.0)
    assert cover_diameter(sys, cover) == pytest.approx(1.0)


def test_join_count_of_cylinder_cover():
    sys = build_full_shift(2, 1, 3)
    cover = cylinder_cover(sys)
    assert [cover_join_count(sys, cover, n).value for n in (1, 2, 3)] == [2, 4, 8]


def test_sandwich_on_small_full_shift():
    sys = build_full_shift(2, 3, 3)
    rep = sandwich_check(sys, cylinder_cover(sys), 3)
    assert rep.verdict == "holds"
    assert [r["join_lower"] for r in rep.rows] == [2, 4, 8]


def test_growth_rate_full_shift_and_rotation():
    g = growth_rate(build_full_shift(2, 1, 4), 0.3, range(1, 5))
    assert g.rate == pytest.approx(math.log(2))
    g = growth_rate(build_rotation(1, 8), 0.2, range(1, 5))
    assert g.rate == pytest.approx(0.0, abs=1e-12)


def test_lazy_system_without_structure_is_refused():
    sys = build_full_shift(2, 1, 3, lazy=True)
    with pytest.raises(ResourceError):
        lebesgue_cover(sys, 0.5)


def test_tame_growth_diagnostic():
    out = tame_growth_diagnostic(lambda e: math.log(1 / e), [0.5, 1.0], [0.5, 0.25, 0.125, 0.0625])
    assert out["verdicts"] == {0.5: "decreasing", 1.0: "decreasing"}
    out = tame_growth_diagnostic([(0.5, 1.0), (0.25, 100.0), (0.125, 1e4)], [0.5])
    assert out["verdicts"][0.5] == "fails"
