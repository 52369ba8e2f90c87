from fractions import Fraction as F

import pytest

from rarprob import analysis
from rarprob.fixtures.car import car_model_dict
from rarprob.model import enroll, model_from_dict
from rarprob.oracle import StrategySearchConfig, can_reach


@pytest.fixture(scope="module")
def running(running_model):
    return enroll(running_model), running_model.goal


@pytest.mark.parametrize("s, expected", [(2, True), (F(1, 2), False), (5, True), (1, True), (3, True)])
def test_running_example_examples(running, s, expected):
    em, goal = running
    res = can_reach(em, goal, [s])
    assert res.reachable is expected
    assert not res.inconclusive


def test_witness_paths(running):
    em, goal = running
    via_l3 = can_reach(em, goal, [2]).witness
    assert [w["location"] for w in via_l3] == ["l0", "l3[r1]", "l4[r1]"]
    assert via_l3[0]["delay"] == 2 and via_l3[0]["action"] == "r_0"
    via_l1 = can_reach(em, goal, [5]).witness
    assert [w["location"] for w in via_l1] == ["l0", "l1", "l2"]
    assert via_l1[-1]["action"] == "goal"


def test_oracle_successes_lie_in_the_sample_domain(running_pipeline):
    em, goal = running_pipeline["em"], running_pipeline["model"].goal
    dom = analysis.union_sample_domains(running_pipeline["pieces"])
    for k in range(0, 49):
        s = F(k, 8)
        if can_reach(em, goal, [s]).reachable:
            assert dom.contains((s,))


def test_car_successes_lie_in_the_sample_domain():
    m = model_from_dict(car_model_dict("A", 0, singular=True))
    em = enroll(m)
    tree = analysis.forward_flowpipe(em)
    pieces = [
        analysis.extract_sample_domain(analysis.refine_trace(tree, t, em), em)
        for t in analysis.collect_goal_traces(tree, m.goal, em)
    ]
    dom = analysis.union_sample_domains(pieces)
    cfg = StrategySearchConfig(time_grid=F(1), init_grid=3, max_jumps=6)
    agree = 0
    grid = [F(k, 2) for k in range(0, 25, 3)]
    for c in grid:
        for d in grid:
            res = can_reach(em, m.goal, [c, d], cfg)
            if res.reachable:
                assert dom.contains((c, d))
            agree += res.reachable == dom.contains((c, d))
    assert agree >= 0.9 * len(grid) ** 2


def test_budget_exhaustion_is_inconclusive(running):
    em, goal = running
    res = can_reach(em, goal, [5], StrategySearchConfig(budget=2))
    assert not res.reachable and res.inconclusive


def test_bad_inputs(running):
    em, goal = running
    with pytest.raises(ValueError):
        can_reach(em, goal, [1, 2])
    with pytest.raises(ValueError):
        can_reach(em, goal, [-1])
    with pytest.raises(ValueError):
        StrategySearchConfig(time_grid=0)
