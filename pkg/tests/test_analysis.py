import pytest

from conftest import poly
from rarprob import analysis
from rarprob.fixtures.car import car_model_dict
from rarprob.geometry import Polytope
from rarprob.model import GoalSpecification, enroll, model_from_dict

XYR = ("x", "y", "r")


def test_reach_tree_shape(running_pipeline):
    tree = running_pipeline["tree"]
    assert [n.location for n in tree.nodes] == ["l0", "l1", "l3[r1]", "l2", "l4[r1]"]
    assert [n.parent for n in tree.nodes] == [None, 0, 0, 1, 2]
    assert tree.warnings == []
    doc = tree.to_dict()
    assert len(doc["edges"]) == 4 and doc["variables"] == ["x", "y", "r_0"]


def test_goal_traces(running_pipeline):
    traces = running_pipeline["traces"]
    assert [tr.path for tr in traces] == [(0, 1, 3), (0, 2, 4)]
    assert traces[0].goal_set == poly(XYR, "x <= 10", "y >= 8", "y <= 7/2 + 1/2*x", "r = 3")
    assert traces[1].goal_set == poly(XYR, "x >= 8", "x <= 10", "y >= 10", "y <= 11", "r >= 1", "r <= 3")


def test_refined_segments_are_sound(running_pipeline):
    for ref in running_pipeline["refs"]:
        for hat, seg in zip(ref.refined_segments, ref.trace.forward_segments):
            assert hat.is_subset(seg)
        for k, j in enumerate(ref.intermediate_goals[1:-1], start=1):
            assert j.is_subset(ref.trace.forward_segments[k])


def test_expiration_maps(running_pipeline):
    em = running_pipeline["em"]
    r0, r1 = running_pipeline["refs"]
    assert r0.expiration_map == {}
    assert r1.expiration_map == {2: 0}
    for r in (r0, r1):
        assert len(r.expiration_map) <= em.d_r


def test_sample_domain_pieces(running_pipeline):
    p0, p1 = running_pipeline["pieces"]
    assert p0 == poly(["s"], "s >= 3")
    assert p1 == poly(["s"], "s >= 1", "s <= 3")


def test_forward_determinism(running_model):
    em = enroll(running_model)
    a, b = analysis.forward_flowpipe(em), analysis.forward_flowpipe(em)
    assert [n.segment for n in a.nodes] == [n.segment for n in b.nodes]


def test_jump_bound_warning(running_model, caplog):
    tree = analysis.forward_flowpipe(enroll(running_model), jump_bound=1)
    assert len(tree) == 3
    assert tree.warnings and "jump bound" in tree.warnings[0]


def test_disjoint_goal_gives_no_traces(running_model):
    em = enroll(running_model)
    tree = analysis.forward_flowpipe(em)
    goal = GoalSpecification.parse(None, ["x <= -1"], running_model.var_c)
    assert analysis.collect_goal_traces(tree, goal, em) == []


def test_goal_at_the_root(running_model):
    em = enroll(running_model)
    tree = analysis.forward_flowpipe(em)
    goal = GoalSpecification.parse(["l0"], ["x <= 2"], running_model.var_c)
    (tr,) = analysis.collect_goal_traces(tree, goal, em)
    ref = analysis.refine_trace(tree, tr, em)
    assert len(ref.refined_segments) == 1
    assert ref.intermediate_goals[-1] == em.locations["l0"].init
    # nothing expires, and the goal can be hit before r passes 1
    assert analysis.extract_sample_domain(ref, em) == Polytope.box([(0, None)])


def test_model_without_jumps_is_a_single_node(running_model):
    em = enroll(running_model)
    em.edges = ()
    assert len(analysis.forward_flowpipe(em)) == 1


def test_union_membership():
    a = poly(["s"], "s >= 3")
    b = poly(["s"], "s >= 1", "s <= 3")
    u = analysis.union_sample_domains([a, b])
    assert u.contains((2,)) and not u.contains((0.5,))
    assert list(u.membership([[2.0], [0.5], [7.0]])) == [True, False, True]
    single = analysis.union_sample_domains([a])
    assert single.pieces == (a,)


def test_union_of_disjoint_boxes():
    a = Polytope.box([(0, 1), (0, 1)])
    b = Polytope.box([(2, 3), (2, 3)])
    u = analysis.union_sample_domains([a, b, Polytope.empty(2)])
    assert len(u.pieces) == 2 and u.provenance == (0, 1)
    pts = [[0.5, 0.5], [2.5, 2.5], [1.5, 1.5], [0.5, 2.5]]
    assert list(u.membership(pts)) == [True, True, False, False]
    for p in pts:
        assert u.contains(p) == (a.contains_point(p) or b.contains_point(p))


def test_union_dimension_mismatch():
    with pytest.raises(ValueError):
        analysis.union_sample_domains([Polytope.universe(1), Polytope.universe(2)])


def test_resets_are_rejected(running_model):
    em = enroll(running_model)
    e = em.edges[0]
    em.edges = (type(e)(e.index, e.source, e.target, e.kind, e.label, e.guard, ("x",), e.clock, e.delay),) + em.edges[1:]
    with pytest.raises(NotImplementedError):
        analysis.forward_flowpipe(em)


@pytest.mark.parametrize("singular", [False, True])
def test_car_without_detours(singular):
    m = model_from_dict(car_model_dict("A", 0, singular))
    em = enroll(m)
    tree = analysis.forward_flowpipe(em)
    traces = analysis.collect_goal_traces(tree, m.goal, em)
    assert (em.d_r, len(tree), len(traces)) == (2, 8, 2)
    names = ["c", "d"]
    pieces = [analysis.extract_sample_domain(analysis.refine_trace(tree, t, em), em) for t in traces]
    low = "8/3" if singular else "4/3"
    assert pieces[0] == poly(names, "c >= 0", "c <= 10/3", "d >= 3*c")
    assert pieces[1] == poly(names, f"c >= {low}", "c <= 11", "d >= 10")
