import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import fixture_path
from rarprob.fixtures.car import car_model_dict
from rarprob.geometry import Q
from rarprob.model import (
    EnrollmentError,
    GoalSpecification,
    ModelError,
    enroll,
    load_model,
    model_from_dict,
    parse_constraint,
    parse_interval,
    validate,
)


@pytest.fixture
def running_doc():
    with open(fixture_path("running_example.json")) as fh:
        return json.load(fh)


def rules(doc):
    return {v.rule for v in validate(model_from_dict(doc))}


def test_running_example_is_well_formed(running_model):
    assert validate(running_model) == []
    assert running_model.var_c == ("x", "y")
    assert running_model.var_r == ("r",)


def test_active_clock_without_stochastic_jump(running_doc):
    running_doc["stochastic_edges"] = []
    assert "rar-active-clock-jump" in rules(running_doc)


def test_reset_is_rejected_for_analysis(running_doc):
    running_doc["edges"][2]["reset"] = ["x"]
    running_doc["edges"][2]["post"] = {"x": [0, 0]}
    assert "analyzer-reset-unsupported" in rules(running_doc)


def test_pre_post_mismatch(running_doc):
    running_doc["edges"][1]["post"] = {"y": [6, None]}
    assert "ra-pre-post" in rules(running_doc)


def test_post_outside_target_invariant(running_doc):
    running_doc["edges"][0]["guard"] = {"x": [4, 4], "y": [8, 9]}
    assert "ra-post-invariant" in rules(running_doc)


def test_blocking_upper_bound(running_doc):
    # drop the x = 4 exit: time is stuck at x = 4 unless r expires
    del running_doc["edges"][0]
    assert "ra-nonblocking" in rules(running_doc)


def test_stochastic_jump_needs_invariant_inclusion(running_doc):
    running_doc["locations"]["l3"]["invariant"] = {"x": [None, 3]}
    assert "rar-invariant-inclusion" in rules(running_doc)


def test_duplicate_clock_on_one_location(running_doc):
    running_doc["stochastic_edges"].append({"source": "l0", "clock": "r", "target": "l1"})
    assert "rar-distinct-clocks" in rules(running_doc)


def test_no_initial_location(running_doc):
    del running_doc["locations"]["l0"]["initial"]
    assert "ra-initial" in rules(running_doc)


@pytest.mark.parametrize(
    "mutate, msg",
    [
        (lambda d: d.pop("variables"), "variables"),
        (lambda d: d["edges"][0].update(target="nowhere"), "unknown target"),
        (lambda d: d["locations"]["l0"]["flow"].update(z=[0, 1]), "unknown variables"),
        (lambda d: d["locations"]["l0"]["clock_rates"].update(r=2), "rate 0 or 1"),
        (lambda d: d["distributions"].pop("r"), "no distribution"),
        (lambda d: d["locations"]["l0"]["invariant"].update(x=[5, 4]), "empty interval"),
        (lambda d: d["goal"].update(constraints=["x <=< 3"]), "cannot parse"),
        (lambda d: d.update(expiration_bounds={"r": -1}), "nonnegative"),
    ],
)
def test_malformed_documents(running_doc, mutate, msg):
    mutate(running_doc)
    with pytest.raises(ModelError, match=msg):
        model_from_dict(running_doc)


def test_load_model_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ModelError, match="invalid JSON"):
        load_model(p)
    with pytest.raises(ModelError, match="cannot read"):
        load_model(tmp_path / "missing.json")


def test_intervals():
    assert parse_interval([None, "1/3"]) == (None, Q(1, 3))
    assert parse_interval([0.5, 2]) == (Q(1, 2), Q(2))
    with pytest.raises(ModelError):
        parse_interval([1])


def test_constraint_grammar():
    (row,) = parse_constraint("2*x - y <= 3/2", ["x", "y"])
    assert row == ((Q(2), Q(-1)), Q(3, 2))
    (row,) = parse_constraint("y >= 5/3 + 1/3*x", ["x", "y"])
    assert row == ((Q(1, 3), Q(-1)), Q(-5, 3))
    assert len(parse_constraint("x = 0", ["x"])) == 2
    for bad in ["x + <= 3", "x <= 3 <= 4", "z <= 1", "x 3 <= 1", "x ! 2"]:
        with pytest.raises(ModelError):
            parse_constraint(bad, ["x", "y"])


@settings(max_examples=100)
@given(st.lists(st.integers(-9, 9), min_size=2, max_size=2), st.fractions(-20, 20, max_denominator=7))
def test_constraint_grammar_roundtrip(coeffs, rhs):
    text = " + ".join(f"{c}*{v}" for c, v in zip(coeffs, "xy")) + f" <= {rhs.numerator}/{rhs.denominator}"
    text = text.replace("+ -", "- ")
    assert parse_constraint(text, ["x", "y"]) == [(tuple(Q(c) for c in coeffs), Q(rhs))]


def test_goal_specification(running_model):
    g = running_model.goal
    assert g.goal_locations is None and g.matches("l4")
    spec = GoalSpecification.parse(["l2"], ["x <= 1"], ["x", "y"])
    assert spec.matches("l2") and not spec.matches("l4")
    assert spec.goal_region.contains_point((1, 100))
    emb = spec.region_in(3, (0, 1))
    assert emb.dim == 3 and emb.contains_point((0, 0, 7))


# --------------------------------------------------------------------------- enrollment
def test_running_example_enrollment(running_model):
    em = enroll(running_model)
    assert em.var_names == ("x", "y", "r_0")
    assert em.d_r == 1
    assert set(em.locations) == {"l0", "l1", "l2", "l3[r1]", "l4[r1]"}
    (stoch,) = [e for e in em.edges if e.kind == "stochastic"]
    assert (stoch.source, stoch.target, stoch.delay) == ("l0", "l3[r1]", 0)
    l0 = em.locations["l0"]
    assert l0.flow[2] == (1, 1) and em.locations["l3[r1]"].flow[2] == (0, 0)
    assert l0.init.bounds(2) == (0, 0)


def test_enrollment_adds_global_clock(running_model):
    em = enroll(running_model, t_max=10)
    assert em.var_names == ("x", "y", "g", "r_0")
    for loc in em.locations.values():
        assert loc.flow[2] == (1, 1)
        assert loc.invariant.bounds(2)[1] == 10 or loc.invariant.is_empty()


def _stopwatch_loop():
    # one clock that restarts after a deterministic pause, like the enrollment figure
    return {
        "variables": ["x"],
        "clocks": ["r"],
        "distributions": {"r": {"kind": "exponential", "lambda": 1}},
        "locations": {
            "l": {"flow": {"x": [1, 1]}, "clock_rates": {"r": 1}, "initial": {"x": [0, 0]}},
            "lt": {"invariant": {"x": [None, 2]}, "flow": {"x": [1, 1]}},
        },
        "edges": [{"source": "lt", "target": "l", "guard": {"x": [2, 2]}}],
        "stochastic_edges": [{"source": "l", "clock": "r", "target": "lt"}],
        "goal": {"locations": ["lt"], "constraints": ["x >= 0"]},
    }


def test_enrollment_with_two_expirations():
    m = model_from_dict(_stopwatch_loop())
    em = enroll(m, {"r": 2}, t_max=3)
    assert [d.name for d in em.delays] == ["r_0", "r_1"]
    assert set(em.locations) == {"l", "lt[r1]", "l[r1]", "lt[r2]"}
    assert em.locations["l[r1]"].flow[em.delays[1].dim] == (1, 1)
    assert em.locations["l[r1]"].flow[em.delays[0].dim] == (0, 0)


def test_enrollment_is_deterministic(running_model):
    a, b = enroll(running_model), enroll(running_model)
    assert a.var_names == b.var_names
    assert a.locations == b.locations and a.edges == b.edges


def test_zero_bound_with_reachable_jump(running_model):
    with pytest.raises(EnrollmentError):
        enroll(running_model, {"r": 0})


def test_model_without_clocks_is_unchanged_but_for_g(running_doc):
    running_doc["clocks"] = []
    running_doc["distributions"] = {}
    running_doc["stochastic_edges"] = []
    del running_doc["expiration_bounds"]
    del running_doc["locations"]["l0"]["clock_rates"]
    m = model_from_dict(running_doc)
    em = enroll(m, t_max=5)
    assert em.d_r == 0 and em.var_names == ("x", "y", "g")
    assert set(em.locations) == {"l0", "l1", "l2"}


@pytest.mark.parametrize("detours, delays", [(0, 2), (1, 5), (2, 8)])
def test_car_delay_counts(detours, delays):
    m = model_from_dict(car_model_dict("A", detours))
    assert validate(m) == []
    assert enroll(m).d_r == delays


@pytest.mark.parametrize("variant", ["A", "AB", "ABC"])
def test_car_variants_validate(variant):
    for singular in (False, True):
        assert validate(model_from_dict(car_model_dict(variant, 1, singular))) == []


def test_bundled_car_fixtures_match_generator():
    for d in (0, 1):
        for kind in ("rectangular", "singular"):
            with open(fixture_path(f"car_A_{kind}_{d}.json")) as fh:
                assert json.load(fh) == json.loads(json.dumps(car_model_dict("A", d, kind == "singular")))
