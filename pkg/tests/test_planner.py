import dataclasses
from fractions import Fraction

import pytest

from twtl_relax.env import build_ts
from twtl_relax.generators import tiny_instance
from twtl_relax.planner import (
    OracleTooLarge, Plan, PlanningError, brute_force_plan, pipeline_from, plan, plan_pipeline, verify,
)
from twtl_relax.twtl import parse_twtl


def two_rooms():
    return build_ts([("a", ["C"]), ("b", ["D"])], [("a", "b"), ("b", "a")], {"b": 1})


def test_single_symbol_mission_cannot_wait_for_travel():
    # The word has one symbol, taken at the start node, so the robot cannot
    # reach C in time; the only way out is rewriting C as D at weight 3.
    out = plan(two_rooms(), "H^0 C", "{C} -> {D} : 3", lam=1)
    assert out.status == "Optimal"
    assert (out.plan.control, out.plan.revision, out.plan.total) == (0, 3, 3)
    assert out.plan.rewrites[0]["rule"] == 1
    assert brute_force_plan(two_rooms(), "H^0 C", "{C} -> {D} : 3", 1) == 3


def test_window_gives_time_to_travel():
    out = plan(two_rooms(), "[H^0 C]^[0,1]", "{C} -> {D} : 3", lam=1)
    assert out.status == "Optimal"
    assert (out.plan.control, out.plan.revision, out.plan.total) == (1, 0, 1)
    assert out.plan.trajectories == {"r1": ["b", "a"]}
    assert out.plan.rewrites == []


def test_already_satisfied_mission_costs_nothing():
    ts = build_ts([("a", ["A"])], [], {"a": 1})
    out = plan(ts, "H^1 A")
    assert out.status == "Optimal"
    assert out.plan.total == 0
    assert out.plan.trajectories == {"r1": ["a", "a"]}
    assert out.plan.output_word == [["A"], ["A"]]


def test_lower_id_robot_takes_the_move():
    ts = build_ts([("a", ["A"]), ("b", ["B"])], [("a", "b")], {"a": 2})
    out = plan(ts, "H^0 A . (H^0 A & H^0 B)")
    assert out.status == "Optimal"
    assert out.plan.trajectories == {"r1": ["a", "b"], "r2": ["a", "a"]}
    assert out.plan.control == 1


def test_infeasible_plan_has_diagnosis_and_hints():
    ts = build_ts([("a", ["A"]), ("b", [])], [("a", "b")], {"a": 1}, ap_universe=["B"])
    out = plan(ts, "[H^0 B]^[0,3]")
    assert out.status == "Infeasible"
    assert out.plan is None
    assert out.diagnosis
    assert "no node is labeled B" in out.hints


def test_stage_errors_are_attributed():
    ts = two_rooms()
    with pytest.raises(PlanningError) as exc:
        plan(ts, "[H^0 C]^[0,")
    assert exc.value.stage == "spec"
    with pytest.raises(PlanningError) as exc:
        plan(ts, "H^0 C", "{C} -> D : 1")
    assert exc.value.stage == "prefs"
    with pytest.raises(PlanningError) as exc:
        plan(ts, "H^0 C", lam=0)
    assert exc.value.stage == "input"


def solved(spec="[H^0 C . H^1 D]^[0,5]", rules="{D} -> {C} : 1"):
    ts = build_ts([("a", ["C"]), ("b", ["D"]), ("c", [])],
                  [("a", "b"), ("b", "c"), ("c", "a", 2)], {"c": 2})
    out = plan(ts, spec, rules, lam=Fraction(1, 2))
    assert out.status == "Optimal"
    return ts, out


def test_verify_accepts_planner_output():
    ts, out = solved()
    rep = verify(out.plan, ts, out.pipeline.automaton, out.pipeline.formula)
    assert rep.ok, rep.failures
    assert rep.checks > 5


def test_verify_flags_illegal_move():
    ts, out = solved()
    p = dataclasses.replace(out.plan, trajectories={k: list(v) for k, v in out.plan.trajectories.items()})
    traj = p.trajectories["r1"]
    # a -> c is not an edge
    traj[:] = ["c", "a", "c"] + traj[3:]
    rep = verify(p, ts, out.pipeline.automaton)
    assert any("edge not in the transition system" in f for f in rep.failures)


def test_verify_flags_cost_tampering():
    ts, out = solved()
    p = dataclasses.replace(out.plan, total=out.plan.total - 1)
    rep = verify(p, ts, out.pipeline.automaton)
    assert any("total cost mismatch" in f for f in rep.failures)
    p = dataclasses.replace(out.plan, control=out.plan.control + 1, total=out.plan.total + 1)
    rep = verify(p, ts, out.pipeline.automaton)
    assert any("control cost mismatch" in f for f in rep.failures)


def test_verify_flags_wrong_start():
    ts, out = solved()
    p = dataclasses.replace(out.plan, trajectories={k: ["a"] + v[1:] for k, v in out.plan.trajectories.items()})
    rep = verify(p, ts, out.pipeline.automaton)
    assert any("initial placement" in f for f in rep.failures)


def test_plan_json_round_trip():
    ts, out = solved()
    import json
    back = Plan.from_dict(json.loads(out.plan.to_json()))
    assert back == out.plan
    assert verify(back, ts, out.pipeline.automaton).ok


def test_lpfile_backend_matches_builtin():
    pytest.importorskip("highspy")
    ts, out = solved()
    other = plan_pipeline(out.pipeline, Fraction(1, 2), backend="lpfile")
    assert other.status == "Optimal"
    assert other.plan.total == out.plan.total


@pytest.mark.parametrize("seed", range(30))
def test_revision_never_grows_with_lambda(seed):
    ts, formula, rules, _ = tiny_instance(seed)
    pipe = pipeline_from(ts, formula, rules)
    if not pipe.automaton.accepting:
        pytest.skip("no accepting state")
    revisions = []
    for lam in (Fraction(1, 8), Fraction(1), Fraction(8)):
        out = plan_pipeline(pipe, lam)
        if out.status != "Optimal":
            pytest.skip("infeasible")
        revisions.append(out.plan.revision)
    assert revisions == sorted(revisions, reverse=True)


@pytest.mark.parametrize("seed", range(40))
def test_milp_matches_exhaustive_search(seed):
    ts, formula, rules, lam = tiny_instance(seed)
    pipe = pipeline_from(ts, formula, rules)
    try:
        ref = brute_force_plan(ts, formula, rules, lam)
    except OracleTooLarge:
        pytest.skip("instance too large for the oracle")
    if not pipe.automaton.accepting:
        assert ref is None
        return
    out = plan_pipeline(pipe, lam)
    if ref is None:
        assert out.status == "Infeasible"
    else:
        assert out.status == "Optimal"
        assert out.plan.total == ref


def test_oracle_refuses_oversized_instances():
    ts = build_ts([(f"n{i}", ["A"]) for i in range(12)], [], {"n0": 6})
    with pytest.raises(OracleTooLarge):
        brute_force_plan(ts, parse_twtl("[H^0 A]^[0,4]"), max_states=100)
