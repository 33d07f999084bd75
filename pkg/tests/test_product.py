import itertools
import random

import pytest

from twtl_relax.automata import accepts_upward, symbol_mask, translate
from twtl_relax.generators import random_formula, random_rules
from twtl_relax.preferences import IDENTITY, build_wfse, parse_rules, transform_cost
from twtl_relax.product import (
    ProductCycleError, RelaxedAutomaton, accepts_relaxed, construct_product, product_stats,
    product_to_dot, validate_dag,
)
from twtl_relax.twtl import norm, parse_twtl


def build(spec, rules_text, aps):
    dfa = translate(parse_twtl(spec), aps)
    return dfa, build_wfse(parse_rules(rules_text), aps), construct_product(build_wfse(parse_rules(rules_text), aps), dfa)


def test_identity_product_is_the_dfa():
    aps = ("A", "B")
    dfa, _, A = build("[H^1 A]^[0,3] | H^2 B", "", aps)
    assert A.num_states == dfa.num_states
    assert len(A.edges) == len(dfa.edges)
    assert all(e.weight == 0 and e.kind == IDENTITY for e in A.edges)
    # isomorphic: the DFA state component is a bijection preserving arcs and guards
    phi = {q: s for q, (_, s) in enumerate(A.states)}
    assert len(set(phi.values())) == A.num_states
    arcs = {(phi[e.src], e.guard.positive_terms, phi[e.dst]) for e in A.edges}
    assert arcs == {(s, g.upward_closure().positive_terms, d) for s, g, d in dfa.edges}
    assert {phi[q] for q in A.accepting} == set(dfa.accepting)


def test_single_substitution_edges():
    aps = ("C", "D")
    _, _, A = build("H^0 C", "{C} -> {D} : 3", aps)
    C, D = symbol_mask(["C"], aps), symbol_mask(["D"], aps)
    out = sorted((A.edges[i].guard.positive_terms, A.edges[i].weight) for i in A.out[A.initial])
    assert out == [((C,), 0), ((D,), 3)]
    assert all(A.edges[i].dst in A.accepting for i in A.out[A.initial])
    assert A.terms(A.initial, A.edges[A.out[A.initial][0]].dst) == {C: 0, D: 3}


def test_terms_of_true_guard_and_missing_edge():
    _, _, A = build("H^1", "", ("A",))
    (i,) = A.out[A.initial]
    assert A.terms(A.initial, A.edges[i].dst) == {0: 0}
    with pytest.raises(KeyError):
        A.terms(A.initial, A.initial)


def test_accepts_relaxed_examples():
    aps = ("C", "D")
    _, _, A = build("H^0 C", "{C} -> {D} : 3", aps)
    C, D = symbol_mask(["C"], aps), symbol_mask(["D"], aps)
    assert accepts_relaxed(A, [C])[0] == 0
    assert accepts_relaxed(A, [D])[0] == 3
    assert accepts_relaxed(A, [C | D])[0] == 0
    assert accepts_relaxed(A, [0]) is None


def test_superset_words_never_cost_more():
    rng = random.Random(2)
    aps = ("A", "B")
    for _ in range(20):
        f = random_formula(rng, aps, depth=2, budget=3)
        A = construct_product(build_wfse(random_rules(rng, aps, 2), aps), translate(f, aps))
        for word in itertools.product(range(4), repeat=norm(f) + 1):
            base = accepts_relaxed(A, word)
            if base is None:
                continue
            for k in range(len(word)):
                bigger = list(word)
                bigger[k] = 3
                more = accepts_relaxed(A, bigger)
                assert more is not None and more[0] <= base[0]


def test_relaxed_cost_matches_transducer_on_small_cases():
    rng = random.Random(8)
    aps = ("A", "B")
    for _ in range(15):
        f = random_formula(rng, aps, depth=2, budget=3)
        dfa = translate(f, aps)
        wfse = build_wfse(random_rules(rng, aps, 2), aps)
        A = construct_product(wfse, dfa)
        n = norm(f) + 1
        for word in itertools.product(range(4), repeat=n):
            got = accepts_relaxed(A, word)
            costs = [transform_cost(wfse, word, o, superset=True)
                     for o in itertools.product(range(4), repeat=n) if accepts_upward(dfa, o)]
            costs = [c for c in costs if c is not None]
            assert (got[0] if got else None) == (min(costs) if costs else None)


def test_case_study_mission_stats():
    from twtl_relax import case_study
    from twtl_relax.planner import build_pipeline
    pipe = build_pipeline(case_study.environment(), case_study.mission(), case_study.rules_text())
    stats = product_stats(pipe.automaton)
    assert stats["states"] > 0 and stats["accepting"] == 1
    validate_dag(pipe.automaton)


def test_validate_dag_reports_cycle():
    _, _, A = build("H^1 A", "", ("A",))
    e = A.edges[0]
    looped = RelaxedAutomaton(A.states, A.initial, A.edges + (type(e)(
        e.dst, e.src, e.guard, e.weight, e.kind, 0, 0, 0, 0, ()),), A.accepting, A.aps)
    with pytest.raises(ProductCycleError) as info:
        validate_dag(looped)
    assert info.value.cycle[0] == info.value.cycle[-1]


def test_dot_shows_rule_provenance():
    _, _, A = build("H^0 C", "{C} -> {D} : 3", ("C", "D"))
    text = product_to_dot(A)
    assert "/ r1 / 3" in text
