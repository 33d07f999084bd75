import random
from fractions import Fraction

import pytest

from twtl_relax.automata import symbol_mask
from twtl_relax.preferences import (
    IDENTITY, PAIR, RewriteRule, RuleError, build_wfse, pair_matches, parse_rules, transform_cost,
)

APS = ("A", "B", "C", "D")


def m(*names):
    return symbol_mask(names, APS)


def test_parse_simple_rules():
    (r1,) = parse_rules("{C} -> {D} : 3")
    assert r1.lhs == (frozenset("C"),) and r1.rhs == (frozenset("D"),) and r1.weight == 3
    (r2,) = parse_rules("{A} -> {B,D} : 2")
    assert r2.rhs == (frozenset({"B", "D"}),) and r2.weight == 2
    (r3,) = parse_rules("{S_A1} -> {S1p,S2p} : 5")
    assert r3.lhs == (frozenset({"S_A1"}),) and r3.rhs == (frozenset({"S1p", "S2p"}),)


def test_parse_words_comments_and_ids():
    rules = parse_rules("# header\n{A}{B} -> {C}{D} : 2.5   # two symbols\n\n{A} -> {} : 0\n")
    assert [r.rule_id for r in rules] == [1, 2]
    assert len(rules[0].lhs) == 2 and rules[0].weight == Fraction(5, 2)
    assert rules[1].rhs == (frozenset(),)


@pytest.mark.parametrize("text, fragment", [
    ("{A}{B} -> {C} : 1", "lhs has 2 symbols"),
    ("{} -> {C} : 1", "empty symbol"),
    ("{A} -> {C} : -1", "negative"),
    ("{A} -> {C}", "weight"),
    ("{A} {C} : 1", "->"),
    ("{A} -> {C} : x", "invalid weight"),
    ("{A!} -> {C} : 1", "invalid proposition"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(RuleError, match=fragment):
        parse_rules(text)


def test_unknown_propositions_need_opt_in():
    with pytest.raises(RuleError, match="unknown propositions"):
        parse_rules("{A} -> {Z} : 1", ap_universe=["A"])
    assert parse_rules("{A} -> {Z} : 1", ap_universe=["A"], allow_new_aps=True)


def test_wfse_without_rules():
    w = build_wfse([], APS)
    assert w.num_states == 1
    assert [e.kind for e in w.edges] == [IDENTITY]


def test_wfse_single_rule():
    w = build_wfse(parse_rules("{C} -> {D} : 3"), APS)
    assert w.num_states == 1
    pair = [e for e in w.edges if e.kind == PAIR]
    assert len(pair) == 1
    e = pair[0]
    assert (e.src, e.dst, e.exec_mask, e.spec_mask, e.weight) == (0, 0, m("D"), m("C"), 3)


def test_wfse_chain_rule():
    w = build_wfse(parse_rules("{A}{B} -> {C}{D} : 2"), APS)
    assert w.num_states == 2
    chain = [(e.src, e.dst, e.exec_mask, e.spec_mask, e.weight) for e in w.edges if e.kind == PAIR]
    assert chain == [(0, 1, m("C"), m("A"), 2), (1, 0, m("D"), m("B"), 0)]


def test_transform_cost_examples():
    w = build_wfse(parse_rules("{C} -> {D} : 3\n{A}{B} -> {C}{D} : 2"), APS)
    assert transform_cost(w, [m("A"), m("A")], [m("A"), m("A")]) == 0
    assert transform_cost(w, [m("D")], [m("C")]) == 3
    assert transform_cost(w, [m("C"), m("D")], [m("A"), m("B")]) == 2
    assert transform_cost(w, [m("C")], [m("A")]) is None  # chain left unfinished
    with pytest.raises(ValueError):
        transform_cost(w, [m("A")], [])


def test_rule_keeps_context():
    w = build_wfse(parse_rules("{A} -> {B,D} : 2"), APS)
    assert transform_cost(w, [m("B", "C", "D")], [m("A", "C")]) == 2
    assert transform_cost(w, [m("B", "D")], [m("A", "C")]) is None


def test_pair_matching_modes():
    w = build_wfse(parse_rules("{C} -> {D} : 3"), APS)
    rule = next(e for e in w.edges if e.kind == PAIR)
    ident = w.edges[0]
    assert pair_matches(ident, m("A"), m("A"))
    assert not pair_matches(ident, m("A", "B"), m("A"))
    assert pair_matches(ident, m("A", "B"), m("A"), superset=True)
    assert pair_matches(rule, m("D"), m("C"))
    assert not pair_matches(rule, m("D", "A"), m("C"))
    assert pair_matches(rule, m("D", "A"), m("C"), superset=True)


def test_disjoint_single_symbol_rules_fire_together():
    w = build_wfse(parse_rules("{A} -> {B} : 2\n{C} -> {D} : 3\n{A} -> {D} : 1"), APS)
    assert transform_cost(w, [m("B", "D")], [m("A", "C")]) == 5
    assert transform_cost(w, [m("D")], [m("A", "C")]) == 4  # rules 3 and 2
    # overlapping left sides never combine
    assert transform_cost(w, [m("B", "D")], [m("A")]) is None
    bundle = [e for e in w.edges if e.parts]
    assert all(len(e.parts) >= 2 for e in bundle)


def test_bundle_size_cap():
    # only all three rules together turn {A,B,C} into {D}
    rules = parse_rules("{A} -> {D} : 1\n{B} -> {D} : 1\n{C} -> {D} : 1")
    assert transform_cost(build_wfse(rules, APS, max_bundle=3), [m("D")], [m("A", "B", "C")]) == 3
    assert transform_cost(build_wfse(rules, APS, max_bundle=2), [m("D")], [m("A", "B", "C")]) is None


def test_identity_cost_zero_and_more_rules_never_hurt():
    rng = random.Random(3)
    for _ in range(50):
        words = [[rng.randrange(16) for _ in range(3)] for _ in range(2)]
        rules = [RewriteRule((frozenset([rng.choice(APS)]),), (frozenset([rng.choice(APS)]),),
                             Fraction(rng.randint(0, 4)), k + 1) for k in range(3)]
        base = build_wfse(rules[:2], APS)
        more = build_wfse(rules, APS)
        assert transform_cost(base, words[0], words[0]) == 0
        before = transform_cost(base, words[0], words[1])
        after = transform_cost(more, words[0], words[1])
        if before is not None:
            assert after is not None and after <= before
            assert before >= 0
