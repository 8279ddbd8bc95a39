import pytest

from helpers import class_corpus
from twograph import fixtures
from twograph.config import DecisionConfig
from twograph.decision import (
    equivalent,
    filter_grammar,
    graph_profile,
    includes,
    is_empty,
    member,
    min_witness,
    recognizer_for,
    refine,
)
from twograph.errors import BudgetExceeded, ClassMismatch, NotInClassDomain, NotStratified
from twograph.grammar import (
    ITER,
    BASE,
    BaseRule,
    TermRule,
    alternative_form,
    classify_rules,
    enumerate_language,
    footprint,
    footprint_leq,
    grammar,
    grammar_from_json,
    is_aperiodic_grammar,
    is_stratified,
)
from twograph.graph_core import TREE, Graph, GraphSet, Term
from twograph.recognizer import is_aperiodic_algebra

STARS = {fixtures.star(2), fixtures.star(4), fixtures.star(6)}


def empty_tree_grammar():
    return grammar(
        fixtures.TREE_B,
        [("X", [1], ITER), ("Y", [1], BASE)],
        [BaseRule("X", (("Y", 1),)), TermRule("Y", Term.ext("b", Term.nt("X")))],
        ["X"],
    )


# filtering


def test_filter_universal_by_even():
    r = recognizer_for(fixtures.even_stars())
    out = enumerate_language(filter_grammar(fixtures.universal_tree(), r, r.accepting), 6)
    assert out == GraphSet(STARS)


def test_filter_accept_all_and_none():
    g = fixtures.even_children()
    r = recognizer_for(fixtures.gap_stars())
    assert enumerate_language(filter_grammar(g, r, lambda a: True), 5) == enumerate_language(g, 5)
    assert is_empty(filter_grammar(g, r, lambda a: False))


def test_filter_class_mismatch():
    with pytest.raises(ClassMismatch):
        includes(fixtures.even_stars(), fixtures.sp_paths())


# emptiness


def test_emptiness_examples():
    assert not is_empty(fixtures.universal_tree())
    assert is_empty(empty_tree_grammar())
    r = recognizer_for(fixtures.even_stars())
    assert is_empty(filter_grammar(fixtures.even_stars(), r, lambda a: not r.accepting(a)))


# membership


def test_member_examples():
    g = fixtures.even_stars()
    assert member(fixtures.star(4), g)
    assert not member(fixtures.star(3), g)
    u = fixtures.universal_tree()
    assert all(member(h, u) for h in class_corpus(TREE, ("b",), 5))


def test_member_outside_domain():
    g = fixtures.even_stars()
    cycle = Graph.build([0, 1], [("b", (0, 1)), ("b", (1, 0))], {1: 0})
    assert not member(cycle, g)
    with pytest.raises(NotInClassDomain):
        member(cycle, g, strict=True)
    with pytest.raises(NotInClassDomain):
        member(Graph.build([0, 1], [("z", (0, 1))], {1: 0}), g, strict=True)


def test_member_rotation_sensitive_fixture():
    g = fixtures.tw2_rotation_sensitive()
    a = "a"
    tri = Graph.build([0, 1, 2, 3], [(a, (0, 1)), (a, (1, 2)), (a, (0, 2)), (a, (1, 3))], {1: 0})
    members = enumerate_language(g, 5)
    assert member(tri, g) == (tri in members)
    assert len(members) > 0 and all(member(h, g) for h in members)


def test_graph_profile_matches_member():
    g = fixtures.triangle_cacti()
    r = recognizer_for(g)
    for h in enumerate_language(g, 4):
        assert r.accepting(graph_profile(r, h))


# inclusion and equivalence


def test_include_worked_pairs():
    v = includes(fixtures.even_stars(), fixtures.universal_tree())
    assert v.holds and v.witness is None
    v = includes(fixtures.universal_tree(), fixtures.even_stars())
    assert not v.holds
    assert v.witness.n_edges <= 1
    assert member(v.witness, fixtures.universal_tree()) and not member(v.witness, fixtures.even_stars())


@pytest.mark.parametrize("name", ["even", "mod", "gaps", "even_children", "sp_even", "sp_paths", "dsp_even", "triangle_cacti"])
def test_include_reflexive(name):
    assert includes(fixtures.get(name), fixtures.get(name)).holds


def test_verdict_json():
    doc = includes(fixtures.universal_tree(), fixtures.even_stars()).to_json()
    assert set(doc) == {"holds", "witness", "stats"}
    assert doc["holds"] is False and doc["witness"]["class"] == "tree"
    assert set(doc["stats"]) == {"reachable", "filtered_rules", "millis"}


def test_witness_is_smallest():
    v = includes(fixtures.universal_sp(), fixtures.sp_even_bundles())
    lhs = enumerate_language(fixtures.universal_sp(), 4)
    rhs = enumerate_language(fixtures.sp_even_bundles(), 4)
    smallest = min(h.n_edges for h in lhs if h not in rhs)
    assert v.witness.n_edges == smallest


def test_min_witness_none_for_empty():
    assert min_witness(empty_tree_grammar()) is None


def test_equivalent_examples():
    g = fixtures.even_stars()
    assert equivalent(g, g).holds
    v = equivalent(g, fixtures.universal_tree())
    assert not v.holds and v.witness is not None
    sp = fixtures.sp_even_bundles()
    assert equivalent(sp, alternative_form(sp)).holds


def test_include_free_rules_on_left():
    # X -> ext_b(ext_b(X0)) nests two extends in one rule, so it is free
    doc = {
        "class": "tree",
        "alphabet": {"b": 2},
        "nonterminals": [{"name": "X", "sort": [1], "kind": "X"}, {"name": "X0", "sort": [1], "kind": "X"}],
        "rules": [
            {"lhs": "X", "rhs": {"op": "ext", "label": "b", "args": [{"op": "ext", "label": "b", "args": [{"op": "nt", "name": "X0"}]}]}},
            {"form": "B", "lhs": "X0", "rhs": []},
        ],
        "axioms": ["X"],
    }
    with pytest.raises(NotStratified):
        grammar_from_json(doc)
    g = grammar_from_json(doc, allow_free=True)
    assert includes(g, fixtures.universal_tree()).holds
    v = includes(g, fixtures.even_stars())
    assert not v.holds and v.witness.n_edges == 2


def test_budget_guard():
    with pytest.raises(BudgetExceeded):
        includes(fixtures.universal_tw2(), fixtures.tw2_even_root(), DecisionConfig(budget=5))


# refinement


def test_refine_universal_by_even():
    r = recognizer_for(fixtures.even_stars())
    out = refine(fixtures.universal_tree(), r, r.accepting)
    assert is_stratified(out)
    assert set(classify_rules(out)) <= set("ABCDE")
    assert footprint_leq(footprint(out), footprint(fixtures.universal_tree()))
    assert enumerate_language(out, 6) == GraphSet(STARS)


def test_refine_accept_all():
    g = fixtures.even_children()
    r = recognizer_for(fixtures.even_stars())
    assert enumerate_language(refine(g, r, lambda a: True), 4) == enumerate_language(g, 4)


def test_refine_preserves_aperiodicity():
    g = fixtures.universal_tree()
    r = recognizer_for(fixtures.gap_stars())
    assert is_aperiodic_algebra(r)
    out = refine(g, r, r.accepting)
    assert is_aperiodic_grammar(out)
