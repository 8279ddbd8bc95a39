import math

import pytest
from hypothesis import given, strategies as st

from helpers import class_corpus
from twograph import fixtures
from twograph.config import OracleConfig
from twograph.errors import BoundExceeded, NotNormalized, NotStratified, WrongClass
from twograph.grammar import (
    BASE,
    ITER,
    BaseRule,
    PumpRule,
    TermRule,
    alternative_form,
    class_footprint,
    classify_rules,
    enumerate_language,
    footprint,
    footprint_leq,
    frobenius,
    grammar,
    grammar_constants,
    grammar_from_json,
    grammar_to_json,
    is_aperiodic_grammar,
    is_normalized,
    is_regular,
    is_stratified,
    leadsto,
    mset,
    normalize,
    stratify,
    trunk,
    universal_grammar,
)
from twograph.graph_core import DSP, SP, TREE, TW2, GraphSet, Term, isomorphic
from twograph.oracles import rooted_tree_count

nt = Term.nt


def star_grammar(pumps, base_count):
    return grammar(
        fixtures.TREE_B,
        [("X", [1], ITER), ("Y", [1], BASE), ("Z", [1], ITER)],
        [PumpRule("X", "Y", q) for q in pumps]
        + [BaseRule("X", (("Y", base_count),)), TermRule("Y", Term.ext("b", nt("Z"))), BaseRule("Z", ())],
        ["X"],
    )


def star_sizes(g, bound):
    out = set()
    for h in enumerate_language(g, bound, OracleConfig(max_edges=bound, max_vertices=bound + 1)):
        assert h.n_vertices == h.n_edges + 1
        out.add(h.n_edges)
    return out


# classification


def test_pump_rule_is_form_a():
    assert classify_rules(fixtures.even_stars())[0] == "A"


def test_repeated_factor_is_grouped():
    g = grammar(
        fixtures.TREE_B,
        [("X", [1], ITER), ("Y", [1], BASE), ("Z", [1], ITER)],
        [TermRule("X", Term.par(nt("Y"), nt("Y"))), TermRule("Y", Term.ext("b", nt("Z"))), BaseRule("Z", ())],
        ["X"],
    )
    assert classify_rules(g)[0] == "B"
    assert stratify(g).rules[0] == BaseRule("X", (("Y", 2),))


def test_base_kind_on_parallel_left_side():
    with pytest.raises(NotStratified):
        grammar(fixtures.TREE_B, [("X", [1], ITER), ("Y", [1], BASE)], [TermRule("Y", Term.par(nt("Y"), nt("Y")))], ["X"])


@pytest.mark.parametrize("name", list(fixtures.GRAMMARS))
def test_fixtures_are_stratified_and_regular(name):
    g = fixtures.get(name)
    assert is_stratified(g)
    assert is_regular(g) or is_regular(g, alternative=True)


# footprints


def test_universal_tree_footprint():
    fp = footprint(fixtures.universal_tree())
    assert fp.bound(frozenset({1})) == 0
    assert footprint_leq(fp, class_footprint(fixtures.TREE_B))


def test_footprint_sums_base_exponents():
    g = grammar(
        fixtures.SP_A,
        [("P", [1, 2], ITER), ("S", [1, 2], BASE), ("S2", [1, 2], BASE)],
        [BaseRule("P", (("S", 2), ("S2", 3))), TermRule("S", Term.edge("a")), TermRule("S2", Term.edge("a"))],
        ["P"],
    )
    assert footprint(g).bound(frozenset({1, 2})) == 5


def test_no_base_rules_gives_infinite_bound():
    g = grammar(fixtures.SP_A, [("P", [1, 2], ITER), ("S", [1, 2], BASE)], [TermRule("P", Term.edge("a"))], ["P"])
    assert footprint(g).bound(frozenset({1, 2})) == math.inf


def test_serial_template_not_in_tree_footprint():
    sp = footprint(fixtures.sp_paths())
    assert not footprint_leq(sp, class_footprint(fixtures.TREE_B))


def test_universal_grammars_regular():
    for cls in (fixtures.TREE_B, fixtures.SP_A, fixtures.DSP_A, fixtures.TW2_A):
        assert is_regular(universal_grammar(cls))


# aperiodicity


def test_aperiodicity_examples():
    assert is_aperiodic_grammar(fixtures.universal_tree())
    assert is_aperiodic_grammar(star_grammar([2, 3], 1))
    assert not is_aperiodic_grammar(star_grammar([2], 2))


# constants, trunk, leadsto


def test_mod_constants():
    c = grammar_constants(fixtures.mod_stars())
    assert c.bq("Y1") == (2, 3, 5)
    assert c.bq("Y2") == (3, 5, 8)
    assert c.bq("missing") == (0, 1, 1)


def test_trunk_examples():
    c = grammar_constants(fixtures.mod_stars())
    assert trunk(mset({"Y1": 4}), c) == mset({"Y1": 4})
    assert trunk(mset({"Y1": 11}), c) == mset({"Y1": 5})
    assert trunk(mset({"Y2": 13}), c) == mset({"Y2": 8})


@given(st.integers(0, 40), st.integers(0, 40), st.integers(0, 40), st.integers(0, 40))
def test_trunk_idempotent_and_additive(a1, a2, b1, b2):
    c = grammar_constants(fixtures.mod_stars())
    m1, m2 = mset({"Y1": a1, "Y2": a2}), mset({"Y1": b1, "Y2": b2})
    assert trunk(trunk(m1, c), c) == trunk(m1, c)
    summed = mset({"Y1": a1 + b1, "Y2": a2 + b2})
    both = dict(trunk(m1, c))
    for y, k in trunk(m2, c):
        both[y] = both.get(y, 0) + k
    assert trunk(summed, c) == trunk(mset(both), c)


def test_leadsto_examples():
    g = fixtures.mod_stars()
    assert leadsto("X", mset({"Y1": 2, "Y2": 3}), g)
    assert leadsto("X", mset({"Y1": 5, "Y2": 8}), g)
    assert not leadsto("X", mset({"Y1": 2, "Y2": 4}), g)


def test_leadsto_needs_normal_form():
    with pytest.raises(NotNormalized):
        leadsto("X", mset({"Y": 1}), fixtures.gap_stars())


@given(st.integers(0, 30), st.integers(0, 30))
def test_leadsto_matches_congruence(k1, k2):
    expect = k1 >= 2 and (k1 - 2) % 3 == 0 and k2 >= 3 and (k2 - 3) % 5 == 0
    assert leadsto("X", mset({"Y1": k1, "Y2": k2}), fixtures.mod_stars()) == expect


# normalization


def test_frobenius_representable():
    assert frobenius([2, 3]) == (1, {0})
    assert frobenius([3, 5]) == (7, {0, 3, 5, 6})


def test_normalize_keeps_normal_grammar():
    g = fixtures.even_stars()
    assert is_normalized(g)
    assert normalize(g) == g


def test_normalize_gcd_case():
    g = star_grammar([2, 4], 1)
    out = normalize(g)
    assert is_normalized(out)
    assert [r.q for r in out.pumps] == [2]
    assert star_sizes(out, 9) == star_sizes(g, 9) == {1, 3, 5, 7, 9}


def test_normalize_gaps():
    g = fixtures.gap_stars()
    out = normalize(g)
    assert is_normalized(out)
    assert star_sizes(out, 9) == {1, 3, 4, 5, 6, 7, 8, 9}
    assert footprint_leq(footprint(out), footprint(g)) or footprint(out).templates <= footprint(g).templates


def test_normalize_aperiodic_has_unit_pumps():
    out = normalize(star_grammar([2, 3], 1))
    assert all(r.q == 1 for r in out.pumps)


@pytest.mark.parametrize("name", [n for n in fixtures.GRAMMARS if not n.startswith(("universal_tw2", "tw2"))])
def test_normalize_preserves_language(name):
    g = fixtures.get(name)
    bound = 6 if g.cls.kind in (DSP, TW2) else 8
    out = normalize(g)
    assert is_normalized(out)
    assert footprint(out).templates <= footprint(g).templates
    assert enumerate_language(out, bound) == enumerate_language(g, bound)


# enumeration


def test_enumerate_trees_bound_two():
    out = enumerate_language(fixtures.universal_tree(), 2)
    assert len(out) == 4
    assert fixtures.star(2) in out and fixtures.path_tree(2) in out


def test_enumerate_even_stars():
    out = enumerate_language(fixtures.even_stars(), 6)
    assert sorted(h.n_edges for h in out) == [2, 4, 6]
    assert all(fixtures.star(k) in out for k in (2, 4, 6))


def test_enumerate_empty_language():
    g = grammar(
        fixtures.TREE_B,
        [("X", [1], ITER), ("Y", [1], BASE)],
        [BaseRule("X", (("Y", 1),)), TermRule("Y", Term.ext("b", nt("X")))],
        ["X"],
    )
    assert len(enumerate_language(g, 6)) == 0


def test_enumerate_bound_checked():
    with pytest.raises(BoundExceeded):
        enumerate_language(fixtures.universal_tree(), 40)


@pytest.mark.parametrize("n", range(6))
def test_universal_tree_counts(n):
    out = enumerate_language(fixtures.universal_tree(), n)
    assert len(out) == sum(rooted_tree_count(k) for k in range(n + 1))


@pytest.mark.parametrize("kind,bound", [(TREE, 5), (SP, 5), (DSP, 4), (TW2, 4)])
def test_universal_matches_class_oracle(kind, bound):
    from helpers import CLASS_OF

    cls = CLASS_OF[kind]
    got = enumerate_language(universal_grammar(cls), bound)
    want = GraphSet(class_corpus(kind, cls.labels, bound))
    assert got == want


# alternative form


def test_alternative_form_replaces_constants():
    alt = alternative_form(universal_grammar(fixtures.SP_A))
    assert is_regular(alt, alternative=True)
    for r in alt.rules:
        if isinstance(r, TermRule) and r.term.op == "edge":
            assert alt.kind(r.lhs) == BASE


def test_alternative_form_idempotent():
    for name in ("universal_sp", "dsp_even", "triangle_cacti"):
        once = alternative_form(fixtures.get(name))
        assert alternative_form(once) == once


def test_alternative_form_unchanged_without_constants():
    g = fixtures.sp_even_bundles()
    assert enumerate_language(alternative_form(g), 5) == enumerate_language(g, 5)


def test_alternative_form_rejects_trees():
    with pytest.raises(WrongClass):
        alternative_form(fixtures.universal_tree())


# serialization


@pytest.mark.parametrize("name", list(fixtures.GRAMMARS))
def test_grammar_json_roundtrip(name):
    g = fixtures.get(name)
    assert grammar_from_json(grammar_to_json(g)) == g


def test_grammar_json_points_at_bad_rule():
    doc = grammar_to_json(fixtures.even_stars())
    doc["rules"].append({"lhs": "Y", "rhs": {"op": "par", "args": [{"op": "nt", "name": "Y"}, {"op": "nt", "name": "Y"}]}})
    with pytest.raises(NotStratified) as exc:
        grammar_from_json(doc)
    assert exc.value.pointer == f"/rules/{len(doc['rules']) - 1}"


def test_enumerated_graphs_are_distinct():
    out = list(enumerate_language(fixtures.universal_tree(), 4))
    assert not any(isomorphic(a, b) for i, a in enumerate(out) for b in out[i + 1:])
