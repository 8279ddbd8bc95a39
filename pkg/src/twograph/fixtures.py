"""Named grammars and graphs used by tests, scripts and the CLI examples."""

from __future__ import annotations

from typing import Callable

from twograph.grammar import BASE, ITER, BaseRule, Grammar, PumpRule, TermRule, grammar, universal_grammar
from twograph.graph_core import DSP, SP, TREE, TW2, ClassId, Graph, Term, eval_term

nt = Term.nt
ext = Term.ext
ser = Term.ser
hang = Term.hang
edge = Term.edge

TREE_B = ClassId.make(TREE, {"b": 2})
TREE_BC = ClassId.make(TREE, {"b": 2, "c": 2})
SP_A = ClassId.make(SP, {"a": 2})
DSP_A = ClassId.make(DSP, {"a": 2})
TW2_A = ClassId.make(TW2, {"a": 2})


def universal_tree() -> Grammar:
    return universal_grammar(TREE_B)


def even_stars() -> Grammar:
    """Stars with a positive even number of leaves."""
    return grammar(
        TREE_B,
        [("X", [1], ITER), ("Y", [1], BASE), ("Z", [1], ITER)],
        [PumpRule("X", "Y", 2), BaseRule("X", (("Y", 2),)), TermRule("Y", ext("b", nt("Z"))), BaseRule("Z", ())],
        ["X"],
    )


def mod_stars() -> Grammar:
    """Two-coloured stars with counts 2 mod 3 and 3 mod 5."""
    return grammar(
        TREE_BC,
        [("X", [1], ITER), ("Y1", [1], BASE), ("Y2", [1], BASE), ("Z", [1], ITER)],
        [
            PumpRule("X", "Y1", 3),
            PumpRule("X", "Y2", 5),
            BaseRule("X", (("Y1", 2), ("Y2", 3))),
            TermRule("Y1", ext("b", nt("Z"))),
            TermRule("Y2", ext("c", nt("Z"))),
            BaseRule("Z", ()),
        ],
        ["X"],
    )


def gap_stars() -> Grammar:
    """Stars with 1, 3, 4, 5, ... leaves: two pump exponents that need normalizing."""
    return grammar(
        TREE_B,
        [("X", [1], ITER), ("Y", [1], BASE), ("Z", [1], ITER)],
        [PumpRule("X", "Y", 2), PumpRule("X", "Y", 3), BaseRule("X", (("Y", 1),)), TermRule("Y", ext("b", nt("Z"))), BaseRule("Z", ())],
        ["X"],
    )


def even_children() -> Grammar:
    """Trees of depth at most two where every child of the root has an even number of leaves."""
    return grammar(
        TREE_B,
        [("X", [1], ITER), ("Y", [1], BASE), ("W", [1], ITER), ("L", [1], BASE), ("Z", [1], ITER)],
        [
            PumpRule("X", "Y", 1),
            BaseRule("X", ()),
            TermRule("Y", ext("b", nt("W"))),
            PumpRule("W", "L", 2),
            BaseRule("W", ()),
            TermRule("L", ext("b", nt("Z"))),
            BaseRule("Z", ()),
        ],
        ["X"],
    )


def universal_sp() -> Grammar:
    return universal_grammar(SP_A)


def universal_dsp() -> Grammar:
    return universal_grammar(DSP_A)


def sp_even_bundles() -> Grammar:
    """SP graphs whose parallel compositions all have an even number of branches."""
    return grammar(
        SP_A,
        [("P", [1, 2], ITER), ("S", [1, 2], BASE)],
        [
            PumpRule("P", "S", 2),
            BaseRule("P", (("S", 2),)),
            TermRule("S", ser(nt("P"), nt("P"))),
            TermRule("S", ser(nt("P"), nt("S"))),
            TermRule("S", edge("a")),
        ],
        ["P", "S"],
    )


def sp_paths() -> Grammar:
    """Directed paths with at least one edge."""
    return grammar(
        SP_A,
        [("P", [1, 2], ITER), ("S", [1, 2], BASE)],
        [TermRule("P", edge("a")), TermRule("S", ser(nt("P"), nt("S"))), TermRule("S", ser(nt("P"), nt("P")))],
        ["P", "S"],
    )


def dsp_even_bundles() -> Grammar:
    """Disoriented variant of ``sp_even_bundles``."""
    return grammar(
        DSP_A,
        [("P", [1, 2], ITER), ("S", [1, 2], BASE)],
        [
            PumpRule("P", "S", 2),
            BaseRule("P", (("S", 2),)),
            TermRule("S", ser(nt("P"), nt("P"))),
            TermRule("S", ser(nt("P"), nt("S"))),
            TermRule("S", edge("a")),
            TermRule("S", edge("a", True)),
        ],
        ["P", "S"],
    )


def universal_tw2() -> Grammar:
    return universal_grammar(TW2_A)


def triangle_cacti() -> Grammar:
    """Connected graphs whose blocks are single edges or triangles."""
    return grammar(
        TW2_A,
        [
            ("X", [1], ITER),
            ("Y", [1], BASE),
            ("P", [1, 2], ITER),
            ("Se", [1, 2], BASE),
            ("St", [1, 2], BASE),
            ("Q", [1, 2], ITER),
        ],
        [
            PumpRule("X", "Y", 1),
            BaseRule("X", ()),
            TermRule("Y", hang(nt("P"), nt("X"))),
            TermRule("P", edge("a")),
            BaseRule("P", (("Se", 1), ("St", 1))),
            TermRule("Se", edge("a")),
            TermRule("St", ser(nt("Q"), nt("Q"), nt("X"))),
            TermRule("Q", edge("a")),
        ],
        ["X"],
    )


def tw2_even_root() -> Grammar:
    """Connected tree-width 2 graphs with an even number of blocks at the root."""
    u = universal_tw2()
    nts = [(n.name, sorted(n.sort), n.kind) for n in u.nonterminals] + [("R", [1], ITER)]
    rules = list(u.rules) + [PumpRule("R", "Y", 2), BaseRule("R", ())]
    return grammar(TW2_A, nts, rules, ["R"])


def tw2_rotation_sensitive() -> Grammar:
    """A triangle block at the root with one pendant edge at its middle vertex.

    The algebra value of a literal term depends on which block vertex is
    chosen as second source.
    """
    return grammar(
        TW2_A,
        [
            ("X", [1], ITER),
            ("X0", [1], ITER),
            ("Xp", [1], ITER),
            ("Y", [1], BASE),
            ("Yp", [1], BASE),
            ("P", [1, 2], ITER),
            ("Se", [1, 2], BASE),
            ("St", [1, 2], BASE),
            ("Q", [1, 2], ITER),
        ],
        [
            BaseRule("X", (("Y", 1),)),
            BaseRule("X0", ()),
            TermRule("Y", hang(nt("P"), nt("X0"))),
            BaseRule("P", (("Se", 1), ("St", 1))),
            TermRule("Se", edge("a")),
            TermRule("St", ser(nt("Q"), nt("Q"), nt("Xp"))),
            TermRule("Q", edge("a")),
            BaseRule("Xp", (("Yp", 1),)),
            TermRule("Yp", hang(nt("Q"), nt("X0"))),
        ],
        ["X"],
    )


GRAMMARS: dict[str, Callable[[], Grammar]] = {
    "universal_tree": universal_tree,
    "even": even_stars,
    "mod": mod_stars,
    "gaps": gap_stars,
    "even_children": even_children,
    "universal_sp": universal_sp,
    "sp_even": sp_even_bundles,
    "sp_paths": sp_paths,
    "universal_dsp": universal_dsp,
    "dsp_even": dsp_even_bundles,
    "universal_tw2": universal_tw2,
    "triangle_cacti": triangle_cacti,
    "tw2_even_root": tw2_even_root,
}

# grammars whose profile of a graph does not depend on the 2-source chosen in
# each block; triangle_cacti only parses transitive triangles from one side
ROTATION_INVARIANT = [name for name in GRAMMARS if name != "triangle_cacti"]
ROTATION_SENSITIVE = ["triangle_cacti", "tw2_rotation_sensitive"]


def get(name: str) -> Grammar:
    if name == "tw2_rotation_sensitive":
        return tw2_rotation_sensitive()
    return GRAMMARS[name]()


# ---------------------------------------------------------------------------
# graphs


def star(k: int, label: str = "b") -> Graph:
    return eval_term(TREE_B if label == "b" else TREE_BC, Term.par_all([ext(label, Term.zero())] * k, empty=Term.zero()))


def path_tree(k: int) -> Graph:
    t = Term.zero()
    for _ in range(k):
        t = ext("b", t)
    return eval_term(TREE_B, t)


def triangle() -> Graph:
    """The triangle with sources 1 and 2 and a third vertex."""
    return Graph.build([1, 2, 3], [("c", (1, 3)), ("a", (3, 2)), ("b", (2, 1))], {1: 1, 2: 2})
