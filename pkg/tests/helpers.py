"""Random terms, term rewrites, random class graphs and cached oracle corpora.

Generators take an ``rng`` with ``randint`` and ``choice``; ``DrawRandom``
adapts a hypothesis ``draw`` so the same code serves property tests (with
shrinking) and the seeded bulk loops of the acceptance suite.
"""

from __future__ import annotations

import random
from functools import lru_cache

from hypothesis import strategies as st

from twograph import fixtures, oracles
from twograph.graph_core import DSP, HANG, PAR, SER, SP, TREE, TW2, ClassId, Graph, Term

CLASS_OF = {
    TREE: fixtures.TREE_B,
    SP: fixtures.SP_A,
    DSP: fixtures.DSP_A,
    TW2: fixtures.TW2_A,
}


class DrawRandom:
    def __init__(self, draw):
        self.draw = draw

    def randint(self, a: int, b: int) -> int:
        return self.draw(st.integers(a, b))

    def choice(self, seq):
        return self.draw(st.sampled_from(list(seq)))


# ---------------------------------------------------------------------------
# random terms


def _split(rng, n: int, lo: int) -> tuple[int, int]:
    k = rng.randint(lo, n - lo)
    return k, n - k


def random_term(cls: ClassId, n: int, rng, two: bool | None = None) -> Term:
    """A well-sorted ground term with exactly ``n`` edges.

    ``two`` selects sort {1,2}; by default the class's axiom sort is used.
    """
    kind = cls.kind
    if two is None:
        two = kind in (SP, DSP)
    labels = [lab for lab in cls.labels if cls.arity(lab) == 2]
    if kind == TREE:
        if n == 0:
            return Term.zero()
        if n >= 2 and rng.randint(0, 2) == 0:
            a, b = _split(rng, n, 1)
            return Term.par(random_term(cls, a, rng), random_term(cls, b, rng))
        return Term.ext(rng.choice(labels), random_term(cls, n - 1, rng))
    if not two:  # TW2 sort {1}
        if n == 0:
            return Term.zero()
        if n >= 2 and rng.randint(0, 2) == 0:
            a, b = _split(rng, n, 1)
            return Term.par(random_term(cls, a, rng, False), random_term(cls, b, rng, False))
        k = rng.randint(1, n)
        return Term.hang(random_term(cls, k, rng, True), random_term(cls, n - k, rng, False))
    if n == 1:
        return Term.edge(rng.choice(labels), kind != SP and rng.randint(0, 1) == 1)
    a, b = _split(rng, n, 1)
    if rng.randint(0, 1) == 0:
        return Term.par(random_term(cls, a, rng, True), random_term(cls, b, rng, True))
    if kind == TW2:
        extra = rng.randint(0, max(0, n - 2))
        a, b = _split(rng, n - extra, 1)
        return Term.ser(random_term(cls, a, rng, True), random_term(cls, b, rng, True), random_term(cls, extra, rng, False))
    return Term.ser(random_term(cls, a, rng, True), random_term(cls, b, rng, True))


@st.composite
def terms(draw, kind: str, max_edges: int = 6):
    cls = CLASS_OF[kind]
    lo = 1 if kind in (SP, DSP) else 0
    n = draw(st.integers(lo, max_edges))
    return random_term(cls, n, DrawRandom(draw))


# ---------------------------------------------------------------------------
# rewrites that preserve the graph up to isomorphism


def _local_rewrites(t: Term) -> list[Term]:
    out = []
    if t.op == PAR:
        a, b = t.args
        out.append(Term.par(b, a))
        if a.op == PAR:
            out.append(Term.par(a.args[0], Term.par(a.args[1], b)))
        if b.op == PAR:
            out.append(Term.par(Term.par(a, b.args[0]), b.args[1]))
    if t.op == SER and len(t.args) == 2:
        x, y = t.args
        if x.op == SER:
            out.append(Term.ser(x.args[0], Term.ser(x.args[1], y)))
        if y.op == SER:
            out.append(Term.ser(Term.ser(x, y.args[0]), y.args[1]))
    if t.op == SER and len(t.args) == 3:
        x1, mid, z1 = t.args
        if mid.op == SER:  # ser(x1, ser(x2, y, z2), z1) -> ser(ser(x1, x2, z1), y, z2)
            x2, y, z2 = mid.args
            out.append(Term.ser(Term.ser(x1, x2, z1), y, z2))
        if x1.op == SER:  # and back
            a1, a2, c1 = x1.args
            out.append(Term.ser(a1, Term.ser(a2, mid, z1), c1))
    return out


def _positions(t: Term, path=()) -> list[tuple]:
    out = [path] if _local_rewrites(t) else []
    for i, a in enumerate(t.args):
        out.extend(_positions(a, path + (i,)))
    return out


def _replace(t: Term, path: tuple, fn) -> Term:
    if not path:
        return fn(t)
    i = path[0]
    args = list(t.args)
    args[i] = _replace(args[i], path[1:], fn)
    return Term(t.op, tuple(args), t.label, t.rev)


def rewrite(t: Term, rng, steps: int = 3) -> Term:
    for _ in range(steps):
        pos = _positions(t)
        if not pos:
            break
        path = rng.choice(pos)
        t = _replace(t, path, lambda s: rng.choice(_local_rewrites(s)))
    return t


# ---------------------------------------------------------------------------
# random class graphs built without terms


def random_tree(rng, n_vertices: int, labels=("b",)) -> Graph:
    edges = [(rng.choice(labels), (rng.randint(0, v - 1), v)) for v in range(1, n_vertices)]
    perm = list(range(n_vertices))
    random.Random(rng.randint(0, 10**9)).shuffle(perm)
    return Graph.build(perm, [(lab, (perm[u], perm[v])) for lab, (u, v) in edges], {1: perm[0]})


def random_sp(rng, max_vertices: int, flips: bool = False, labels=("a",)) -> Graph:
    es = [(0, 1)]
    top = 2
    for _ in range(rng.randint(0, 2 * max_vertices)):
        i = rng.randint(0, len(es) - 1)
        u, v = es[i]
        if top < max_vertices and rng.randint(0, 1):
            es[i:i + 1] = [(u, top), (top, v)]
            top += 1
        elif len(es) < 3 * max_vertices:
            es.append((u, v))
    edges = []
    for u, v in es:
        if flips and rng.randint(0, 1):
            u, v = v, u
        edges.append((rng.choice(labels), (u, v)))
    return Graph.build(range(top), edges, {1: 0, 2: 1})


def random_tw2(rng, max_vertices: int, labels=("a",)) -> Graph:
    """A connected partial 2-tree with random orientations and parallel edges."""
    n = rng.randint(1, max_vertices)
    pairs = [(0, 1)] if n > 1 else []
    tree_edges = [(0, 1)] if n > 1 else []
    for v in range(2, n):
        u, w = rng.choice(pairs)
        pairs += [(u, v), (w, v)]
        tree_edges.append((rng.choice([u, w]), v))  # keeps connectivity
    chosen = set(tree_edges) | {p for p in pairs if rng.randint(0, 2) == 0}
    edges = []
    for u, v in sorted(chosen):
        for _ in range(1 + (rng.randint(0, 4) == 0)):
            a, b = (v, u) if rng.randint(0, 1) else (u, v)
            edges.append((rng.choice(labels), (a, b)))
    root = rng.randint(0, n - 1)
    return Graph.build(range(n), edges, {1: root})


# ---------------------------------------------------------------------------
# oracle corpora, built once per process


@lru_cache(maxsize=None)
def class_corpus(kind: str, labels: tuple[str, ...], max_edges: int) -> tuple[Graph, ...]:
    if kind == TREE:
        return tuple(oracles.all_trees(max_edges, labels))
    if kind == SP:
        return tuple(oracles.all_sp(max_edges, labels))
    if kind == DSP:
        return tuple(oracles.all_sp(max_edges, labels, disoriented=True))
    return tuple(g for g in connected_corpus(labels, max_edges) if oracles.treewidth_le2_bruteforce(g))


@lru_cache(maxsize=None)
def connected_corpus(labels: tuple[str, ...], max_edges: int) -> tuple[Graph, ...]:
    return tuple(oracles.connected_graphs(max_edges, labels))


def by_size(graphs, n: int) -> list[Graph]:
    return [g for g in graphs if g.n_edges <= n]


# ---------------------------------------------------------------------------
# derivation terms, the term-level oracle for filtering


def canonical(t: Term) -> Term:
    """Flatten parallel composition, drop 0 factors and sort the rest."""
    if not t.args:
        return t
    if t.op == PAR:
        parts = [canonical(f) for f in t.par_factors()]
        parts = sorted((f for f in parts if f.op != "zero"), key=str)
        return Term.par_all(parts, empty=Term.zero())
    return Term(t.op, tuple(canonical(a) for a in t.args), t.label, t.rev)


@lru_cache(maxsize=None)
def derivation_terms(g, bound: int) -> dict[str, dict[str, Term]]:
    """Ground derivation terms of every nonterminal with at most ``bound`` edges, up to AC.

    Terms are built by increasing edge count; within one size the rules are
    applied until nothing new appears, since 0-edge arguments allow cycles.
    """
    from twograph.grammar import BaseRule, PumpRule

    layers: dict[str, list[dict[str, Term]]] = {n.name: [{} for _ in range(bound + 1)] for n in g.nonterminals}
    shapes = []
    for r in g.rules:
        if isinstance(r, PumpRule):
            shapes.append((r.lhs, [r.lhs] + [r.y] * r.q, 0, None))
        elif isinstance(r, BaseRule):
            shapes.append((r.lhs, [y for y, k in r.parts for _ in range(k)], 0, None))
        else:
            shapes.append((r.lhs, r.term.nonterminals(), r.term.n_edges(), r.term))

    def fill(slots: list[str], total: int):
        if not slots:
            if total == 0:
                yield []
            return
        head, rest = slots[0], slots[1:]
        for k in range(total + 1):
            for t in list(layers[head][k].values()):
                for tail in fill(rest, total - k):
                    yield [t] + tail

    for size in range(bound + 1):
        changed = True
        while changed:
            changed = False
            for lhs, slots, own, term in shapes:
                if own > size:
                    continue
                for kids in fill(slots, size - own):
                    t = Term.par_all(kids, empty=Term.zero()) if term is None else _fill(term, iter(kids))
                    c = canonical(t)
                    key = str(c)
                    if key not in layers[lhs][size]:
                        layers[lhs][size][key] = c
                        changed = True
    return {name: {k: t for layer in ls for k, t in layer.items()} for name, ls in layers.items()}


def _fill(t: Term, it) -> Term:
    if t.op == "nt":
        return next(it)
    if not t.args:
        return t
    return Term(t.op, tuple(_fill(a, it) for a in t.args), t.label, t.rev)


def filtered_oracle(g, r, accept, bound: int):
    """Graphs eval(t) over derivation terms t of ``g`` with accept(h(t)), up to isomorphism."""
    from twograph.graph_core import GraphSet, eval_term
    from twograph.recognizer import eval_profile

    table = derivation_terms(g, bound)
    out = GraphSet()
    for ax in g.axioms:
        for t in table[ax].values():
            if accept(eval_profile(r, t)):
                out.add(eval_term(g.cls, t))
    return out


# ---------------------------------------------------------------------------
# fixture triples (grammar, recognizer grammar, polarity) for filtering

PARTNERS = {
    "universal_tree": ["even", "gaps", "even_children"],
    "even": ["even", "gaps", "even_children"],
    "gaps": ["even", "gaps", "even_children"],
    "even_children": ["even", "gaps", "even_children"],
    "mod": ["mod"],
    "universal_sp": ["sp_even", "sp_paths"],
    "sp_even": ["sp_even", "sp_paths"],
    "sp_paths": ["sp_even", "sp_paths"],
    "universal_dsp": ["dsp_even"],
    "dsp_even": ["dsp_even"],
    "universal_tw2": ["triangle_cacti", "tw2_even_root"],
    "triangle_cacti": ["triangle_cacti", "tw2_even_root"],
    "tw2_even_root": ["triangle_cacti", "tw2_even_root"],
}


def filter_triples() -> list[tuple[str, str, bool]]:
    return [(g, r, pos) for g, rs in PARTNERS.items() for r in rs for pos in (True, False)]


def hangs_blocks(t: Term, cls: ClassId) -> bool:
    """Whether every left argument of a hang in ``t`` evaluates to a single block."""
    from twograph.decomposition import biconnected_blocks
    from twograph.graph_core import eval_term

    if t.op == HANG and len(biconnected_blocks(eval_term(cls, t.args[0]))) != 1:
        return False
    return all(hangs_blocks(a, cls) for a in t.args)


def tw2_terms_all(g: Graph) -> list[Term]:
    """Decomposition terms of a TW2 graph for every admissible 2-source in every block."""
    from itertools import product

    from twograph.decomposition import block_cut_tree, block_options

    tree = block_cut_tree(g)

    def vterms(v: int) -> list[Term]:
        per_block = []
        for i in tree.child_blocks.get(v, ()):
            below = set(tree.children_of_block(i))
            subs = {c: vterms(c) for c in below}
            choices = []
            for pick in product(*(subs[c] for c in sorted(below))):
                fixed = dict(zip(sorted(below), pick))

                def hang(c: int, fixed=fixed) -> Term:
                    return fixed.get(c, Term.zero())

                for w, t in block_options(g, tree, i, hang):
                    choices.append(Term.hang(t, hang(w)))
            per_block.append(choices)
        return [Term.par_all(list(p), empty=Term.zero()) for p in product(*per_block)]

    return vterms(tree.root)


def atlas_graphs(max_vertices: int = 7) -> list[Graph]:
    """Connected simple graphs on 1..max_vertices vertices from the networkx atlas, rooted at 0."""
    import networkx as nx

    out = []
    for h in nx.graph_atlas_g():
        n = h.number_of_nodes()
        if n == 0 or n > max_vertices or not nx.is_connected(h):
            continue
        out.append(Graph.build(range(n), [("a", (u, v)) for u, v in h.edges()], {1: 0}))
    return out
