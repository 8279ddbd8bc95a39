"""Filtering, refinement, emptiness, membership, inclusion and equivalence."""

from __future__ import annotations

import itertools
import json
import logging
import threading
import time
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterator, Mapping

from twograph.config import DecisionConfig
from twograph.decomposition import block_cut_tree, block_options, dsp_decompose, sp_decompose, tree_term
from twograph.errors import (
    BudgetExceeded,
    ClassMismatch,
    DecompositionError,
    InclusionInconclusive,
    InputError,
    NotInClassDomain,
    NotTreewidth2,
    SortMismatch,
)
from twograph.grammar import (
    BaseRule,
    Grammar,
    Nonterminal,
    PumpRule,
    Rule,
    TermRule,
    _require_stratified,
    enumerate_language,
    make_base,
    normalize,
)
from twograph.graph_core import (
    DSP,
    HANG,
    NT,
    PAR,
    S1,
    SP,
    TREE,
    TW2,
    ZERO,
    Graph,
    Symbol,
    Term,
    eval_term,
    graph_to_json,
    validate_graph,
)
from twograph.recognizer import GrammarRecognizer, Recognizer, build_recognizer, eval_profile

log = logging.getLogger(__name__)

Accept = Callable[[object], bool]

_PAR = Symbol(PAR)
_ZERO = Symbol(ZERO)


# ---------------------------------------------------------------------------
# rules as leaf groups


@dataclass
class _Shape:
    """A rule seen as groups of leaves: parallel multisets or a positional term."""

    rule: Rule
    lhs: str
    groups: list[tuple[str, int]]
    term: Term | None  # None for parallel rules


def _shapes(g: Grammar) -> list[_Shape]:
    out = []
    for r in g.rules:
        if isinstance(r, PumpRule):
            out.append(_Shape(r, r.lhs, [(r.lhs, 1), (r.y, r.q)], None))
        elif isinstance(r, BaseRule):
            out.append(_Shape(r, r.lhs, list(r.parts), None))
        else:
            out.append(_Shape(r, r.lhs, [(n, 1) for n in r.term.nonterminals()], r.term))
    return out


def _fold_par(r: Recognizer, vals: list, zero):
    if not vals:
        return zero
    acc = vals[0]
    for v in vals[1:]:
        acc = r.apply_cached(_PAR, (acc, v))
    return acc


def _eval_positional(r: Recognizer, t: Term, vals: list):
    it = iter(vals)

    def ev(s: Term):
        if s.op == NT:
            return next(it)
        return r.apply_cached(s.symbol, tuple(ev(a) for a in s.args))

    return ev(t)


def _shape_value(r: Recognizer, sh: _Shape, vals: list, zero):
    if sh.term is None:
        return _fold_par(r, vals, zero)
    return _eval_positional(r, sh.term, vals)


def _msets(pool: list, k: int) -> Iterator[tuple]:
    return itertools.combinations_with_replacement(pool, k)


def _combos(groups: list[tuple[str, int]], old: Mapping[str, list], delta: Mapping[str, list]) -> Iterator[list]:
    """Value tuples for the groups using at least one value from ``delta``."""
    for i, (name_i, _) in enumerate(groups):
        if not delta.get(name_i):
            continue

        def rec(j: int, acc: list):
            if j == len(groups):
                yield acc
                return
            name, k = groups[j]
            if j < i:
                choices = _msets(old.get(name, []), k)
            elif j > i:
                choices = _msets(old.get(name, []) + delta.get(name, []), k)
            else:
                choices = (
                    new + rest
                    for n_new in range(1, k + 1)
                    for new in _msets(delta[name], n_new)
                    for rest in _msets(old.get(name, []), k - n_new)
                )
            for ch in choices:
                yield from rec(j + 1, acc + list(ch))

        yield from rec(0, [])


def _all_combos(groups: list[tuple[str, int]], pools: Mapping[str, list]) -> Iterator[list]:
    if not groups:
        return iter([[]])
    return _combos(groups, {}, pools)


def _zero_for(r: Recognizer, g: Grammar, name: str):
    if g.sort(name) != S1:
        raise SortMismatch(f"the empty parallel composition for {name!r} has sort {{1,2}}, which no class constant denotes")
    return r.apply_cached(_ZERO, ())


def productive_values(g: Grammar, r: Recognizer, budget: int | None = None) -> dict[str, list]:
    """For every nonterminal, the algebra values of the graphs it derives."""
    if not g.cls.same_signature(r.cls):
        raise ClassMismatch(f"recognizer over {r.cls} cannot filter a grammar over {g.cls}")
    if budget is None:
        budget = DecisionConfig().budget
    shapes = _shapes(g)
    known: dict[str, set] = defaultdict(set)
    old: dict[str, list] = defaultdict(list)
    delta: dict[str, list] = defaultdict(list)
    total = 0
    fresh: dict[str, list] = defaultdict(list)

    def add(name, v):
        nonlocal total
        if v not in known[name]:
            known[name].add(v)
            fresh[name].append(v)
            total += 1
            if total > budget:
                raise BudgetExceeded("filtered grammar exceeds the value budget", total)

    for sh in shapes:
        if not sh.groups:
            zero = _zero_for(r, g, sh.lhs) if sh.term is None else None
            add(sh.lhs, _shape_value(r, sh, [], zero))
    delta, fresh = fresh, defaultdict(list)
    while any(delta.values()):
        for sh in shapes:
            for vals in _combos(sh.groups, old, delta):
                add(sh.lhs, _shape_value(r, sh, vals, None))
        for name in set(old) | set(delta):
            old[name] = old[name] + delta.get(name, [])
        delta, fresh = fresh, defaultdict(list)
    return {n.name: list(old.get(n.name, [])) for n in g.nonterminals}


def _value_key(r: Recognizer, v) -> str:
    return json.dumps(r.describe(v), sort_keys=True, default=str)


class _Namer:
    def __init__(self, r: Recognizer, values: Mapping[str, list]):
        self.ids: dict[str, dict] = {}
        for name, vals in values.items():
            ordered = sorted(vals, key=lambda v: _value_key(r, v))
            self.ids[name] = {v: i for i, v in enumerate(ordered)}

    def __call__(self, name: str, v) -> str:
        return f"{name}@{self.ids[name][v]}"


# ---------------------------------------------------------------------------
# filtering


def filter_grammar(
    g: Grammar,
    r: Recognizer,
    accept: Accept,
    config: DecisionConfig | None = None,
    values: Mapping[str, list] | None = None,
) -> Grammar:
    """The product grammar deriving exactly the graphs of L(g) whose value is accepted."""
    config = config or DecisionConfig()
    if values is None:
        values = productive_values(g, r, config.budget)
    name_of = _Namer(r, values)
    nts = [Nonterminal(name_of(n.name, v), n.sort, n.kind) for n in g.nonterminals for v in sorted(values[n.name], key=lambda v: name_of.ids[n.name][v])]
    rules: list[Rule] = []
    seen: set = set()
    for sh in _shapes(g):
        pools = {name: values[name] for name, _ in sh.groups}
        if any(not pools[name] for name, _ in sh.groups):
            continue
        zero = _zero_for(r, g, sh.lhs) if not sh.groups and sh.term is None else None
        for vals in _all_combos(sh.groups, pools):
            out = _shape_value(r, sh, vals, zero)
            rule = _instantiate(sh, vals, out, name_of)
            if rule not in seen:
                seen.add(rule)
                rules.append(rule)
                if len(rules) > config.max_rules:
                    raise BudgetExceeded("filtered grammar exceeds the rule cap", len(rules))
    axioms = [name_of(a, v) for a in g.axioms for v in values[a] if accept(v)]
    return Grammar(g.cls, tuple(nts), tuple(rules), tuple(dict.fromkeys(axioms)))


def _instantiate(sh: _Shape, vals: list, out, name_of: _Namer) -> Rule:
    lhs = name_of(sh.lhs, out)
    names = []
    it = iter(vals)
    for name, k in sh.groups:
        for _ in range(k):
            names.append(name_of(name, next(it)))
    r = sh.rule
    if isinstance(r, BaseRule):
        return make_base(lhs, Counter(names))
    if isinstance(r, PumpRule):
        x, ys = names[0], names[1:]
        if x == lhs and len(set(ys)) == 1:
            return PumpRule(lhs, ys[0], len(ys))
        return TermRule(lhs, Term.par_all([Term.nt(n) for n in names]))
    pos = iter(names)
    return TermRule(lhs, _relabel(sh.term, pos))


def _relabel(t: Term, names: Iterator[str]) -> Term:
    if t.op == NT:
        return Term.nt(next(names))
    if not t.args:
        return t
    return Term(t.op, tuple(_relabel(a, names) for a in t.args), t.label, t.rev)


# ---------------------------------------------------------------------------
# emptiness and witnesses


def productive_nonterminals(g: Grammar) -> set[str]:
    prod: set[str] = set()
    changed = True
    while changed:
        changed = False
        for r in g.rules:
            if r.lhs in prod:
                continue
            if isinstance(r, PumpRule):
                continue  # needs its own left side first
            needs = [y for y, _ in r.parts] if isinstance(r, BaseRule) else r.term.nonterminals()
            if all(n in prod for n in needs):
                prod.add(r.lhs)
                changed = True
    return prod


def is_empty(g: Grammar) -> bool:
    prod = productive_nonterminals(g)
    return not any(a in prod for a in g.axioms)


def _rule_children(r: Rule) -> tuple[list[tuple[str, int]], int]:
    if isinstance(r, PumpRule):
        return [(r.lhs, 1), (r.y, r.q)], 0
    if isinstance(r, BaseRule):
        return list(r.parts), 0
    return [(n, 1) for n in r.term.nonterminals()], r.term.n_edges()


def min_yields(g: Grammar) -> tuple[dict[str, int], dict[str, Rule]]:
    """Fewest edges derivable from each nonterminal and a rule achieving it."""
    best: dict[str, int] = {}
    how: dict[str, Rule] = {}
    prepared = [(r, *_rule_children(r)) for r in g.rules]
    changed = True
    while changed:
        changed = False
        for r, kids, const in prepared:
            if any(n not in best for n, _ in kids):
                continue
            cost = const + sum(k * best[n] for n, k in kids)
            if cost < best.get(r.lhs, cost + 1):
                best[r.lhs] = cost
                how[r.lhs] = r
                changed = True
    return best, how


def min_witness_term(g: Grammar) -> Term | None:
    best, how = min_yields(g)
    live = [a for a in g.axioms if a in best]
    if not live:
        return None
    ax = min(live, key=lambda a: (best[a], a))
    memo: dict[str, Term] = {}

    def build(name: str) -> Term:
        if name in memo:
            return memo[name]
        r = how[name]
        if isinstance(r, BaseRule):
            parts = [build(y) for y, k in r.parts for _ in range(k)]
            t = Term.par_all(parts, empty=Term.zero())
        elif isinstance(r, PumpRule):
            raise AssertionError("pump rules never realize a minimum")
        else:
            t = r.term.substitute({n: build(n) for n in set(r.term.nonterminals())})
        memo[name] = t
        return t

    return build(ax)


def min_witness(g: Grammar) -> Graph | None:
    t = min_witness_term(g)
    return None if t is None else eval_term(g.cls, t)


# ---------------------------------------------------------------------------
# membership

_REC_CACHE: dict[Grammar, GrammarRecognizer] = {}
_REC_LOCK = threading.Lock()


def recognizer_for(g: Grammar) -> GrammarRecognizer:
    with _REC_LOCK:
        hit = _REC_CACHE.get(g)
    if hit is None:
        hit = build_recognizer(g)
        with _REC_LOCK:
            _REC_CACHE.setdefault(g, hit)
    return hit


def graph_term(g: Graph, kind: str) -> Term:
    """The canonical decomposition term of a class graph."""
    if kind == TREE:
        return tree_term(g)
    if kind == SP:
        return sp_decompose(g)
    if kind == DSP:
        return dsp_decompose(g)
    from twograph.decomposition import tw2_term

    return tw2_term(g)


def graph_profile(r: Recognizer, g: Graph):
    """The algebra value of a graph, independent of how it is decomposed.

    Off TW2 every decomposition gives the same value. For TW2 the value is
    taken over all admissible 2-source choices of every block and joined;
    the operations distribute over these unions.
    """
    kind = r.cls.kind
    if kind != TW2:
        return eval_profile(r, graph_term(g, kind))
    from twograph.decomposition import _check_tw2_input

    _check_tw2_input(g)
    tree = block_cut_tree(g)
    zero = r.apply_cached(_ZERO, ())
    memo: dict[int, object] = {}

    def prof(v: int):
        if v in memo:
            return memo[v]
        acc = zero
        for i in tree.child_blocks.get(v, ()):
            below = set(tree.children_of_block(i))

            def hang(c: int, below=below) -> Term:
                return Term.nt(f"@{c}") if c in below else Term.zero()

            opts = block_options(g, tree, i, hang)
            if not opts:
                raise NotTreewidth2(f"block {sorted(tree.blocks[i].vertices)} has no disoriented P-graph decomposition")
            env = {f"@{c}": prof(c) for c in below}
            val = None
            for w, t in opts:
                a = r.apply_cached(Symbol(HANG), (eval_profile(r, t, env), env.get(f"@{w}", zero)))
                val = a if val is None else r.union(val, a)
            acc = r.apply_cached(_PAR, (acc, val))
        memo[v] = acc
        return acc

    return prof(tree.root)


def check_domain(g: Graph, gram: Grammar) -> None:
    """Raise NotInClassDomain unless ``g`` is a graph of the grammar's class."""
    cls = gram.cls
    try:
        validate_graph(g)
    except InputError as exc:
        raise NotInClassDomain(str(exc)) from exc
    for e in g.edges:
        if e.label not in cls.labels:
            raise NotInClassDomain(f"edge label {e.label!r} is outside the alphabet")
        if len(e.attach) != cls.arity(e.label):
            raise NotInClassDomain(f"edge {e.id} has arity {len(e.attach)}, label {e.label!r} needs {cls.arity(e.label)}")
    want = S1 if cls.kind in (TREE, TW2) else frozenset({1, 2})
    if g.sort != want:
        raise NotInClassDomain(f"graph has sort {sorted(g.sort)}, the {cls.kind} class needs {sorted(want)}")


def member(g: Graph, gram: Grammar, strict: bool = False) -> bool:
    """Whether ``g`` is in L(gram); graphs outside the class are not members.

    With ``strict`` a graph outside the class domain raises NotInClassDomain.
    """
    r = recognizer_for(gram)
    try:
        check_domain(g, gram)
        a = graph_profile(r, g)
    except (DecompositionError, NotInClassDomain) as exc:
        if strict:
            if isinstance(exc, NotInClassDomain):
                raise
            raise NotInClassDomain(str(exc)) from exc
        log.info("not in the class domain: %s", exc)
        return False
    return r.accepting(a)


# ---------------------------------------------------------------------------
# inclusion and equivalence


@dataclass
class InclusionVerdict:
    holds: bool
    witness: Graph | None = None
    stats: dict = field(default_factory=dict)
    kind: str = TREE

    def to_json(self) -> dict:
        return {
            "holds": self.holds,
            "witness": None if self.witness is None else graph_to_json(self.witness, self.kind),
            "stats": dict(self.stats),
        }


def _check_pair(g1: Grammar, g2: Grammar) -> None:
    if g1.cls.kind != g2.cls.kind or not g1.cls.same_signature(g2.cls):
        raise ClassMismatch(f"grammars over {g1.cls} and {g2.cls} cannot be compared")


def includes(g1: Grammar, g2: Grammar, config: DecisionConfig | None = None) -> InclusionVerdict:
    """Decide L(g1) <= L(g2) for a regular g2; a failure comes with a smallest counterexample."""
    config = config or DecisionConfig()
    _check_pair(g1, g2)
    t0 = time.perf_counter()
    r = recognizer_for(g2)
    values = productive_values(g1, r, config.budget)
    filtered = filter_grammar(g1, r, lambda a: not r.accepting(a), config, values)
    stats = {
        "reachable": len({v for vs in values.values() for v in vs}),
        "filtered_rules": len(filtered.rules),
    }
    witness = None
    holds = is_empty(filtered)
    if not holds:
        witness = min_witness(filtered)
        if g2.cls.kind == TW2 and member(witness, g2):
            witness = _confirm_tw2(filtered, g2, config)
    stats["millis"] = round((time.perf_counter() - t0) * 1000, 3)
    return InclusionVerdict(holds, witness, stats, g1.cls.kind)


def _confirm_tw2(filtered: Grammar, g2: Grammar, config: DecisionConfig) -> Graph:
    # the cheapest filtered derivation may be a spurious one; search by size
    log.info("shortest filtered derivation is a member; searching for a genuine counterexample")
    graphs = enumerate_language(filtered, config.witness_bound, unsafe=True)
    for h in graphs.sorted():
        if not member(h, g2):
            return h
    raise InclusionInconclusive(
        f"every candidate counterexample with at most {config.witness_bound} edges is a member of the right-hand grammar"
    )


def equivalent(g1: Grammar, g2: Grammar, config: DecisionConfig | None = None) -> InclusionVerdict:
    fwd = includes(g1, g2, config)
    if not fwd.holds:
        return fwd
    back = includes(g2, g1, config)
    stats = {k: fwd.stats.get(k, 0) + back.stats.get(k, 0) for k in ("reachable", "filtered_rules", "millis")}
    return InclusionVerdict(back.holds, back.witness, stats, g1.cls.kind)


# ---------------------------------------------------------------------------
# refinement


def refine(g: Grammar, r: Recognizer, accept: Accept, config: DecisionConfig | None = None) -> Grammar:
    """A stratified grammar for L(g) restricted to accepted values, with footprint within g's.

    Only productive values are instantiated. N is the number of reachable
    elements of the algebra.
    """
    config = config or DecisionConfig()
    g = normalize(_require_stratified(g))
    if not g.cls.same_signature(r.cls):
        raise ClassMismatch(f"recognizer over {r.cls} cannot refine a grammar over {g.cls}")
    values = productive_values(g, r, config.budget)
    dom = r.reachable(config.budget)
    n_elems = sum(len(v) for v in dom.values())
    extra: dict[str, set] = defaultdict(set)
    rules: list[Rule] = []
    seen: set = set()

    def emit(rule: Rule):
        if rule not in seen:
            seen.add(rule)
            rules.append(rule)
            if len(rules) > config.max_rules:
                raise BudgetExceeded("refined grammar exceeds the rule cap", len(rules))

    powers = _PowerTable(r)
    pumps = defaultdict(dict)
    for p in g.pumps:
        pumps[p.lhs][p.y] = p.q
    pending_names: list[tuple[str, object]] = []

    # pump rules X_b -> X_b || Y_a^(q r) with b = b || a^(q r)
    for p in g.pumps:
        for b in values[p.lhs]:
            for a in values[p.y]:
                for rr in range(1, n_elems + 1):
                    if r.apply_cached(_PAR, (b, powers(a, p.q * rr))) == b:
                        pending_names.append(("pump", (p.lhs, b, p.y, a, p.q * rr)))
    # base rules with counts s(Y,a) + q(Y,a)
    base_out = []
    for br in g.bases:
        per_y = []
        for y, s in br.parts:
            per_y.append((y, list(_count_vectors(values[y], s, pumps[br.lhs].get(y), n_elems, config))))
        for y, q in pumps[br.lhs].items():
            if y not in dict(br.parts):
                per_y.append((y, list(_count_vectors(values[y], 0, q, n_elems, config))))
        if any(not opts for _, opts in per_y):
            continue
        for choice in itertools.product(*(opts for _, opts in per_y)):
            vals = []
            counts = []
            for (y, _), vec in zip(per_y, choice):
                for a, c in vec:
                    vals.extend([a] * c)
                    counts.append((y, a, c))
            if not vals:
                out = _zero_for(r, g, br.lhs)
            else:
                acc = None
                for y, a, c in counts:
                    pw = powers(a, c)
                    acc = pw if acc is None else r.apply_cached(_PAR, (acc, pw))
                out = acc
            base_out.append((br.lhs, out, counts))
            if len(base_out) > config.max_rules:
                raise BudgetExceeded("refined grammar exceeds the rule cap", len(base_out))
    for lhs, out, _ in base_out:
        extra[lhs].add(out)
    all_values = {n: list(dict.fromkeys(list(values[n]) + sorted(extra.get(n, ()), key=lambda v: _value_key(r, v)))) for n in values}
    name_of = _Namer(r, all_values)

    for _, (x, b, y, a, q) in pending_names:
        emit(PumpRule(name_of(x, b), name_of(y, a), q))
    for lhs, out, counts in base_out:
        emit(make_base(name_of(lhs, out), Counter({name_of(y, a): c for y, a, c in counts})))
    for sh in _shapes(g):
        if sh.term is None:
            continue
        pools = {name: values[name] for name, _ in sh.groups}
        if any(not pools[name] for name, _ in sh.groups):
            continue
        for vals in _all_combos(sh.groups, pools):
            out = _shape_value(r, sh, vals, None)
            if out not in all_values[sh.lhs]:
                continue
            emit(_instantiate(sh, vals, out, name_of))
    nts = [Nonterminal(name_of(n.name, v), n.sort, n.kind) for n in g.nonterminals for v in all_values[n.name]]
    axioms = [name_of(a, v) for a in g.axioms for v in all_values[a] if accept(v)]
    return Grammar(g.cls, tuple(nts), tuple(rules), tuple(dict.fromkeys(axioms)))


class _PowerTable:
    def __init__(self, r: Recognizer):
        self.r = r
        self.cache: dict = {}

    def __call__(self, a, k: int):
        if k <= 0:
            raise ValueError("powers start at 1")
        key = (a, k)
        hit = self.cache.get(key)
        if hit is None:
            hit = a if k == 1 else self.r.apply_cached(_PAR, (self(a, k - 1), a))
            self.cache[key] = hit
        return hit


def _count_vectors(pool: list, s: int, q: int | None, n_elems: int, config: DecisionConfig) -> Iterator[tuple]:
    """Vectors c(a) = s(a) + q(a) over ``pool`` admitted by the refinement constraints."""
    cap = 0 if q is None else n_elems * q
    pool = list(pool)
    produced = 0

    def rec(i: int, acc: list, total: int):
        nonlocal produced
        if i == len(pool):
            extra = total - s
            if extra < 0:
                return
            if q is None and extra != 0:
                return
            if q is not None and extra % q:
                return
            # some split s(a) <= c(a) with sum s and c(a) - s(a) <= cap
            lower = sum(max(0, c - cap) for _, c in acc)
            if lower > s:
                return
            produced += 1
            if produced > config.max_rules:
                raise BudgetExceeded("refinement count vectors exceed the rule cap", produced)
            yield tuple((a, c) for a, c in acc if c > 0)
            return
        for c in range(0, s + cap + 1):
            if total + c > s + cap * len(pool):
                break
            acc.append((pool[i], c))
            yield from rec(i + 1, acc, total + c)
            acc.pop()

    yield from rec(0, [], 0)
