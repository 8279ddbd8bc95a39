"""Finite profile algebras built from regular grammars.

An element (profile) is the set of reduced views of a graph: multisets of base
nonterminals for graphs of sort {1} and for P-graphs, and nonterminal tuples
for S-graphs. The operations below are the least sets closed under the
inference rules for the respective class; ``build_recognizer`` prepares the
grammar (alternative form, normal form) those rules expect.
"""

from __future__ import annotations

import threading
from collections import defaultdict
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from twograph.config import DecisionConfig
from twograph.errors import BudgetExceeded, ClassMismatch, NotRegular, SortMismatch, VariantMismatch
from twograph.grammar import (
    BASE,
    ITER,
    Grammar,
    GrammarConstants,
    Leadsto,
    MSet,
    alternative_form,
    grammar_constants,
    is_regular,
    mset,
    mset_add,
    normalize,
    trunk,
)
from twograph.graph_core import (
    DSP,
    EDGE,
    EXT,
    HANG,
    NT,
    PAR,
    S1,
    S12,
    SER,
    SP,
    TREE,
    TW2,
    ZERO,
    ClassId,
    Symbol,
    Term,
)

MULTI = "multi"  # multiset profile of a sort-{1} graph
PVAR = "P"
SVAR = "S"


@dataclass(frozen=True)
class Profile:
    variant: str
    views: frozenset

    @property
    def sort(self) -> frozenset:
        return S1 if self.variant == MULTI else S12

    def union(self, other: "Profile") -> "Profile":
        if self.variant != other.variant:
            raise VariantMismatch(f"cannot join a {self.variant}-profile with a {other.variant}-profile")
        return Profile(self.variant, self.views | other.views)

    def sorted_views(self) -> list:
        return sorted(self.views, key=lambda v: repr(v))

    def __str__(self) -> str:
        def fmt(v):
            if self.variant == SVAR:
                return "(" + ",".join("_" if x is None else x for x in v) + ")"
            return "[" + ",".join(f"{y}:{k}" for y, k in v) + "]"

        return f"{self.variant}{{" + " ".join(fmt(v) for v in self.sorted_views()) + "}"


def profile_to_json(a: Profile) -> dict:
    views: list = []
    for v in a.sorted_views():
        if a.variant == SVAR:
            views.append(list(v))
        else:
            views.append({y: k for y, k in v})
    name = {MULTI: "vertex", PVAR: "P", SVAR: "S"}[a.variant]
    return {"sort": sorted(a.sort), "variant": name, "views": views}


def symbol_result_sort(sym: Symbol, arg_sorts: list[frozenset]) -> frozenset:
    if sym.op == PAR:
        return arg_sorts[0]
    if sym.op in (ZERO, EXT, HANG):
        return S1
    return S12


def class_symbols(cls: ClassId) -> list[tuple[Symbol, tuple[frozenset, ...]]]:
    """Every signature symbol with its argument sorts."""
    out: list[tuple[Symbol, tuple[frozenset, ...]]] = []
    if cls.kind == TREE:
        out.append((Symbol(ZERO), ()))
        for lab, ar in cls.alphabet:
            out.append((Symbol(EXT, lab), (S1,) * (ar - 1)))
        out.append((Symbol(PAR), (S1, S1)))
        return out
    revs = (False,) if cls.kind == SP else (False, True)
    for lab in cls.labels:
        for rev in revs:
            out.append((Symbol(EDGE, lab, rev), ()))
    out.append((Symbol(PAR), (S12, S12)))
    if cls.kind in (SP, DSP):
        out.append((Symbol(SER), (S12, S12)))
        return out
    out.append((Symbol(ZERO), ()))
    out.append((Symbol(PAR), (S1, S1)))
    out.append((Symbol(SER), (S12, S12, S1)))
    out.append((Symbol(HANG), (S12, S1)))
    return out


class Recognizer:
    """A locally finite algebra over a class signature plus an accepting predicate."""

    cls: ClassId

    def apply(self, sym: Symbol, args: list):
        raise NotImplementedError

    def accepting(self, a) -> bool:
        raise NotImplementedError

    def sort_of(self, a) -> frozenset:
        raise NotImplementedError

    def union(self, a, b):
        raise NotImplementedError

    def describe(self, a) -> object:
        return repr(a)

    # shared machinery

    def _init_cache(self) -> None:
        self._lock = threading.Lock()
        self._reach: dict[frozenset, list] | None = None
        self._apply_cache: dict = {}

    def apply_cached(self, sym: Symbol, args: tuple):
        key = (sym, args)
        hit = self._apply_cache.get(key)
        if hit is None:
            hit = self.apply(sym, list(args))
            self._apply_cache[key] = hit
        return hit

    def reachable(self, budget: int | None = None) -> dict[frozenset, list]:
        """Least set of elements closed under all operations, per sort."""
        if budget is None:
            budget = DecisionConfig().budget
        with self._lock:
            if self._reach is None:
                self._reach = _kleene(self, budget)
            size = sum(len(v) for v in self._reach.values())
        if size > budget:  # cached under a larger budget
            raise BudgetExceeded(f"reachable domain has {size} elements, budget is {budget}", size)
        return self._reach


def _kleene(r: Recognizer, budget: int) -> dict[frozenset, list]:
    syms = class_symbols(r.cls)
    known: dict[frozenset, set] = defaultdict(set)
    old: dict[frozenset, list] = defaultdict(list)
    delta: dict[frozenset, list] = defaultdict(list)
    total = 0

    def add(a, fresh):
        nonlocal total
        s = r.sort_of(a)
        if a not in known[s]:
            known[s].add(a)
            fresh[s].append(a)
            total += 1
            if total > budget:
                raise BudgetExceeded("recognizer domain exceeds the element budget", total)

    fresh: dict[frozenset, list] = defaultdict(list)
    for sym, sorts in syms:
        if not sorts:
            add(r.apply_cached(sym, ()), fresh)
    delta = fresh
    while any(delta.values()):
        fresh = defaultdict(list)
        for sym, sorts in syms:
            if not sorts:
                continue
            full = {s: old[s] + delta[s] for s in set(sorts)}
            for i in range(len(sorts)):
                if not delta[sorts[i]]:
                    continue
                pools = [old[s] if j < i else (delta[s] if j == i else full[s]) for j, s in enumerate(sorts)]
                for combo in _product(pools):
                    add(r.apply_cached(sym, combo), fresh)
        for s in set(old) | set(delta):
            old[s] = old[s] + delta[s]
        delta = fresh
    return {s: list(v) for s, v in old.items()}


def _product(pools: list[list]) -> Iterable[tuple]:
    if not pools:
        yield ()
        return
    head, rest = pools[0], pools[1:]
    for x in head:
        for tail in _product(rest):
            yield (x,) + tail


def eval_profile(r: Recognizer, t: Term, env: Mapping[str, object] | None = None):
    """Evaluate a term in the algebra; ``nt`` leaves are looked up in ``env``."""
    if t.op == NT:
        if env is None or t.label not in env:
            raise SortMismatch(f"no value for nonterminal {t.label!r}")
        return env[t.label]
    return r.apply_cached(t.symbol, tuple(eval_profile(r, a, env) for a in t.args))


def reachable_count(r: Recognizer, budget: int | None = None) -> int:
    return sum(len(v) for v in r.reachable(budget).values())


def is_aperiodic_algebra(r: Recognizer, budget: int | None = None) -> bool:
    dom = r.reachable(budget)
    cap = sum(len(v) for v in dom.values()) + 1
    par = Symbol(PAR)
    for elems in dom.values():
        for a in elems:
            e = idempotent_power(r, a, cap)
            if r.apply_cached(par, (e, a)) != e:
                return False
    return True


def idempotent_power(r: Recognizer, a, cap: int):
    par = Symbol(PAR)
    powers = [a]
    index = {a: 0}
    while len(powers) <= cap + 1:
        nxt = r.apply_cached(par, (powers[-1], a))
        if nxt in index:
            start = index[nxt]
            cycle = powers[start:]
            for x in cycle:
                if r.apply_cached(par, (x, x)) == x:
                    return x
            raise AssertionError("cycle without idempotent")
        index[nxt] = len(powers)
        powers.append(nxt)
    raise BudgetExceeded("idempotent power search exceeded its cap", len(powers))


# ---------------------------------------------------------------------------
# grammar recognizers


class GrammarRecognizer(Recognizer):
    """The profile algebra of a normalized regular grammar (alternative form off trees)."""

    def __init__(self, g: Grammar, source: Grammar | None = None):
        self.grammar = g
        self.source = source if source is not None else g
        self.cls = g.cls
        c = grammar_constants(g)
        # b(Y) >= 1 keeps a total count of one apart from every larger total,
        # so a one-element view always stands for a single edge
        self.constants = GrammarConstants({y: max(1, b) for y, b in c.b.items()}, c.p)
        self.lt = Leadsto(g)
        self._init_cache()
        self._lead_cache: dict = {}
        iters = [n.name for n in g.nonterminals if n.kind == ITER]
        self.iter1 = [x for x in iters if g.sort(x) == S1]
        self.iter12 = [x for x in iters if g.sort(x) == S12]
        self.ext_rules: dict[str, list[tuple[str, tuple[str, ...]]]] = defaultdict(list)
        self.edge_rules: dict[tuple[str, bool], list[str]] = defaultdict(list)
        self.ser2: list[tuple[str, str, str]] = []  # S -> P . Q
        self.ser3: list[tuple[str, str, str, str]] = []  # S -> ser(P, Q, X)
        self.hang_rules: list[tuple[str, str, str]] = []  # Y -> P |> X
        for r in g.term_rules:
            t = r.term
            kids = [a.label for a in t.args]
            if t.op == EXT and all(a.op == NT for a in t.args):
                self.ext_rules[t.label].append((r.lhs, tuple(kids)))
            elif t.op == EDGE:
                self.edge_rules[(t.label, t.rev)].append(r.lhs)
            elif t.op == SER and len(kids) == 2 and all(a.op == NT for a in t.args):
                self.ser2.append((r.lhs, kids[0], kids[1]))
            elif t.op == SER and len(kids) == 3 and all(a.op == NT for a in t.args):
                self.ser3.append((r.lhs, kids[0], kids[1], kids[2]))
            elif t.op == HANG and all(a.op == NT for a in t.args):
                self.hang_rules.append((r.lhs, kids[0], kids[1]))
            else:
                raise NotRegular(f"rule {r} has no counterpart in the profile algebra")
        self.iter_kind = {n.name: n.kind == ITER for n in g.nonterminals}

    # helpers

    def leads(self, a: Profile, sort: frozenset) -> frozenset:
        """Iterating nonterminals of the sort that lead to some multiset of ``a``."""
        key = (a, sort)
        hit = self._lead_cache.get(key)
        if hit is None:
            cands = self.iter1 if sort == S1 else self.iter12
            if a.variant == SVAR:
                hit = frozenset()
            else:
                hit = frozenset(x for x in cands if any(self.lt(x, m) for m in a.views))
            self._lead_cache[key] = hit
        return hit

    def _singles(self, a: Profile) -> frozenset:
        """Base nonterminals Z with the one-element view [Z:1] in ``a``."""
        return frozenset(m[0][0] for m in a.views if len(m) == 1 and m[0][1] == 1)

    def _t(self, m) -> MSet:
        return trunk(m, self.constants)

    def sort_of(self, a: Profile) -> frozenset:
        return a.sort

    def union(self, a: Profile, b: Profile) -> Profile:
        return a.union(b)

    def describe(self, a: Profile) -> object:
        return profile_to_json(a)

    # operations

    def apply(self, sym: Symbol, args: list) -> Profile:
        op = sym.op
        kind = self.cls.kind
        if op == ZERO:
            return Profile(MULTI, frozenset({()}))
        if op == EDGE:
            return Profile(PVAR, frozenset(mset({s: 1}) for s in self.edge_rules.get((sym.label, sym.rev), ())))
        if op == PAR:
            return self._par(args)
        if op == EXT and kind == TREE:
            return self._ext(sym.label, args)
        if op == SER and kind in (SP, DSP):
            return self._ser2(args)
        if op == SER and kind == TW2:
            return self._ser3(args)
        if op == HANG and kind == TW2:
            return self._hang(args)
        raise VariantMismatch(f"symbol {op} is not interpreted for class {kind}")

    def _par(self, args: list) -> Profile:
        a1, a2 = args
        if a1.variant == MULTI or a2.variant == MULTI:
            if a1.variant != a2.variant:
                raise VariantMismatch("parallel composition of sort {1} and {1,2} profiles")
            return Profile(MULTI, frozenset(self._t(mset_add(m1, m2)) for m1 in a1.views for m2 in a2.views))
        left = self._as_multisets(a1)
        right = self._as_multisets(a2)
        return Profile(PVAR, frozenset(self._t(mset_add(m1, m2)) for m1 in left for m2 in right))

    def _as_multisets(self, a: Profile) -> list:
        if a.variant == PVAR:
            return list(a.views)
        return [mset({v[0]: 1}) for v in a.views if v[1] is None]

    def _ext(self, label: str, args: list) -> Profile:
        for a in args:
            if a.variant != MULTI:
                raise VariantMismatch("tree extension takes sort {1} profiles")
        leads = [self.leads(a, S1) for a in args]
        out = set()
        for y, xs in self.ext_rules.get(label, ()):
            if len(xs) == len(leads) and all(x in l for x, l in zip(xs, leads)):
                out.add(mset({y: 1}))
        return Profile(MULTI, frozenset(out))

    def _ser2(self, args: list) -> Profile:
        a1, a2 = args
        for a in args:
            if a.variant == MULTI:
                raise VariantMismatch("serial composition takes sort {1,2} profiles")
        out: set = set()
        if a1.variant == PVAR:
            l1 = self.leads(a1, S12)
            if a2.variant == PVAR:
                l2 = self.leads(a2, S12)
                for s, p1, q1 in self.ser2:
                    if p1 not in l1:
                        continue
                    if self.iter_kind[q1]:
                        if q1 in l2:  # P.2.P
                            out.add((s, None))
                    else:
                        for s1, p2, q in self.ser2:  # P.1.P
                            if s1 == q1 and p2 in l2:
                                out.add((s, q))
                singles = self._singles(a2)
                for s, p1, s1 in self.ser2:  # P.edge
                    if p1 in l1 and s1 in singles:
                        out.add((s, None))
            else:
                for s, p, s1 in self.ser2:  # P.S
                    if p in l1 and not self.iter_kind[s1]:
                        for v in a2.views:
                            if v[0] == s1:
                                out.add((s, v[1]))
        else:
            if a2.variant == SVAR:
                by_head = defaultdict(list)
                for v in a2.views:
                    by_head[v[0]].append(v[1])
                for s, s1 in a1.views:  # S.S
                    if s1 is not None and not self.iter_kind[s1]:
                        for q in by_head.get(s1, ()):
                            out.add((s, q))
            else:
                l2 = self.leads(a2, S12)
                singles = self._singles(a2)
                for s, q1 in a1.views:
                    if q1 is None:
                        continue
                    if q1 in singles:  # S.edge
                        out.add((s, None))
                    if self.iter_kind[q1]:
                        if q1 in l2:  # S.2.P
                            out.add((s, None))
                    else:
                        for s1, p, q in self.ser2:  # S.1.P
                            if s1 == q1 and p in l2:
                                out.add((s, q))
        return Profile(SVAR, frozenset(out))

    def _hang(self, args: list) -> Profile:
        a1, a2 = args
        if a1.variant == MULTI or a2.variant != MULTI:
            raise VariantMismatch("hanging takes a sort {1,2} and a sort {1} profile")
        l1 = self.leads(a1, S12)
        l2 = self.leads(a2, S1)
        return Profile(MULTI, frozenset(mset({y: 1}) for y, p, x in self.hang_rules if p in l1 and x in l2))

    def _ser3(self, args: list) -> Profile:
        a1, a2, a3 = args
        if a1.variant == MULTI or a2.variant == MULTI or a3.variant != MULTI:
            raise VariantMismatch("ternary serial composition takes profiles of sorts {1,2}, {1,2}, {1}")
        l3 = self.leads(a3, S1)
        out: set = set()
        if a1.variant == PVAR:
            l1 = self.leads(a1, S12)
            if a2.variant == PVAR:
                l2 = self.leads(a2, S12)
                singles = self._singles(a2)
                for s, p1, q1, x1 in self.ser3:
                    if p1 not in l1 or x1 not in l3:
                        continue
                    if self.iter_kind[q1]:
                        if q1 in l2:  # ser2(P,P)
                            out.add((s, None))
                    else:
                        if q1 in singles:  # ser(P,edge)
                            out.add((s, None))
                        for s1, p2, q, x in self.ser3:  # ser1(P,P)
                            if s1 == q1 and p2 in l2:
                                out.add((s, q, x))
            else:
                for s, p, s1, x1 in self.ser3:  # ser1(P,S), ser2(P,S)
                    if p in l1 and x1 in l3 and not self.iter_kind[s1]:
                        for v in a2.views:
                            if v[0] == s1:
                                out.add((s,) + v[1:])
        else:
            if a2.variant == PVAR:
                l2 = self.leads(a2, S12)
                singles = self._singles(a2)
                for v in a1.views:
                    if v[1] is None or v[2] not in l3:
                        continue
                    s, q1 = v[0], v[1]
                    if q1 in singles:  # ser(S,edge)
                        out.add((s, None))
                    if self.iter_kind[q1]:
                        if q1 in l2:  # ser2(S,P)
                            out.add((s, None))
                    else:
                        for s1, p, q, x in self.ser3:  # ser1(S,P)
                            if s1 == q1 and p in l2:
                                out.add((s, q, x))
            else:
                by_head = defaultdict(list)
                for w in a2.views:
                    by_head[w[0]].append(w)
                for v in a1.views:
                    if v[1] is None or v[2] not in l3 or self.iter_kind[v[1]]:
                        continue
                    for w in by_head.get(v[1], ()):  # ser1(S,S) and its pair variant
                        out.add((v[0],) + w[1:])
        return Profile(SVAR, frozenset(out))

    # acceptance

    def accepting(self, a: Profile) -> bool:
        g = self.grammar
        for ax in g.axioms:
            n = g.nt[ax]
            if n.sort != a.sort:
                continue
            if a.variant == SVAR:
                if n.kind == BASE and (ax, None) in a.views:
                    return True
                continue
            if n.kind == ITER:
                if any(self.lt(ax, m) for m in a.views):
                    return True
            elif mset({ax: 1}) in a.views:
                return True
        return False


def build_recognizer(g: Grammar, check: bool = True) -> GrammarRecognizer:
    """Recognizer of a regular grammar, built from its alternative form (off trees) in normal form."""
    if check and not (is_regular(g) or is_regular(g, alternative=True)):
        raise NotRegular(f"grammar is not a regular {g.cls.kind} grammar")
    work = g if g.cls.kind == TREE else alternative_form(g)
    return GrammarRecognizer(normalize(work), source=g)


# ---------------------------------------------------------------------------
# products


class TrivialRecognizer(Recognizer):
    """One element per sort; accepts nothing."""

    def __init__(self, cls: ClassId):
        self.cls = cls
        self._init_cache()

    def apply(self, sym: Symbol, args: list):
        return ("*", symbol_result_sort(sym, [a[1] for a in args]))

    def accepting(self, a) -> bool:
        return False

    def sort_of(self, a) -> frozenset:
        return a[1]

    def union(self, a, b):
        return a


class ProductRecognizer(Recognizer):
    def __init__(self, r1: Recognizer, r2: Recognizer, combine: Callable[[bool, bool], bool]):
        if not r1.cls.same_signature(r2.cls):
            raise ClassMismatch(f"cannot combine recognizers over {r1.cls} and {r2.cls}")
        self.cls = r1.cls
        self.r1 = r1
        self.r2 = r2
        self.combine = combine
        self._init_cache()

    def apply(self, sym: Symbol, args: list):
        return (
            self.r1.apply_cached(sym, tuple(a[0] for a in args)),
            self.r2.apply_cached(sym, tuple(a[1] for a in args)),
        )

    def accepting(self, a) -> bool:
        return self.combine(self.r1.accepting(a[0]), self.r2.accepting(a[1]))

    def sort_of(self, a) -> frozenset:
        return self.r1.sort_of(a[0])

    def union(self, a, b):
        return (self.r1.union(a[0], b[0]), self.r2.union(a[1], b[1]))

    def describe(self, a) -> object:
        return [self.r1.describe(a[0]), self.r2.describe(a[1])]


_CONNECTIVES: dict[str, Callable[[bool, bool], bool]] = {
    "and": lambda x, y: x and y,
    "or": lambda x, y: x or y,
    "xor": lambda x, y: x != y,
    "diff": lambda x, y: x and not y,
}


def product(r1: Recognizer, r2: Recognizer, combine: str | Callable[[bool, bool], bool] = "and") -> ProductRecognizer:
    fn = _CONNECTIVES[combine] if isinstance(combine, str) else combine
    return ProductRecognizer(r1, r2, fn)


def complement(r: Recognizer) -> ProductRecognizer:
    return ProductRecognizer(r, TrivialRecognizer(r.cls), lambda x, _: not x)
