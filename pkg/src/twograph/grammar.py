"""Stratified grammars, footprints, normalization, trunk/leadsto and the enumeration oracle.

Nonterminals come in two kinds: iterating ones (kind ``X``; called P at sort
{1,2}) and base ones (kind ``Y``; called S at sort {1,2}). Rules have the forms

* A: ``X -> X || Y^q`` (``PumpRule``)
* B: ``X -> Y1^q1 || ... || Yk^qk`` with distinct Yi, k >= 0 (``BaseRule``)
* C: ``Y -> t[Z1..Zm]`` and D: ``X -> t`` with t ground (``TermRule``)

plus axioms. A ``TermRule`` fitting neither C nor D is a free rule; free rules
are allowed only where stratification is not needed (left side of inclusion).
"""

from __future__ import annotations

import itertools
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Union

from twograph.config import DEFAULT_ORACLE, OracleConfig
from twograph.errors import (
    BoundExceeded,
    BudgetExceeded,
    InputError,
    NotNormalized,
    NotStratified,
    ParseError,
    SortMismatch,
    UnknownSymbol,
    WrongClass,
)
from twograph.graph_core import (
    DSP,
    EDGE,
    EXT,
    NT,
    PAR,
    S1,
    S12,
    SP,
    TREE,
    ZERO,
    ClassId,
    Graph,
    GraphSet,
    Term,
    class_apply,
    hr_zero,
    sort_str,
    term_from_json,
    term_sort,
    term_to_json,
)

ITER = "X"
BASE = "Y"


@dataclass(frozen=True)
class Nonterminal:
    name: str
    sort: frozenset
    kind: str

    def __post_init__(self):
        if self.kind not in (ITER, BASE):
            raise InputError(f"nonterminal {self.name!r} has unknown kind {self.kind!r}")


@dataclass(frozen=True)
class PumpRule:
    lhs: str
    y: str
    q: int
    form = "A"

    def term(self) -> Term:
        return Term.par_all([Term.nt(self.lhs)] + [Term.nt(self.y)] * self.q)

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.lhs} || {self.y}^{self.q}"


@dataclass(frozen=True)
class BaseRule:
    lhs: str
    parts: tuple[tuple[str, int], ...]
    form = "B"

    def counts(self) -> dict[str, int]:
        return dict(self.parts)

    def total(self) -> int:
        return sum(q for _, q in self.parts)

    def __str__(self) -> str:
        rhs = " || ".join(f"{y}^{q}" for y, q in self.parts) or "0"
        return f"{self.lhs} -> {rhs}"


@dataclass(frozen=True)
class TermRule:
    lhs: str
    term: Term
    form = "T"

    def __str__(self) -> str:
        return f"{self.lhs} -> {self.term}"


Rule = Union[PumpRule, BaseRule, TermRule]


def make_base(lhs: str, counts: Mapping[str, int] | Iterable[tuple[str, int]]) -> BaseRule:
    items = counts.items() if isinstance(counts, Mapping) else counts
    merged: Counter = Counter()
    for y, q in items:
        merged[y] += q
    return BaseRule(lhs, tuple(sorted((y, q) for y, q in merged.items() if q > 0)))


@dataclass(frozen=True)
class Grammar:
    cls: ClassId
    nonterminals: tuple[Nonterminal, ...]
    rules: tuple[Rule, ...]
    axioms: tuple[str, ...]

    def __post_init__(self):
        names = [n.name for n in self.nonterminals]
        if len(set(names)) != len(names):
            raise InputError("duplicate nonterminal name")
        for n in self.nonterminals:
            if n.sort not in self.cls.sorts:
                raise SortMismatch(f"nonterminal {n.name!r} has sort {sort_str(n.sort)} outside {self.cls.kind}")
        for i, r in enumerate(self.rules):
            self._check_rule(r, f"/rules/{i}")
        for i, a in enumerate(self.axioms):
            if a not in self.nt:
                raise UnknownSymbol(f"axiom {a!r} is not a nonterminal", f"/axioms/{i}")

    def _check_rule(self, r: Rule, ptr: str) -> None:
        if r.lhs not in self.nt:
            raise UnknownSymbol(f"rule left side {r.lhs!r} undeclared", ptr)
        lhs = self.nt[r.lhs]
        if isinstance(r, PumpRule):
            if lhs.kind != ITER:
                raise NotStratified(f"form A needs an iterating left side, {r.lhs!r} is base", ptr)
            y = self.nt.get(r.y)
            if y is None:
                raise UnknownSymbol(f"nonterminal {r.y!r} undeclared", ptr)
            if y.kind != BASE or y.sort != lhs.sort:
                raise NotStratified(f"form A needs a base nonterminal of sort {sort_str(lhs.sort)}", ptr)
            if r.q < 1:
                raise NotStratified("form A needs an exponent >= 1", ptr)
        elif isinstance(r, BaseRule):
            if lhs.kind != ITER:
                raise NotStratified(f"form B needs an iterating left side, {r.lhs!r} is base", ptr)
            ys = [y for y, _ in r.parts]
            if len(set(ys)) != len(ys):
                raise NotStratified("form B needs pairwise distinct nonterminals", ptr)
            for y, q in r.parts:
                n = self.nt.get(y)
                if n is None:
                    raise UnknownSymbol(f"nonterminal {y!r} undeclared", ptr)
                if n.kind != BASE or n.sort != lhs.sort:
                    raise NotStratified(f"form B needs base nonterminals of sort {sort_str(lhs.sort)}", ptr)
                if q < 1:
                    raise NotStratified("form B needs exponents >= 1", ptr)
        else:
            srt = term_sort(self.cls, r.term, self.nt_sorts)
            if srt != lhs.sort:
                raise SortMismatch(f"rule for {r.lhs!r} produces sort {sort_str(srt)}, expected {sort_str(lhs.sort)}", ptr)

    @cached_property
    def nt(self) -> dict[str, Nonterminal]:
        return {n.name: n for n in self.nonterminals}

    @cached_property
    def nt_sorts(self) -> dict[str, frozenset]:
        return {n.name: n.sort for n in self.nonterminals}

    def kind(self, name: str) -> str:
        return self.nt[name].kind

    def sort(self, name: str) -> frozenset:
        return self.nt[name].sort

    @cached_property
    def pumps(self) -> tuple[PumpRule, ...]:
        return tuple(r for r in self.rules if isinstance(r, PumpRule))

    @cached_property
    def bases(self) -> tuple[BaseRule, ...]:
        return tuple(r for r in self.rules if isinstance(r, BaseRule))

    @cached_property
    def term_rules(self) -> tuple[TermRule, ...]:
        return tuple(r for r in self.rules if isinstance(r, TermRule))

    def rules_for(self, name: str) -> list[Rule]:
        return [r for r in self.rules if r.lhs == name]

    def fresh_name(self, base: str, taken: set[str] | None = None) -> str:
        used = set(self.nt) | (taken or set())
        if base not in used:
            return base
        for i in itertools.count(1):
            cand = f"{base}'{i}"
            if cand not in used:
                return cand
        raise AssertionError

    def replace(self, **changes) -> "Grammar":
        data = {
            "cls": self.cls,
            "nonterminals": self.nonterminals,
            "rules": self.rules,
            "axioms": self.axioms,
        }
        data.update(changes)
        return Grammar(**data)

    def __str__(self) -> str:
        lines = [f"grammar over {self.cls}"]
        for n in self.nonterminals:
            lines.append(f"  {n.kind} {n.name} : {sort_str(n.sort)}")
        for r in self.rules:
            lines.append(f"  {r}")
        for a in self.axioms:
            lines.append(f"  -> {a}")
        return "\n".join(lines)


def grammar(cls: ClassId, nts: Iterable[tuple[str, Iterable[int], str]], rules: Iterable[Rule], axioms: Iterable[str]) -> Grammar:
    """Build a grammar from (name, sort, kind) triples and stratify its term rules."""
    g = Grammar(
        cls,
        tuple(Nonterminal(n, frozenset(s), k) for n, s, k in nts),
        tuple(rules),
        tuple(axioms),
    )
    return stratify(g)


def grammar_size(g: Grammar) -> int:
    """Size with exponents counted in unary."""
    total = len(g.axioms)
    for r in g.rules:
        if isinstance(r, PumpRule):
            total += 2 + r.q
        elif isinstance(r, BaseRule):
            total += 1 + r.total()
        else:
            total += 1 + _term_size(r.term)
    return total


def _term_size(t: Term) -> int:
    return 1 + sum(_term_size(a) for a in t.args)


# ---------------------------------------------------------------------------
# classification


def _pure_par(t: Term) -> list[str] | None:
    """Nonterminals of a term that is only a parallel composition of nonterminals."""
    if t.op == ZERO:
        return []
    factors = t.par_factors()
    if all(f.op == NT for f in factors):
        return [f.label for f in factors]
    return None


def classify_rule(g: Grammar, r: Rule, ptr: str = "") -> Rule:
    """Group parallel rules into forms A/B; raise NotStratified on malformed ones."""
    if not isinstance(r, TermRule):
        return r
    lhs = g.nt[r.lhs]
    names = _pure_par(r.term)
    if names is not None:
        if lhs.kind != ITER:
            raise NotStratified(f"parallel rule {r} has a base left side; forms A/B need an iterating one", ptr)
        count = Counter(names)
        selfs = count.pop(r.lhs, 0)
        if selfs > 1:
            raise NotStratified(f"rule {r} repeats its left side", ptr)
        for y in count:
            if g.nt[y].kind != BASE:
                raise NotStratified(f"rule {r} mixes iterating nonterminal {y!r} into a parallel rule", ptr)
        if selfs == 1:
            if len(count) != 1:
                raise NotStratified(f"form A needs exactly one base nonterminal in {r}", ptr)
            (y, q), = count.items()
            out: Rule = PumpRule(r.lhs, y, q)
        else:
            if lhs.sort != S1 and not count:
                # the empty parallel composition of sort {1,2} is the two-source edgeless graph
                pass
            out = make_base(r.lhs, count)
        g._check_rule(out, ptr)
        return out
    # anything else is form C, D or free; rule_form tells them apart
    return r


def stratify(g: Grammar) -> Grammar:
    rules = tuple(classify_rule(g, r, f"/rules/{i}") for i, r in enumerate(g.rules))
    if rules == g.rules:
        return g
    return g.replace(rules=rules)


def rule_form(g: Grammar, r: Rule) -> str:
    if isinstance(r, PumpRule):
        return "A"
    if isinstance(r, BaseRule):
        return "B"
    if g.kind(r.lhs) == BASE and _pure_par(r.term) is None:
        return "C"
    if g.kind(r.lhs) == ITER and r.term.is_ground() and _pure_par(r.term) is None:
        return "D"
    return "F"


def classify_rules(g: Grammar) -> list[str]:
    """Form tags A-D for every rule (axioms are form E and listed separately)."""
    tags = []
    for i, r in enumerate(g.rules):
        r2 = classify_rule(g, r, f"/rules/{i}")
        tags.append(rule_form(g, r2))
    return tags


def is_stratified(g: Grammar) -> bool:
    try:
        return "F" not in classify_rules(g)
    except NotStratified:
        return False


def _require_stratified(g: Grammar) -> Grammar:
    g = stratify(g)
    for i, r in enumerate(g.rules):
        if rule_form(g, r) == "F":
            raise NotStratified(f"rule {r} is not of forms A-D", f"/rules/{i}")
    return g


# ---------------------------------------------------------------------------
# footprints


def placeholder(g: Grammar, name: str) -> str:
    n = g.nt[name]
    return f"{n.kind}{sort_str(n.sort)}"


@dataclass(frozen=True)
class Footprint:
    """Per-sort minimal base-rule total plus the rule and axiom templates."""

    iter_bound: tuple[tuple[frozenset, float], ...]
    templates: frozenset

    def bound(self, tau: frozenset) -> float:
        for s, m in self.iter_bound:
            if s == tau:
                return m
        return math.inf

    def __str__(self) -> str:
        parts = [f"X{sort_str(s)} -> Y{sort_str(s)}^{m}" for s, m in self.iter_bound]
        for t in sorted(self.templates, key=str):
            if t[0] == "axiom":
                parts.append(f"-> {t[1]}")
            else:
                parts.append(f"{t[1]} -> {t[2]}")
        return "{" + "; ".join(parts) + "}"


def footprint(g: Grammar) -> Footprint:
    g = _require_stratified(g)
    bounds: dict[frozenset, float] = {tau: math.inf for tau in g.cls.sorts}
    templates = set()
    for r in g.rules:
        if isinstance(r, BaseRule):
            tau = g.sort(r.lhs)
            bounds[tau] = min(bounds[tau], r.total())
        elif isinstance(r, TermRule):
            tpl = r.term.rename_nonterminals(lambda n: placeholder(g, n))
            templates.add(("rule", placeholder(g, r.lhs), tpl))
    for a in g.axioms:
        templates.add(("axiom", placeholder(g, a)))
    return Footprint(tuple(sorted(bounds.items(), key=lambda kv: sorted(kv[0]))), frozenset(templates))


_X1, _Y1, _P, _S = "X{1}", "Y{1}", "X{1,2}", "Y{1,2}"


def class_footprint(cls: ClassId, alternative: bool = False) -> Footprint:
    """The class footprints; ``alternative`` gives the variant for alternative forms."""
    nt = Term.nt
    tpl: set = set()
    if cls.kind == TREE:
        for lab, ar in cls.alphabet:
            tpl.add(("rule", _Y1, Term.ext(lab, *([nt(_X1)] * (ar - 1)))))
        tpl.add(("axiom", _X1))
        return Footprint(((S1, 0),), frozenset(tpl))
    revs = (False,) if cls.kind == SP else (False, True)
    for lab in cls.labels:
        for rev in revs:
            tpl.add(("rule", _S, Term.edge(lab, rev)))
            if not alternative:
                tpl.add(("rule", _P, Term.edge(lab, rev)))
    par_bound = 1 if alternative else 2
    if cls.kind in (SP, DSP):
        tpl.add(("rule", _S, Term.ser(nt(_P), nt(_S))))
        tpl.add(("rule", _S, Term.ser(nt(_P), nt(_P))))
        tpl.add(("axiom", _P))
        tpl.add(("axiom", _S))
        return Footprint(((S12, par_bound),), frozenset(tpl))
    tpl.add(("rule", _Y1, Term.hang(nt(_P), nt(_X1))))
    tpl.add(("rule", _S, Term.ser(nt(_P), nt(_S), nt(_X1))))
    tpl.add(("rule", _S, Term.ser(nt(_P), nt(_P), nt(_X1))))
    tpl.add(("axiom", _X1))
    return Footprint(((S1, 0), (S12, par_bound)), frozenset(tpl))


def footprint_leq(fp1: Footprint, fp2: Footprint) -> bool:
    for tau, m1 in fp1.iter_bound:
        if m1 < fp2.bound(tau):
            return False
    for tau, m2 in fp2.iter_bound:
        if fp1.bound(tau) < m2:
            return False
    return fp1.templates <= fp2.templates


def is_regular(g: Grammar, alternative: bool = False) -> bool:
    if not is_stratified(g):
        return False
    if alternative and not _alternative_side_condition(g):
        return False
    return footprint_leq(footprint(g), class_footprint(g.cls, alternative))


def _alternative_side_condition(g: Grammar) -> bool:
    """A base rule P -> S with one factor needs S -> b and S used nowhere else."""
    uses: Counter = Counter()
    for r in g.rules:
        if isinstance(r, BaseRule):
            for y, _ in r.parts:
                uses[y] += 1
        elif isinstance(r, TermRule):
            for n in r.term.nonterminals():
                uses[n] += 1
    for a in g.axioms:
        uses[a] += 1
    for r in g.bases:
        if g.sort(r.lhs) == S12 and r.total() == 1:
            (s, _), = r.parts
            own = g.rules_for(s)
            if uses[s] != 1 or not own or not all(isinstance(x, TermRule) and x.term.op == EDGE for x in own):
                return False
    return True


def is_aperiodic_grammar(g: Grammar) -> bool:
    g = stratify(g)
    for exps in pump_exponents(g).values():
        if not exps:
            continue
        if exps == {1}:
            continue
        if len(exps) >= 2 and math.gcd(*exps) == 1:
            continue
        return False
    return True


def pump_exponents(g: Grammar) -> dict[tuple[str, str], set[int]]:
    out: dict[tuple[str, str], set[int]] = defaultdict(set)
    for r in g.pumps:
        out[(r.lhs, r.y)].add(r.q)
    return dict(out)


def is_normalized(g: Grammar) -> bool:
    return all(len(exps) == 1 for exps in pump_exponents(g).values())


# ---------------------------------------------------------------------------
# multisets, constants, trunk, leadsto

MSet = tuple  # sorted tuple of (name, count) pairs with count > 0


def mset(counts: Mapping[str, int] | Iterable[tuple[str, int]] = ()) -> MSet:
    items = counts.items() if isinstance(counts, Mapping) else counts
    merged: Counter = Counter()
    for k, v in items:
        merged[k] += v
    return tuple(sorted((k, v) for k, v in merged.items() if v > 0))


def mset_add(a: MSet, b: MSet) -> MSet:
    return mset(list(a) + list(b))


@dataclass(frozen=True)
class GrammarConstants:
    b: Mapping[str, int]
    p: Mapping[str, int]

    def q(self, y: str) -> int:
        return self.b.get(y, 0) + self.p.get(y, 1)

    def bq(self, y: str) -> tuple[int, int, int]:
        b = self.b.get(y, 0)
        p = self.p.get(y, 1)
        return b, p, b + p


def grammar_constants(g: Grammar) -> GrammarConstants:
    b: dict[str, int] = {}
    exps: dict[str, list[int]] = defaultdict(list)
    for r in g.bases:
        for y, q in r.parts:
            b[y] = max(b.get(y, 0), q)
    for r in g.pumps:
        exps[r.y].append(r.q)
    p = {y: max(1, math.lcm(*qs)) for y, qs in exps.items()}
    for n in g.nonterminals:
        if n.kind == BASE:
            b.setdefault(n.name, 0)
            p.setdefault(n.name, 1)
    return GrammarConstants(b, p)


def trunk_count(k: int, b: int, p: int) -> int:
    q = b + p
    return k if k < q else q + (k - q) % p


def trunk(m: MSet | Mapping[str, int], c: GrammarConstants) -> MSet:
    items = m.items() if isinstance(m, Mapping) else m
    out = []
    for y, k in items:
        b, p, _ = c.bq(y)
        out.append((y, trunk_count(k, b, p)))
    return mset(out)


class Leadsto:
    """Decides X ~> m on a normalized grammar by a modulo check per base rule."""

    def __init__(self, g: Grammar):
        self.grammar = g
        self.pump: dict[str, dict[str, int]] = defaultdict(dict)
        for (x, y), exps in pump_exponents(g).items():
            if len(exps) != 1:
                raise NotNormalized(f"{x} has {len(exps)} pump rules for {y}")
            self.pump[x][y] = next(iter(exps))
        self.bases: dict[str, list[dict[str, int]]] = defaultdict(list)
        for r in g.bases:
            self.bases[r.lhs].append(r.counts())
        self._cache: dict[tuple[str, MSet], bool] = {}

    def __call__(self, x: str, m: MSet | Mapping[str, int]) -> bool:
        if isinstance(m, Mapping):
            m = mset(m)
        key = (x, m)
        hit = self._cache.get(key)
        if hit is None:
            hit = self._compute(x, dict(m))
            self._cache[key] = hit
        return hit

    def _compute(self, x: str, m: dict[str, int]) -> bool:
        pumps = self.pump.get(x, {})
        for s in self.bases.get(x, ()):
            ok = True
            for y in set(m) | set(s):
                have, base = m.get(y, 0), s.get(y, 0)
                if have < base:
                    ok = False
                    break
                q = pumps.get(y)
                if q is None:
                    if have != base:
                        ok = False
                        break
                elif (have - base) % q:
                    ok = False
                    break
            if ok:
                return True
        return False


def leadsto(x: str, m: MSet | Mapping[str, int], g: Grammar) -> bool:
    return Leadsto(g)(x, m)


# ---------------------------------------------------------------------------
# normalization


def frobenius(gens: Iterable[int]) -> tuple[int, set[int]]:
    """Largest non-representable value and the representable values up to it.

    ``gens`` must be coprime and must not contain 1.
    """
    gens = sorted(set(gens))
    bound = (gens[0] - 1) * (gens[-1] - 1)
    rep = [False] * (bound + 1)
    rep[0] = True
    for v in range(1, bound + 1):
        rep[v] = any(v >= q and rep[v - q] for q in gens)
    f = max(v for v in range(bound + 1) if not rep[v])
    return f, {v for v in range(f + 1) if rep[v]}


def normalize(g: Grammar) -> Grammar:
    """Language-preserving normal form with at most one pump rule per (X, Y)."""
    g = _require_stratified(g)
    if is_normalized(g):
        return g
    exps = pump_exponents(g)
    by_x: dict[str, list[str]] = defaultdict(list)
    for (x, y) in sorted(exps):
        by_x[x].append(y)
    taken: set[str] = set()
    new_nts = list(g.nonterminals)
    new_rules: list[Rule] = []
    variants: dict[str, list[str]] = {}
    for r in g.rules:
        if isinstance(r, (PumpRule, BaseRule)) and r.lhs in by_x:
            continue
        new_rules.append(r)
    for x, ys in by_x.items():
        simple: dict[str, int] = {}
        tails: dict[str, tuple[int, list[int], int]] = {}
        for y in ys:
            qs = sorted(exps[(x, y)])
            d = math.gcd(*qs)
            gens = [q // d for q in qs]
            if 1 in gens:
                simple[y] = d
            else:
                f, rep = frobenius(gens)
                tails[y] = (d, sorted(v * d for v in rep), d * (f + 1))
        complex_ys = sorted(tails)
        names = []
        for size in range(len(complex_ys) + 1):
            for periodic in itertools.combinations(complex_ys, size):
                if not periodic:
                    name = x
                else:
                    name = g.fresh_name(f"{x}~{'+'.join(periodic)}", taken)
                    taken.add(name)
                    new_nts.append(Nonterminal(name, g.sort(x), ITER))
                names.append(name)
                for y, d in simple.items():
                    new_rules.append(PumpRule(name, y, d))
                for y in periodic:
                    new_rules.append(PumpRule(name, y, tails[y][0]))
                finite = [y for y in complex_ys if y not in periodic]
                seen = set()
                for base in (r for r in g.bases if r.lhs == x):
                    for extra in itertools.product(*(tails[y][1] for y in finite)):
                        counts = Counter(base.counts())
                        for y, e in zip(finite, extra):
                            counts[y] += e
                        for y in periodic:
                            counts[y] += tails[y][2]
                        rule = make_base(name, counts)
                        if rule not in seen:
                            seen.add(rule)
                            new_rules.append(rule)
        variants[x] = names
    out_rules: list[Rule] = []
    for r in new_rules:
        if isinstance(r, TermRule) and any(n in variants and len(variants[n]) > 1 for n in r.term.nonterminals()):
            out_rules.extend(TermRule(r.lhs, t) for t in _expand_variants(r.term, variants))
        else:
            out_rules.append(r)
    axioms = []
    for a in g.axioms:
        for v in variants.get(a, [a]):
            if v not in axioms:
                axioms.append(v)
    return Grammar(g.cls, tuple(new_nts), tuple(out_rules), tuple(axioms))


def _expand_variants(t: Term, variants: Mapping[str, list[str]]) -> Iterator[Term]:
    if t.op == NT:
        for v in variants.get(t.label, [t.label]):
            yield Term.nt(v)
        return
    if not t.args:
        yield t
        return
    for kids in itertools.product(*(list(_expand_variants(a, variants)) for a in t.args)):
        yield Term(t.op, tuple(kids), t.label, t.rev)


# ---------------------------------------------------------------------------
# universal grammars and alternative forms


def universal_grammar(cls: ClassId) -> Grammar:
    nt = Term.nt
    if cls.kind == TREE:
        rules: list[Rule] = [TermRule("Y", Term.ext(lab, *([nt("X")] * (ar - 1)))) for lab, ar in cls.alphabet]
        rules += [PumpRule("X", "Y", 1), BaseRule("X", ())]
        return grammar(cls, [("X", [1], ITER), ("Y", [1], BASE)], rules, ["X"])
    revs = (False,) if cls.kind == SP else (False, True)
    consts = [Term.edge(lab, rev) for lab in cls.labels for rev in revs]
    rules = [TermRule("S", c) for c in consts] + [TermRule("P", c) for c in consts]
    rules += [PumpRule("P", "S", 1), BaseRule("P", (("S", 2),))]
    if cls.kind in (SP, DSP):
        rules += [TermRule("S", Term.ser(nt("P"), nt("S"))), TermRule("S", Term.ser(nt("P"), nt("P")))]
        return grammar(cls, [("P", [1, 2], ITER), ("S", [1, 2], BASE)], rules, ["P", "S"])
    rules += [
        TermRule("S", Term.ser(nt("P"), nt("S"), nt("X"))),
        TermRule("S", Term.ser(nt("P"), nt("P"), nt("X"))),
        TermRule("Y", Term.hang(nt("P"), nt("X"))),
        PumpRule("X", "Y", 1),
        BaseRule("X", ()),
    ]
    nts = [("X", [1], ITER), ("Y", [1], BASE), ("P", [1, 2], ITER), ("S", [1, 2], BASE)]
    return grammar(cls, nts, rules, ["X"])


def alternative_form(g: Grammar) -> Grammar:
    """Replace each rule P -> b by P -> S_b and S_b -> b with a fresh S_b per constant."""
    if g.cls.kind == TREE:
        raise WrongClass("alternative forms exist for SP, DSP and TW2 grammars only")
    g = stratify(g)
    fresh: dict[tuple[str, bool], str] = {}
    taken: set[str] = set()
    nts = list(g.nonterminals)
    rules: list[Rule] = []
    extra: list[Rule] = []
    for r in g.rules:
        if isinstance(r, TermRule) and g.kind(r.lhs) == ITER and r.term.op == EDGE:
            key = (r.term.label, r.term.rev)
            if key not in fresh:
                name = g.fresh_name(f"S_{r.term.label}{'21' if r.term.rev else '12'}", taken)
                taken.add(name)
                fresh[key] = name
                nts.append(Nonterminal(name, S12, BASE))
                extra.append(TermRule(name, r.term))
            rules.append(BaseRule(r.lhs, ((fresh[key], 1),)))
        else:
            rules.append(r)
    if not fresh:
        return g
    return Grammar(g.cls, tuple(nts), tuple(rules + extra), g.axioms)


# ---------------------------------------------------------------------------
# JSON


def grammar_to_json(g: Grammar) -> dict:
    rules = []
    for r in g.rules:
        if isinstance(r, PumpRule):
            rules.append({"form": "A", "lhs": r.lhs, "rhs": {"y": r.y, "q": r.q}})
        elif isinstance(r, BaseRule):
            rules.append({"form": "B", "lhs": r.lhs, "rhs": [{"y": y, "q": q} for y, q in r.parts]})
        else:
            rules.append({"form": rule_form(g, r), "lhs": r.lhs, "rhs": term_to_json(r.term)})
    return {
        "class": g.cls.kind,
        "alphabet": dict(g.cls.alphabet),
        "nonterminals": [{"name": n.name, "sort": sorted(n.sort), "kind": n.kind} for n in g.nonterminals],
        "rules": rules,
        "axioms": list(g.axioms),
    }


def grammar_from_json(obj: object, allow_free: bool = False) -> Grammar:
    if not isinstance(obj, dict):
        raise ParseError("grammar document must be an object", "")
    kind = obj.get("class")
    raw_nts = obj.get("nonterminals")
    if not isinstance(raw_nts, list):
        raise ParseError("nonterminals must be a list", "/nonterminals")
    nts = []
    for i, n in enumerate(raw_nts):
        if not isinstance(n, dict) or not {"name", "sort", "kind"} <= set(n):
            raise ParseError("nonterminal needs name, sort and kind", f"/nonterminals/{i}")
        if n["kind"] not in (ITER, BASE):
            raise ParseError(f"kind must be X or Y, got {n['kind']!r}", f"/nonterminals/{i}/kind")
        nts.append(Nonterminal(str(n["name"]), frozenset(int(s) for s in n["sort"]), n["kind"]))
    rules: list[Rule] = []
    raw_rules = obj.get("rules", [])
    if not isinstance(raw_rules, list):
        raise ParseError("rules must be a list", "/rules")
    for i, r in enumerate(raw_rules):
        ptr = f"/rules/{i}"
        if not isinstance(r, dict) or "lhs" not in r or "rhs" not in r:
            raise ParseError("rule needs lhs and rhs", ptr)
        form = r.get("form", "F")
        lhs = str(r["lhs"])
        rhs = r["rhs"]
        try:
            if form == "A":
                rules.append(PumpRule(lhs, str(rhs["y"]), int(rhs["q"])))
            elif form == "B":
                rules.append(make_base(lhs, [(str(p["y"]), int(p["q"])) for p in rhs]))
            elif form in ("C", "D", "F"):
                rules.append(TermRule(lhs, term_from_json(rhs, ptr + "/rhs")))
            else:
                raise ParseError(f"unknown rule form {form!r}", ptr + "/form")
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed {form} payload: {exc}", ptr + "/rhs") from None
    alphabet = obj.get("alphabet")
    if alphabet is None:
        alphabet = _infer_alphabet(rules)
    if not isinstance(alphabet, dict):
        raise ParseError("alphabet must map labels to arities", "/alphabet")
    try:
        cls = ClassId.make(kind, {str(k): int(v) for k, v in alphabet.items()})
    except InputError as exc:
        raise ParseError(str(exc), "/class") from None
    axioms = obj.get("axioms", [])
    g = Grammar(cls, tuple(nts), tuple(rules), tuple(str(a) for a in axioms))
    g = stratify(g)
    tags = [rule_form(g, r) for r in g.rules]
    for i, (r, tag) in enumerate(zip(raw_rules, tags)):
        declared = r.get("form", "F")
        if tag == "F" and not allow_free:
            raise NotStratified(f"rule {g.rules[i]} is not of forms A-D", f"/rules/{i}")
        if declared in ("C", "D") and tag != declared:
            raise NotStratified(f"rule declared {declared} but has shape {tag}", f"/rules/{i}")
    return g


def _infer_alphabet(rules: list[Rule]) -> dict[str, int]:
    out: dict[str, int] = {}

    def walk(t: Term):
        if t.op == EDGE:
            out[t.label] = 2
        elif t.op == EXT:
            out[t.label] = len(t.args) + 1
        for a in t.args:
            walk(a)

    for r in rules:
        if isinstance(r, TermRule):
            walk(r.term)
    return out


def load_grammar(path: str, allow_free: bool = False) -> Grammar:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, None, exc.lineno, exc.colno) from None
    return grammar_from_json(obj, allow_free)


# ---------------------------------------------------------------------------
# bounded enumeration oracle


@dataclass
class _Plan:
    """A rule prepared for enumeration: leaf groups plus a graph builder."""

    lhs: str
    groups: list[tuple[str, int]]  # (nonterminal, multiplicity)
    const_edges: int
    build: object  # callable(list[Graph]) -> Graph, graphs in group order


def _plans(g: Grammar) -> list[_Plan]:
    cls = g.cls
    plans = []
    for r in g.rules:
        if isinstance(r, PumpRule):
            plans.append(_Plan(r.lhs, [(r.lhs, 1), (r.y, r.q)], 0, _par_builder(cls)))
        elif isinstance(r, BaseRule):
            if not r.parts:
                zero = hr_zero(g.sort(r.lhs))
                plans.append(_Plan(r.lhs, [], 0, lambda gs, z=zero: z))
            else:
                plans.append(_Plan(r.lhs, list(r.parts), 0, _par_builder(cls)))
        else:
            names = _pure_par(r.term)
            if names:
                plans.append(_Plan(r.lhs, sorted(Counter(names).items()), 0, _par_builder(cls)))
            else:
                leaves = r.term.nonterminals()
                plans.append(_Plan(r.lhs, [(n, 1) for n in leaves], r.term.n_edges(), _term_builder(cls, r.term)))
    return plans


def _par_builder(cls: ClassId):
    def build(gs: list[Graph]) -> Graph:
        acc = gs[0]
        for h in gs[1:]:
            acc = class_apply(cls, Term(PAR), [acc, h])
        return acc

    return build


def _term_builder(cls: ClassId, t: Term):
    def build(gs: list[Graph]) -> Graph:
        it = iter(gs)

        def ev(s: Term) -> Graph:
            if s.op == NT:
                return next(it)
            return class_apply(cls, s.symbol, [ev(a) for a in s.args])

        return ev(t)

    return build


def _multisets(items: list[Graph], k: int, budget: int) -> Iterator[tuple[list[Graph], int]]:
    """Multisets of size k from ``items`` (sorted by edge count) within an edge budget."""
    if k == 0:
        yield [], 0
        return

    def rec(start: int, left: int, room: int, acc: list[Graph], used: int):
        if left == 0:
            yield list(acc), used
            return
        for i in range(start, len(items)):
            e = items[i].n_edges
            if e * left > room:
                break
            acc.append(items[i])
            yield from rec(i, left - 1, room - e, acc, used + e)
            acc.pop()

    yield from rec(0, k, budget, [], 0)


def enumerate_nonterminals(
    g: Grammar,
    bound: int,
    config: OracleConfig = DEFAULT_ORACLE,
    seeds: Mapping[str, Iterable[Graph]] | None = None,
    unsafe: bool = False,
) -> dict[str, GraphSet]:
    """For every nonterminal, its derivable graphs with at most ``bound`` edges."""
    if bound > config.max_edges and not unsafe:
        raise BoundExceeded(f"bound {bound} exceeds the oracle limit {config.max_edges}")
    max_ar = max(ar for _, ar in g.cls.alphabet)
    iso_limit = max(config.max_vertices, bound * (max_ar - 1) + 3)
    vertex_cap = bound * (max_ar - 1) + 3
    known: dict[str, GraphSet] = {n.name: GraphSet(max_vertices=iso_limit) for n in g.nonterminals}
    old: dict[str, list[Graph]] = {n.name: [] for n in g.nonterminals}
    delta: dict[str, list[Graph]] = {n.name: [] for n in g.nonterminals}
    for name, gs in (seeds or {}).items():
        for h in gs:
            if known[name].add(h):
                delta[name].append(h)
    plans = _plans(g)
    first = True
    total = 0
    while True:
        fresh: dict[str, list[Graph]] = defaultdict(list)
        full = {n: sorted(old[n] + delta[n], key=lambda h: h.n_edges) for n in old if delta[n]}
        for plan in plans:
            for h in _fire(plan, old, delta, full, bound, first):
                if h.n_edges > bound or h.n_vertices > vertex_cap:
                    continue
                if known[plan.lhs].add(h):
                    fresh[plan.lhs].append(h)
                    total += 1
                    if total > config.max_graphs:
                        raise BudgetExceeded("enumeration exceeded its graph cap", total)
        first = False
        for name in old:
            old[name] = sorted(old[name] + delta[name], key=lambda h: h.n_edges)
            delta[name] = sorted(fresh.get(name, []), key=lambda h: h.n_edges)
        if not fresh:
            return known


def _fire(plan: _Plan, old, delta, full, bound: int, first: bool) -> Iterator[Graph]:
    room = bound - plan.const_edges
    if room < 0:
        return
    if not plan.groups:
        if first:
            yield plan.build([])
        return
    groups = plan.groups
    if not any(delta[n] for n, _ in groups):
        return
    # semi-naive: group i is the first to use a new graph
    for i in range(len(groups)):
        name_i, k_i = groups[i]
        if not delta[name_i]:
            continue

        def choose(j: int, room_left: int, acc: list[Graph]):
            if j == len(groups):
                yield plan.build(acc)
                return
            name, k = groups[j]
            if j < i:
                for ms, used in _multisets(old[name], k, room_left):
                    yield from choose(j + 1, room_left - used, acc + ms)
            elif j > i:
                for ms, used in _multisets(full.get(name, old[name]), k, room_left):
                    yield from choose(j + 1, room_left - used, acc + ms)
            else:
                for n_new in range(1, k + 1):
                    for ms_new, u1 in _multisets(delta[name], n_new, room_left):
                        for ms_old, u2 in _multisets(old[name], k - n_new, room_left - u1):
                            yield from choose(j + 1, room_left - u1 - u2, acc + ms_new + ms_old)

        yield from choose(0, room, [])


def enumerate_language(
    g: Grammar,
    bound: int,
    config: OracleConfig = DEFAULT_ORACLE,
    unsafe: bool = False,
    seeds: Mapping[str, Iterable[Graph]] | None = None,
) -> GraphSet:
    """All graphs of L(g) with at most ``bound`` edges, up to isomorphism."""
    table = enumerate_nonterminals(g, bound, config, seeds, unsafe)
    max_ar = max(ar for _, ar in g.cls.alphabet)
    out = GraphSet(max_vertices=max(config.max_vertices, bound * (max_ar - 1) + 3))
    for a in g.axioms:
        for h in table[a]:
            out.add(h)
    return out
