"""Source-labelled hypergraphs, the HR operations and the class algebras built from them.

A graph of sort ``tau`` designates one distinct vertex for every source label in
``tau``. The class operations (tree extension, serial composition, hanging) are
not implemented directly; they are expanded into parallel composition, source
restriction and renaming exactly like their defining HR terms, so the class
algebras stay derived algebras of the HR algebra.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Iterator, Mapping, NamedTuple

from twograph.config import DEFAULT_ORACLE
from twograph.errors import (
    ArityMismatch,
    DanglingId,
    InputError,
    NonInjectiveSources,
    ParseError,
    SizeLimitExceeded,
    SortMismatch,
    UnknownSymbol,
)

Sort = frozenset

S1 = frozenset({1})
S12 = frozenset({1, 2})

TREE = "tree"
SP = "sp"
DSP = "dsp"
TW2 = "tw2"
KINDS = (TREE, SP, DSP, TW2)


class SelfLoop(InputError):
    pass


def sort_str(tau: Iterable[int]) -> str:
    return "{" + ",".join(str(s) for s in sorted(tau)) + "}"


# ---------------------------------------------------------------------------
# graphs


@dataclass(frozen=True)
class Edge:
    id: int
    label: str
    attach: tuple[int, ...]


@dataclass(frozen=True)
class Graph:
    """Immutable hypergraph. ``sources`` holds (label, vertex) pairs sorted by label."""

    vertices: tuple[int, ...]
    edges: tuple[Edge, ...]
    sources: tuple[tuple[int, int], ...]

    @staticmethod
    def build(
        vertices: Iterable[int],
        edges: Iterable[tuple[str, Iterable[int]]],
        sources: Mapping[int, int],
    ) -> "Graph":
        es = tuple(Edge(i, lab, tuple(att)) for i, (lab, att) in enumerate(edges))
        return Graph(tuple(sorted(set(vertices))), es, tuple(sorted(sources.items())))

    @property
    def sort(self) -> frozenset:
        return frozenset(s for s, _ in self.sources)

    def source(self, label: int) -> int:
        for s, v in self.sources:
            if s == label:
                return v
        raise KeyError(label)

    @property
    def source_map(self) -> dict[int, int]:
        return dict(self.sources)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edge_labels(self) -> Counter:
        return Counter(e.label for e in self.edges)

    @cached_property
    def colours(self) -> dict[int, int]:
        """Refined vertex colours, cached per graph."""
        return _refine_colours(self)

    @cached_property
    def invariant(self) -> tuple:
        return graph_invariant(self)

    def incident(self) -> dict[int, list[Edge]]:
        inc: dict[int, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            for v in set(e.attach):
                inc[v].append(e)
        return inc

    def neighbours(self) -> dict[int, set[int]]:
        nb: dict[int, set[int]] = {v: set() for v in self.vertices}
        for e in self.edges:
            for u in e.attach:
                for w in e.attach:
                    if u != w:
                        nb[u].add(w)
        return nb

    def is_connected(self) -> bool:
        if not self.vertices:
            return True
        nb = self.neighbours()
        seen = {self.vertices[0]}
        stack = [self.vertices[0]]
        while stack:
            for w in nb[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def compact(self) -> "Graph":
        """Renumber vertices and edges to 0..n-1 preserving their order."""
        vmap = {v: i for i, v in enumerate(self.vertices)}
        return Graph(
            tuple(range(len(self.vertices))),
            tuple(Edge(i, e.label, tuple(vmap[v] for v in e.attach)) for i, e in enumerate(self.edges)),
            tuple((s, vmap[v]) for s, v in self.sources),
        )

    def with_sources(self, sources: Mapping[int, int]) -> "Graph":
        return Graph(self.vertices, self.edges, tuple(sorted(sources.items())))

    def __str__(self) -> str:
        es = ", ".join(f"{e.label}{list(e.attach)}" for e in self.edges)
        src = ", ".join(f"{s}->{v}" for s, v in self.sources)
        return f"Graph(V={list(self.vertices)}, E=[{es}], src={{{src}}})"


@dataclass(frozen=True)
class ClassId:
    """A graph class together with its edge alphabet (label -> arity)."""

    kind: str
    alphabet: tuple[tuple[str, int], ...]

    def __post_init__(self):
        if self.kind not in KINDS:
            raise UnknownSymbol(f"unknown class {self.kind!r}")
        if not self.alphabet:
            raise InputError("alphabet must be nonempty")
        for lab, ar in self.alphabet:
            if self.kind == TREE and ar < 2:
                raise ArityMismatch(f"tree label {lab!r} needs arity >= 2, got {ar}")
            if self.kind != TREE and ar != 2:
                raise ArityMismatch(f"{self.kind} label {lab!r} must be binary, got {ar}")

    @staticmethod
    def make(kind: str, alphabet: Mapping[str, int] | Iterable[str]) -> "ClassId":
        if isinstance(alphabet, Mapping):
            items = alphabet.items()
        else:
            items = ((lab, 2) for lab in alphabet)
        return ClassId(kind, tuple(sorted(items)))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.alphabet)

    def arity(self, label: str) -> int:
        for lab, ar in self.alphabet:
            if lab == label:
                return ar
        raise UnknownSymbol(f"label {label!r} not in the alphabet of {self.kind}")

    @property
    def sorts(self) -> tuple[frozenset, ...]:
        if self.kind == TREE:
            return (S1,)
        if self.kind in (SP, DSP):
            return (S12,)
        return (S1, S12)

    def same_signature(self, other: "ClassId") -> bool:
        return self.kind == other.kind and self.alphabet == other.alphabet

    def __str__(self) -> str:
        return f"{self.kind}[{','.join(f'{l}/{a}' for l, a in self.alphabet)}]"


def validate_graph(g: Graph, cls: ClassId | None = None) -> None:
    """Raise on the first violated graph invariant; return None otherwise."""
    vs = set(g.vertices)
    if len(vs) != len(g.vertices):
        raise DanglingId("duplicate vertex id")
    seen_edges: set[int] = set()
    arity_seen: dict[str, int] = {}
    for idx, e in enumerate(g.edges):
        if e.id in seen_edges:
            raise DanglingId(f"duplicate edge id {e.id}", f"/edges/{idx}")
        seen_edges.add(e.id)
        if not e.attach:
            raise ArityMismatch(f"edge {e.id} has an empty attachment", f"/edges/{idx}")
        for v in e.attach:
            if v not in vs:
                raise DanglingId(f"edge {e.id} attaches to unknown vertex {v}", f"/edges/{idx}")
        if cls is not None:
            ar = cls.arity(e.label)
            if len(e.attach) != ar:
                raise ArityMismatch(
                    f"edge {e.id} labelled {e.label!r} has {len(e.attach)} attachments, arity is {ar}",
                    f"/edges/{idx}",
                )
            if cls.kind != TREE and e.attach[0] == e.attach[1]:
                raise SelfLoop(f"edge {e.id} is a self-loop", f"/edges/{idx}")
        else:
            prev = arity_seen.setdefault(e.label, len(e.attach))
            if prev != len(e.attach):
                raise ArityMismatch(f"label {e.label!r} used with arities {prev} and {len(e.attach)}", f"/edges/{idx}")
    labels = [s for s, _ in g.sources]
    if len(set(labels)) != len(labels):
        raise NonInjectiveSources("source label repeated", "/sources")
    targets: dict[int, int] = {}
    for s, v in g.sources:
        if v not in vs:
            raise DanglingId(f"source {s} designates unknown vertex {v}", f"/sources/{s}")
        if v in targets:
            raise NonInjectiveSources(f"sources {targets[v]} and {s} both designate vertex {v}", f"/sources/{s}")
        targets[v] = s


# ---------------------------------------------------------------------------
# HR operations


def hr_zero(tau: Iterable[int]) -> Graph:
    labels = sorted(set(tau))
    return Graph(tuple(range(len(labels))), (), tuple((s, i) for i, s in enumerate(labels)))


def hr_edge(label: str, srcs: Iterable[int]) -> Graph:
    """The constant a_{s1..sn}: one edge whose i-th attachment is the si-source."""
    srcs = tuple(srcs)
    labels = sorted(set(srcs))
    pos = {s: i for i, s in enumerate(labels)}
    return Graph(
        tuple(range(len(labels))),
        (Edge(0, label, tuple(pos[s] for s in srcs)),),
        tuple((s, pos[s]) for s in labels),
    )


def hr_restrict(tau: Iterable[int], g: Graph) -> Graph:
    keep = set(tau)
    return Graph(g.vertices, g.edges, tuple((s, v) for s, v in g.sources if s in keep))


def hr_rename(alpha: Mapping[int, int], g: Graph) -> Graph:
    """Rename source labels by ``alpha``; labels outside its domain stay fixed."""
    new = [(alpha.get(s, s), v) for s, v in g.sources]
    labels = [s for s, _ in new]
    if len(set(labels)) != len(labels):
        raise SortMismatch(f"renaming {dict(alpha)} is not injective on sort {sort_str(g.sort)}")
    return Graph(g.vertices, g.edges, tuple(sorted(new)))


def hr_par(g1: Graph, g2: Graph) -> Graph:
    """Disjoint union fusing the s-sources present in both arguments.

    The first argument keeps its ids; vertices and edges of the second argument
    get fresh ids above those of the first, in their original order.
    """
    s1 = g1.source_map
    s2 = g2.source_map
    vmap: dict[int, int] = {}
    for s, v in s2.items():
        if s in s1:
            vmap[v] = s1[s]
    nxt = (max(g1.vertices) + 1) if g1.vertices else 0
    new_vertices = list(g1.vertices)
    for v in g2.vertices:
        if v not in vmap:
            vmap[v] = nxt
            new_vertices.append(nxt)
            nxt += 1
    enext = (max(e.id for e in g1.edges) + 1) if g1.edges else 0
    edges = list(g1.edges)
    for e in g2.edges:
        edges.append(Edge(enext, e.label, tuple(vmap[v] for v in e.attach)))
        enext += 1
    srcs = dict(s1)
    for s, v in s2.items():
        if s not in srcs:
            srcs[s] = vmap[v]
    return Graph(tuple(new_vertices), tuple(edges), tuple(sorted(srcs.items())))


def hr_apply(symbol: tuple, args: list[Graph]) -> Graph:
    """Apply an HR symbol.

    Symbols: ("zero", tau), ("edge", label, (s1..sn)), ("restrict", tau),
    ("rename", {old: new}), ("par", tau1, tau2).
    """
    op = symbol[0]
    if op == "zero":
        _expect_args(symbol, args, 0)
        return hr_zero(symbol[1])
    if op == "edge":
        _expect_args(symbol, args, 0)
        return hr_edge(symbol[1], symbol[2])
    if op == "restrict":
        _expect_args(symbol, args, 1)
        return hr_restrict(symbol[1], args[0])
    if op == "rename":
        _expect_args(symbol, args, 1)
        return hr_rename(dict(symbol[1]), args[0])
    if op == "par":
        _expect_args(symbol, args, 2)
        t1, t2 = frozenset(symbol[1]), frozenset(symbol[2])
        if args[0].sort != t1 or args[1].sort != t2:
            raise SortMismatch(
                f"par{sort_str(t1)},{sort_str(t2)} applied to sorts {sort_str(args[0].sort)}, {sort_str(args[1].sort)}"
            )
        return hr_par(args[0], args[1])
    raise UnknownSymbol(f"unknown HR symbol {op!r}")


def _expect_args(symbol, args, n):
    if len(args) != n:
        raise SortMismatch(f"{symbol[0]} expects {n} arguments, got {len(args)}")


# ---------------------------------------------------------------------------
# terms

ZERO = "zero"
EDGE = "edge"
EXT = "ext"
PAR = "par"
SER = "ser"
HANG = "hang"
NT = "nt"


class Symbol(NamedTuple):
    op: str
    label: str | None = None
    rev: bool = False


@dataclass(frozen=True)
class Term:
    """A term over a class signature; ``nt`` leaves name grammar nonterminals.

    ``label`` is the edge label for ``edge``/``ext`` and the nonterminal name
    for ``nt``. ``rev`` marks the reversed edge constant b_{2,1}.
    """

    op: str
    args: tuple["Term", ...] = ()
    label: str | None = None
    rev: bool = False
    _hash: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.op, self.args, self.label, self.rev)))

    def __hash__(self) -> int:
        return self._hash

    @staticmethod
    def zero() -> "Term":
        return Term(ZERO)

    @staticmethod
    def edge(label: str, rev: bool = False) -> "Term":
        return Term(EDGE, (), label, rev)

    @staticmethod
    def ext(label: str, *args: "Term") -> "Term":
        return Term(EXT, tuple(args), label)

    @staticmethod
    def par(a: "Term", b: "Term") -> "Term":
        return Term(PAR, (a, b))

    @staticmethod
    def par_all(items: Iterable["Term"], empty: "Term | None" = None) -> "Term":
        items = list(items)
        if not items:
            if empty is None:
                raise SortMismatch("empty parallel composition has no term at this sort")
            return empty
        acc = items[0]
        for t in items[1:]:
            acc = Term(PAR, (acc, t))
        return acc

    @staticmethod
    def ser(*args: "Term") -> "Term":
        return Term(SER, tuple(args))

    @staticmethod
    def hang(x: "Term", y: "Term") -> "Term":
        return Term(HANG, (x, y))

    @staticmethod
    def nt(name: str) -> "Term":
        return Term(NT, (), name)

    @property
    def symbol(self) -> Symbol:
        return Symbol(self.op, self.label if self.op in (EDGE, EXT) else None, self.rev)

    def nonterminals(self) -> list[str]:
        out: list[str] = []
        stack = [self]
        while stack:
            t = stack.pop()
            if t.op == NT:
                out.append(t.label)
            else:
                stack.extend(reversed(t.args))
        return out

    def is_ground(self) -> bool:
        return not self.nonterminals()

    def substitute(self, env: Mapping[str, "Term"]) -> "Term":
        if self.op == NT:
            return env.get(self.label, self)
        if not self.args:
            return self
        return Term(self.op, tuple(a.substitute(env) for a in self.args), self.label, self.rev)

    def rename_nonterminals(self, fn: Callable[[str], str]) -> "Term":
        if self.op == NT:
            return Term.nt(fn(self.label))
        if not self.args:
            return self
        return Term(self.op, tuple(a.rename_nonterminals(fn) for a in self.args), self.label, self.rev)

    def n_edges(self) -> int:
        own = 1 if self.op in (EDGE, EXT) else 0
        return own + sum(a.n_edges() for a in self.args)

    def par_factors(self) -> list["Term"]:
        if self.op == PAR:
            return [f for a in self.args for f in a.par_factors()]
        return [self]

    def __str__(self) -> str:
        if self.op == ZERO:
            return "0"
        if self.op == EDGE:
            return f"{self.label}{'21' if self.rev else '12'}"
        if self.op == NT:
            return self.label
        if self.op == PAR:
            return "(" + " || ".join(str(f) for f in self.par_factors()) + ")"
        if self.op == EXT:
            return f"ext_{self.label}(" + ", ".join(str(a) for a in self.args) + ")"
        if self.op == SER and len(self.args) == 2:
            return f"({self.args[0]} ; {self.args[1]})"
        if self.op == SER:
            return "ser(" + ", ".join(str(a) for a in self.args) + ")"
        if self.op == HANG:
            return f"({self.args[0]} |> {self.args[1]})"
        return f"{self.op}({', '.join(str(a) for a in self.args)})"


def symbol_signature(cls: ClassId, sym: Symbol, n_args: int) -> tuple[tuple[frozenset, ...], frozenset]:
    """Argument sorts and result sort of ``sym`` in the class signature."""
    kind = cls.kind
    op = sym.op
    if op == ZERO and kind in (TREE, TW2) and n_args == 0:
        return (), S1
    if op == EDGE and kind in (SP, DSP, TW2) and n_args == 0:
        cls.arity(sym.label)
        if sym.rev and kind == SP:
            raise UnknownSymbol("reversed edge constants are not in the SP signature")
        return (), S12
    if op == EXT and kind == TREE:
        ar = cls.arity(sym.label)
        if n_args != ar - 1:
            raise SortMismatch(f"ext_{sym.label} takes {ar - 1} arguments, got {n_args}")
        return (S1,) * n_args, S1
    if op == SER and kind in (SP, DSP) and n_args == 2:
        return (S12, S12), S12
    if op == SER and kind == TW2 and n_args == 3:
        return (S12, S12, S1), S12
    if op == HANG and kind == TW2 and n_args == 2:
        return (S12, S1), S1
    if op == PAR and n_args == 2:
        return (), frozenset()  # polymorphic, resolved by term_sort
    raise UnknownSymbol(f"symbol {op}/{n_args} is not in the {kind} signature")


def term_sort(cls: ClassId, t: Term, nt_sort: Mapping[str, frozenset] | None = None) -> frozenset:
    """Infer the sort of a term, checking it against the class signature."""
    if t.op == NT:
        if nt_sort is None or t.label not in nt_sort:
            raise UnknownSymbol(f"nonterminal {t.label!r} has no declared sort")
        return frozenset(nt_sort[t.label])
    arg_sorts = [term_sort(cls, a, nt_sort) for a in t.args]
    if t.op == PAR:
        if len(arg_sorts) != 2 or arg_sorts[0] != arg_sorts[1]:
            raise SortMismatch(f"parallel composition of sorts {[sort_str(s) for s in arg_sorts]}")
        if arg_sorts[0] not in cls.sorts:
            raise SortMismatch(f"parallel composition at sort {sort_str(arg_sorts[0])} not in {cls.kind}")
        return arg_sorts[0]
    expect, result = symbol_signature(cls, t.symbol, len(t.args))
    for i, (want, got) in enumerate(zip(expect, arg_sorts)):
        if want != got:
            raise SortMismatch(f"argument {i} of {t.op} has sort {sort_str(got)}, expected {sort_str(want)}")
    return result


# ---------------------------------------------------------------------------
# class operations as HR expansions

_SWAP12 = {1: 2, 2: 1}
_SWAP23 = {2: 3, 3: 2}
_ROT231 = {1: 2, 2: 3, 3: 1}


def class_apply(cls: ClassId, sym: Symbol | Term, args: list[Graph]) -> Graph:
    if isinstance(sym, Term):
        sym = sym.symbol
    op = sym.op
    if op == PAR:
        if len(args) != 2 or args[0].sort != args[1].sort:
            raise SortMismatch("parallel composition needs two arguments of equal sort")
        return hr_apply(("par", args[0].sort, args[1].sort), args)
    expect, _ = symbol_signature(cls, sym, len(args))
    for i, (want, g) in enumerate(zip(expect, args)):
        if g.sort != want:
            raise SortMismatch(f"argument {i} of {op} has sort {sort_str(g.sort)}, expected {sort_str(want)}")
    if op == ZERO:
        return hr_zero(S1)
    if op == EDGE:
        return hr_edge(sym.label, (2, 1) if sym.rev else (1, 2))
    if op == EXT:
        n = cls.arity(sym.label)
        acc = hr_edge(sym.label, range(1, n + 1))
        for i, x in enumerate(args, start=2):
            part = hr_rename({1: i, i: 1}, x)
            acc = hr_par(acc, part)
        return hr_restrict(S1, acc)
    if op == SER:
        x, y = args[0], args[1]
        acc = hr_par(x, hr_rename(_ROT231, y))
        if len(args) == 3:
            acc = hr_par(acc, hr_rename(_SWAP12, args[2]))
        return hr_rename(_SWAP23, hr_restrict({1, 3}, acc))
    if op == HANG:
        return hr_restrict(S1, hr_par(args[0], hr_rename(_SWAP12, args[1])))
    raise UnknownSymbol(f"symbol {op} is not in the {cls.kind} signature")


def eval_term(cls: ClassId, t: Term) -> Graph:
    """Bottom-up evaluation of a ground term; the result has compact ids."""
    return _eval(cls, t).compact()


def _eval(cls: ClassId, t: Term) -> Graph:
    if t.op == NT:
        raise SortMismatch(f"cannot evaluate nonterminal {t.label!r}")
    return class_apply(cls, t.symbol, [_eval(cls, a) for a in t.args])


# ---------------------------------------------------------------------------
# isomorphism


def _refine_colours(g: Graph, rounds: int = 3) -> dict[int, int]:
    src = {v: s for s, v in g.sources}
    inc: dict[int, list[tuple]] = {v: [] for v in g.vertices}
    for e in g.edges:
        for v in set(e.attach):
            inc[v].append((e.label, tuple(i for i, u in enumerate(e.attach) if u == v), e.attach))
    colour = {v: hash((src.get(v, 0), tuple(sorted((lab, len(att), pos) for lab, pos, att in inc[v])))) for v in g.vertices}
    for _ in range(rounds):
        colour = {
            v: hash((colour[v], tuple(sorted((lab, pos, tuple(colour[u] for u in att)) for lab, pos, att in inc[v]))))
            for v in g.vertices
        }
    return colour


def graph_invariant(g: Graph) -> tuple:
    """An isomorphism invariant used to bucket graphs before exact comparison."""
    colour = g.colours
    return (
        tuple(sorted(g.sort)),
        len(g.vertices),
        len(g.edges),
        tuple(sorted(colour.values())),
        tuple(sorted(g.edge_labels().items())),
    )


def isomorphic(g1: Graph, g2: Graph, max_vertices: int | None = None) -> bool:
    """Exact isomorphism test fixing source labels pointwise."""
    if max_vertices is None:
        max_vertices = DEFAULT_ORACLE.max_vertices
    if (
        len(g1.vertices) != len(g2.vertices)
        or len(g1.edges) != len(g2.edges)
        or g1.sort != g2.sort
        or g1.edge_labels() != g2.edge_labels()
    ):
        return False
    if len(g1.vertices) > max_vertices:
        raise SizeLimitExceeded(f"isomorphism test on {len(g1.vertices)} vertices exceeds bound {max_vertices}")
    c1 = g1.colours
    c2 = g2.colours
    if g1.invariant != g2.invariant:
        return False
    return _find_iso(g1, g2, c1, c2) is not None


def _find_iso(g1: Graph, g2: Graph, c1: dict[int, int], c2: dict[int, int]) -> dict[int, int] | None:
    # order: sources first, then breadth-first so that edges close early
    nb = g1.neighbours()
    order: list[int] = []
    seen: set[int] = set()
    starts = [v for _, v in g1.sources] + list(g1.vertices)
    for s in starts:
        if s in seen:
            continue
        seen.add(s)
        queue = [s]
        while queue:
            v = queue.pop(0)
            order.append(v)
            for w in sorted(nb[v]):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
    rank = {v: i for i, v in enumerate(order)}
    closing: dict[int, list[Edge]] = defaultdict(list)
    for e in g1.edges:
        closing[max(e.attach, key=rank.__getitem__)].append(e)
    avail = Counter((e.label, e.attach) for e in g2.edges)
    by_colour: dict[int, list[int]] = defaultdict(list)
    for v in g2.vertices:
        by_colour[c2[v]].append(v)
    src1 = {v: s for s, v in g1.sources}
    src2 = g2.source_map
    mapping: dict[int, int] = {}
    used: set[int] = set()

    def rec(i: int) -> bool:
        if i == len(order):
            return True
        v = order[i]
        if v in src1:
            cands = [src2[src1[v]]] if c2.get(src2[src1[v]]) == c1[v] else []
        else:
            cands = [w for w in by_colour[c1[v]] if w not in used]
        for w in cands:
            if w in used:
                continue
            mapping[v] = w
            taken = []
            ok = True
            for e in closing[v]:
                key = (e.label, tuple(mapping[u] for u in e.attach))
                if avail[key] <= 0:
                    ok = False
                    break
                avail[key] -= 1
                taken.append(key)
            if ok:
                used.add(w)
                if rec(i + 1):
                    return True
                used.discard(w)
            for key in taken:
                avail[key] += 1
            del mapping[v]
        return False

    return dict(mapping) if rec(0) else None


class GraphSet:
    """A set of graphs up to isomorphism, bucketed by ``graph_invariant``."""

    def __init__(self, graphs: Iterable[Graph] = (), max_vertices: int | None = None):
        self._buckets: dict[tuple, list[Graph]] = defaultdict(list)
        self._n = 0
        self.max_vertices = max_vertices if max_vertices is not None else DEFAULT_ORACLE.max_vertices
        for g in graphs:
            self.add(g)

    def _find(self, g: Graph) -> tuple[tuple, Graph | None]:
        key = g.invariant
        for h in self._buckets.get(key, ()):
            if isomorphic(g, h, self.max_vertices):
                return key, h
        return key, None

    def add(self, g: Graph) -> bool:
        key, found = self._find(g)
        if found is not None:
            return False
        self._buckets[key].append(g)
        self._n += 1
        return True

    def find(self, g: Graph) -> Graph | None:
        return self._find(g)[1]

    def __contains__(self, g: Graph) -> bool:
        return self._find(g)[1] is not None

    def __iter__(self) -> Iterator[Graph]:
        for bucket in self._buckets.values():
            yield from bucket

    def __len__(self) -> int:
        return self._n

    def sorted(self) -> list[Graph]:
        return sorted(self, key=lambda g: (g.n_edges, g.n_vertices, str(g)))

    def issubset(self, other: "GraphSet") -> bool:
        return all(g in other for g in self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GraphSet):
            return NotImplemented
        return len(self) == len(other) and self.issubset(other)

    def __repr__(self) -> str:
        return f"GraphSet({len(self)} graphs)"


# ---------------------------------------------------------------------------
# JSON


def graph_to_json(g: Graph, kind: str) -> dict:
    return {
        "class": kind,
        "vertices": [str(v) for v in g.vertices],
        "edges": [{"id": str(e.id), "label": e.label, "attach": [str(v) for v in e.attach]} for e in g.edges],
        "sources": {str(s): str(v) for s, v in g.sources},
    }


def graph_from_json(obj: object) -> tuple[Graph, str]:
    """Parse and validate a graph document; returns the graph and its class kind."""
    if not isinstance(obj, dict):
        raise ParseError("graph document must be an object", "")
    kind = obj.get("class")
    if kind not in KINDS:
        raise ParseError(f"unknown class {kind!r}", "/class")
    raw_vs = obj.get("vertices")
    if not isinstance(raw_vs, list):
        raise ParseError("vertices must be a list", "/vertices")
    ids: dict[str, int] = {}
    for i, v in enumerate(raw_vs):
        key = str(v)
        if key in ids:
            raise DanglingId(f"duplicate vertex id {key!r}", f"/vertices/{i}")
        ids[key] = int(key) if key.isdigit() else len(ids)
    if len(set(ids.values())) != len(ids):
        ids = {k: i for i, k in enumerate(ids)}

    def vid(x: object, ptr: str) -> int:
        if str(x) not in ids:
            raise DanglingId(f"unknown vertex id {x!r}", ptr)
        return ids[str(x)]

    edges = []
    raw_es = obj.get("edges", [])
    if not isinstance(raw_es, list):
        raise ParseError("edges must be a list", "/edges")
    eids: set[str] = set()
    for i, e in enumerate(raw_es):
        ptr = f"/edges/{i}"
        if not isinstance(e, dict) or "label" not in e or "attach" not in e:
            raise ParseError("edge needs label and attach", ptr)
        key = str(e.get("id", i))
        if key in eids:
            raise DanglingId(f"duplicate edge id {key!r}", ptr)
        eids.add(key)
        att = tuple(vid(v, f"{ptr}/attach/{j}") for j, v in enumerate(e["attach"]))
        if kind != TREE and len(att) != 2:
            raise ArityMismatch(f"{kind} graphs have binary edges, edge {key!r} has {len(att)} attachments", ptr)
        eid = int(key) if key.isdigit() else i
        edges.append(Edge(eid, str(e["label"]), att))
    raw_src = obj.get("sources", {})
    if not isinstance(raw_src, dict):
        raise ParseError("sources must be an object", "/sources")
    srcs = []
    for s, v in raw_src.items():
        if not str(s).isdigit() or int(s) < 1:
            raise ParseError(f"source label {s!r} must be a positive integer", f"/sources/{s}")
        srcs.append((int(s), vid(v, f"/sources/{s}")))
    g = Graph(tuple(sorted(ids.values())), tuple(sorted(edges, key=lambda e: e.id)), tuple(sorted(srcs)))
    validate_graph(g)
    return g, kind


def dumps(obj: object) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def term_to_json(t: Term) -> dict:
    if t.op == NT:
        return {"op": NT, "name": t.label}
    if t.op == EDGE:
        return {"op": EDGE, "label": t.label, "src": [2, 1] if t.rev else [1, 2]}
    out: dict = {"op": t.op}
    if t.op == EXT:
        out["label"] = t.label
    if t.args:
        out["args"] = [term_to_json(a) for a in t.args]
    return out


def term_from_json(obj: object, pointer: str = "") -> Term:
    if not isinstance(obj, dict) or "op" not in obj:
        raise ParseError("term must be an object with an 'op' field", pointer)
    op = obj["op"]
    args = obj.get("args", [])
    if not isinstance(args, list):
        raise ParseError("args must be a list", pointer + "/args")
    kids = tuple(term_from_json(a, f"{pointer}/args/{i}") for i, a in enumerate(args))
    if op == NT:
        if "name" not in obj:
            raise ParseError("nonterminal leaf needs a name", pointer)
        return Term.nt(str(obj["name"]))
    if op == ZERO:
        return Term.zero()
    if op == EDGE:
        src = obj.get("src", [1, 2])
        if src not in ([1, 2], [2, 1]):
            raise ParseError("edge src must be [1,2] or [2,1]", pointer + "/src")
        return Term.edge(str(obj["label"]), src == [2, 1])
    if op == EXT:
        return Term.ext(str(obj["label"]), *kids)
    if op == PAR:
        if len(kids) < 2:
            raise ParseError("par needs at least two arguments", pointer)
        return Term.par_all(kids)
    if op in (SER, HANG):
        return Term(op, kids)
    raise ParseError(f"unknown term operator {op!r}", pointer + "/op")


def to_dot(g: Graph, name: str = "G") -> str:
    lines = [f"digraph {name} {{"]
    src = {v: s for s, v in g.sources}
    for v in g.vertices:
        lab = f"{v}" + (f" [{src[v]}]" if v in src else "")
        lines.append(f'  v{v} [label="{lab}"];')
    for e in g.edges:
        if len(e.attach) == 2:
            lines.append(f'  v{e.attach[0]} -> v{e.attach[1]} [label="{e.label}"];')
        else:
            lines.append(f'  e{e.id} [shape=box,label="{e.label}"];')
            for i, v in enumerate(e.attach):
                lines.append(f'  e{e.id} -> v{v} [label="{i + 1}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
