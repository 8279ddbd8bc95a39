"""Independent generators and checkers for the four graph classes.

Nothing here goes through terms, grammars or the decomposition module:
trees are built from canonical nested tuples, SP graphs by edge subdivision
and duplication and checked by series/parallel reduction, tree-width 2 by a
search over elimination orders. Isomorphism uses networkx.
"""

from __future__ import annotations

import itertools
from collections import Counter, defaultdict
from functools import lru_cache
from typing import Iterable, Iterator

import networkx as nx
from networkx.algorithms.isomorphism import categorical_edge_match, categorical_node_match

from twograph.graph_core import Graph

# ---------------------------------------------------------------------------
# isomorphism classes via networkx


def to_nx(g: Graph) -> nx.DiGraph:
    """A simple digraph whose arcs carry the multiset of labels of parallel edges."""
    h = nx.DiGraph()
    role = {v: s for s, v in g.sources}
    for v in g.vertices:
        h.add_node(v, role=str(role.get(v, 0)))
    arcs: dict[tuple, list[str]] = defaultdict(list)
    for e in g.edges:
        if len(e.attach) == 2:
            arcs[e.attach].append(e.label)
        else:
            # hyperedges become a labelled hub with numbered spokes
            hub = ("e", e.id)
            h.add_node(hub, role="hub:" + e.label)
            for i, v in enumerate(e.attach):
                arcs[(hub, v)].append(str(i))
    for (u, v), labs in arcs.items():
        h.add_edge(u, v, lab=",".join(sorted(labs)))
    return h


_NODE = categorical_node_match("role", "0")
_EDGE = categorical_edge_match("lab", "")


def _iso(h1: nx.DiGraph, h2: nx.DiGraph) -> bool:
    return nx.is_isomorphic(h1, h2, node_match=_NODE, edge_match=_EDGE)


class IsoSet:
    """Graphs up to isomorphism, compared with networkx."""

    def __init__(self):
        self._buckets: dict[str, list[tuple[Graph, nx.DiGraph]]] = defaultdict(list)
        self._n = 0

    @staticmethod
    def _prepare(g: Graph) -> tuple[str, nx.DiGraph]:
        h = to_nx(g)
        key = nx.weisfeiler_lehman_graph_hash(h, node_attr="role", edge_attr="lab", iterations=3)
        return f"{len(g.edges)}:{key}", h

    def add(self, g: Graph) -> bool:
        key, h = self._prepare(g)
        bucket = self._buckets[key]
        for _, other in bucket:
            if _iso(h, other):
                return False
        bucket.append((g, h))
        self._n += 1
        return True

    def __contains__(self, g: Graph) -> bool:
        key, h = self._prepare(g)
        return any(_iso(h, other) for _, other in self._buckets.get(key, ()))

    def __len__(self) -> int:
        return self._n

    def __iter__(self) -> Iterator[Graph]:
        for bucket in self._buckets.values():
            for g, _ in bucket:
                yield g


def iso_unique(graphs: Iterable[Graph]) -> list[Graph]:
    s = IsoSet()
    out = []
    for g in graphs:
        if s.add(g):
            out.append(g)
    return out


# ---------------------------------------------------------------------------
# rooted unordered trees


@lru_cache(maxsize=None)
def rooted_trees(n: int, labels: tuple[str, ...] = ("b",)) -> tuple:
    """Canonical nested tuples for rooted trees with exactly n labelled edges.

    A tree is a sorted tuple of (label, subtree) children.
    """
    if n == 0:
        return ((),)
    branches = []  # (size, (label, subtree))
    for k in range(1, n + 1):
        for t in rooted_trees(k - 1, labels):
            for lab in labels:
                branches.append((k, (lab, t)))
    branches.sort(key=lambda b: (b[0], repr(b[1])))
    out = []

    def rec(start: int, left: int, acc: list):
        if left == 0:
            out.append(tuple(sorted(acc, key=repr)))
            return
        for i in range(start, len(branches)):
            k, br = branches[i]
            if k > left:
                continue
            acc.append(br)
            rec(i, left - k, acc)
            acc.pop()

    rec(0, n, [])
    return tuple(sorted(set(out), key=repr))


def rooted_tree_count(n: int) -> int:
    """Rooted unlabelled trees with n edges (n+1 nodes) by the Euler transform recurrence."""
    a = [0, 1]  # a[k] = rooted trees on k nodes
    for m in range(1, n + 1):
        total = 0
        for k in range(1, m + 1):
            d_sum = sum(d * a[d] for d in range(1, k + 1) if k % d == 0)
            total += d_sum * a[m - k + 1]
        a.append(total // m)
    return a[n + 1]


def tree_graph(t: tuple) -> Graph:
    vertices = [0]
    edges = []

    def build(node: tuple, v: int):
        for lab, sub in node:
            w = len(vertices)
            vertices.append(w)
            edges.append((lab, (v, w)))
            build(sub, w)

    build(t, 0)
    return Graph.build(vertices, edges, {1: 0})


def all_trees(max_edges: int, labels: tuple[str, ...] = ("b",)) -> list[Graph]:
    return [tree_graph(t) for n in range(max_edges + 1) for t in rooted_trees(n, labels)]


# ---------------------------------------------------------------------------
# series-parallel graphs


def _relabel(g_edges: list[tuple[str, tuple[int, int]]], s: int, t: int) -> Graph:
    vs = sorted({v for _, att in g_edges for v in att} | {s, t})
    return Graph.build(vs, g_edges, {1: s, 2: t})


def sp_reduces(g: Graph, oriented: bool = True) -> bool:
    """Series/parallel reduction down to one edge between the sources."""
    if g.sort != frozenset({1, 2}) or not g.edges:
        return False
    s, t = g.source(1), g.source(2)
    if s == t:
        return False
    edges = Counter()
    for e in g.edges:
        if len(e.attach) != 2 or e.attach[0] == e.attach[1]:
            return False
        u, v = e.attach
        edges[(u, v) if oriented or u < v else (v, u)] += 1
    if {v for uv in edges for v in uv} != set(g.vertices):
        return False
    edges = Counter({k: 1 for k in edges})  # parallel reduction
    changed = True
    while changed:
        changed = False
        for w in {v for uv in edges for v in uv} - {s, t}:
            inc = [uv for uv in edges if w in uv]
            if len(inc) != 2:
                continue
            if oriented:
                ins = [uv for uv in inc if uv[1] == w]
                outs = [uv for uv in inc if uv[0] == w]
                if len(ins) != 1 or len(outs) != 1:
                    continue
                a, b = ins[0][0], outs[0][1]
                new = (a, b)
            else:
                ends = [uv[0] if uv[1] == w else uv[1] for uv in inc]
                a, b = ends
                new = (min(a, b), max(a, b))
            if a == b:
                return False
            for uv in inc:
                del edges[uv]
            edges[new] = 1
            changed = True
            break
    target = (s, t) if oriented else (min(s, t), max(s, t))
    return list(edges) == [target]


def all_sp(max_edges: int, labels: tuple[str, ...] = ("a",), disoriented: bool = False) -> list[Graph]:
    """All (disoriented) series-parallel graphs with 1..max_edges edges, up to isomorphism.

    Every SP graph with n+1 edges comes from one with n edges by subdividing
    or doubling an edge; labels and orientations are assigned afterwards.
    """
    shapes: list[list[tuple[int, int]]] = [[(0, 1)]]
    seen = IsoSet()
    seen.add(_relabel([("a", (0, 1))], 0, 1))
    layers = [shapes]
    for _ in range(max_edges - 1):
        nxt = []
        for es in layers[-1]:
            top = max(v for uv in es for v in uv) + 1
            for i, (u, v) in enumerate(es):
                for cand in (es[:i] + [(u, top), (top, v)] + es[i + 1 :], es + [(u, v)]):
                    if seen.add(_relabel([("a", uv) for uv in cand], 0, 1)):
                        nxt.append(cand)
        layers.append(nxt)
    out = IsoSet()
    result = []
    for layer in layers:
        for es in layer:
            for labs in itertools.product(labels, repeat=len(es)):
                flips = itertools.product((False, True), repeat=len(es)) if disoriented else [(False,) * len(es)]
                for fl in flips:
                    edges = [(lab, (v, u) if f else (u, v)) for lab, (u, v), f in zip(labs, es, fl)]
                    g = _relabel(edges, 0, 1)
                    if out.add(g):
                        result.append(g)
    return result


# ---------------------------------------------------------------------------
# tree-width at most 2


def treewidth_le2_bruteforce(g: Graph) -> bool:
    """Search for an elimination order in which every vertex has at most two later neighbours."""
    adj: dict[int, set[int]] = {v: set() for v in g.vertices}
    for e in g.edges:
        for u in e.attach:
            for v in e.attach:
                if u != v:
                    adj[u].add(v)
    vs = list(g.vertices)
    n = len(vs)
    idx = {v: i for i, v in enumerate(vs)}

    def later_neighbours(v: int, gone: int) -> int:
        # vertices outside ``gone`` reachable from v through eliminated ones
        seen = {v}
        stack = [v]
        found = set()
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if y in seen:
                    continue
                seen.add(y)
                if gone >> idx[y] & 1:
                    stack.append(y)
                else:
                    found.add(y)
        return len(found)

    @lru_cache(maxsize=None)
    def ok(gone: int) -> bool:
        if gone == (1 << n) - 1:
            return True
        for i, v in enumerate(vs):
            if not gone >> i & 1 and later_neighbours(v, gone) <= 2 and ok(gone | 1 << i):
                return True
        return False

    return ok(0)


def connected_graphs(max_edges: int, labels: tuple[str, ...] = ("a",), max_vertices: int | None = None) -> list[Graph]:
    """Connected loop-free multigraphs with a root source, up to isomorphism."""
    layers: list[list[Graph]] = [[Graph.build([0], [], {1: 0})]]
    seen = IsoSet()
    seen.add(layers[0][0])
    for _ in range(max_edges):
        nxt = []
        for g in layers[-1]:
            n = len(g.vertices)
            base = [(e.label, e.attach) for e in g.edges]
            cands = []
            for lab in labels:
                if max_vertices is None or n < max_vertices:
                    for u in g.vertices:
                        cands.append((list(g.vertices) + [n], base + [(lab, (u, n))]))
                        cands.append((list(g.vertices) + [n], base + [(lab, (n, u))]))
                for u in g.vertices:
                    for v in g.vertices:
                        if u != v:
                            cands.append((list(g.vertices), base + [(lab, (u, v))]))
            for vs, es in cands:
                h = Graph.build(vs, es, {1: 0})
                if seen.add(h):
                    nxt.append(h)
        layers.append(nxt)
    return [g for layer in layers for g in layer]


def all_tw2(max_edges: int, labels: tuple[str, ...] = ("a",)) -> list[Graph]:
    """Connected rooted graphs of tree-width at most 2 with at most max_edges edges."""
    return [g for g in connected_graphs(max_edges, labels) if treewidth_le2_bruteforce(g)]
