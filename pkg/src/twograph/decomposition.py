"""Turn concrete graphs into class terms.

Series-parallel decomposition works on the undirected multigraph: a graph with
sources s, t splits in parallel into the components left after removing s and
t, or in series at the vertices separating s from t. Edge orientation is read
off at the leaves, which is what makes the disoriented variant unique.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Callable

from twograph.errors import (
    Disconnected,
    NotATree,
    NotDisorientedSeriesParallel,
    NotSeriesParallel,
    NotTreewidth2,
)
from twograph.graph_core import EDGE, PAR, S1, S12, Graph, Term

HangFn = Callable[[int], Term]


# ---------------------------------------------------------------------------
# trees


def tree_term(g: Graph) -> Term:
    if g.sort != S1:
        raise NotATree("a tree has exactly the source 1")
    root = g.source(1)
    children: dict[int, list] = defaultdict(list)
    parent_slots: dict[int, int] = defaultdict(int)
    for e in g.edges:
        if len(e.attach) < 2:
            raise NotATree(f"edge {e.id} has arity {len(e.attach)} < 2")
        if len(set(e.attach)) != len(e.attach):
            raise NotATree(f"edge {e.id} attaches a vertex twice")
        children[e.attach[0]].append(e)
        for v in e.attach[1:]:
            parent_slots[v] += 1
    if parent_slots.get(root):
        raise NotATree("the root occurs below an edge")
    for v in g.vertices:
        if v != root and parent_slots.get(v, 0) != 1:
            raise NotATree(f"vertex {v} has {parent_slots.get(v, 0)} parent edges")
    seen: set[int] = set()

    def build(v: int) -> Term:
        seen.add(v)
        parts = []
        for e in sorted(children[v], key=lambda e: (e.label, e.id)):
            parts.append(Term.ext(e.label, *(build(c) for c in e.attach[1:])))
        return Term.par_all(parts, empty=Term.zero())

    t = build(root)
    if len(seen) != len(g.vertices):
        raise NotATree("graph has a component unreachable from the root")
    return t


# ---------------------------------------------------------------------------
# series-parallel


def _sp(
    g: Graph,
    s: int,
    t: int,
    eids: frozenset,
    oriented: bool,
    hang: HangFn | None,
    err: type,
) -> Term:
    edges = {e.id: e for e in g.edges if e.id in eids}
    if len(edges) == 1:
        (e,) = edges.values()
        if e.attach == (s, t):
            return Term.edge(e.label)
        if e.attach == (t, s):
            if oriented:
                raise err(f"edge {e.id} points from the 2-source side to the 1-source side")
            return Term.edge(e.label, rev=True)
        raise err(f"edge {e.id} does not join the sources of its part")
    # parallel split
    groups = _components(edges, blocked={s, t})
    if len(groups) >= 2:
        parts = []
        for grp in sorted(groups, key=min):
            verts = {v for i in grp for v in edges[i].attach}
            if s not in verts or t not in verts:
                raise err("a part is attached to only one source")
            parts.append(_sp(g, s, t, frozenset(grp), oriented, hang, err))
        return Term.par_all(parts)
    # series split
    verts = {v for e in edges.values() for v in e.attach}
    adj: dict[int, set[int]] = defaultdict(set)
    for e in edges.values():
        a, b = e.attach
        adj[a].add(b)
        adj[b].add(a)
    path = _path(adj, s, t)
    if path is None:
        raise err("the sources are not connected")
    cuts = [c for c in path[1:-1] if not _reaches(adj, s, t, avoid=c)]
    if not cuts:
        raise err("part is neither a parallel nor a serial composition")
    points = [s] + cuts + [t]
    index = {c: i for i, c in enumerate(points)}
    pieces: dict[int, set[int]] = defaultdict(set)
    for grp in _components(edges, blocked=set(points)):
        touched = sorted({index[v] for i in grp for v in edges[i].attach if v in index})
        if len(touched) != 2 or touched[1] != touched[0] + 1:
            raise err("a part hangs off the serial chain")
        pieces[touched[0]] |= grp
    if sorted(pieces) != list(range(len(points) - 1)) or len(verts) < 3:
        raise err("serial chain is broken")
    terms = [_sp(g, points[i], points[i + 1], frozenset(pieces[i]), oriented, hang, err) for i in range(len(points) - 1)]
    acc = terms[-1]
    for i in range(len(terms) - 2, -1, -1):
        if hang is None:
            acc = Term.ser(terms[i], acc)
        else:
            acc = Term.ser(terms[i], acc, hang(points[i + 1]))
    return acc


def _components(edges: dict, blocked: set[int]) -> list[set[int]]:
    """Group edge ids whose edges are linked through unblocked vertices."""
    parent = {i: i for i in edges}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    at: dict[int, list[int]] = defaultdict(list)
    for i, e in edges.items():
        for v in set(e.attach):
            if v not in blocked:
                at[v].append(i)
    for ids in at.values():
        for j in ids[1:]:
            parent[find(j)] = find(ids[0])
    out: dict[int, set[int]] = defaultdict(set)
    for i in edges:
        out[find(i)].add(i)
    return list(out.values())


def _path(adj, s, t) -> list[int] | None:
    prev = {s: None}
    queue = [s]
    while queue:
        v = queue.pop(0)
        if v == t:
            break
        for w in sorted(adj[v]):
            if w not in prev:
                prev[w] = v
                queue.append(w)
    if t not in prev:
        return None
    path = [t]
    while prev[path[-1]] is not None:
        path.append(prev[path[-1]])
    return path[::-1]


def _reaches(adj, s, t, avoid) -> bool:
    seen = {s, avoid}
    stack = [s]
    while stack:
        v = stack.pop()
        if v == t:
            return True
        for w in adj[v]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


def _check_two_terminal(g: Graph, err: type) -> tuple[int, int]:
    if g.sort != S12:
        raise err("a series-parallel graph has exactly the sources 1 and 2")
    for e in g.edges:
        if len(e.attach) != 2:
            raise err(f"edge {e.id} is not binary")
        if e.attach[0] == e.attach[1]:
            raise err(f"edge {e.id} is a self-loop")
    if not g.edges:
        raise err("no edges")
    if not g.is_connected():
        raise err("graph is disconnected")
    return g.source(1), g.source(2)


def sp_decompose(g: Graph) -> Term:
    s, t = _check_two_terminal(g, NotSeriesParallel)
    return _sp(g, s, t, frozenset(e.id for e in g.edges), True, None, NotSeriesParallel)


def dsp_decompose(g: Graph) -> Term:
    s, t = _check_two_terminal(g, NotDisorientedSeriesParallel)
    return _sp(g, s, t, frozenset(e.id for e in g.edges), False, None, NotDisorientedSeriesParallel)


def is_p_term(t: Term) -> bool:
    """P-terms are single edges or parallel compositions (the serially atomic ones)."""
    return t.op in (EDGE, PAR)


# ---------------------------------------------------------------------------
# block-cutvertex trees


@dataclass(frozen=True)
class Block:
    vertices: frozenset
    edges: frozenset


@dataclass(frozen=True)
class BlockCutTree:
    """Blocks, cutvertices and their incidences, rooted at ``root`` (a vertex)."""

    blocks: tuple[Block, ...]
    cutvertices: frozenset
    root: int
    parent_vertex: tuple[int, ...]  # per block, the vertex above it
    child_blocks: dict  # vertex -> tuple of block indices below it

    def children_of_block(self, i: int) -> list[int]:
        b = self.blocks[i]
        return sorted(v for v in b.vertices if v != self.parent_vertex[i] and v in self.cutvertices)

    def incidences(self) -> list[tuple[int, int]]:
        return [(i, v) for i, b in enumerate(self.blocks) for v in sorted(b.vertices) if v in self.cutvertices]


def biconnected_blocks(g: Graph) -> list[Block]:
    """Blocks of the underlying undirected multigraph (loops are ignored)."""
    adj: dict[int, list[tuple[int, int]]] = defaultdict(list)
    for e in g.edges:
        u, w = e.attach[0], e.attach[-1]
        if u == w:
            continue
        adj[u].append((e.id, w))
        adj[w].append((e.id, u))
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    stack: list[int] = []
    ends = {e.id: (e.attach[0], e.attach[-1]) for e in g.edges}
    blocks: list[Block] = []
    counter = [0]

    def pop_block(stop: int):
        eids = set()
        while True:
            x = stack.pop()
            eids.add(x)
            if x == stop:
                break
        verts = {v for x in eids for v in ends[x]}
        blocks.append(Block(frozenset(verts), frozenset(eids)))

    def dfs(u: int, via: int | None):
        disc[u] = low[u] = counter[0]
        counter[0] += 1
        for eid, w in adj[u]:
            if eid == via:
                continue
            if w not in disc:
                stack.append(eid)
                dfs(w, eid)
                low[u] = min(low[u], low[w])
                if low[w] >= disc[u]:
                    pop_block(eid)
            elif disc[w] < disc[u]:
                stack.append(eid)
                low[u] = min(low[u], disc[w])

    for v in sorted(g.vertices):
        if v not in disc:
            dfs(v, None)
    return blocks


def block_cut_tree(g: Graph, root: int | None = None) -> BlockCutTree:
    if not g.is_connected():
        raise Disconnected("block trees need a connected graph")
    if root is None:
        root = g.source(1) if 1 in g.sort else min(g.vertices)
    blocks = biconnected_blocks(g)
    count: dict[int, int] = defaultdict(int)
    for b in blocks:
        for v in b.vertices:
            count[v] += 1
    cuts = frozenset(v for v, c in count.items() if c >= 2)
    parent = [-1] * len(blocks)
    child: dict[int, list[int]] = defaultdict(list)
    at: dict[int, list[int]] = defaultdict(list)
    for i, b in enumerate(blocks):
        for v in b.vertices:
            at[v].append(i)
    queue = [root]
    done_blocks: set[int] = set()
    while queue:
        v = queue.pop(0)
        for i in sorted(at[v], key=lambda i: min(blocks[i].edges)):
            if i in done_blocks:
                continue
            done_blocks.add(i)
            parent[i] = v
            child[v].append(i)
            for w in sorted(blocks[i].vertices):
                if w != v and w in cuts:
                    queue.append(w)
    return BlockCutTree(tuple(blocks), cuts, root, tuple(parent), {v: tuple(c) for v, c in child.items()})


# ---------------------------------------------------------------------------
# tree-width 2


def _check_tw2_input(g: Graph) -> None:
    if g.sort != S1:
        raise NotTreewidth2("tree-width 2 terms describe graphs with exactly the source 1")
    for e in g.edges:
        if len(e.attach) != 2:
            raise NotTreewidth2(f"edge {e.id} is not binary")
        if e.attach[0] == e.attach[1]:
            raise NotTreewidth2(f"edge {e.id} is a self-loop")
    if not g.is_connected():
        raise Disconnected("tree-width 2 terms describe connected graphs")


def block_options(g: Graph, tree: BlockCutTree, i: int, hang: HangFn) -> list[tuple[int, Term]]:
    """All 2-sources w of block i making it a disoriented P-graph, with its term.

    Neighbours of the block's parent vertex come first, in id order, then the
    other vertices; ``hang(c)`` supplies the third argument at join vertex c.
    """
    b = tree.blocks[i]
    v = tree.parent_vertex[i]
    edges = [e for e in g.edges if e.id in b.edges]
    nbrs = sorted({w for e in edges for w in e.attach if v in e.attach and w != v})
    rest = sorted(b.vertices - set(nbrs) - {v})
    out = []
    for w in nbrs + rest:
        try:
            t = _sp(g, v, w, b.edges, False, hang, NotTreewidth2)
        except NotTreewidth2:
            continue
        if is_p_term(t):
            out.append((w, t))
    return out


def tw2_term(g: Graph) -> Term:
    _check_tw2_input(g)
    tree = block_cut_tree(g)
    memo: dict[int, Term] = {}

    def vterm(v: int) -> Term:
        if v in memo:
            return memo[v]
        parts = []
        for i in tree.child_blocks.get(v, ()):
            below = set(tree.children_of_block(i))

            def hang(c: int, below=below) -> Term:
                return vterm(c) if c in below else Term.zero()

            opts = block_options(g, tree, i, hang)
            if not opts:
                raise NotTreewidth2(f"block {sorted(tree.blocks[i].vertices)} has no disoriented P-graph decomposition")
            w, t = opts[0]
            parts.append(Term.hang(t, hang(w)))
        memo[v] = Term.par_all(parts, empty=Term.zero())
        return memo[v]

    return vterm(tree.root)


def is_treewidth_le2(g: Graph) -> bool:
    """Tree-width at most 2 for a connected graph with binary (or unary) edges."""
    if not g.is_connected():
        raise Disconnected("tree-width test needs a connected graph")
    tree = block_cut_tree(g)
    for i, b in enumerate(tree.blocks):
        if len(b.vertices) <= 2:
            continue
        if not block_options(g, tree, i, lambda c: Term.zero()):
            return False
    return True
