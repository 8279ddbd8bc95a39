"""Command-line front end.

Exit codes: 0 when the checked property holds, 1 when it fails, 2 on input
errors, 3 when a budget or bound is exceeded.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from typing import Callable, Sequence

from twograph.config import DEFAULT_ORACLE, DecisionConfig
from twograph.decision import equivalent, graph_profile, graph_term, includes, is_empty, member, recognizer_for
from twograph.decomposition import block_cut_tree
from twograph.errors import DecompositionError, InputError, LimitError, ParseError, TwographError, UnknownVerb
from twograph.grammar import (
    Grammar,
    classify_rules,
    enumerate_language,
    grammar_size,
    grammar_to_json,
    is_aperiodic_grammar,
    is_regular,
    is_stratified,
    load_grammar,
    normalize,
)
from twograph.graph_core import KINDS, TW2, Graph, dumps, graph_from_json, graph_to_json, term_to_json, to_dot
from twograph.recognizer import is_aperiodic_algebra, profile_to_json

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3
ENUM_CAP = 8

log = logging.getLogger("twograph")


def parse_graph(path: str) -> tuple[Graph, str]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, None, exc.lineno, exc.colno) from None
    return graph_from_json(obj)


def parse_grammar(path: str, allow_free: bool = False) -> Grammar:
    return load_grammar(path, allow_free)


class Report:
    """Collects key/value lines; printed as text or as one JSON object."""

    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.data: dict = {}

    def put(self, key: str, value, text: str | None = None) -> None:
        self.data[key] = value
        if not self.as_json:
            print(text if text is not None else f"{key}: {_fmt(value)}")

    def flush(self) -> None:
        if self.as_json:
            sys.stdout.write(dumps(self.data))


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return str(v)


def _config(args) -> DecisionConfig:
    cfg = DecisionConfig()
    if args.budget is not None:
        cfg = replace(cfg, budget=args.budget)
    return cfg


def _require(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise InputError(f"{args.verb} needs " + ", ".join("--" + n for n in missing))


def _write_witness(args, verdict) -> None:
    if args.witness_out and verdict.witness is not None:
        with open(args.witness_out, "w", encoding="utf-8") as fh:
            fh.write(dumps(graph_to_json(verdict.witness, verdict.kind)))


# ---------------------------------------------------------------------------
# verbs


def cmd_check(args, rep: Report) -> int:
    _require(args, "grammar")
    g = parse_grammar(args.grammar)
    regular = is_regular(g) or is_regular(g, alternative=True)
    rep.put("class", g.cls.kind)
    rep.put("size", grammar_size(g))
    rep.put("forms", classify_rules(g))
    rep.put("stratified", is_stratified(g))
    rep.put("regular", regular)
    rep.put("aperiodic", is_aperiodic_grammar(g))
    return EXIT_OK


def cmd_normalize(args, rep: Report) -> int:
    _require(args, "grammar")
    out = normalize(parse_grammar(args.grammar))
    sys.stdout.write(dumps(grammar_to_json(out)))
    return EXIT_OK


def cmd_member(args, rep: Report) -> int:
    _require(args, "grammar", "graph")
    g = parse_grammar(args.grammar)
    h, kind = parse_graph(args.graph)
    if kind != g.cls.kind:
        raise InputError(f"graph of class {kind} against a {g.cls.kind} grammar")
    ok = member(h, g)
    rep.put("member", ok)
    return EXIT_OK if ok else EXIT_FAIL


def _verdict(args, rep: Report, fn: Callable) -> int:
    _require(args, "lhs", "rhs")
    g1 = parse_grammar(args.lhs, allow_free=fn is includes)
    g2 = parse_grammar(args.rhs)
    v = fn(g1, g2, _config(args))
    if rep.as_json:
        rep.data.update(v.to_json())
    else:
        print("holds" if v.holds else "fails")
        if v.witness is not None:
            print("witness:", v.witness)
        print("stats:", _fmt(v.stats))
    _write_witness(args, v)
    return EXIT_OK if v.holds else EXIT_FAIL


def cmd_include(args, rep: Report) -> int:
    return _verdict(args, rep, includes)


def cmd_equivalent(args, rep: Report) -> int:
    return _verdict(args, rep, equivalent)


def cmd_empty(args, rep: Report) -> int:
    _require(args, "grammar")
    empty = is_empty(parse_grammar(args.grammar, allow_free=True))
    rep.put("empty", empty)
    return EXIT_OK if empty else EXIT_FAIL


def cmd_enumerate(args, rep: Report) -> int:
    _require(args, "grammar")
    g = parse_grammar(args.grammar, allow_free=True)
    bound = 4 if args.bound is None else args.bound
    if bound > ENUM_CAP and not args.unsafe_bound:
        raise InputError(f"bound {bound} is above {ENUM_CAP}; pass --unsafe-bound to override")
    graphs = enumerate_language(g, bound, DEFAULT_ORACLE, unsafe=args.unsafe_bound).sorted()
    if rep.as_json:
        rep.data["count"] = len(graphs)
        rep.data["graphs"] = [graph_to_json(h, g.cls.kind) for h in graphs]
    else:
        print(f"{len(graphs)} graphs with at most {bound} edges")
        for h in graphs:
            print(" ", h)
    return EXIT_OK


def cmd_recognizer_stats(args, rep: Report) -> int:
    _require(args, "grammar")
    g = parse_grammar(args.grammar)
    r = recognizer_for(g)
    budget = _config(args).budget
    dom = r.reachable(budget)
    rep.put("reachable", sum(len(v) for v in dom.values()))
    rep.put("by_sort", {",".join(map(str, sorted(s))) or "-": len(v) for s, v in sorted(dom.items(), key=lambda kv: sorted(kv[0]))})
    rep.put("accepting", sum(1 for v in dom.values() for a in v if r.accepting(a)))
    rep.put("aperiodic_algebra", is_aperiodic_algebra(r, budget))
    return EXIT_OK


def cmd_decompose(args, rep: Report) -> int:
    _require(args, "graph")
    h, kind = parse_graph(args.graph)
    kind = args.cls or kind
    try:
        t = graph_term(h, kind)
    except DecompositionError as exc:
        rep.put("decomposable", False)
        rep.put("reason", str(exc))
        return EXIT_FAIL
    if args.grammar:
        g = parse_grammar(args.grammar)
        rep.put("profile", profile_to_json(graph_profile(recognizer_for(g), h)))
    if args.emit_term or rep.as_json:
        rep.put("term", term_to_json(t), text=json.dumps(term_to_json(t), sort_keys=True))
    else:
        rep.put("term", str(t))
    if args.emit_dot:
        dot = to_dot(h)
        if kind == TW2:
            dot += _block_tree_dot(h)
        rep.put("dot", dot, text=dot.rstrip("\n"))
    return EXIT_OK


def _block_tree_dot(h: Graph) -> str:
    tree = block_cut_tree(h)
    lines = ["graph blocks {"]
    for i, b in enumerate(tree.blocks):
        lines.append(f'  b{i} [shape=box,label="{sorted(b.vertices)}"];')
    for v in sorted(tree.cutvertices | {tree.root}):
        lines.append(f'  v{v} [label="{v}"];')
    for i, v in tree.incidences():
        lines.append(f"  b{i} -- v{v};")
    for v, kids in sorted(tree.child_blocks.items()):
        if v == tree.root and v not in tree.cutvertices:
            for i in kids:
                lines.append(f"  v{v} -- b{i};")
    lines.append("}")
    return "\n".join(lines) + "\n"


VERBS: dict[str, Callable] = {
    "check": cmd_check,
    "normalize": cmd_normalize,
    "member": cmd_member,
    "include": cmd_include,
    "equivalent": cmd_equivalent,
    "empty": cmd_empty,
    "enumerate": cmd_enumerate,
    "recognizer-stats": cmd_recognizer_stats,
    "decompose": cmd_decompose,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twograph", description="Regular graph grammars: membership, inclusion and more.")
    p.add_argument("verb", help=" | ".join(VERBS))
    p.add_argument("--grammar")
    p.add_argument("--lhs")
    p.add_argument("--rhs")
    p.add_argument("--graph")
    p.add_argument("--class", dest="cls", choices=sorted(KINDS))
    p.add_argument("--bound", type=int)
    p.add_argument("--budget", type=int)
    p.add_argument("--json", action="store_true")
    p.add_argument("--emit-term", action="store_true")
    p.add_argument("--emit-dot", action="store_true")
    p.add_argument("--witness-out")
    p.add_argument("--unsafe-bound", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    rep = Report(args.json)
    try:
        fn = VERBS.get(args.verb)
        if fn is None:
            raise UnknownVerb(f"unknown verb {args.verb!r}; expected one of {', '.join(VERBS)}")
        code = fn(args, rep)
    except InputError as exc:
        return _fail(rep, exc, EXIT_INPUT)
    except OSError as exc:
        return _fail(rep, exc, EXIT_INPUT)
    except LimitError as exc:
        return _fail(rep, exc, EXIT_LIMIT)
    except TwographError as exc:
        return _fail(rep, exc, EXIT_FAIL)
    rep.flush()
    return code


def _fail(rep: Report, exc: Exception, code: int) -> int:
    if rep.as_json:
        rep.data["error"] = {"type": type(exc).__name__, "message": str(exc), "pointer": getattr(exc, "pointer", None)}
        rep.flush()
    else:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
