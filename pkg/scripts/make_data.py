"""Write the fixture grammars and a few graphs as canonical JSON files."""

from __future__ import annotations

import argparse
from pathlib import Path

from twograph import fixtures
from twograph.grammar import grammar_to_json
from twograph.graph_core import DSP, TREE, dumps, graph_to_json

GRAPHS = {
    "star3": (lambda: fixtures.star(3), TREE),
    "star4": (lambda: fixtures.star(4), TREE),
    "path3": (lambda: fixtures.path_tree(3), TREE),
    "triangle": (fixtures.triangle, DSP),
}


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "src" / "twograph" / "data"))
    out = Path(p.parse_args().out)
    out.mkdir(parents=True, exist_ok=True)
    for name in fixtures.GRAMMARS:
        (out / f"{name}.json").write_text(dumps(grammar_to_json(fixtures.get(name))))
    (out / "tw2_rotation_sensitive.json").write_text(dumps(grammar_to_json(fixtures.tw2_rotation_sensitive())))
    for name, (make, kind) in GRAPHS.items():
        (out / f"{name}.json").write_text(dumps(graph_to_json(make(), kind)))
    print(f"wrote {len(list(out.glob('*.json')))} files to {out}")


if __name__ == "__main__":
    main()
