"""Walk through the command-line verbs on the bundled example files."""

from __future__ import annotations

from importlib.resources import files

from twograph.cli import run

DATA = files("twograph") / "data"


def path(name: str) -> str:
    return str(DATA / f"{name}.json")


STEPS = [
    ["check", "--grammar", path("even")],
    ["member", "--grammar", path("even"), "--graph", path("star3")],
    ["member", "--grammar", path("even"), "--graph", path("star4")],
    ["include", "--lhs", path("even"), "--rhs", path("universal_tree")],
    ["include", "--lhs", path("universal_tree"), "--rhs", path("even")],
    ["enumerate", "--grammar", path("even"), "--bound", "6"],
    ["recognizer-stats", "--grammar", path("sp_even")],
    ["decompose", "--graph", path("triangle")],
]


def main() -> None:
    for argv in STEPS:
        print("$ twograph " + " ".join(a if "/" not in a else a.rsplit("/", 1)[1] for a in argv))
        code = run(argv)
        print(f"(exit {code})\n")


if __name__ == "__main__":
    main()
