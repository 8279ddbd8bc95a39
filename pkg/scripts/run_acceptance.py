"""Run the acceptance suite and print one PASS/FAIL line per criterion."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import pytest


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("-k", default=None, help="pytest keyword filter, e.g. 'triangle or inclusion'")
    args = p.parse_args()
    root = Path(__file__).resolve().parents[1]
    argv = [str(root / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider"]
    if args.k:
        argv += ["-k", args.k]
    return pytest.main(argv)


if __name__ == "__main__":
    sys.exit(main())
