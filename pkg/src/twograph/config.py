"""Resource caps shared by the oracle and the decision procedures."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

DEFAULT_BUDGET = 200_000


def budget_from_env(default: int = DEFAULT_BUDGET) -> int:
    raw = os.environ.get("TWOGRAPH_BUDGET")
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


@dataclass(frozen=True)
class OracleConfig:
    """Caps for bounded enumeration and brute-force isomorphism."""

    max_edges: int = 8
    max_vertices: int = 10
    # enumeration keeps at most this many graphs per nonterminal before giving up
    max_graphs: int = 200_000


@dataclass(frozen=True)
class DecisionConfig:
    """Caps for recognizer domains and the filtered or refined grammars."""

    budget: int = field(default_factory=budget_from_env)
    max_rules: int = 2_000_000
    # search bound used to confirm TW2 counterexamples by direct membership
    witness_bound: int = 6


DEFAULT_ORACLE = OracleConfig()
